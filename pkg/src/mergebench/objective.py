"""Desk-scale true objective: tiny residual nets merged the same way 7B
models would be.

A *family* is a shared base checkpoint plus two specialists A and B obtained
by gradient-free tuning on complementary halves of a synthetic classification
task, a stand-in for two LLMs fine-tuned from one base.  Parameter-space
merging combines the three checkpoints layer-wise by task arithmetic;
data-flow merging stacks layers of A and B with per-layer input scaling.
Evaluation returns plain classification accuracy on a dev split (the
optimization objective) and a test split (report-only).

Everything is deterministic given the family seed; checkpoints and tasks are
immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GenerationFailure, InvalidArgument
from .space import (
    DFS_SKIP,
    DFS_TAKE_A,
    DFS_TAKE_B,
    Configuration,
    SearchSpace,
    dfs_space,
    ps_space,
)

N_CLASSES = 4
DEFAULT_DEV_SIZE = 512
DEFAULT_TEST_SIZE = 512

# (1+1) hill-climb settings for specialist generation.
_TUNE_STEPS = 500
_TUNE_SCALE = 0.7
_MAX_RETRIES = 8


@dataclass(frozen=True)
class LayerParams:
    """One residual block: square weight matrix and bias."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w, b = self.weight, self.bias
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidArgument(f"layer weight must be square, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise InvalidArgument(f"bias shape {b.shape} does not match width {w.shape[0]}")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise InvalidArgument("layer parameters must be finite")
        w.setflags(write=False)
        b.setflags(write=False)


@dataclass(frozen=True)
class ModelCheckpoint:
    """A stack of residual blocks plus the fixed shared embed/readout."""

    model_id: str
    layers: tuple[LayerParams, ...]
    embed: np.ndarray
    readout: np.ndarray

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def width(self) -> int:
        return self.embed.shape[0]


@dataclass(frozen=True)
class SyntheticTask:
    """Dev/test classification splits with per-sample half membership.

    ``halves`` mark which specialist a sample belongs to (0 for A, 1 for B);
    they matter only during family generation and diagnostics.
    """

    dev_x: np.ndarray
    dev_y: np.ndarray
    dev_half: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    test_half: np.ndarray
    seed: int


@dataclass(frozen=True)
class MergedModel:
    """Layer sequence with per-layer input scales; first scale is pinned to 1."""

    layers: tuple[LayerParams, ...]
    scales: tuple[float, ...]
    embed: np.ndarray
    readout: np.ndarray

    def __post_init__(self):
        if len(self.layers) != len(self.scales):
            raise InvalidArgument("one input scale per realized layer required")
        if self.scales and self.scales[0] != 1.0:
            raise InvalidArgument("first layer's input scale must be exactly 1.0")


def forward(model: MergedModel | ModelCheckpoint, x: np.ndarray) -> np.ndarray:
    """Batched forward pass returning logits.

    Per layer the input is rescaled then passed through a tanh residual
    block: ``h <- s * h; h <- h + tanh(h W^T + b)``.
    """
    h = x @ model.embed.T
    if isinstance(model, MergedModel):
        pairs = zip(model.layers, model.scales)
    else:
        pairs = ((layer, 1.0) for layer in model.layers)
    for layer, scale in pairs:
        if scale != 1.0:
            h = scale * h
        h = h + np.tanh(h @ layer.weight.T + layer.bias)
    return h @ model.readout.T


def evaluate(model: MergedModel | ModelCheckpoint, x: np.ndarray, y: np.ndarray) -> float:
    """Classification accuracy; exact count ratio, order-invariant."""
    pred = np.argmax(forward(model, x), axis=1)
    return int(np.sum(pred == y)) / len(y)


def task_arithmetic_merge(
    base: ModelCheckpoint,
    model_a: ModelCheckpoint,
    model_b: ModelCheckpoint,
    weights: Configuration,
) -> MergedModel:
    """Layer-wise task arithmetic with per-layer weighting factors.

    ``weights`` comes from ``ps_space(n_layers)``: model A's per-layer factors
    followed by model B's.  Computed in affine form
    ``(1 - wa - wb) * base + wa * A + wb * B`` so that all-zero weights
    reproduce base and unit weights reproduce a source model bit-exactly.
    """
    n = base.n_layers
    if model_a.n_layers != n or model_b.n_layers != n:
        raise InvalidArgument("checkpoints come from different families")
    if len(weights) != 2 * n:
        raise InvalidArgument(
            f"expected {2 * n} weighting factors, got {len(weights)}"
        )
    w = np.asarray(weights.values, dtype=np.float64)
    merged = []
    for layer_i in range(n):
        wa, wb = w[layer_i], w[n + layer_i]
        wbase = 1.0 - wa - wb
        merged.append(
            LayerParams(
                wbase * base.layers[layer_i].weight
                + wa * model_a.layers[layer_i].weight
                + wb * model_b.layers[layer_i].weight,
                wbase * base.layers[layer_i].bias
                + wa * model_a.layers[layer_i].bias
                + wb * model_b.layers[layer_i].bias,
            )
        )
    return MergedModel(
        layers=tuple(merged),
        scales=(1.0,) * n,
        embed=base.embed,
        readout=base.readout,
    )


def dfs_stack(
    model_a: ModelCheckpoint,
    model_b: ModelCheckpoint,
    config: Configuration,
    slots: int | None = None,
) -> MergedModel:
    """Build a merged model by inserting layers of A/B before A's last layer.

    The potential-layer list is ``A[0..L-2]``, then one optional insertion per
    slot (slot ``i`` offers A's layer ``i``, B's layer ``i``, or nothing),
    then ``A[L-1]``.  The configuration's continuous tail holds input scales
    for every potential position except the first; skipped slots' scales are
    ignored.
    """
    n = model_a.n_layers
    if model_b.n_layers != n:
        raise InvalidArgument("checkpoints come from different families")
    if slots is None:
        # dim = slots + (n + slots - 1)
        slots = (len(config) - n + 1) // 2
    if slots < 1 or len(config) != slots + n + slots - 1:
        raise InvalidArgument(
            f"configuration length {len(config)} does not match "
            f"{n} base layers with {slots} insertion slots"
        )
    choices = [int(v) for v in config.values[:slots]]
    scales = (1.0,) + tuple(float(v) for v in config.values[slots:])

    # Potential positions: L-1 prefix layers from A, the slots, A's last layer.
    candidates: list[tuple[LayerParams | None, float]] = []
    for i in range(n - 1):
        candidates.append((model_a.layers[i], scales[i]))
    for s, choice in enumerate(choices):
        pos = n - 1 + s
        if choice == DFS_TAKE_A:
            candidates.append((model_a.layers[s], scales[pos]))
        elif choice == DFS_TAKE_B:
            candidates.append((model_b.layers[s], scales[pos]))
        elif choice == DFS_SKIP:
            candidates.append((None, scales[pos]))
        else:
            raise InvalidArgument(f"slot {s}: invalid category {choice}")
    candidates.append((model_a.layers[n - 1], scales[n - 1 + slots]))

    layers = tuple(layer for layer, _ in candidates if layer is not None)
    kept = tuple(scale for layer, scale in candidates if layer is not None)
    # Whatever was realized first runs unscaled.
    return MergedModel(
        layers=layers,
        scales=(1.0,) + kept[1:],
        embed=model_a.embed,
        readout=model_a.readout,
    )


@dataclass(frozen=True)
class Family:
    """Base + specialists + task, the unit every true evaluation needs."""

    base: ModelCheckpoint
    model_a: ModelCheckpoint
    model_b: ModelCheckpoint
    task: SyntheticTask
    seed: int

    @property
    def n_layers(self) -> int:
        return self.base.n_layers

    @property
    def width(self) -> int:
        return self.base.width

    def ps_search_space(self) -> SearchSpace:
        return ps_space(self.n_layers)

    def dfs_search_space(self, slots: int | None = None) -> SearchSpace:
        return dfs_space(self.n_layers, self.n_layers if slots is None else slots)

    def merged_model(self, kind: str, config: Configuration) -> MergedModel:
        if kind == "ps":
            return task_arithmetic_merge(self.base, self.model_a, self.model_b, config)
        if kind == "dfs":
            return dfs_stack(self.model_a, self.model_b, config)
        raise InvalidArgument(f"unknown space kind {kind!r}")

    def true_objective(self, kind: str, config: Configuration) -> tuple[float, float]:
        """Merge and evaluate: returns (dev score, test score)."""
        model = self.merged_model(kind, config)
        task = self.task
        return (
            evaluate(model, task.dev_x, task.dev_y),
            evaluate(model, task.test_x, task.test_y),
        )


def _make_task(rng: np.random.Generator, width: int, dev_size: int, test_size: int, seed: int) -> SyntheticTask:
    """Two groups of Gaussian class clusters; group 0 is specialist A's half."""
    centers = rng.normal(size=(2, N_CLASSES, width))
    centers *= 2.0 / np.linalg.norm(centers, axis=2, keepdims=True)

    def split(n):
        half = np.arange(n) % 2
        labels = rng.integers(N_CLASSES, size=n)
        x = centers[half, labels] + 0.55 * rng.normal(size=(n, width))
        return x, labels, half

    dev_x, dev_y, dev_half = split(dev_size)
    test_x, test_y, test_half = split(test_size)
    return SyntheticTask(dev_x, dev_y, dev_half, test_x, test_y, test_half, seed)


def _random_checkpoint(rng: np.random.Generator, n_layers: int, width: int) -> ModelCheckpoint:
    embed = rng.normal(size=(width, width)) / np.sqrt(width)
    readout = rng.normal(size=(N_CLASSES, width)) / np.sqrt(width)
    layers = tuple(
        LayerParams(
            rng.normal(size=(width, width)) * 0.3 / np.sqrt(width),
            rng.normal(size=width) * 0.05,
        )
        for _ in range(n_layers)
    )
    return ModelCheckpoint("base", layers, embed, readout)


def _half_accuracy(model: ModelCheckpoint, task: SyntheticTask, half: int) -> float:
    mask = task.dev_half == half
    return evaluate(model, task.dev_x[mask], task.dev_y[mask])


def _tune_specialist(
    base: ModelCheckpoint,
    task: SyntheticTask,
    half: int,
    model_id: str,
    rng: np.random.Generator,
) -> ModelCheckpoint:
    """(1+1) hill climb on one half's dev accuracy, perturbing one layer at a
    time.  Gradient-free on purpose: only the two-specialists-sharing-a-base
    structure matters, not how the specialists were obtained."""
    mask = task.dev_half == half
    x, y = task.dev_x[mask], task.dev_y[mask]
    weights = [layer.weight.copy() for layer in base.layers]
    biases = [layer.bias.copy() for layer in base.layers]
    width = base.width

    def build() -> ModelCheckpoint:
        layers = tuple(
            LayerParams(w.copy(), b.copy()) for w, b in zip(weights, biases)
        )
        return ModelCheckpoint(model_id, layers, base.embed, base.readout)

    current = build()
    acc = evaluate(current, x, y)
    for _ in range(_TUNE_STEPS):
        li = int(rng.integers(len(weights)))
        dw = rng.normal(size=(width, width)) * (_TUNE_SCALE / np.sqrt(width))
        db = rng.normal(size=width) * (_TUNE_SCALE * 0.2)
        weights[li] += dw
        biases[li] += db
        trial = build()
        trial_acc = evaluate(trial, x, y)
        if trial_acc > acc:
            acc = trial_acc
            current = trial
        else:
            weights[li] -= dw
            biases[li] -= db
    return current


def generate_family(
    n_layers: int,
    width: int,
    seed: int,
    dev_size: int = DEFAULT_DEV_SIZE,
    test_size: int = DEFAULT_TEST_SIZE,
) -> Family:
    """Deterministically generate base, specialists and task.

    Retries with an incremented seed (bounded) until both specialists beat
    the base on their own half of the dev split.
    """
    if n_layers < 1:
        raise InvalidArgument(f"n_layers must be >= 1, got {n_layers}")
    if width < 2:
        raise InvalidArgument(f"width must be >= 2, got {width}")
    if dev_size < 2 * N_CLASSES or test_size < 2 * N_CLASSES:
        raise InvalidArgument("dev/test splits too small to cover both halves")

    for attempt in range(_MAX_RETRIES):
        eff_seed = seed + attempt
        task_rng, model_rng, tune_a_rng, tune_b_rng = (
            np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(eff_seed).spawn(4)
        )
        task = _make_task(task_rng, width, dev_size, test_size, eff_seed)
        base = _random_checkpoint(model_rng, n_layers, width)
        model_a = _tune_specialist(base, task, 0, "A", tune_a_rng)
        model_b = _tune_specialist(base, task, 1, "B", tune_b_rng)
        if (
            _half_accuracy(model_a, task, 0) > _half_accuracy(base, task, 0)
            and _half_accuracy(model_b, task, 1) > _half_accuracy(base, task, 1)
        ):
            return Family(base, model_a, model_b, task, seed)
    raise GenerationFailure(
        f"no usable specialist pair within {_MAX_RETRIES} attempts from seed {seed}"
    )


def save_family(family: Family, path: str | Path) -> None:
    """Serialize a family with full parameters plus its generation recipe.

    The file carries the exact arrays, so loading reproduces evaluations
    bit-for-bit on any platform; the embedded seed documents how the family
    was generated (fixed-seed PCG64 streams).
    """
    arrays: dict[str, np.ndarray] = {
        "meta": np.array(
            [family.seed, family.n_layers, family.width, len(family.task.dev_y), len(family.task.test_y)],
            dtype=np.int64,
        ),
        "embed": family.base.embed,
        "readout": family.base.readout,
        "dev_x": family.task.dev_x,
        "dev_y": family.task.dev_y,
        "dev_half": family.task.dev_half,
        "test_x": family.task.test_x,
        "test_y": family.task.test_y,
        "test_half": family.task.test_half,
    }
    for name, ckpt in (("base", family.base), ("a", family.model_a), ("b", family.model_b)):
        for i, layer in enumerate(ckpt.layers):
            arrays[f"{name}_w{i}"] = layer.weight
            arrays[f"{name}_b{i}"] = layer.bias
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_family(path: str | Path) -> Family:
    with np.load(path) as data:
        seed, n_layers, width, _, _ = (int(v) for v in data["meta"])
        embed, readout = data["embed"], data["readout"]

        def checkpoint(name: str, model_id: str) -> ModelCheckpoint:
            layers = tuple(
                LayerParams(data[f"{name}_w{i}"].copy(), data[f"{name}_b{i}"].copy())
                for i in range(n_layers)
            )
            return ModelCheckpoint(model_id, layers, embed, readout)

        task = SyntheticTask(
            data["dev_x"], data["dev_y"], data["dev_half"],
            data["test_x"], data["test_y"], data["test_half"],
            seed,
        )
        return Family(checkpoint("base", "base"), checkpoint("a", "A"), checkpoint("b", "B"), task, seed)
