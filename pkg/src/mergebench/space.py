"""Search spaces for merging hyperparameters.

Two families of spaces are provided:

* ``ps_space(n_layers)`` -- layer-wise task-arithmetic weighting factors for
  two source models, ``2 * n_layers`` continuous variables in ``[0, 1]``.
* ``dfs_space(base_layers, slots)`` -- layer-stacking genome: one arity-3
  categorical per insertion slot (take model A's layer, model B's layer, or
  skip) followed by the input-scaling factors in ``[0.4, 1.5]`` for every
  potential layer except the first, whose scale is pinned to 1.0.

Spaces are immutable, order is canonical, and every operation is pure given
an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InvalidArgument, ParseError

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"

# DFS category semantics: index 0 inserts model A's layer, 1 inserts model
# B's layer, 2 skips the slot.
DFS_TAKE_A = 0
DFS_TAKE_B = 1
DFS_SKIP = 2

DFS_SCALE_LO = 0.4
DFS_SCALE_HI = 1.5


@dataclass(frozen=True)
class VariableSpec:
    """One search-space dimension: a bounded real or a finite category set."""

    kind: str
    lo: float = 0.0
    hi: float = 1.0
    arity: int = 0

    def __post_init__(self):
        if self.kind == CONTINUOUS:
            if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
                raise InvalidArgument("continuous bounds must be finite")
            if not self.lo < self.hi:
                raise InvalidArgument(f"continuous bounds need lo < hi, got [{self.lo}, {self.hi}]")
        elif self.kind == CATEGORICAL:
            if self.arity < 2:
                raise InvalidArgument(f"categorical arity must be >= 2, got {self.arity}")
        else:
            raise InvalidArgument(f"unknown variable kind {self.kind!r}")

    def to_dict(self) -> dict:
        if self.kind == CONTINUOUS:
            return {"kind": self.kind, "lo": self.lo, "hi": self.hi}
        return {"kind": self.kind, "arity": self.arity}

    @classmethod
    def from_dict(cls, d: dict) -> "VariableSpec":
        kind = d.get("kind")
        if kind == CONTINUOUS:
            return cls(kind=CONTINUOUS, lo=float(d["lo"]), hi=float(d["hi"]))
        if kind == CATEGORICAL:
            return cls(kind=CATEGORICAL, arity=int(d["arity"]))
        raise ParseError(f"unknown variable kind {kind!r}")


@dataclass(frozen=True)
class Configuration:
    """A point in a search space.

    ``values`` holds floats for continuous dimensions and integer category
    indices for categorical ones, in the space's canonical order.
    """

    values: tuple

    def __len__(self) -> int:
        return len(self.values)

    def as_list(self) -> list:
        return list(self.values)


class SearchSpace:
    """Ordered, immutable list of variable specs plus a name."""

    def __init__(self, name: str, variables: Iterable[VariableSpec]):
        variables = tuple(variables)
        if not variables:
            raise InvalidArgument("a search space needs at least one variable")
        self.name = name
        self.variables = variables
        self._cont_idx = np.array(
            [i for i, v in enumerate(variables) if v.kind == CONTINUOUS], dtype=np.intp
        )
        self._cat_idx = np.array(
            [i for i, v in enumerate(variables) if v.kind == CATEGORICAL], dtype=np.intp
        )
        self.lo = np.array([variables[i].lo for i in self._cont_idx], dtype=np.float64)
        self.hi = np.array([variables[i].hi for i in self._cont_idx], dtype=np.float64)
        self.arities = tuple(int(variables[i].arity) for i in self._cat_idx)

    # -- basic shape ---------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def n_continuous(self) -> int:
        return len(self._cont_idx)

    @property
    def n_categorical(self) -> int:
        return len(self._cat_idx)

    @property
    def continuous_indices(self) -> np.ndarray:
        return self._cont_idx

    @property
    def categorical_indices(self) -> np.ndarray:
        return self._cat_idx

    def is_continuous_only(self) -> bool:
        return self.n_categorical == 0

    @property
    def encoded_dim(self) -> int:
        return self.n_continuous + sum(self.arities)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SearchSpace)
            and self.name == other.name
            and self.variables == other.variables
        )

    def __repr__(self) -> str:
        return f"SearchSpace({self.name!r}, dim={self.dim})"

    # -- validation and construction of points -------------------------

    def validate(self, config: Configuration) -> None:
        """Raise :class:`InvalidArgument` unless ``config`` lies in the space."""
        if len(config) != self.dim:
            raise InvalidArgument(
                f"configuration has {len(config)} values, space {self.name} has {self.dim}"
            )
        for i, (spec, v) in enumerate(zip(self.variables, config.values)):
            if spec.kind == CONTINUOUS:
                v = float(v)
                if not np.isfinite(v) or v < spec.lo or v > spec.hi:
                    raise InvalidArgument(
                        f"dim {i}: value {v} outside [{spec.lo}, {spec.hi}]"
                    )
            else:
                if not float(v).is_integer():
                    raise InvalidArgument(f"dim {i}: categorical value {v!r} is not an index")
                if not 0 <= int(v) < spec.arity:
                    raise InvalidArgument(
                        f"dim {i}: category {int(v)} outside [0, {spec.arity})"
                    )

    def make_config(self, values: Iterable) -> Configuration:
        """Build and validate a configuration from raw values."""
        vals = []
        for spec, v in zip(self.variables, values):
            vals.append(int(v) if spec.kind == CATEGORICAL else float(v))
        config = Configuration(tuple(vals))
        self.validate(config)
        return config

    def sample_uniform(self, rng: np.random.Generator) -> Configuration:
        """Draw one configuration uniformly at random."""
        vals = []
        for spec in self.variables:
            if spec.kind == CONTINUOUS:
                vals.append(float(rng.uniform(spec.lo, spec.hi)))
            else:
                vals.append(int(rng.integers(spec.arity)))
        return Configuration(tuple(vals))

    def clamp(self, raw: Iterable) -> Configuration:
        """Repair unconstrained continuous values by clipping into bounds.

        Categorical entries are validated, never wrapped: optimizers produce
        category indices by sampling, so an out-of-range index is a bug.
        """
        raw = list(raw)
        if len(raw) != self.dim:
            raise InvalidArgument(f"expected {self.dim} values, got {len(raw)}")
        vals = []
        for i, (spec, v) in enumerate(zip(self.variables, raw)):
            if spec.kind == CONTINUOUS:
                vals.append(min(max(float(v), spec.lo), spec.hi))
            else:
                if not float(v).is_integer() or not 0 <= int(v) < spec.arity:
                    raise InvalidArgument(
                        f"dim {i}: invalid categorical index {v!r} for arity {spec.arity}"
                    )
                vals.append(int(v))
        return Configuration(tuple(vals))

    # -- feature encoding ----------------------------------------------

    def encode(self, config: Configuration) -> np.ndarray:
        """Encode a configuration for the surrogate: continuous values pass
        through, categoricals expand to one-hot blocks."""
        self.validate(config)
        out = np.zeros(self.encoded_dim, dtype=np.float64)
        pos = 0
        for spec, v in zip(self.variables, config.values):
            if spec.kind == CONTINUOUS:
                out[pos] = v
                pos += 1
            else:
                out[pos + int(v)] = 1.0
                pos += spec.arity
        return out

    def encode_many(self, configs: Iterable[Configuration]) -> np.ndarray:
        rows = [self.encode(c) for c in configs]
        return np.stack(rows) if rows else np.empty((0, self.encoded_dim))

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {"name": self.name, "variables": [v.to_dict() for v in self.variables]}

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpace":
        try:
            name = d["name"]
            variables = [VariableSpec.from_dict(v) for v in d["variables"]]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed search-space document: {exc}") from exc
        return cls(name, variables)


def ps_space(n_layers: int) -> SearchSpace:
    """Layer-wise task-arithmetic space: ``2 * n_layers`` weights in [0, 1].

    Order is model A's per-layer weights followed by model B's.
    """
    if n_layers < 1:
        raise InvalidArgument(f"n_layers must be >= 1, got {n_layers}")
    variables = [VariableSpec(CONTINUOUS, 0.0, 1.0) for _ in range(2 * n_layers)]
    return SearchSpace(f"smm-ps-{n_layers}", variables)


def dfs_space(base_layers: int, slots: int) -> SearchSpace:
    """Layer-stacking space: ``slots`` arity-3 categoricals, then the input
    scales for all ``base_layers + slots`` potential layers except the first.
    """
    if base_layers < 1 or slots < 1:
        raise InvalidArgument(
            f"base_layers and slots must be >= 1, got {base_layers}, {slots}"
        )
    variables = [VariableSpec(CATEGORICAL, arity=3) for _ in range(slots)]
    n_scales = base_layers + slots - 1
    variables += [VariableSpec(CONTINUOUS, DFS_SCALE_LO, DFS_SCALE_HI) for _ in range(n_scales)]
    return SearchSpace(f"smm-dfs-{base_layers}-{slots}", variables)


def embed_model_wise(w_a: float, w_b: float, n_layers: int) -> Configuration:
    """Broadcast a 2-d model-wise point into the layer-wise PS space."""
    for name, w in (("w_a", w_a), ("w_b", w_b)):
        if not 0.0 <= w <= 1.0:
            raise InvalidArgument(f"{name} must lie in [0, 1], got {w}")
    if n_layers < 1:
        raise InvalidArgument(f"n_layers must be >= 1, got {n_layers}")
    return Configuration((float(w_a),) * n_layers + ((float(w_b),) * n_layers))


_PS_NAME = re.compile(r"^smm-ps-(\d+)$")
_DFS_NAME = re.compile(r"^smm-dfs-(\d+)-(\d+)$")


def space_by_name(name: str) -> SearchSpace:
    """Resolve a canonical space name such as ``smm-ps-32`` or ``smm-dfs-32-32``."""
    m = _PS_NAME.match(name)
    if m:
        return ps_space(int(m.group(1)))
    m = _DFS_NAME.match(name)
    if m:
        return dfs_space(int(m.group(1)), int(m.group(2)))
    raise InvalidArgument(f"unknown space name {name!r}")


def space_kind(space: SearchSpace) -> str:
    """Return ``"ps"`` or ``"dfs"`` for spaces built by this module."""
    if _PS_NAME.match(space.name):
        return "ps"
    if _DFS_NAME.match(space.name):
        return "dfs"
    raise InvalidArgument(f"space {space.name!r} is neither a PS nor a DFS space")
