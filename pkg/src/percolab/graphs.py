"""Graph families, vertex indexing, and canonical edge enumeration.

Vertices are plain integer indices in ``[0, V)``.  For the torus families the
index encodes coordinates in ``{-floor(r/2), ..., ceil(r/2)-1}^d`` through a
little-endian mixed-radix code (coordinate ``i`` carries weight ``r**i``);
``vertex_coords`` / ``vertex_index`` convert between the two views.  The
origin (all-zero coordinates) is always index 0.

Edges are enumerated canonically: ordered pairs ``(u, v)`` with ``u < v``,
sorted lexicographically.  Edge ``EdgeTable`` materializes the endpoint array
for the torus families and unranks pairs analytically for the complete-graph
families, where the quadratic edge count makes a table impractical.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np


class InvalidSpec(ValueError):
    """Raised when a GraphSpec violates a family invariant."""


class VertexOutOfRange(ValueError):
    """Raised when a vertex index or coordinate tuple is not in the graph."""


class Family(str, Enum):
    TORUS_NN = "torus-nn"
    TORUS_SPREAD = "torus-spread"
    HYPERCUBE = "hypercube"
    HAMMING = "hamming"
    COMPLETE = "complete"
    ERDOS_RENYI = "erdos-renyi"


#: families whose vertices carry (d, r) torus coordinates
_TORUS_FAMILIES = (Family.TORUS_NN, Family.TORUS_SPREAD, Family.HAMMING)
#: families on n unlabeled vertices with the complete edge set
_COMPLETE_FAMILIES = (Family.COMPLETE, Family.ERDOS_RENYI)

#: above this many edges, complete-family endpoint tables are never built
DENSE_EDGE_CAP = 1 << 22


@dataclass(frozen=True)
class GraphSpec:
    """Declarative description of one graph instance.

    Field usage by family: tori (torus-nn, torus-spread, hamming) take
    ``d`` and ``r`` (plus ``L`` for torus-spread); hypercube takes ``d``
    only; complete and erdos-renyi take ``n`` only.  Unused fields must be
    left at None.
    """

    family: Family
    d: int | None = None
    r: int | None = None
    L: int | None = None
    n: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        f = self.family
        used = {"d", "r", "L", "n"}
        if f is Family.TORUS_NN or f is Family.HAMMING:
            req = {"d", "r"}
        elif f is Family.TORUS_SPREAD:
            req = {"d", "r", "L"}
        elif f is Family.HYPERCUBE:
            req = {"d"}
        else:
            req = {"n"}
        for name in req:
            value = getattr(self, name)
            if value is None or int(value) != value or value < 1:
                raise InvalidSpec(f"{f.value} requires positive integer {name!r}")
            object.__setattr__(self, name, int(value))
        for name in used - req:
            if getattr(self, name) is not None:
                raise InvalidSpec(f"{f.value} does not use field {name!r}")
        if f is Family.TORUS_NN and self.r < 3:
            raise InvalidSpec("torus-nn requires r >= 3")
        if f is Family.TORUS_SPREAD and self.r < 2 * self.L + 1:
            raise InvalidSpec("torus-spread requires r >= 2L+1")
        if f is Family.HAMMING and self.r < 2:
            raise InvalidSpec("hamming requires r >= 2")
        if f in _COMPLETE_FAMILIES and self.n < 2:
            raise InvalidSpec(f"{f.value} requires n >= 2")
        if self.vertex_count > (1 << 40):
            raise InvalidSpec("vertex count exceeds supported range")

    @property
    def vertex_count(self) -> int:
        if self.family in _COMPLETE_FAMILIES:
            return self.n
        if self.family is Family.HYPERCUBE:
            return 2**self.d
        return self.r**self.d

    @property
    def side(self) -> int:
        """Mixed-radix base: r for tori, 2 for the hypercube."""
        return 2 if self.family is Family.HYPERCUBE else self.r

    def flags(self) -> tuple[str, ...]:
        """Provenance flags attached to every record produced from this spec."""
        out = []
        if self.family is Family.ERDOS_RENYI:
            out.append("calibration_only")
        if self.family in _TORUS_FAMILIES and self.d <= 6:
            out.append("theory_out_of_range")
        return tuple(out)

    def to_dict(self) -> dict:
        out = {"family": self.family.value}
        for name in ("d", "r", "L", "n"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GraphSpec":
        known = {"family", "d", "r", "L", "n"}
        unknown = set(data) - known
        if unknown:
            raise InvalidSpec(f"unknown GraphSpec keys: {sorted(unknown)}")
        return cls(**data)


def degree(spec: GraphSpec) -> int:
    """Vertex degree of a regular family.

    Rejects erdos-renyi, which is regular only after sampling; callers
    should use the expected degree (n-1)p instead.
    """
    f = spec.family
    if f is Family.TORUS_NN:
        return 2 * spec.d
    if f is Family.TORUS_SPREAD:
        return (2 * spec.L + 1) ** spec.d - 1
    if f is Family.HYPERCUBE:
        return spec.d
    if f is Family.HAMMING:
        return spec.d * (spec.r - 1)
    if f is Family.COMPLETE:
        return spec.n - 1
    raise InvalidSpec("erdos-renyi has no deterministic degree before sampling")


def edge_count(spec: GraphSpec) -> int:
    if spec.family in _COMPLETE_FAMILIES:
        return spec.n * (spec.n - 1) // 2
    return spec.vertex_count * degree(spec) // 2


def _check_vertex(spec: GraphSpec, v: int) -> int:
    if int(v) != v or not 0 <= v < spec.vertex_count:
        raise VertexOutOfRange(f"vertex {v} not in [0, {spec.vertex_count})")
    return int(v)


def vertex_coords(spec: GraphSpec, index: int) -> tuple[int, ...]:
    """Centered torus coordinates of a vertex index (tori/hypercube only)."""
    if spec.family in _COMPLETE_FAMILIES:
        raise InvalidSpec(f"{spec.family.value} vertices carry no coordinates")
    index = _check_vertex(spec, index)
    r, half = spec.side, (spec.side + 1) // 2
    out = []
    for _ in range(spec.d):
        digit = index % r
        out.append(digit if digit < half else digit - r)
        index //= r
    return tuple(out)


def vertex_index(spec: GraphSpec, coords) -> int:
    """Inverse of vertex_coords; validates each coordinate's range."""
    if spec.family in _COMPLETE_FAMILIES:
        raise InvalidSpec(f"{spec.family.value} vertices carry no coordinates")
    if len(coords) != spec.d:
        raise VertexOutOfRange(f"expected {spec.d} coordinates, got {len(coords)}")
    r = spec.side
    lo, hi = -(r // 2), (r + 1) // 2 - 1
    index = 0
    for i, c in enumerate(coords):
        if int(c) != c or not lo <= c <= hi:
            raise VertexOutOfRange(f"coordinate {c} outside [{lo}, {hi}]")
        index += (int(c) % r) * r**i
    return index


def neighbors(spec: GraphSpec, v: int) -> list[int]:
    """Sorted adjacency list of a vertex."""
    v = _check_vertex(spec, v)
    f = spec.family
    if f in _COMPLETE_FAMILIES:
        return [u for u in range(spec.n) if u != v]
    r, d = spec.side, spec.d
    digits = []
    x = v
    for _ in range(d):
        digits.append(x % r)
        x //= r
    out = set()
    if f is Family.TORUS_NN or f is Family.HYPERCUBE:
        for i in range(d):
            for step in (1, r - 1):
                out.add(v + ((digits[i] + step) % r - digits[i]) * r**i)
    elif f is Family.HAMMING:
        for i in range(d):
            for c in range(1, r):
                out.add(v + ((digits[i] + c) % r - digits[i]) * r**i)
    else:
        for delta in itertools.product(range(-spec.L, spec.L + 1), repeat=d):
            if all(x == 0 for x in delta):
                continue
            u = 0
            for i in range(d):
                u += ((digits[i] + delta[i]) % r) * r**i
            out.add(u)
    out.discard(v)
    return sorted(out)


@dataclass(frozen=True)
class EdgeTable:
    """Canonical edge enumeration for a spec.

    ``endpoints`` is the full (E, 2) array for materialized families and
    None for large complete graphs, where ``endpoints_of`` unranks pairs
    on the fly.
    """

    spec: GraphSpec
    count: int
    endpoints: np.ndarray | None

    def endpoints_of(self, idx) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays (u, v) with u < v for the given edge indices."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.count):
            raise IndexError("edge index out of range")
        if self.endpoints is not None:
            return self.endpoints[idx, 0], self.endpoints[idx, 1]
        return _unrank_complete(self.spec.n, idx)

    @property
    def dense(self) -> bool:
        return self.endpoints is not None


def _unrank_complete(n: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # lexicographic rank of (i, j), i<j, is i*n - i*(i+1)/2 + (j - i - 1)
    k = idx.astype(np.float64)
    i = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * k)) / 2).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    for _ in range(2):  # fix float rounding at offset boundaries
        off = i * n - i * (i + 1) // 2
        i = np.where((idx < off) & (i > 0), i - 1, i)
        off_next = (i + 1) * n - (i + 1) * (i + 2) // 2
        i = np.where((idx >= off_next) & (i < n - 2), i + 1, i)
    off = i * n - i * (i + 1) // 2
    j = idx - off + i + 1
    return i, j


def _torus_digits(spec: GraphSpec) -> np.ndarray:
    V, r, d = spec.vertex_count, spec.side, spec.d
    digits = np.empty((V, d), dtype=np.int64)
    x = np.arange(V, dtype=np.int64)
    for i in range(d):
        digits[:, i] = x % r
        x //= r
    return digits


def _directed_pairs(spec: GraphSpec) -> tuple[np.ndarray, np.ndarray]:
    """One directed pair per undirected edge (ordering fixed afterwards)."""
    f, r, d = spec.family, spec.side, spec.d
    V = spec.vertex_count
    digits = _torus_digits(spec)
    base = np.arange(V, dtype=np.int64)
    weights = r ** np.arange(d, dtype=np.int64)
    us, vs = [], []
    if f is Family.TORUS_NN:
        for i in range(d):
            us.append(base)
            vs.append(base + ((digits[:, i] + 1) % r - digits[:, i]) * weights[i])
    elif f is Family.HYPERCUBE:
        for i in range(d):
            sel = digits[:, i] == 0
            us.append(base[sel])
            vs.append(base[sel] + weights[i])
    elif f is Family.HAMMING:
        for i in range(d):
            for c in range(1, r):
                v = base + ((digits[:, i] + c) % r - digits[:, i]) * weights[i]
                sel = base < v
                us.append(base[sel])
                vs.append(v[sel])
    elif f is Family.TORUS_SPREAD:
        for delta in itertools.product(range(-spec.L, spec.L + 1), repeat=d):
            nz = next((x for x in delta if x != 0), 0)
            if nz <= 0:
                continue  # positive half-space: each edge from one endpoint
            v = base.copy()
            for i in range(d):
                v += ((digits[:, i] + delta[i]) % r - digits[:, i]) * weights[i]
            us.append(base)
            vs.append(v)
    else:
        raise InvalidSpec(f"no edge table for family {f.value}")
    return np.concatenate(us), np.concatenate(vs)


@lru_cache(maxsize=32)
def edge_list(spec: GraphSpec) -> EdgeTable:
    """Canonical EdgeTable; cached per spec."""
    E = edge_count(spec)
    if spec.family in _COMPLETE_FAMILIES:
        if E > DENSE_EDGE_CAP:
            return EdgeTable(spec, E, None)
        i, j = _unrank_complete(spec.n, np.arange(E, dtype=np.int64))
        return EdgeTable(spec, E, np.column_stack([i, j]))
    u, v = _directed_pairs(spec)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    order = np.lexsort((hi, lo))
    table = np.column_stack([lo[order], hi[order]])
    if table.shape[0] != E:
        raise AssertionError("edge enumeration does not match V*Omega/2")
    return EdgeTable(spec, E, table)


def window_scale(spec: GraphSpec) -> float:
    """Critical-window width in p: 1/(Omega * V^(1/3)).

    Erdos-Renyi uses the complete-graph degree n-1, which matches the
    n^(-4/3) width of the classical critical window at p ~ 1/n.
    """
    if spec.family in _COMPLETE_FAMILIES:
        omega = spec.n - 1
    else:
        omega = degree(spec)
    return 1.0 / (omega * spec.vertex_count ** (1.0 / 3.0))
