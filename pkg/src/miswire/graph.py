"""Bipartite code graphs and randomized wiring defects.

A code graph connects ``n`` variable nodes to ``m`` check nodes through a
list of edges.  Regular graphs are sampled with the socket-permutation
construction: variable node ``v`` owns sockets ``v*dv .. v*dv + dv - 1``,
check node ``c`` owns sockets ``c*dc .. c*dc + dc - 1``, and a uniformly
random permutation pairs them.  Parallel edges are kept as sampled.

Wiring defects are modelled by a mask that marks individual edges as
inactive.  A *permanent* mask draws one coin per edge and keeps the outcome
for the whole decoding run; a *transient* mask redraws every iteration.
Both modes share the same per-edge uniform-threshold construction, so two
masks with the same seed but different defect rates ``alpha_1 < alpha_2``
are pathwise coupled: every edge inactive under the smaller rate is also
inactive under the larger one.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .rng import derive_seed, derive_seed_array, uniform01, uniform01_array

__all__ = [
    "TannerGraph",
    "MaskMode",
    "MiswiringMask",
    "sample_code",
    "batch_active_edges",
    "is_edge_active",
]

# Stream tags keeping permanent-mask coins, transient-mask coins, and any
# other consumers of the same master seed statistically independent.
_PERMANENT_STREAM = 0x5045524D  # "PERM"
_TRANSIENT_STREAM = 0x5452414E  # "TRAN"


@dataclass(frozen=True)
class TannerGraph:
    """Edge-list representation of a bipartite code graph.

    ``var_of[k]`` / ``chk_of[k]`` give the endpoints of edge ``k``.  Edges
    must be sorted by variable node (the socket construction produces this
    ordering naturally), which lets the decoders use contiguous per-node
    segments.  ``dv`` and ``dc`` record the design degrees used for
    decision thresholds; hand-built graphs may have nodes of other degrees.
    """

    n: int
    m: int
    var_of: np.ndarray
    chk_of: np.ndarray
    dv: int
    dc: int

    def __post_init__(self) -> None:
        var_of = np.ascontiguousarray(self.var_of, dtype=np.int64)
        chk_of = np.ascontiguousarray(self.chk_of, dtype=np.int64)
        object.__setattr__(self, "var_of", var_of)
        object.__setattr__(self, "chk_of", chk_of)
        if var_of.ndim != 1 or chk_of.shape != var_of.shape:
            raise ValueError("var_of and chk_of must be 1-D arrays of equal length")
        if var_of.size == 0:
            raise ValueError("graph must have at least one edge")
        if var_of.min() < 0 or var_of.max() >= self.n:
            raise ValueError("variable index out of range")
        if chk_of.min() < 0 or chk_of.max() >= self.m:
            raise ValueError("check index out of range")
        if np.any(np.diff(var_of) < 0):
            raise ValueError("edges must be sorted by variable node")
        var_deg = np.bincount(var_of, minlength=self.n).astype(np.int64)
        chk_deg = np.bincount(chk_of, minlength=self.m).astype(np.int64)
        if var_deg.min() < 1 or chk_deg.min() < 1:
            raise ValueError("every node must have at least one edge")
        by_check = np.argsort(chk_of, kind="stable")
        object.__setattr__(self, "var_deg", var_deg)
        object.__setattr__(self, "chk_deg", chk_deg)
        object.__setattr__(self, "by_check", by_check)
        object.__setattr__(
            self, "var_ptr", np.concatenate(([0], np.cumsum(var_deg)))
        )
        object.__setattr__(
            self, "chk_ptr", np.concatenate(([0], np.cumsum(chk_deg)))
        )

    @property
    def n_edges(self) -> int:
        return int(self.var_of.size)

    def to_text(self) -> str:
        """Serialize as an edge list: ``n dv dc`` header, one ``v c`` line per edge."""
        buf = io.StringIO()
        buf.write(f"{self.n} {self.dv} {self.dc}\n")
        for v, c in zip(self.var_of, self.chk_of):
            buf.write(f"{int(v)} {int(c)}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "TannerGraph":
        """Parse the :meth:`to_text` format, preserving edge order."""
        lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
        if not lines:
            raise ValueError("empty graph text")
        try:
            n, dv, dc = (int(tok) for tok in lines[0].split())
        except ValueError as exc:
            raise ValueError("header must be 'n dv dc'") from exc
        if n < 1 or dv < 1 or dc < 1 or (n * dv) % dc != 0:
            raise ValueError("invalid header: need n*dv divisible by dc")
        m = n * dv // dc
        pairs = []
        for ln in lines[1:]:
            toks = ln.split()
            if len(toks) != 2:
                raise ValueError(f"bad edge line: {ln!r}")
            pairs.append((int(toks[0]), int(toks[1])))
        if len(pairs) != n * dv:
            raise ValueError(
                f"expected {n * dv} edges, found {len(pairs)}"
            )
        var_of = np.array([p[0] for p in pairs], dtype=np.int64)
        chk_of = np.array([p[1] for p in pairs], dtype=np.int64)
        return cls(n=n, m=m, var_of=var_of, chk_of=chk_of, dv=dv, dc=dc)


def _rand_below(seed: int, index: int, bound: int) -> int:
    """Deterministic integer in [0, bound) from the counter-based generator."""
    return int(uniform01(seed, index) * bound)


def sample_code(n: int, dv: int, dc: int, seed: int) -> TannerGraph:
    """Sample a (dv, dc)-regular code graph via a random socket permutation.

    Requires ``n * dv`` divisible by ``dc`` and ``n >= dc``.  The
    permutation is drawn with a Fisher-Yates shuffle driven by the
    counter-based generator, so the result is reproducible from ``seed``
    alone.  Parallel edges may occur and are kept.
    """
    if dv < 1 or dc < 1:
        raise ValueError("degrees must be positive")
    if (n * dv) % dc != 0:
        raise ValueError("n * dv must be divisible by dc")
    if n < dc:
        raise ValueError("need n >= dc")
    m = n * dv // dc
    n_sockets = n * dv
    perm = list(range(n_sockets))
    shuffle_seed = derive_seed(seed, 0x53484652)  # "SHFR"
    for i in range(n_sockets - 1, 0, -1):
        j = _rand_below(shuffle_seed, i, i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    perm_arr = np.array(perm, dtype=np.int64)
    var_of = np.repeat(np.arange(n, dtype=np.int64), dv)
    chk_of = perm_arr // dc
    return TannerGraph(n=n, m=m, var_of=var_of, chk_of=chk_of, dv=dv, dc=dc)


class MaskMode(str, Enum):
    """Lifetime of a wiring defect: fixed for the run, or redrawn per iteration."""

    PERMANENT = "permanent"
    TRANSIENT = "transient"


@dataclass(frozen=True)
class MiswiringMask:
    """Per-edge defect mask with rate ``alpha``, addressable by (edge, iteration).

    Each edge carries an implicit uniform variate; the edge is inactive
    when the variate falls below ``alpha``.  Permanent masks use one
    variate per edge, transient masks one per (edge, iteration) pair.
    Masks sharing a seed are coupled across ``alpha`` values: raising the
    rate only removes additional edges, never restores one.
    """

    mode: MaskMode
    alpha: float
    seed: int
    n_edges: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", MaskMode(self.mode))
        alpha = float(self.alpha)
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        if self.n_edges < 1:
            raise ValueError("n_edges must be positive")

    def active_edges(self, iteration: int) -> np.ndarray:
        """Boolean activity of every edge at the given iteration (1-based)."""
        edges = np.arange(self.n_edges, dtype=np.uint64)
        if self.mode is MaskMode.PERMANENT:
            stream = derive_seed(self.seed, _PERMANENT_STREAM)
            u = uniform01_array(stream, edges, 0)
        else:
            stream = derive_seed(self.seed, _TRANSIENT_STREAM)
            u = uniform01_array(stream, edges, int(iteration))
        return u >= self.alpha


def batch_active_edges(
    mode: MaskMode,
    alpha: float,
    seeds: np.ndarray,
    n_edges: int,
    iteration: int,
) -> np.ndarray:
    """Edge activity for a batch of masks: one row per mask seed.

    Row ``i`` equals ``MiswiringMask(mode, alpha, seeds[i], n_edges)
    .active_edges(iteration)``; the batched form exists for the inner
    simulation loop.
    """
    mode = MaskMode(mode)
    tag = _PERMANENT_STREAM if mode is MaskMode.PERMANENT else _TRANSIENT_STREAM
    streams = derive_seed_array(np.asarray(seeds, dtype=np.uint64), tag)
    edges = np.arange(n_edges, dtype=np.uint64)
    last = 0 if mode is MaskMode.PERMANENT else int(iteration)
    u = uniform01_array(streams[:, None], edges[None, :], last)
    return u >= alpha


def is_edge_active(mask: MiswiringMask, edge_id: int, iteration: int) -> bool:
    """Whether one edge delivers messages at one iteration under the mask."""
    if not 0 <= edge_id < mask.n_edges:
        raise ValueError(f"edge_id out of range: {edge_id}")
    if mask.mode is MaskMode.PERMANENT:
        stream = derive_seed(mask.seed, _PERMANENT_STREAM)
        u = uniform01(stream, edge_id, 0)
    else:
        stream = derive_seed(mask.seed, _TRANSIENT_STREAM)
        u = uniform01(stream, edge_id, int(iteration))
    return bool(u >= mask.alpha)
