"""Directional KL scores, per-dimension direction voting and edge weights.

The directional score of i -> j compares each conditional P(x_j | x_i) with
the marginal P(x_j) and averages the divergences over the observed states
of x_i with equal weight. Weighting by P(x_i) instead would reduce to the
mutual information, which is the same in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np

from .errors import EmptyConditioningState, SupportMismatch, ZeroInQ
from .model import Cpdag, DiscreteDataset, SkeletonSpec, WeightedCausalDag, WeightedEdge

DEFAULT_SMOOTHING = 0.5
DEFAULT_GAP_THRESHOLD = 0.1


@dataclass(frozen=True, eq=False)
class ProbTable:
    marginal: np.ndarray
    conditional: np.ndarray
    counts: np.ndarray
    smoothing: float

    @classmethod
    def from_counts(cls, counts, smoothing: float = DEFAULT_SMOOTHING) -> "ProbTable":
        """Additively smoothed MLE tables from a (states_i x states_j) count matrix."""
        if smoothing < 0:
            raise ValueError("smoothing must be >= 0")
        c = np.asarray(counts, dtype=float)
        n_j = c.shape[1]
        row = c.sum(axis=1)
        if smoothing == 0 and np.any(row == 0):
            raise EmptyConditioningState(int(np.flatnonzero(row == 0)[0]))
        cond = (c + smoothing) / (row[:, None] + smoothing * n_j)
        marg = (c.sum(axis=0) + smoothing) / (c.sum() + smoothing * n_j)
        return cls(marg, cond, c, smoothing)

    @property
    def observed_rows(self) -> np.ndarray:
        return self.counts.sum(axis=1) > 0


def contingency(a: np.ndarray, b: np.ndarray, n_a: int, n_b: int) -> np.ndarray:
    c = np.zeros((n_a, n_b))
    np.add.at(c, (a, b), 1.0)
    return c


def estimate_tables(i: int, j: int, d: DiscreteDataset, smoothing: float = DEFAULT_SMOOTHING) -> ProbTable:
    """P(x_j | x_i) and P(x_j) for state columns i and j."""
    c = contingency(d.states[:, i], d.states[:, j], d.n_bins, d.n_bins)
    return ProbTable.from_counts(c, smoothing)


def kl_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """D(p || q) in nats, with 0 * log(0 / q) = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise SupportMismatch(f"support sizes differ: {p.shape} vs {q.shape}")
    nz = p > 0
    if np.any(q[nz] <= 0):
        raise ZeroInQ("q is zero where p is positive")
    return max(0.0, float(np.sum(p[nz] * np.log(p[nz] / q[nz]))))


def directional_kl_from_table(t: ProbTable) -> float:
    rows = np.flatnonzero(t.observed_rows)
    if rows.size == 0:
        return 0.0
    return float(np.mean([kl_divergence(t.conditional[r], t.marginal) for r in rows]))


def directional_kl(i: int, j: int, d: DiscreteDataset, smoothing: float = DEFAULT_SMOOTHING) -> float:
    return directional_kl_from_table(estimate_tables(i, j, d, smoothing))


def directional_pair(i: int, j: int, d: DiscreteDataset, smoothing: float = DEFAULT_SMOOTHING) -> tuple[float, float]:
    """(D(i -> j), D(j -> i)) from one shared contingency table."""
    c = contingency(d.states[:, i], d.states[:, j], d.n_bins, d.n_bins)
    fwd = directional_kl_from_table(ProbTable.from_counts(c, smoothing))
    bwd = directional_kl_from_table(ProbTable.from_counts(c.T, smoothing))
    return fwd, bwd


@dataclass(frozen=True)
class Vote:
    forward: bool
    weight: float
    votes: tuple[int, ...]
    confident: bool
    tie_broken: bool = False


def vote_direction(forward: Sequence[float], backward: Sequence[float],
                   gap_threshold: float = DEFAULT_GAP_THRESHOLD, fixed: bool | None = None) -> Vote:
    """Majority vote over dimensions on D(i -> j) vs D(j -> i).

    ``votes`` holds +1 where dimension k prefers i -> j, -1 for j -> i and 0
    for an exact tie. A tied vote goes to the larger summed divergence, then
    to i -> j. ``fixed`` forces the direction (edges already oriented by PC)
    while still recording the votes. The weight is the mean divergence over
    all dimensions in the chosen direction.
    """
    f = np.asarray(forward, dtype=float)
    b = np.asarray(backward, dtype=float)
    votes = tuple(int(v) for v in np.sign(f - b))
    tally = sum(votes)
    tie_broken = False
    if fixed is not None:
        is_forward = fixed
    elif tally != 0:
        is_forward = tally > 0
    else:
        tie_broken = True
        is_forward = bool(f.sum() >= b.sum())
    weight = float(np.mean(f if is_forward else b))
    hi = np.maximum(f, b)
    gaps = np.divide(np.abs(f - b), hi, out=np.zeros_like(hi), where=hi > 0)
    confident = bool(np.mean(gaps) >= gap_threshold)
    return Vote(is_forward, weight, votes, confident, tie_broken)


def break_cycles(n: int, edges: list[WeightedEdge]) -> tuple[list[WeightedEdge], list[str]]:
    """Delete the lightest edge of each directed cycle until none remain."""
    edges = list(edges)
    flags = []
    while True:
        g = nx.DiGraph()
        g.add_nodes_from(range(n))
        g.add_edges_from((e.src, e.dst) for e in edges)
        try:
            cycle = nx.find_cycle(g)
        except nx.NetworkXNoCycle:
            return edges, flags
        on_cycle = {(u, v) for u, v in cycle}
        victim = min((e for e in edges if (e.src, e.dst) in on_cycle),
                     key=lambda e: (e.weight, e.src, e.dst))
        edges.remove(victim)
        flags.append(f"cycle-removed:{victim.src}->{victim.dst}")


def assess_directions(cpdag: Cpdag, d: DiscreteDataset, skeleton: SkeletonSpec | None = None,
                      smoothing: float = DEFAULT_SMOOTHING,
                      gap_threshold: float = DEFAULT_GAP_THRESHOLD) -> WeightedCausalDag:
    """Weight every CPDAG edge and orient the undirected ones by KL vote.

    PC-directed edges keep their orientation; only their weights come from
    the divergences.
    """
    if cpdag.n != d.n_joints:
        raise ValueError(f"cpdag has {cpdag.n} nodes, data has {d.n_joints} joints")
    if skeleton is not None and skeleton.n_joints != cpdag.n:
        raise ValueError("skeleton and cpdag disagree on node count")
    work = [(i, j, None) for i, j in cpdag.undirected_edges]
    work += [(i, j, True) for i, j in cpdag.directed_edges]
    edges, flags = [], list(cpdag.flags)
    for i, j, fixed in sorted(work):
        fwd, bwd = [], []
        for k in range(d.n_dims):
            f, b = directional_pair(d.column_index(i, k), d.column_index(j, k), d, smoothing)
            fwd.append(f)
            bwd.append(b)
        v = vote_direction(fwd, bwd, gap_threshold, fixed)
        if v.tie_broken:
            flags.append(f"vote-tie:{i}-{j}")
        if v.forward:
            edges.append(WeightedEdge(i, j, v.weight, v.votes, v.confident, tuple(fwd), tuple(bwd)))
        else:
            edges.append(WeightedEdge(j, i, v.weight, tuple(-x for x in v.votes), v.confident,
                                      tuple(bwd), tuple(fwd)))
    edges, cyc_flags = break_cycles(cpdag.n, edges)
    return WeightedCausalDag(cpdag.n, tuple(edges), tuple(flags + cyc_flags))

