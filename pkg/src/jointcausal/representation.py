"""Per-node normalised out-edge divergences and their structural checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Dataset, Representation, WeightedCausalDag


def phi(g: WeightedCausalDag) -> Representation:
    """Row i holds w(i -> j) / sum_k w(i -> k) over out-neighbours j, else 0.

    Sink nodes get an all-zero row. A node whose out-weights are all zero
    gets a uniform row over its out-neighbours and is flagged.
    """
    out = np.zeros((g.n, g.n))
    flags = []
    w = g.weight_matrix()
    has_edge = np.zeros((g.n, g.n), dtype=bool)
    for e in g.edges:
        has_edge[e.src, e.dst] = True
    for i in range(g.n):
        nbrs = np.flatnonzero(has_edge[i])
        if nbrs.size == 0:
            continue
        total = w[i, nbrs].sum()
        if total > 0:
            out[i, nbrs] = w[i, nbrs] / total
        else:
            out[i, nbrs] = 1.0 / nbrs.size
            flags.append(f"AllZeroOutWeights:{i}")
    return Representation(out, tuple(flags))


@dataclass(frozen=True)
class SupportReport:
    passed: bool
    spurious: tuple[tuple[int, int], ...] = ()
    missing: tuple[tuple[int, int], ...] = ()
    nonpositive_weights: tuple[tuple[int, int], ...] = ()


def check_theorem1(g: WeightedCausalDag, r: Representation) -> SupportReport:
    """phi[i, j] > 0 exactly on the edges of g, and every edge weight is positive."""
    edges = g.edge_set()
    support = {(int(i), int(j)) for i, j in zip(*np.nonzero(r.phi > 0))}
    spurious = tuple(sorted(support - edges))
    missing = tuple(sorted(edges - support))
    nonpos = tuple(sorted((e.src, e.dst) for e in g.edges if not e.weight > 0))
    return SupportReport(not (spurious or missing or nonpos), spurious, missing, nonpos)


@dataclass(frozen=True)
class ScaleReport:
    passed: bool
    max_abs_diff: dict = field(default_factory=dict)
    same_edges: dict = field(default_factory=dict)


def check_theorem2(d: Dataset, alphas, config=None, tol: float = 1e-12) -> ScaleReport:
    """Rerun the whole pipeline on alpha * d for each alpha and compare phi."""
    from .pipeline import PipelineConfig, run_pipeline

    config = config or PipelineConfig()
    base = run_pipeline(d, config)
    diffs, same = {}, {}
    for a in alphas:
        if not a > 0:
            raise ValueError(f"scale factors must be positive, got {a}")
        res = run_pipeline(d.scaled(a), config)
        diffs[a] = float(np.max(np.abs(res.representation.phi - base.representation.phi), initial=0.0))
        same[a] = res.dag.edge_set() == base.dag.edge_set()
    passed = all(diffs[a] <= tol and same[a] for a in alphas)
    return ScaleReport(passed, diffs, same)
