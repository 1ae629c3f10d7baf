"""PC structure search over joints: stable skeleton, v-structures, Meek rules.

Nodes are joints. With ``n_dims > 1`` a joint pair (i, j) given a joint set S
is tested on every (dim of i, dim of j) column pair, conditioning on all
columns of S; the pair counts as dependent if any column pair is dependent
after a Bonferroni adjustment over the n_dims**2 tests (``dim_correction``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import citest
from .citest import CiDecision
from .errors import ConfigError, InsufficientSamples, SingularConditioning
from .ingest import discretize
from .model import Cpdag, Dataset, SkeletonSpec, _pair

log = logging.getLogger(__name__)

CI_TESTS = ("fisher_z", "cmi")


@dataclass(frozen=True)
class Skeleton:
    n: int
    edges: tuple[tuple[int, int], ...]
    sepsets: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()
    n_tests: int = 0


class JointTester:
    """Aggregated CI decisions between joints."""

    def __init__(self, d: Dataset, alpha: float, ci_test: str = "fisher_z",
                 dim_correction: str = "bonferroni", n_bins: int = 8):
        if ci_test not in CI_TESTS:
            raise ConfigError(f"unknown ci_test {ci_test!r}")
        if dim_correction not in ("bonferroni", "none"):
            raise ConfigError(f"unknown dim_correction {dim_correction!r}")
        self.d = d
        self.alpha = alpha
        self.ci_test = ci_test
        self.m = d.n_dims ** 2 if dim_correction == "bonferroni" else 1
        if ci_test == "fisher_z":
            self.corr = _safe_corr(d.data)
        else:
            self.discrete = discretize(d, n_bins, "quantile")

    def __call__(self, i: int, j: int, s: Sequence[int]) -> CiDecision:
        d = self.d
        ci, cj = d.joint_columns(i), d.joint_columns(j)
        cs = [c for k in s for c in d.joint_columns(k)]
        decisions = []
        if self.ci_test == "fisher_z":
            block = citest.conditional_correlation_block(self.corr, ci + cj, cs)
            nd = d.n_dims
            for u in range(nd):
                for v in range(nd):
                    r = float(block[u, nd + v])
                    decisions.append(citest.fisher_z_test(r, d.n_frames, len(cs), self.alpha))
        else:
            for a in ci:
                for b in cj:
                    decisions.append(citest.conditional_mi_test(a, b, cs, self.discrete, self.alpha))
        p_min = min(dec.p_value for dec in decisions)
        p_adj = min(1.0, p_min * self.m)
        stat = max(dec.statistic for dec in decisions)
        if self.m == 1:
            independent = all(dec.independent for dec in decisions)
        else:
            independent = p_adj > self.alpha
        return CiDecision(independent, p_adj, stat)


def _safe_corr(x: np.ndarray) -> np.ndarray:
    """Correlation matrix; constant columns are treated as independent noise."""
    sd = x.std(axis=0)
    const = sd == 0
    z = (x - x.mean(axis=0)) / np.where(const, 1.0, sd)
    c = (z.T @ z) / x.shape[0]
    c[const, :] = 0.0
    c[:, const] = 0.0
    np.fill_diagonal(c, 1.0)
    return c


def pc_skeleton(d: Dataset, skeleton: SkeletonSpec | None = None, alpha: float = 0.05,
                max_cond: int = 3, *, restrict_to_anatomy: bool = False,
                ci_test: str = "fisher_z", dim_correction: str = "bonferroni",
                n_bins: int = 8) -> Skeleton:
    """Order-independent (stable) PC adjacency search.

    Deletions found at conditioning-set size ``level`` are applied only after
    every pair at that level has been tested against the adjacency snapshot
    taken at the start of the level.
    """
    if not 0 < alpha < 1:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    if max_cond < 0:
        raise ConfigError("max_cond must be >= 0")
    if d.n_frames < 50:
        raise InsufficientSamples(f"PC needs at least 50 frames, got {d.n_frames}")
    n = d.n_joints
    if skeleton is not None and skeleton.n_joints != n:
        raise ConfigError(f"skeleton has {skeleton.n_joints} joints, data has {n}")
    if restrict_to_anatomy:
        if skeleton is None:
            raise ConfigError("restrict_to_anatomy needs a skeleton")
        pairs = set(skeleton.anatomical_edges)
    else:
        pairs = set(combinations(range(n), 2))
    adj = {v: set() for v in range(n)}
    for i, j in pairs:
        adj[i].add(j)
        adj[j].add(i)

    tester = JointTester(d, alpha, ci_test, dim_correction, n_bins)
    sepsets: dict = {}
    flags: list[str] = []
    n_tests = 0
    for level in range(max_cond + 1):
        snap = {v: frozenset(a) for v, a in adj.items()}
        edges = sorted({_pair(i, j) for i in adj for j in adj[i]})
        if not any(len(snap[x] - {y}) >= level or len(snap[y] - {x}) >= level for x, y in edges):
            break
        removals = []
        for x, y in edges:
            candidates = []
            for a, b in ((x, y), (y, x)):
                for s in combinations(sorted(snap[a] - {b}), level):
                    if s not in candidates:
                        candidates.append(s)
            errors = tested = 0
            for s in candidates:
                try:
                    dec = tester(x, y, s)
                except SingularConditioning:
                    tested += 1
                    continue
                except InsufficientSamples:
                    errors += 1
                    continue
                tested += 1
                if dec.independent:
                    removals.append((x, y, s))
                    break
            n_tests += tested
            if candidates and tested == 0 and errors:
                flags.append(f"ci-error:{x}-{y}@{level}")
        for x, y, s in removals:
            adj[x].discard(y)
            adj[y].discard(x)
            sepsets[(x, y)] = tuple(s)
    edges = tuple(sorted({_pair(i, j) for i in adj for j in adj[i]}))
    log.debug("skeleton: %d edges after %d tests", len(edges), n_tests)
    return Skeleton(n, edges, sepsets, tuple(flags), n_tests)


def orient_v_structures(skel: Skeleton | Cpdag, sepsets: dict | None = None) -> Cpdag:
    """Orient x -> z <- y for unshielded triples with z outside sepset(x, y)."""
    if isinstance(skel, Cpdag):
        n, edges = skel.n, skel.undirected_edges
        sepsets = skel.sepsets if sepsets is None else sepsets
        flags = list(skel.flags)
    else:
        n, edges = skel.n, skel.edges
        sepsets = skel.sepsets if sepsets is None else sepsets
        flags = list(skel.flags)
    sepsets = {_pair(*k): tuple(v) for k, v in sepsets.items()}
    adj = {v: set() for v in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    wants = set()
    for z in range(n):
        for x, y in combinations(sorted(adj[z]), 2):
            if y in adj[x]:
                continue
            sep = sepsets.get((x, y))
            if sep is None:
                continue  # never tested (pair excluded up front)
            if z not in sep:
                wants.add((x, z))
                wants.add((y, z))
    undirected, directed = [], []
    for i, j in edges:
        fwd, bwd = (i, j) in wants, (j, i) in wants
        if fwd and bwd:
            undirected.append((i, j))
            flags.append(f"v-conflict:{i}-{j}")
        elif fwd:
            directed.append((i, j))
        elif bwd:
            directed.append((j, i))
        else:
            undirected.append((i, j))
    return Cpdag(n, tuple(undirected), tuple(directed), sepsets, tuple(flags))


def _reaches(children: dict, start: int, target: int) -> bool:
    stack, seen = [start], {start}
    while stack:
        v = stack.pop()
        if v == target:
            return True
        for w in children[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def meek_closure(g: Cpdag) -> Cpdag:
    """Apply Meek rules R1-R4 until nothing changes.

    An orientation that would close a directed cycle is skipped, so the
    closure never introduces cycles even on inconsistent input.
    """
    n = g.n
    und = {v: set() for v in range(n)}
    par = {v: set() for v in range(n)}
    chi = {v: set() for v in range(n)}
    for i, j in g.undirected_edges:
        und[i].add(j)
        und[j].add(i)
    for i, j in g.directed_edges:
        chi[i].add(j)
        par[j].add(i)

    def adjacent(a, b):
        return b in und[a] or b in chi[a] or b in par[a]

    def rule_fires(a, b):
        # R1: c -> a - b, c and b nonadjacent
        if any(not adjacent(c, b) for c in par[a]):
            return True
        # R2: a -> c -> b
        if chi[a] & par[b]:
            return True
        # R3: a - c -> b, a - d -> b, c and d nonadjacent
        cands = sorted(und[a] & par[b])
        if any(not adjacent(c, d) for c, d in combinations(cands, 2)):
            return True
        # R4: a - c -> d -> b, a adjacent d, c and b nonadjacent
        for d in par[b]:
            if not adjacent(a, d):
                continue
            for c in und[a] & par[d]:
                if c != b and not adjacent(c, b):
                    return True
        return False

    changed = True
    while changed:
        changed = False
        for a in range(n):
            for b in sorted(und[a]):
                if b not in und[a] or not rule_fires(a, b):
                    continue
                if _reaches(chi, b, a):
                    continue
                und[a].discard(b)
                und[b].discard(a)
                chi[a].add(b)
                par[b].add(a)
                changed = True
    undirected = tuple((i, j) for i in range(n) for j in und[i] if i < j)
    directed = tuple((i, j) for i in range(n) for j in chi[i])
    return Cpdag(n, undirected, directed, g.sepsets, g.flags)


def pc(d: Dataset, skeleton: SkeletonSpec | None = None, alpha: float = 0.05, max_cond: int = 3,
       **kwargs) -> Cpdag:
    skel = pc_skeleton(d, skeleton, alpha, max_cond, **kwargs)
    return meek_closure(orient_v_structures(skel))
