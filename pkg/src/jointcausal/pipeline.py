"""End-to-end discovery: PC -> KL orientation -> representation."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ConfigError
from .ingest import STRATEGIES, discretize
from .kl import assess_directions
from .model import Cpdag, Dataset, Representation, SkeletonSpec, WeightedCausalDag
from .pc import CI_TESTS, meek_closure, orient_v_structures, pc_skeleton
from .representation import phi


@dataclass(frozen=True)
class PipelineConfig:
    alpha: float = 0.05
    max_cond: int = 3
    n_bins: int = 8
    binning: str = "uniform"
    smoothing: float = 0.5
    gap_threshold: float = 0.1
    restrict_to_anatomy: bool = False
    ci_test: str = "fisher_z"
    dim_correction: str = "bonferroni"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.max_cond < 0:
            raise ConfigError("max_cond must be >= 0")
        if self.n_bins < 2:
            raise ConfigError("n_bins must be >= 2")
        if self.binning not in STRATEGIES:
            raise ConfigError(f"binning must be one of {STRATEGIES}")
        if self.smoothing < 0:
            raise ConfigError("smoothing must be >= 0")
        if not 0 <= self.gap_threshold <= 1:
            raise ConfigError("gap_threshold must be in [0, 1]")
        if self.ci_test not in CI_TESTS:
            raise ConfigError(f"ci_test must be one of {CI_TESTS}")
        if self.dim_correction not in ("bonferroni", "none"):
            raise ConfigError("dim_correction must be 'bonferroni' or 'none'")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        kw = {k: v for k, v in d.items() if k in known}
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PipelineResult:
    cpdag: Cpdag
    dag: WeightedCausalDag
    representation: Representation


def discover(d: Dataset, config: PipelineConfig = PipelineConfig(),
             skeleton: SkeletonSpec | None = None) -> Cpdag:
    skel = pc_skeleton(d, skeleton, config.alpha, config.max_cond,
                       restrict_to_anatomy=config.restrict_to_anatomy, ci_test=config.ci_test,
                       dim_correction=config.dim_correction, n_bins=config.n_bins)
    return meek_closure(orient_v_structures(skel))


def orient(cpdag: Cpdag, d: Dataset, config: PipelineConfig = PipelineConfig(),
           skeleton: SkeletonSpec | None = None) -> WeightedCausalDag:
    dd = discretize(d, config.n_bins, config.binning)
    return assess_directions(cpdag, dd, skeleton, config.smoothing, config.gap_threshold)


def run_pipeline(d: Dataset, config: PipelineConfig = PipelineConfig(),
                 skeleton: SkeletonSpec | None = None) -> PipelineResult:
    cpdag = discover(d, config, skeleton)
    dag = orient(cpdag, d, config, skeleton)
    return PipelineResult(cpdag, dag, phi(dag))


def bootstrap_stability(d: Dataset, config: PipelineConfig = PipelineConfig(), n_boot: int = 20,
                        seed: int = 0, skeleton: SkeletonSpec | None = None) -> dict[tuple[int, int], float]:
    """Share of frame-resampled reruns in which each directed edge appears."""
    if n_boot < 10:
        raise ConfigError("n_boot must be >= 10")
    rng = np.random.default_rng(seed)
    tally: Counter = Counter()
    for _ in range(n_boot):
        idx = rng.integers(0, d.n_frames, size=d.n_frames)
        boot = d.take(idx)
        dag = orient(discover(boot, config, skeleton), boot, config, skeleton)
        tally.update(dag.edge_set())
    return {e: tally[e] / n_boot for e in sorted(tally)}


def label_conditioned_weights(d: Dataset, config: PipelineConfig = PipelineConfig(),
                              skeleton: SkeletonSpec | None = None) -> np.ndarray:
    """Run the pipeline separately on each behaviour label and merge the
    graphs: entry (i, j) is the largest weight of i -> j across labels."""
    w = np.zeros((d.n_joints, d.n_joints))
    for label in (0, 1):
        part = d.where_label(label)
        if part.n_frames == 0:
            continue
        w = np.maximum(w, run_pipeline(part, config, skeleton).dag.weight_matrix())
    return w
