"""Domain types shared by every stage of the pipeline.

Coordinates are flattened joint-major, then dimension-major:
``joint0_x, joint0_y, joint0_z, joint1_x, ...``. All weights are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .errors import DataError, ShapeMismatch

DIM_NAMES = ("x", "y", "z")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class SkeletonSpec:
    n_joints: int
    joint_names: tuple[str, ...]
    anatomical_edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.joint_names) != self.n_joints:
            raise ShapeMismatch(self.n_joints, len(self.joint_names))
        seen = set()
        normalized = []
        for i, j in self.anatomical_edges:
            if not (0 <= i < self.n_joints and 0 <= j < self.n_joints):
                raise DataError(f"edge ({i}, {j}) out of range for {self.n_joints} joints")
            if i == j:
                raise DataError(f"self-loop on joint {i}")
            p = _pair(int(i), int(j))
            if p in seen:
                raise DataError(f"duplicate anatomical edge {p}")
            seen.add(p)
            normalized.append(p)
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "anatomical_edges", tuple(normalized))

    @classmethod
    def unnamed(cls, n_joints: int, edges: Iterable[tuple[int, int]] = ()) -> "SkeletonSpec":
        width = max(2, len(str(n_joints)))
        names = tuple(f"joint{k + 1:0{width}d}" for k in range(n_joints))
        return cls(n_joints, names, tuple(edges))

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_joints, self.n_joints))
        for i, j in self.anatomical_edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def hop_distance(self, i: int, j: int) -> float:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_joints))
        g.add_edges_from(self.anatomical_edges)
        try:
            return float(nx.shortest_path_length(g, i, j))
        except nx.NetworkXNoPath:
            return float("inf")

    def to_dict(self) -> dict:
        return {
            "n_joints": self.n_joints,
            "joint_names": list(self.joint_names),
            "anatomical_edges": [list(e) for e in self.anatomical_edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SkeletonSpec":
        return cls(int(d["n_joints"]), tuple(d["joint_names"]),
                   tuple(tuple(e) for e in d["anatomical_edges"]))


# 22-joint body layout, 1-based joint numbers as in the EmoPain joint chart.
SKELETAL22_LABELS = (
    "hips", "spine_lower", "spine_mid", "spine_upper", "neck", "head",
    "l_clavicle", "l_shoulder", "l_elbow", "l_wrist",
    "r_clavicle", "r_shoulder", "r_elbow", "r_wrist",
    "l_hip", "l_knee", "l_ankle", "l_toe",
    "r_hip", "r_knee", "r_ankle", "r_toe",
)

SKELETAL22_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 4), (4, 5),
    (3, 6), (6, 7), (7, 8), (8, 9),
    (3, 10), (10, 11), (11, 12), (12, 13),
    (0, 14), (14, 15), (15, 16), (16, 17),
    (0, 18), (18, 19), (19, 20), (20, 21),
)


def skeletal22() -> SkeletonSpec:
    return SkeletonSpec.unnamed(22, SKELETAL22_EDGES)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Frames x variables coordinate matrix with per-frame labels."""

    data: np.ndarray
    n_dims: int = 3
    behavior_labels: np.ndarray | None = None
    exercise_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ShapeMismatch("2-d frames x variables", data.shape)
        if self.n_dims < 1 or data.shape[1] % self.n_dims:
            raise ShapeMismatch(f"multiple of n_dims={self.n_dims} variables", data.shape[1])
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise DataError(f"non-finite value at frame {bad[0]}, variable {bad[1]}")
        labels = self.behavior_labels
        if labels is None:
            labels = np.zeros(data.shape[0], dtype=int)
        labels = np.asarray(labels, dtype=int)
        if labels.shape != (data.shape[0],):
            raise ShapeMismatch(data.shape[0], labels.shape)
        if not np.all((labels == 0) | (labels == 1)):
            raise DataError("behaviour labels must be 0/1")
        if self.exercise_labels is not None:
            if len(self.exercise_labels) != data.shape[0]:
                raise ShapeMismatch(data.shape[0], len(self.exercise_labels))
            object.__setattr__(self, "exercise_labels", tuple(self.exercise_labels))
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "behavior_labels", _frozen(labels))

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_variables(self) -> int:
        return self.data.shape[1]

    @property
    def n_joints(self) -> int:
        return self.data.shape[1] // self.n_dims

    def column_index(self, joint: int, dim: int) -> int:
        return joint * self.n_dims + dim

    def joint_columns(self, joint: int) -> list[int]:
        return [joint * self.n_dims + k for k in range(self.n_dims)]

    def node_features(self) -> np.ndarray:
        """Frames x joints x dims view used by the classifier."""
        return self.data.reshape(self.n_frames, self.n_joints, self.n_dims)

    def scaled(self, alpha: float) -> "Dataset":
        return Dataset(self.data * alpha, self.n_dims, self.behavior_labels, self.exercise_labels)

    def take(self, frames: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(frames, dtype=int)
        ex = None if self.exercise_labels is None else tuple(self.exercise_labels[k] for k in idx)
        return Dataset(self.data[idx], self.n_dims, self.behavior_labels[idx], ex)

    def where_label(self, label: int) -> "Dataset":
        return self.take(np.flatnonzero(self.behavior_labels == label))


@dataclass(frozen=True, eq=False)
class DiscreteDataset:
    states: np.ndarray
    n_bins: int
    bin_edges: tuple[np.ndarray, ...]
    n_dims: int = 1
    degenerate: tuple[int, ...] = ()
    strategy: str = "quantile"

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int64)
        if states.size and (states.min() < 0 or states.max() >= self.n_bins):
            raise DataError("state out of range [0, n_bins)")
        object.__setattr__(self, "states", _frozen(states))
        object.__setattr__(self, "bin_edges", tuple(_frozen(e) for e in self.bin_edges))

    @property
    def n_frames(self) -> int:
        return self.states.shape[0]

    @property
    def n_joints(self) -> int:
        return self.states.shape[1] // self.n_dims

    def column_index(self, joint: int, dim: int) -> int:
        return joint * self.n_dims + dim

    def same_as(self, other: "DiscreteDataset") -> bool:
        return (self.n_bins == other.n_bins
                and np.array_equal(self.states, other.states)
                and self.degenerate == other.degenerate)


@dataclass(frozen=True)
class Cpdag:
    n: int
    undirected_edges: tuple[tuple[int, int], ...] = ()
    directed_edges: tuple[tuple[int, int], ...] = ()
    sepsets: dict = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        und = tuple(sorted({_pair(i, j) for i, j in self.undirected_edges}))
        dire = tuple(sorted({(int(i), int(j)) for i, j in self.directed_edges}))
        dpairs = {_pair(i, j) for i, j in dire}
        if dpairs & set(und):
            raise DataError("edge both directed and undirected")
        if len(dpairs) != len(dire):
            raise DataError("pair directed both ways")
        seps = {_pair(*k): tuple(sorted(v)) for k, v in self.sepsets.items()}
        object.__setattr__(self, "undirected_edges", und)
        object.__setattr__(self, "directed_edges", dire)
        object.__setattr__(self, "sepsets", dict(sorted(seps.items())))
        object.__setattr__(self, "flags", tuple(self.flags))

    def adjacent_pairs(self) -> set[tuple[int, int]]:
        return set(self.undirected_edges) | {_pair(i, j) for i, j in self.directed_edges}

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "undirected_edges": [list(e) for e in self.undirected_edges],
            "directed_edges": [list(e) for e in self.directed_edges],
            "sepsets": [{"pair": list(k), "set": list(v)} for k, v in self.sepsets.items()],
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Cpdag":
        return cls(
            int(d["n"]),
            tuple(tuple(e) for e in d["undirected_edges"]),
            tuple(tuple(e) for e in d["directed_edges"]),
            {tuple(s["pair"]): tuple(s["set"]) for s in d["sepsets"]},
            tuple(d.get("flags", ())),
        )


@dataclass(frozen=True)
class WeightedEdge:
    src: int
    dst: int
    weight: float
    votes: tuple[int, ...] = ()
    confident: bool = True
    forward_kl: tuple[float, ...] = ()
    backward_kl: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.weight >= 0:
            raise DataError(f"edge {self.src}->{self.dst} has negative weight {self.weight}")

    def to_dict(self) -> dict:
        return {
            "src": self.src, "dst": self.dst, "weight": self.weight,
            "votes": list(self.votes), "confident": self.confident,
            "forward_kl": list(self.forward_kl), "backward_kl": list(self.backward_kl),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WeightedEdge":
        return cls(int(d["src"]), int(d["dst"]), float(d["weight"]),
                   tuple(int(v) for v in d.get("votes", ())), bool(d.get("confident", True)),
                   tuple(float(v) for v in d.get("forward_kl", ())),
                   tuple(float(v) for v in d.get("backward_kl", ())))


@dataclass(frozen=True)
class WeightedCausalDag:
    n: int
    edges: tuple[WeightedEdge, ...] = ()
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        edges = tuple(sorted(self.edges, key=lambda e: (e.src, e.dst)))
        # opposite pairs are allowed here so validate_dag can report 2-cycles
        pairs = [(e.src, e.dst) for e in edges]
        if len(set(pairs)) != len(pairs):
            raise DataError("duplicate directed edge")
        for e in edges:
            if not (0 <= e.src < self.n and 0 <= e.dst < self.n) or e.src == e.dst:
                raise DataError(f"bad edge {e.src}->{e.dst} for n={self.n}")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "flags", tuple(self.flags))

    @classmethod
    def from_weights(cls, n: int, weights: dict[tuple[int, int], float]) -> "WeightedCausalDag":
        return cls(n, tuple(WeightedEdge(i, j, float(w)) for (i, j), w in weights.items()))

    def edge_set(self) -> set[tuple[int, int]]:
        return {(e.src, e.dst) for e in self.edges}

    def weight_matrix(self) -> np.ndarray:
        w = np.zeros((self.n, self.n))
        for e in self.edges:
            w[e.src, e.dst] = e.weight
        return w

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [e.to_dict() for e in self.edges], "flags": list(self.flags)}

    @classmethod
    def from_dict(cls, d: dict) -> "WeightedCausalDag":
        return cls(int(d["n"]), tuple(WeightedEdge.from_dict(e) for e in d["edges"]),
                   tuple(d.get("flags", ())))


@dataclass(frozen=True, eq=False)
class Representation:
    phi: np.ndarray
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "phi", _frozen(np.asarray(self.phi, dtype=float)))

    def to_dict(self) -> dict:
        return {"phi": self.phi.tolist(), "flags": list(self.flags)}

    @classmethod
    def from_dict(cls, d: dict) -> "Representation":
        n = len(d["phi"])
        return cls(np.array(d["phi"], dtype=float).reshape(n, n), tuple(d.get("flags", ())))


@dataclass(frozen=True)
class AcyclicityReport:
    ok: bool
    cycle_edges: tuple[tuple[int, int], ...] = ()


def validate_dag(g: WeightedCausalDag) -> AcyclicityReport:
    """Report every edge that lies on at least one directed cycle."""
    dg = nx.DiGraph()
    dg.add_nodes_from(range(g.n))
    dg.add_edges_from(g.edge_set())
    comp = {}
    for k, scc in enumerate(nx.strongly_connected_components(dg)):
        for v in scc:
            comp[v] = (k, len(scc))
    cyc = tuple(sorted((u, v) for u, v in dg.edges if comp[u][0] == comp[v][0] and comp[u][1] > 1))
    return AcyclicityReport(not cyc, cyc)
