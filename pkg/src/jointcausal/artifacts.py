"""On-disk artifacts: canonical JSON, DOT rendering and run manifests."""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import dataclass
from pathlib import Path

import networkx
import numpy
import scipy

from .model import Cpdag, Representation, SkeletonSpec, WeightedCausalDag


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def read_json(path: str | Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def save_cpdag(path, g: Cpdag) -> Path:
    return write_json(path, {"kind": "cpdag", **g.to_dict()})


def load_cpdag(path) -> Cpdag:
    return Cpdag.from_dict(read_json(path))


def save_dag(path, g: WeightedCausalDag) -> Path:
    return write_json(path, {"kind": "weighted_dag", **g.to_dict()})


def load_dag(path) -> WeightedCausalDag:
    return WeightedCausalDag.from_dict(read_json(path))


def save_phi(path, r: Representation) -> Path:
    return write_json(path, {"kind": "phi", **r.to_dict()})


def load_phi(path) -> Representation:
    return Representation.from_dict(read_json(path))


@dataclass(frozen=True)
class DotOptions:
    name: str = "causal"
    max_penwidth: float = 5.0
    min_penwidth: float = 0.5
    skeleton: SkeletonSpec | None = None


def _quote(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(g: WeightedCausalDag, options: DotOptions = DotOptions()) -> str:
    """Graphviz digraph with nodes and edges in index order.

    ``weight`` keeps the raw divergence in nats; ``penwidth`` scales with the
    weight divided by the largest weight in the graph. Edges whose vote was
    not confident are dashed.
    """
    names = options.skeleton.joint_names if options.skeleton else [str(i) for i in range(g.n)]
    top = max((e.weight for e in g.edges), default=0.0)
    lines = [f"digraph {_quote(options.name)} {{"]
    for i in range(g.n):
        lines.append(f"  {i} [label={_quote(names[i])}];")
    for e in sorted(g.edges, key=lambda e: (e.src, e.dst)):
        rel = e.weight / top if top > 0 else 1.0
        pen = options.min_penwidth + (options.max_penwidth - options.min_penwidth) * rel
        attrs = [f"weight={e.weight!r}", f"penwidth={pen:.4f}", f"label={_quote(f'{e.weight:.4g}')}"]
        if not e.confident:
            attrs.append("style=dashed")
        lines.append(f"  {e.src} -> {e.dst} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_manifest(command: str, config: dict, seed: int | None, outputs=()) -> dict:
    """Reproducibility record. Deliberately free of timestamps and host names
    so identical runs produce identical manifests."""
    from . import __version__

    return {
        "command": command,
        "config_hash": config_hash(config),
        "config": config,
        "seed": seed,
        "versions": {
            "jointcausal": __version__,
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "networkx": networkx.__version__,
        },
        "outputs": {Path(p).name: file_digest(p) for p in sorted(outputs, key=str)},
    }
