"""Command-line front end.

    jointcausal synth     --config cfg.yaml --out-dir out   # dataset.csv from an SCM
    jointcausal discover  --config cfg.yaml --out-dir out   # cpdag.json
    jointcausal orient    --config cfg.yaml --out-dir out   # weighted_dag.json + .dot
    jointcausal represent --config cfg.yaml --out-dir out   # phi.json
    jointcausal train     --config cfg.yaml --out-dir out   # metrics.csv + checkpoint.json
    jointcausal eval      --config cfg.yaml --out-dir out   # eval_metrics.csv
    jointcausal export    --config cfg.yaml --out-dir out   # graph.dot

Exit codes: 0 success, 2 configuration error, 3 data error, 4 algorithm
error. Failures print a one-line JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import artifacts, gcn, synth
from .errors import ConfigError, DataError, JointCausalError
from .ingest import CsvSchema, load_csv, write_csv
from .model import SkeletonSpec, WeightedCausalDag, skeletal22
from .pipeline import PipelineConfig, discover, label_conditioned_weights, orient
from .representation import phi

EXIT_CODES = {"config": 2, "data": 3, "algorithm": 4}
COMMANDS = ("discover", "orient", "represent", "train", "eval", "synth", "export")

log = logging.getLogger("jointcausal")


class Context:
    """Parsed config plus resolved paths for one invocation."""

    def __init__(self, config: dict, base: Path, out_dir: Path, seed: int | None):
        self.config = config
        self.base = base
        self.out_dir = out_dir
        self.seed = int(seed if seed is not None else config.get("seed", 0))
        self.outputs: list[Path] = []

    def path(self, key: str, default: str | None = None) -> Path:
        """Config path relative to the config file, else a default in out-dir."""
        raw = self.config.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"config key {key!r} is required")
            return self.out_dir / default
        p = Path(raw)
        return p if p.is_absolute() else self.base / p

    def emit(self, path: Path) -> Path:
        self.outputs.append(path)
        return path

    @property
    def skeleton(self) -> SkeletonSpec:
        sk = self.config.get("skeleton", "skeletal22")
        if sk == "skeletal22":
            return skeletal22()
        if isinstance(sk, int) and not isinstance(sk, bool):
            return SkeletonSpec.unnamed(sk)
        if isinstance(sk, dict):
            return SkeletonSpec.from_dict(sk)
        raise ConfigError(f"unknown skeleton {sk!r}")

    @property
    def n_dims(self) -> int:
        return int(self.config.get("n_dims", 3))

    @property
    def schema(self) -> CsvSchema:
        s = self.config.get("schema")
        if s is None:
            return CsvSchema.for_skeleton(self.skeleton, self.n_dims)
        return CsvSchema.from_dict(s)

    @property
    def pipeline(self) -> PipelineConfig:
        return PipelineConfig.from_dict(self.config)

    @property
    def gcn(self) -> gcn.GcnConfig:
        g = dict(self.config.get("gcn", {}))
        g["seed"] = self.seed
        return gcn.GcnConfig.from_dict(g)

    def dataset(self):
        path = self.path("dataset")
        if not path.is_file():
            raise DataError(f"dataset not found: {path}")
        return load_csv(path, self.schema, self.skeleton, self.n_dims)


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    return doc


def _dag(ctx: Context) -> WeightedCausalDag:
    return artifacts.load_dag(ctx.path("weighted_dag", "weighted_dag.json"))


def cmd_synth(ctx: Context) -> None:
    scm = dict(ctx.config.get("scm", {}))
    if "spec" in scm:
        spec = synth.ScmSpec.load(ctx.base / scm["spec"])
    else:
        preset = scm.pop("preset", "chain3")
        if preset not in synth.PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        if preset in ("skeletal22", "classification"):
            scm.setdefault("seed", ctx.seed)
        try:
            spec = synth.PRESETS[preset](**scm)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
    frames = int(ctx.config.get("frames", 10000))
    d = synth.sample_scm(spec, frames, ctx.seed)
    skel = ctx.skeleton if spec.n_nodes == 22 else SkeletonSpec.unnamed(spec.n_nodes)
    schema = CsvSchema.for_skeleton(skel, spec.n_dims)
    out = ctx.emit(ctx.out_dir / "dataset.csv")
    write_csv(out, d, schema)
    spec.save(ctx.emit(ctx.out_dir / "scm.json"))
    print(f"wrote {frames} frames of {spec.n_nodes} joints to {out}")


def cmd_discover(ctx: Context) -> None:
    g = discover(ctx.dataset(), ctx.pipeline, ctx.skeleton)
    artifacts.save_cpdag(ctx.emit(ctx.out_dir / "cpdag.json"), g)
    print(f"{len(g.directed_edges)} directed, {len(g.undirected_edges)} undirected edges; "
          f"{len(g.sepsets)} separating sets")
    for (i, j), s in sorted(g.sepsets.items()):
        print(f"  {i} _|_ {j} | {list(s)}")


def cmd_orient(ctx: Context) -> None:
    cp = artifacts.load_cpdag(ctx.path("cpdag", "cpdag.json"))
    g = orient(cp, ctx.dataset(), ctx.pipeline, ctx.skeleton)
    artifacts.save_dag(ctx.emit(ctx.out_dir / "weighted_dag.json"), g)
    dot = artifacts.export_dot(g, artifacts.DotOptions(skeleton=_named(ctx, g.n)))
    ctx.emit(ctx.out_dir / "weighted_dag.dot").write_text(dot, encoding="utf-8")
    print(f"{len(g.edges)} weighted edges")


def cmd_represent(ctx: Context) -> None:
    r = phi(_dag(ctx))
    artifacts.save_phi(ctx.emit(ctx.out_dir / "phi.json"), r)
    print(f"phi: {r.phi.shape[0]} x {r.phi.shape[1]}, {int(np.count_nonzero(r.phi))} nonzero entries")


def _adjacency(ctx: Context, d) -> gcn.AdjacencyMode:
    variant = ctx.config.get("adjacency", "causal-weighted")
    if variant == "anatomical-baseline":
        return gcn.AdjacencyMode.baseline(ctx.skeleton)
    if variant == "causal-weighted":
        if ctx.config.get("weighted_dag") or (ctx.out_dir / "weighted_dag.json").is_file():
            return gcn.AdjacencyMode.causal(_dag(ctx))
        return gcn.AdjacencyMode("causal-weighted", label_conditioned_weights(d, ctx.pipeline, ctx.skeleton))
    raise ConfigError(f"adjacency must be one of {gcn.VARIANTS}")


def cmd_train(ctx: Context) -> None:
    d = ctx.dataset()
    res = gcn.train(d, _adjacency(ctx, d), ctx.gcn)
    gcn.write_history_csv(ctx.emit(ctx.out_dir / "metrics.csv"), res.history)
    gcn.save_checkpoint(ctx.emit(ctx.out_dir / "checkpoint.json"), res)
    m = res.final()
    print(f"{res.variant}: test accuracy {m.accuracy:.4f}, macro F1 {m.macro_f1:.4f}")


def cmd_eval(ctx: Context) -> None:
    params, a_hat, _, variant = gcn.load_checkpoint(ctx.path("checkpoint", "checkpoint.json"))
    d = ctx.dataset()
    m = gcn.evaluate(params, d.node_features(), d.behavior_labels, a_hat)
    rec = gcn.EpochRecord(0, "eval", m, float("nan"))
    gcn.write_history_csv(ctx.emit(ctx.out_dir / "eval_metrics.csv"), [rec])
    print(f"{variant}: accuracy {m.accuracy:.4f}, macro F1 {m.macro_f1:.4f}")


def cmd_export(ctx: Context) -> None:
    g = _dag(ctx)
    dot = artifacts.export_dot(g, artifacts.DotOptions(skeleton=_named(ctx, g.n)))
    ctx.emit(ctx.out_dir / "graph.dot").write_text(dot, encoding="utf-8")
    sys.stdout.write(dot)


def _named(ctx: Context, n: int) -> SkeletonSpec | None:
    try:
        sk = ctx.skeleton
    except ConfigError:
        return None
    return sk if sk.n_joints == n else None


HANDLERS = {
    "discover": cmd_discover, "orient": cmd_orient, "represent": cmd_represent,
    "train": cmd_train, "eval": cmd_eval, "synth": cmd_synth, "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jointcausal", description="Causal joint graphs from motion data.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML or JSON config file")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--out-dir", default=".", help="directory for artifacts (default: .)")
    return p


def _fail(kind: str, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "kind": kind, "message": str(exc)}) + "\n")
    return EXIT_CODES[kind]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ctx = Context(config, Path(args.config).resolve().parent, out_dir, args.seed)
        HANDLERS[args.command](ctx)
        manifest = artifacts.run_manifest(args.command, config, ctx.seed, ctx.outputs)
        artifacts.write_json(out_dir / f"manifest_{args.command}.json", manifest)
    except JointCausalError as exc:
        return _fail(exc.kind, exc)
    except (ValueError, TypeError, KeyError) as exc:
        return _fail("config", exc)
    except OSError as exc:
        return _fail("data", exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
