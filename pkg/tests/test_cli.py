import json

import numpy as np
import pytest

from jointcausal import artifacts, cli, gcn, synth
from jointcausal.ingest import CsvSchema, load_csv
from jointcausal.model import Cpdag, Representation, SkeletonSpec, WeightedCausalDag, WeightedEdge
from jointcausal.pipeline import PipelineConfig, label_conditioned_weights, run_pipeline
from jointcausal.representation import phi


def write_config(tmp_path, text):
    cfg = tmp_path / "config.yaml"
    cfg.write_text(text, encoding="utf-8")
    return cfg


def run(cfg, out, *stages):
    for stage in stages:
        code = cli.main([stage, "--config", str(cfg), "--out-dir", str(out)])
        assert code == 0, stage


CHAIN = "dataset: out/dataset.csv\nskeleton: 3\nn_dims: 1\nframes: 5000\nseed: 0\nscm: {preset: chain3}\n"


class TestCli:
    def test_chain_discovery(self, tmp_path, capsys):
        cfg = write_config(tmp_path, CHAIN)
        run(cfg, tmp_path / "out", "synth", "discover")
        g = artifacts.load_cpdag(tmp_path / "out" / "cpdag.json")
        assert g.adjacent_pairs() == {(0, 1), (1, 2)}
        assert "0 _|_ 2 | [1]" in capsys.readouterr().out

    def test_orient_represent_export(self, tmp_path, capsys):
        cfg = write_config(tmp_path, CHAIN)
        out = tmp_path / "out"
        run(cfg, out, "synth", "discover", "orient", "represent", "export")
        dag = artifacts.load_dag(out / "weighted_dag.json")
        assert {tuple(sorted(p)) for p in dag.edge_set()} == {(0, 1), (1, 2)}
        assert all(e.weight > 0 for e in dag.edges)
        r = artifacts.load_phi(out / "phi.json")
        assert np.array_equal(r.phi, phi(dag).phi)
        assert capsys.readouterr().out.endswith((out / "graph.dot").read_text())
        for name in ("manifest_synth.json", "manifest_export.json"):
            m = artifacts.read_json(out / name)
            assert m["seed"] == 0 and m["config_hash"] == artifacts.config_hash(m["config"])

    def test_composition_matches_library(self, tmp_path):
        cfg = write_config(tmp_path, CHAIN)
        out = tmp_path / "out"
        run(cfg, out, "synth", "discover", "orient", "represent")
        d = load_csv(out / "dataset.csv", CsvSchema.for_skeleton(SkeletonSpec.unnamed(3), 1),
                     SkeletonSpec.unnamed(3), 1)
        lib = run_pipeline(d, PipelineConfig(), SkeletonSpec.unnamed(3))
        assert np.array_equal(artifacts.load_phi(out / "phi.json").phi, lib.representation.phi)

    def test_seed_flag_overrides(self, tmp_path):
        cfg = write_config(tmp_path, CHAIN)
        assert cli.main(["synth", "--config", str(cfg), "--out-dir", str(tmp_path / "a"), "--seed", "5"]) == 0
        assert artifacts.read_json(tmp_path / "a" / "manifest_synth.json")["seed"] == 5

    def test_represent_empty_dag(self, tmp_path):
        artifacts.save_dag(tmp_path / "weighted_dag.json", WeightedCausalDag(4))
        cfg = write_config(tmp_path, "weighted_dag: weighted_dag.json\n")
        run(cfg, tmp_path / "out", "represent")
        assert not artifacts.load_phi(tmp_path / "out" / "phi.json").phi.any()

    def test_train_variants(self, tmp_path):
        base = ("dataset: out/dataset.csv\nframes: 600\nseed: 1\nscm: {preset: classification}\n"
                "gcn: {epochs: 2, hidden_dims: [4]}\n")
        cfg = write_config(tmp_path, base)
        run(cfg, tmp_path / "out", "synth")
        for variant in ("anatomical-baseline", "causal-weighted"):
            c = write_config(tmp_path, base + f"adjacency: {variant}\n")
            out = tmp_path / variant
            run(c, out, "train", "eval")
            _, _, _, got = gcn.load_checkpoint(out / "checkpoint.json")
            assert got == variant
            assert (out / "eval_metrics.csv").read_text().startswith("epoch,split,accuracy")

    def test_missing_dataset_is_data_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "dataset: nope.csv\n")
        assert cli.main(["discover", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 3
        err = json.loads(capsys.readouterr().err)
        assert err["kind"] == "data"

    def test_bad_alpha_is_config_error(self, tmp_path):
        cfg = write_config(tmp_path, CHAIN + "alpha: -1\n")
        run(cfg, tmp_path / "out", "synth")
        assert cli.main(["discover", "--config", str(cfg), "--out-dir", str(tmp_path / "out")]) == 2

    def test_missing_config(self, tmp_path):
        assert cli.main(["discover", "--config", str(tmp_path / "none.yaml")]) == 2

    def test_unknown_preset(self, tmp_path):
        cfg = write_config(tmp_path, "scm: {preset: spiral}\n")
        assert cli.main(["synth", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2

    def test_unlabelled_training_fails_cleanly(self, tmp_path):
        cfg = write_config(tmp_path, CHAIN + "adjacency: anatomical-baseline\n")
        run(cfg, tmp_path / "out", "synth")
        assert cli.main(["train", "--config", str(cfg), "--out-dir", str(tmp_path / "out")]) in (3, 4)


class TestArtifacts:
    def test_json_round_trips(self, tmp_path):
        cp = Cpdag(3, ((0, 2), (1, 2)), (), {(0, 1): ()})
        artifacts.save_cpdag(tmp_path / "c.json", cp)
        assert artifacts.load_cpdag(tmp_path / "c.json") == cp
        g = WeightedCausalDag(3, (WeightedEdge(0, 1, 0.25, (1, 1, -1), False, (0.3, 0.4, 0.1), (0.1, 0.2, 0.2)),))
        artifacts.save_dag(tmp_path / "g.json", g)
        assert artifacts.load_dag(tmp_path / "g.json") == g
        r = Representation(np.array([[0, 1.0], [0, 0]]), ("x",))
        artifacts.save_phi(tmp_path / "r.json", r)
        back = artifacts.load_phi(tmp_path / "r.json")
        assert np.array_equal(back.phi, r.phi) and back.flags == r.flags

    def test_dumps_canonical(self):
        assert artifacts.dumps({"b": 1, "a": [1, 2]}) == artifacts.dumps({"a": [1, 2], "b": 1})
        with pytest.raises(ValueError):
            artifacts.dumps({"a": float("nan")})

    def test_dot_single_edge(self):
        dot = artifacts.export_dot(WeightedCausalDag.from_weights(2, {(0, 1): 0.3}))
        assert "0 -> 1 [weight=0.3, penwidth=5.0000" in dot
        assert dot == artifacts.export_dot(WeightedCausalDag.from_weights(2, {(0, 1): 0.3}))

    def test_dot_scaling_and_style(self):
        g = WeightedCausalDag(3, (WeightedEdge(0, 1, 0.4), WeightedEdge(1, 2, 0.1, confident=False)))
        dot = artifacts.export_dot(g, artifacts.DotOptions(skeleton=SkeletonSpec.unnamed(3)))
        lines = dot.splitlines()
        assert lines[0] == 'digraph "causal" {' and lines[-1] == "}"
        edge2 = next(l for l in lines if "1 -> 2" in l)
        assert "penwidth=1.6250" in edge2 and "style=dashed" in edge2
        assert "style" not in next(l for l in lines if "0 -> 1" in l)

    def test_manifest_is_stable(self, tmp_path):
        p = tmp_path / "f.txt"
        p.write_text("x")
        m1 = artifacts.run_manifest("discover", {"alpha": 0.05}, 1, [p])
        m2 = artifacts.run_manifest("discover", {"alpha": 0.05}, 1, [p])
        assert m1 == m2 and set(m1["outputs"]) == {"f.txt"}


def test_label_conditioned_weights_cover_label_edge():
    spec = synth.classification_task(0)
    w = label_conditioned_weights(synth.sample_scm(spec, 6000, seed=100), PipelineConfig())
    i, j = synth.CLASSIFICATION_EDGE
    assert w.shape == (22, 22) and max(w[i, j], w[j, i]) > 0
    assert np.all(w >= 0)
