import json

import numpy as np
import pytest

from pquotient import generate
from pquotient.cli import main
from pquotient.io import format_matrix, load_matrix_csv, write_json


@pytest.fixture
def line_csv(tmp_path):
    x = np.array([0.0, 1.0, 9.0, 10.0])
    path = tmp_path / "line.csv"
    path.write_text("p0,p1,p2,p3\n" + format_matrix(np.abs(x[:, None] - x[None, :])))
    return path


@pytest.fixture
def interval_json(tmp_path):
    path = tmp_path / "interval.json"
    write_json(path, generate("interval", 100).to_dict())
    return path


def put(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


class TestGenerate:
    def test_writes_named_file(self, tmp_path):
        assert main(["generate", "--name", "interval", "--n", "100", "--output", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "interval_n100.json").read_text())
        assert len(doc["points"]) == 100 and doc["truth"] == []

    def test_sine(self, tmp_path):
        out = tmp_path / "s.json"
        assert main(["generate", "--name", "topologist_sine", "--n", "2000", "--output", str(out)]) == 0
        assert len(json.loads(out.read_text())["truth"]) > 0

    def test_unknown_name(self, tmp_path):
        assert main(["generate", "--name", "nope", "--n", "100", "--output", str(tmp_path)]) == 2

    def test_bad_param(self, tmp_path):
        assert main(["generate", "--name", "comb", "--n", "2000", "--param", "m=999", "--output", str(tmp_path)]) == 2
        assert main(["generate", "--name", "comb", "--n", "2000", "--param", "m", "--output", str(tmp_path)]) == 2

    def test_param_and_config(self, tmp_path):
        cfg = put(tmp_path, "cfg.json", {"name": "comb", "n": 1500, "param": ["m=4"]})
        assert main(["generate", "--config", cfg, "--output", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "comb_n1500.json").read_text())
        assert doc["params"]["m"] == 4

    def test_flags_override_config(self, tmp_path):
        cfg = put(tmp_path, "cfg.json", {"name": "comb", "n": 1500})
        assert main(["generate", "--config", cfg, "--name", "interval", "--output", str(tmp_path)]) == 0
        assert (tmp_path / "interval_n1500.json").exists()

    def test_unknown_config_key(self, tmp_path):
        cfg = put(tmp_path, "cfg.json", {"colour": "red"})
        assert main(["generate", "--config", cfg]) == 2


class TestAnalyze:
    def test_interval_detects_nothing(self, tmp_path, interval_json):
        out = tmp_path / "a.json"
        assert main(["analyze", "--input", str(interval_json), "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        (section,) = doc["sections"]
        assert section["detected"] == []
        assert section["precision"] == 1.0 and section["recall"] == 1.0

    def test_multiscale_sections(self, tmp_path, interval_json):
        out = tmp_path / "a.json"
        assert main(["analyze", "--input", str(interval_json), "--multiscale", "0.02,0.05", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert [s["params"]["delta"] for s in doc["sections"]] == [0.02, 0.05]
        assert "union" not in doc and "intersection" not in doc

    def test_malformed_csv(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("0,1\n1,0,2\n")
        assert main(["analyze", "--input", str(bad)]) == 3

    def test_asymmetric_csv(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("0,1\n2,0\n")
        assert main(["analyze", "--input", str(bad)]) == 3

    def test_missing_file(self, tmp_path):
        assert main(["analyze", "--input", str(tmp_path / "none.csv")]) == 3

    def test_bad_scales(self, interval_json):
        assert main(["analyze", "--input", str(interval_json), "--r", "1", "--R", "0.5"]) == 2
        assert main(["analyze", "--input", str(interval_json), "--r", "-1"]) == 2

    def test_stdout_carries_the_report(self, interval_json, capsys):
        assert main(["analyze", "--input", str(interval_json)]) == 0
        assert json.loads(capsys.readouterr().out)["n_points"] == 100


class TestQuotient:
    def test_line_example(self, tmp_path, line_csv):
        part = put(tmp_path, "p.json", [1, 0, 0, 2])
        out = tmp_path / "q.json"
        assert main(["quotient", "--input", str(line_csv), "--partition", part, "--output", str(out), "--emit-witnesses"]) == 0
        nabla = load_matrix_csv(tmp_path / "q.nabla.csv").dist
        assert nabla.tolist() == [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
        doc = json.loads(out.read_text())
        assert doc["metadata"]["tau_merge"] == 0.0
        assert doc["metadata"]["solver"] in ("floyd-warshall", "dijkstra")
        assert doc["quotient"]["nabla"]["csv"] == "q.nabla.csv"
        w = next(w for w in doc["witnesses"] if (w["x"], w["y"]) == (0, 3))
        assert w["total"] == 2.0 and w["pairs"] == [[0, 1], [2, 3]]

    def test_singletons_reproduce_input(self, tmp_path, line_csv):
        part = put(tmp_path, "p.json", [0, 1, 2, 3])
        assert main(["quotient", "--input", str(line_csv), "--partition", part, "--output", str(tmp_path / "q.json")]) == 0
        assert (tmp_path / "q.nabla.csv").read_text() == line_csv.read_text().split("\n", 1)[1]

    def test_single_class(self, tmp_path, line_csv):
        part = put(tmp_path, "p.json", [0, 0, 0, 0])
        assert main(["quotient", "--input", str(line_csv), "--partition", part, "--output", str(tmp_path / "q.json")]) == 0
        assert (tmp_path / "q.nabla.csv").read_text() == "0\n"

    def test_wrong_length_partition(self, tmp_path, line_csv):
        part = put(tmp_path, "p.json", [0, 1])
        assert main(["quotient", "--input", str(line_csv), "--partition", part]) == 4

    def test_subset_and_delta_f(self, tmp_path, line_csv):
        sub = put(tmp_path, "f.json", [1, 2])
        out = tmp_path / "q.json"
        assert main(["quotient", "--input", str(line_csv), "--subset", sub, "--delta-f", "10", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["metadata"]["n_quotient_classes"] == 3
        assert doc["delta_F"] == 10.0

    def test_tau_merge_echoed(self, tmp_path, line_csv):
        part = put(tmp_path, "p.json", [0, 1, 2, 3])
        out = tmp_path / "q.json"
        assert main(["quotient", "--input", str(line_csv), "--partition", part, "--tau-merge", "1", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["metadata"]["tau_merge"] == 1.0
        assert doc["metadata"]["n_quotient_classes"] == 2


class TestVerify:
    def test_line_with_oracle(self, tmp_path, line_csv):
        part = put(tmp_path, "p.json", [1, 0, 0, 2])
        out = tmp_path / "v.json"
        assert main(["verify", "--input", str(line_csv), "--partition", part, "--oracle", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["ok"] and doc["checks"]["oracle"]["ok"]

    def test_generated_corpus_with_canonical_f(self, tmp_path):
        c = generate("topologist_sine", 600)
        path = tmp_path / "s.json"
        write_json(path, c.to_dict())
        sub = put(tmp_path, "f.json", c.truth.tolist())
        assert main(["verify", "--input", str(path), "--subset", sub, "--output", str(tmp_path / "v.json")]) == 0

    def test_corrupted_matrix(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("0,1,5\n1,0,1\n5,1,0\n")
        out = tmp_path / "v.json"
        assert main(["verify", "--input", str(bad), "--output", str(out)]) == 5
        doc = json.loads(out.read_text())
        assert doc["checks"]["metric"]["counts"]["triangle"] > 0

    def test_oracle_capacity_notice(self, tmp_path, interval_json, capsys):
        out = tmp_path / "v.json"
        assert main(["verify", "--input", str(interval_json), "--oracle", "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["checks"]["oracle"]["ok"]
        assert "K <= 9" in doc["checks"]["oracle"]["notices"][0]
        assert "pseudometric" in doc["checks"]
        assert "oracle skipped" in capsys.readouterr().err


class TestPipeline:
    def test_interval_identity(self, tmp_path, interval_json):
        out = tmp_path / "p.json"
        assert main(["pipeline", "--input", str(interval_json), "--output", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["decomposition"]["F"] == []
        nabla = load_matrix_csv(tmp_path / doc["quotient"]["nabla"]["csv"]).dist
        pts = np.array(json.loads(interval_json.read_text())["points"])
        assert np.array_equal(nabla, np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1)))
        assert "timings_ms" not in doc

    def test_timings_opt_in(self, tmp_path, interval_json):
        out = tmp_path / "p.json"
        assert main(["pipeline", "--input", str(interval_json), "--timings", "--output", str(out)]) == 0
        assert "timings_ms" in json.loads(out.read_text())

    def test_expect_residual_on_clean_input(self, tmp_path, interval_json):
        assert main(["pipeline", "--input", str(interval_json), "--expect-residual", "--output", str(tmp_path / "p.json")]) == 1

    def test_exclusion_needs_truth(self, tmp_path, line_csv):
        assert main(["pipeline", "--input", str(line_csv), "--exclude-truth-fraction", "0.5"]) == 2

    def test_small_matrix_inlined(self, tmp_path, line_csv):
        out = tmp_path / "p.json"
        code = main(["pipeline", "--input", str(line_csv), "--delta", "8", "--output", str(out)])
        doc = json.loads(out.read_text())
        assert "data" in doc["quotient"]["nabla"]
        assert code == 0
