import json

import pytest

from posttune.cli import EXIT_CONFIG, main

FAST = """\
seed: 1
post:
  cycles: [1, 2]
  m_grid: [2, 4, 8]
  objective: {m: 8, num_circuits: 5}
"""


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "scenario.yaml"
    p.write_text(FAST)
    return str(p)


def test_gst_seed_post_bench(tmp_path, scenario, capsys):
    gst_out, seed_out = tmp_path / "gst", tmp_path / "seed"
    assert main(["gst", "--scenario", scenario, "--exact", "--out", str(gst_out)]) == 0
    assert (gst_out / "estimate.json").is_file() and (gst_out / "residuals.json").is_file()
    assert main(["seed", "--estimate", str(gst_out / "estimate.json"), "--restarts", "2", "--out", str(seed_out)]) == 0
    seed = json.loads((seed_out / "seed.json").read_text())
    assert seed["params"]["mode"] == "control-only"
    assert main(["post", "--scenario", scenario, "--seed-file", str(seed_out / "seed.json"),
                 "--cycle", "1", "--out", str(tmp_path / "post")]) == 0
    assert (tmp_path / "post" / "report.json").is_file()
    assert main(["bench", "--scenario", scenario, "--seed-file", str(seed_out / "seed.json"),
                 "--out", str(tmp_path / "bench")]) == 0
    out = capsys.readouterr().out
    assert "native: p=" in out and "corrected: p=" in out


def test_campaign_and_drift_report(tmp_path, scenario):
    camp = tmp_path / "camp"
    assert main(["campaign", "--scenario", scenario, "--out", str(camp)]) == 0
    assert main(["drift-report", "--campaign", str(camp / "campaign.json"), "--samples", "10",
                 "--out", str(tmp_path / "drift")]) == 0
    assert (tmp_path / "drift" / "drift.csv").read_text().startswith("tag,")


def test_mode_mismatch_is_reported(tmp_path, scenario, capsys):
    seed = {"params": {"mode": "control-only", "angles": [0.0] * 6}, "residual_distance": 0,
            "baseline_distance": 0, "theoretical_min_infidelity": 0}
    p = tmp_path / "seed.json"
    p.write_text(json.dumps(seed))
    code = main(["post", "--scenario", scenario, "--seed-file", str(p), "--mode", "both"])
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "6 angles" in err and "needs 12" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["gst", "--scenario", "/nonexistent.yaml"],
        ["seed"],
        ["seed", "--estimate", "/nonexistent.json"],
        ["post", "--seed-file", "/nonexistent.json"],
        ["drift-report"],
    ],
)
def test_input_errors_exit_2(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "posttune: error" in capsys.readouterr().err


def test_malformed_files(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["seed", "--estimate", str(bad)]) == EXIT_CONFIG
    bad.write_text(json.dumps({"params": {"mode": "control-only"}}))
    assert main(["post", "--seed-file", str(bad)]) == EXIT_CONFIG
    y = tmp_path / "s.yaml"
    y.write_text("post: {cycles: [1]}\n")
    assert main(["campaign", "--scenario", str(y)]) == EXIT_CONFIG
    assert "two cycles" in capsys.readouterr().err


def test_bad_subcommand():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
