import json
import math
from pathlib import Path

import pytest

from hetcoop import cli
from hetcoop.cli import SweepSpec, _parse_theta_db
from hetcoop.model import ScenarioError
from conftest import LAMBDA_M_REF

FIG5_CONFIG = {
    "alpha": 3.0,
    "lambda_m": LAMBDA_M_REF,
    "lambda_s_ratio": 10.0,
    "p_m": 50.0,
    "p_s": 2.0,
    "sigma2": 0.0,
    "k": 2,
}

# Single-cell cluster keeps every integral one-dimensional: the cheap
# configuration for exercising CLI plumbing (k=2 physics is covered by the
# module and acceptance suites).
FAST_CONFIG = {**FIG5_CONFIG, "alpha": 4.0, "k": 1}


@pytest.fixture()
def config_path(tmp_path) -> Path:
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(FIG5_CONFIG))
    return path


@pytest.fixture()
def fast_config_path(tmp_path) -> Path:
    path = tmp_path / "fast.json"
    path.write_text(json.dumps(FAST_CONFIG))
    return path


def test_parse_theta_db_forms():
    assert _parse_theta_db("") == []
    assert _parse_theta_db(None) == []
    assert _parse_theta_db("-10,-8,0") == [-10.0, -8.0, 0.0]
    rng = _parse_theta_db("-10:20:2")
    assert len(rng) == 16
    assert rng[0] == -10.0
    assert rng[-1] == 20.0
    with pytest.raises(ScenarioError):
        _parse_theta_db("1:2")
    with pytest.raises(ScenarioError):
        _parse_theta_db("1,two")


def test_sweep_spec_validation(tmp_path):
    out = tmp_path / "x.csv"
    with pytest.raises(ScenarioError):
        SweepSpec("not_a_key", (1.0,), ("p_sbs_no",), out)
    with pytest.raises(ScenarioError):
        SweepSpec("p_m", (), ("p_sbs_no",), out)
    with pytest.raises(ScenarioError):
        SweepSpec("p_m", (1.0, 3.0, 2.0), ("p_sbs_no",), out)
    with pytest.raises(ScenarioError):
        SweepSpec("p_m", (1.0, 2.0), ("not_a_metric",), out)
    spec = SweepSpec("p_m", (3.0, 2.0, 1.0), ("p_sbs_no",), out)  # descending is fine
    assert spec.grid == (3.0, 2.0, 1.0)


def test_eval_association_and_power_only(config_path, tmp_path):
    out = tmp_path / "report.json"
    rc = cli.main(["eval", "--config", str(config_path), "--theta-db=", "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    assert "association" in report and "power" in report
    assert "coverage" not in report and "rate_bit_per_s_per_hz" not in report
    assert report["association"]["p_sbs_coop"] >= report["association"]["p_sbs_noncoop"]
    assert report["provenance"]["params"]["alpha"]["origin"] == "config"
    assert report["provenance"]["params"]["p_max"]["origin"] == "default"


def test_eval_full_report_shape_and_determinism(fast_config_path, tmp_path):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    args = ["eval", "--config", str(fast_config_path), "--theta-db=-10:20:2", "--model", "both"]
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()

    report = json.loads(out1.read_text())
    rows = report["coverage"]
    assert len(rows) == 16
    for row in rows:
        for model in ("noncoop", "coop"):
            assert set(row[model]) == {"mbs", "sbs", "overall"}
    assert set(report["rate_bit_per_s_per_hz"]) == {"noncoop", "coop"}
    assert report["ee_bits_per_joule"]["noncoop"] > 0


def test_eval_malformed_config_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**FIG5_CONFIG, "alpha": 2.0}))
    rc = cli.main(["eval", "--config", str(bad)])
    assert rc == 2
    assert "alpha" in capsys.readouterr().err

    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({k: v for k, v in FIG5_CONFIG.items() if k != "p_m"}))
    rc = cli.main(["eval", "--config", str(missing)])
    assert rc == 2


def test_sweep_association_over_density_ratio(config_path, tmp_path):
    out = tmp_path / "sweep.csv"
    rc = cli.main(
        [
            "sweep",
            "--config",
            str(config_path),
            "--param",
            "lambda_s_ratio",
            "--grid",
            "1,5,10,20,30",
            "--metrics",
            "p_sbs_no,p_sbs_co",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "lambda_s_ratio,p_sbs_no,p_sbs_co"
    data = [list(map(float, l.split(","))) for l in lines[1:]]
    assert len(data) == 5
    for _, p_no, p_co in data:
        assert p_co >= p_no


def test_sweep_single_point(config_path, tmp_path):
    out = tmp_path / "one.csv"
    rc = cli.main(
        ["sweep", "--config", str(config_path), "--param", "p_m", "--grid", "50",
         "--metrics", "p_sbs_no", "--out", str(out)]
    )
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 2  # header + one data row


def test_sweep_coverage_decreasing_in_macro_power(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({**FIG5_CONFIG, "alpha": 4.0, "p_s": 1.0}))
    out = tmp_path / "pm.csv"
    theta_db = f"{10.0 * math.log10(5.0):.10f}"  # linear threshold 5
    rc = cli.main(
        ["sweep", "--config", str(config), "--param", "p_m", "--grid", "20,50,80",
         "--metrics", "p_cov_overall_coop", f"--theta-db={theta_db}", "--out", str(out)]
    )
    assert rc == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    values = [float(r.split(",")[1]) for r in rows]
    assert values[0] > values[1] > values[2]


def test_sweep_rejects_bad_requests(config_path, tmp_path):
    base = ["sweep", "--config", str(config_path), "--out", str(tmp_path / "x.csv")]
    assert cli.main(base + ["--param", "nope", "--grid", "1,2", "--metrics", "p_sbs_no"]) == 2
    assert cli.main(base + ["--param", "p_m", "--grid", "1,3,2", "--metrics", "p_sbs_no"]) == 2
    assert cli.main(base + ["--param", "p_m", "--grid", "1,2", "--metrics", "zzz"]) == 2
    # coverage metric without a threshold
    assert cli.main(base + ["--param", "p_m", "--grid", "1,2", "--metrics", "p_cov_overall_coop"]) == 2


def test_validate_passes_and_is_deterministic(fast_config_path, tmp_path):
    out1 = tmp_path / "v1.csv"
    out2 = tmp_path / "v2.csv"
    args = [
        "validate", "--config", str(fast_config_path), "--reps", "4000", "--seed", "42",
        "--theta-db=0,5",
    ]
    rc1 = cli.main(args + ["--out", str(out1)])
    rc2 = cli.main(args + ["--out", str(out2)])
    assert rc1 == 0 and rc2 == 0
    assert out1.read_bytes() == out2.read_bytes()
    body = out1.read_text()
    assert "assoc_sbs_noncoop" in body
    assert "pass" in body


def test_validate_tiny_reps_inconclusive_not_failed(fast_config_path, tmp_path):
    out = tmp_path / "tiny.csv"
    rc = cli.main(
        ["validate", "--config", str(fast_config_path), "--reps", "10", "--seed", "1",
         "--theta-db=0", "--out", str(out)]
    )
    assert rc == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    statuses = {r.split(",")[-1] for r in rows}
    assert "inconclusive" in statuses
    assert "fail" not in statuses


def test_validate_perturbation_hook_fails(fast_config_path, tmp_path):
    rc = cli.main(
        ["validate", "--config", str(fast_config_path), "--reps", "4000", "--seed", "42",
         "--theta-db=0", "--self-test-perturb", "--out", str(tmp_path / "p.csv")]
    )
    assert rc == 4


def test_figure_fig5_provenance_and_determinism(tmp_path):
    out1 = tmp_path / "f1.csv"
    out2 = tmp_path / "f2.csv"
    assert cli.main(["figure", "fig5", "--out", str(out1)]) == 0
    assert cli.main(["figure", "fig5", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    text = out1.read_text().splitlines()
    assert text[0].startswith("# tool: hetcoop")
    assert any("alpha=3" in line and "[paper]" in line for line in text)
    header_idx = next(i for i, l in enumerate(text) if not l.startswith("#"))
    assert text[header_idx] == "lambda_s_ratio,p_sbs_no,p_sbs_co"
    for line in text[header_idx + 1 :]:
        _, p_no, p_co = map(float, line.split(","))
        assert p_co >= p_no


def test_figure_unknown_id_exit_2(capsys):
    assert cli.main(["figure", "fig99"]) == 2
    assert "unknown figure id" in capsys.readouterr().err
