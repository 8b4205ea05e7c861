"""Command-line interface: evaluation, sweeps, validation, figure presets.

Commands
--------
eval      point evaluation of a scenario config -> JSON report
sweep     one-parameter sweep -> CSV (one metric per column)
validate  analytic layer vs Monte Carlo oracle -> pass/fail table
figure    named curve presets (fig2..fig7) reproducing the reference
          evaluation scenarios -> CSV

Thresholds are given in dB on the command line and converted to linear at
this boundary.  Every output file opens with a provenance block: tool
version, config hash, seed where relevant, and a per-parameter origin tag
("paper" = from the reference parameterization the presets reproduce,
"default" = artifact-chosen fill-in, "config" = user supplied).

Exit codes: 0 ok, 2 config error, 3 tolerance not met, 4 validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from hetcoop import __version__, analytic, geometry, montecarlo
from hetcoop.model import (
    CONFIG_KEYS,
    Scenario,
    ScenarioError,
    db_to_linear,
    load_scenario,
    scenario_from_config,
)
from hetcoop.quadrature import ToleranceNotMetError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_VALIDATION = 4

_LAMBDA_M_REF = 1.0 / (500.0**2 * math.pi)  # BS/m^2, reference macro density

# Acceptance rule for the approximate cooperative macro coverage: the
# analytic expression fixes the small-tier exclusion radius from the lost
# RSS comparison but otherwise treats the small tier as unconditioned, so
# it carries a known systematic gap checked in absolute terms.
_APPROX_ABS_TOL = 5e-2
_Z_PASS = 3.0
_MIN_CONCLUSIVE = 1000  # conditional sample count below which a row is inconclusive


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _config_hash(resolved: dict[str, Any]) -> str:
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _provenance_lines(
    command: str,
    resolved: dict[str, Any],
    origin: dict[str, str],
    seed: int | None = None,
    extra: Sequence[str] = (),
) -> list[str]:
    lines = [
        f"# tool: hetcoop {__version__}",
        f"# command: {command}",
        f"# config-sha256: {_config_hash(resolved)}",
    ]
    if seed is not None:
        lines.append(f"# seed: {seed}")
    lines.extend(f"# {line}" for line in extra)
    for key in CONFIG_KEYS:
        if key in resolved:
            lines.append(f"# param {key}={_fmt(resolved[key])} [{origin.get(key, 'default')}]")
    return lines


def _write_csv(path: Path, provenance: list[str], header: list[str], rows: list[list[Any]]) -> None:
    lines = list(provenance)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_theta_db(text: str | None) -> list[float]:
    """Threshold list in dB: 'a,b,c' or an inclusive 'start:stop:step' range."""
    if text is None or text.strip() == "":
        return []
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError("bad-value", "--theta-db range must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ScenarioError("bad-value", "--theta-db range step must be > 0")
        out = []
        value = start
        while value <= stop + 1e-9:
            out.append(round(value, 9))
            value += step
        return out
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ScenarioError("bad-value", f"cannot parse --theta-db list: {text!r}") from exc


def _models(arg: str) -> list[analytic.AssociationModel]:
    if arg == "both":
        return [analytic.AssociationModel.NONCOOP, analytic.AssociationModel.COOP]
    return [analytic.AssociationModel(arg)]


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> int:
    scenario, resolved, origin = load_scenario(args.config)
    thetas_db = _parse_theta_db(args.theta_db)
    models = _models(args.model)

    report: dict[str, Any] = {}
    association: dict[str, float] = {}
    power: dict[str, Any] = {}
    for m in models:
        tag = m.value
        if m is analytic.AssociationModel.NONCOOP:
            association[f"p_sbs_{tag}"] = analytic.assoc_prob_sbs_noncoop(scenario)
        else:
            association[f"p_sbs_{tag}"] = geometry.sbs_win_prob_coop(scenario)
        power[tag] = analytic.power_breakdown(scenario, m)
    report["association"] = association
    report["power"] = power

    if thetas_db:
        coverage_rows = []
        for theta_db in thetas_db:
            theta = db_to_linear(theta_db)
            row: dict[str, Any] = {"theta_db": theta_db, "theta": theta}
            for m in models:
                rep = (
                    analytic.coverage_overall_noncoop(scenario, theta)
                    if m is analytic.AssociationModel.NONCOOP
                    else analytic.coverage_overall_coop(scenario, theta)
                )
                row[m.value] = {
                    "mbs": rep.p_cov_mbs,
                    "sbs": rep.p_cov_sbs,
                    "overall": rep.p_cov_overall,
                }
            coverage_rows.append(row)
        report["coverage"] = coverage_rows

        rates: dict[str, Any] = {}
        throughput: dict[str, Any] = {}
        ee: dict[str, Any] = {}
        for m in models:
            tag = m.value
            breakdown = analytic.rate_breakdown(scenario, m)
            rates[tag] = {
                "mbs": breakdown.rate_mbs,
                "sbs": breakdown.rate_sbs,
                "mixture": breakdown.rate,
            }
            te = analytic.throughput_and_ee(
                scenario, m, rate=breakdown.rate, power=power[tag]["total_w"]
            )
            throughput[tag] = te.throughput_bps
            ee[tag] = te.ee_bits_per_joule
        report["rate_bit_per_s_per_hz"] = rates
        report["throughput_bps"] = throughput
        report["ee_bits_per_joule"] = ee

    provenance = {
        "tool": f"hetcoop {__version__}",
        "command": "eval",
        "config_sha256": _config_hash(resolved),
        "theta_db": thetas_db,
        "models": [m.value for m in models],
        "params": {k: {"value": resolved[k], "origin": origin[k]} for k in CONFIG_KEYS},
    }
    out = Path(args.out or "eval.json")
    out.write_text(
        json.dumps({"provenance": provenance, **report}, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _rate_for(scenario: Scenario, model: str, cache: dict) -> float:
    key = (scenario, model)
    if key not in cache:
        cache[key] = analytic.mean_rate_mixture(scenario, model)
    return cache[key]


def _metric_registry() -> dict[str, Callable[[Scenario, dict], float]]:
    def need_theta(ctx: dict) -> float:
        theta = ctx.get("theta")
        if theta is None:
            raise ScenarioError(
                "bad-value", "coverage metrics need --theta-db with exactly one value"
            )
        return theta

    return {
        "p_sbs_no": lambda s, ctx: analytic.assoc_prob_sbs_noncoop(s),
        "p_sbs_co": lambda s, ctx: geometry.sbs_win_prob_coop(s),
        "p_cov_mbs_noncoop": lambda s, ctx: analytic.coverage_mbs_noncoop(s, need_theta(ctx)),
        "p_cov_sbs_noncoop": lambda s, ctx: analytic.coverage_sbs_noncoop(s, need_theta(ctx)),
        "p_cov_overall_noncoop": lambda s, ctx: analytic.coverage_overall_noncoop(
            s, need_theta(ctx)
        ).p_cov_overall,
        "p_cov_mbs_coop": lambda s, ctx: analytic.coverage_mbs_coop(s, need_theta(ctx)),
        "p_cov_sbs_coop": lambda s, ctx: analytic.coverage_sbs_coop(s, need_theta(ctx)),
        "p_cov_overall_coop": lambda s, ctx: analytic.coverage_overall_coop(
            s, need_theta(ctx)
        ).p_cov_overall,
        "rate_noncoop": lambda s, ctx: _rate_for(s, "noncoop", ctx["rate_cache"]),
        "rate_coop": lambda s, ctx: _rate_for(s, "coop", ctx["rate_cache"]),
        "power_noncoop": lambda s, ctx: analytic.power_total(s, "noncoop"),
        "power_coop": lambda s, ctx: analytic.power_total(s, "coop"),
        "throughput_noncoop": lambda s, ctx: analytic.throughput_and_ee(
            s, "noncoop", rate=_rate_for(s, "noncoop", ctx["rate_cache"])
        ).throughput_bps,
        "throughput_coop": lambda s, ctx: analytic.throughput_and_ee(
            s, "coop", rate=_rate_for(s, "coop", ctx["rate_cache"])
        ).throughput_bps,
        "ee_noncoop": lambda s, ctx: analytic.throughput_and_ee(
            s, "noncoop", rate=_rate_for(s, "noncoop", ctx["rate_cache"])
        ).ee_bits_per_joule,
        "ee_coop": lambda s, ctx: analytic.throughput_and_ee(
            s, "coop", rate=_rate_for(s, "coop", ctx["rate_cache"])
        ).ee_bits_per_joule,
    }


METRIC_IDS = tuple(_metric_registry())


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep: config key, grid, metric columns, output path."""

    parameter: str
    grid: tuple[float, ...]
    metric_set: tuple[str, ...]
    output_path: Path

    def __post_init__(self) -> None:
        if self.parameter not in CONFIG_KEYS:
            raise ScenarioError(
                "bad-value", f"parameter {self.parameter!r} is not a sweepable config key"
            )
        if len(self.grid) == 0:
            raise ScenarioError("bad-value", "sweep grid must not be empty")
        diffs = [b - a for a, b in zip(self.grid, self.grid[1:])]
        if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ScenarioError("bad-value", "sweep grid must be strictly monotone")
        unknown = [m for m in self.metric_set if m not in METRIC_IDS]
        if unknown:
            raise ScenarioError(
                "bad-value",
                f"unknown metrics: {', '.join(unknown)}; choose from {', '.join(METRIC_IDS)}",
            )
        if not self.metric_set:
            raise ScenarioError("bad-value", "metric set must not be empty")


def cmd_sweep(args: argparse.Namespace) -> int:
    _, resolved, origin = load_scenario(args.config)
    grid_values = [float(tok) for tok in args.grid.split(",") if tok.strip() != ""]
    if args.grid_db:
        grid_values = [db_to_linear(v) for v in grid_values]
    spec = SweepSpec(
        parameter=args.param,
        grid=tuple(grid_values),
        metric_set=tuple(m.strip() for m in args.metrics.split(",") if m.strip()),
        output_path=Path(args.out or "sweep.csv"),
    )
    thetas_db = _parse_theta_db(args.theta_db)
    if len(thetas_db) > 1:
        raise ScenarioError("bad-value", "sweep takes at most one --theta-db value")
    ctx: dict[str, Any] = {"rate_cache": {}}
    if thetas_db:
        ctx["theta"] = db_to_linear(thetas_db[0])

    registry = _metric_registry()
    rows = []
    for value in spec.grid:
        point_config = dict(resolved)
        point_config[spec.parameter] = int(value) if spec.parameter in ("k", "n_users", "n_max") else value
        scenario, _, _ = scenario_from_config(point_config)
        row: list[Any] = [value]
        for metric in spec.metric_set:
            row.append(registry[metric](scenario, ctx))
        rows.append(row)

    extra = [f"sweep parameter: {spec.parameter}"]
    if thetas_db:
        extra.append(f"theta_db: {_fmt(thetas_db[0])}")
    provenance = _provenance_lines("sweep", resolved, origin, extra=extra)
    _write_csv(spec.output_path, provenance, [spec.parameter, *spec.metric_set], rows)
    print(f"wrote {spec.output_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _validation_rows(
    scenario: Scenario,
    thetas_db: Sequence[float],
    settings: montecarlo.SimSettings,
    perturb: bool,
) -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = []

    def add(metric: str, an: float, mc: montecarlo.McEstimate, approx: bool = False) -> None:
        z = (an - mc.mean) / mc.stderr if mc.stderr > 0 and math.isfinite(mc.stderr) else math.inf
        if mc.n_reps < _MIN_CONCLUSIVE or not math.isfinite(mc.stderr):
            status = "inconclusive"
        elif approx:
            # rows tainted by the approximate macro-branch: noise-dominated
            # runs satisfy the z-test, bias-dominated runs the absolute
            # allowance; either is acceptance
            ok = abs(z) <= _Z_PASS or abs(an - mc.mean) <= _APPROX_ABS_TOL
            status = "pass-approx" if ok else "fail"
        else:
            status = "pass" if abs(z) <= _Z_PASS else "fail"
        rows.append(
            {
                "metric": metric,
                "analytic": an,
                "mc_mean": mc.mean,
                "mc_stderr": mc.stderr,
                "n": mc.n_reps,
                "z": z,
                "status": status,
            }
        )

    an_assoc_no = analytic.assoc_prob_sbs_noncoop(scenario)
    if perturb:  # test hook: deliberately break one analytic value
        an_assoc_no *= 1.1
    add("assoc_sbs_noncoop", an_assoc_no, montecarlo.estimate_association(scenario, "noncoop", settings))
    add("assoc_sbs_coop", geometry.sbs_win_prob_coop(scenario), montecarlo.estimate_association(scenario, "coop", settings))

    thetas = [db_to_linear(db) for db in thetas_db]
    for model in (analytic.AssociationModel.NONCOOP, analytic.AssociationModel.COOP):
        tag = model.value
        table = montecarlo.coverage_table(scenario, model, thetas, settings)
        rate_an = analytic.rate_breakdown(scenario, model)
        for theta_db, theta in zip(thetas_db, thetas):
            if model is analytic.AssociationModel.NONCOOP:
                rep = analytic.coverage_overall_noncoop(scenario, theta)
            else:
                rep = analytic.coverage_overall_coop(scenario, theta)
            approx_mbs = model is analytic.AssociationModel.COOP
            add(
                f"cov_mbs_{tag}@{_fmt(theta_db)}dB",
                rep.p_cov_mbs,
                table[f"cov_mbs_{tag}_theta{theta:g}"],
                approx=approx_mbs,
            )
            add(f"cov_sbs_{tag}@{_fmt(theta_db)}dB", rep.p_cov_sbs, table[f"cov_sbs_{tag}_theta{theta:g}"])
            add(
                f"cov_overall_{tag}@{_fmt(theta_db)}dB",
                rep.p_cov_overall,
                table[f"cov_overall_{tag}_theta{theta:g}"],
                approx=approx_mbs,  # overall mixes in the approximate macro branch
            )
        add(f"rate_{tag}", rate_an.rate, table[f"rate_{tag}"], approx=model is analytic.AssociationModel.COOP)
    return rows


def cmd_validate(args: argparse.Namespace) -> int:
    scenario, resolved, origin = load_scenario(args.config)
    thetas_db = _parse_theta_db(args.theta_db) or [-5.0, 0.0, 5.0, 10.0]
    settings = montecarlo.SimSettings(
        n_reps=args.reps, seed=args.seed, n_workers=args.workers
    )
    rows = _validation_rows(scenario, thetas_db, settings, perturb=args.self_test_perturb)

    header = ["metric", "analytic", "mc_mean", "mc_stderr", "n", "z", "status"]
    csv_rows = [[r[h] for h in header] for r in rows]
    extra = [
        f"reps: {settings.n_reps}",
        f"workers: {settings.n_workers}",
        f"pass rule: |z| <= {_Z_PASS:g}; approx rows additionally pass on "
        f"|analytic-mc| <= {_APPROX_ABS_TOL:g} "
        "(cooperative macro coverage uses an approximate interference exclusion)",
        f"inconclusive below n = {_MIN_CONCLUSIVE}",
    ]
    provenance = _provenance_lines("validate", resolved, origin, seed=settings.seed, extra=extra)
    out = Path(args.out or "validate.csv")
    _write_csv(out, provenance, header, csv_rows)

    width = max(len(r["metric"]) for r in rows)
    for r in rows:
        print(
            f"{r['metric']:<{width}}  analytic={r['analytic']:.6f}  mc={r['mc_mean']:.6f}"
            f"±{r['mc_stderr']:.6f}  z={r['z']:+8.2f}  {r['status']}"
        )
    n_fail = sum(1 for r in rows if r["status"] == "fail")
    n_inconclusive = sum(1 for r in rows if r["status"] == "inconclusive")
    print(
        f"{len(rows)} checks: {len(rows) - n_fail - n_inconclusive} pass, "
        f"{n_fail} fail, {n_inconclusive} inconclusive -> {out}"
    )
    return EXIT_VALIDATION if n_fail else EXIT_OK


# ---------------------------------------------------------------------------
# figure presets
# ---------------------------------------------------------------------------


def _figure_config(**overrides: Any) -> tuple[dict[str, Any], dict[str, str]]:
    """Reference parameterization with per-key origin tags.

    Keys set by the reference evaluation scenarios are tagged "paper";
    everything else is an artifact default.
    """
    config: dict[str, Any] = {
        "alpha": 4.0,
        "lambda_m": _LAMBDA_M_REF,
        "lambda_s_ratio": 50.0,
        "p_m": 50.0,
        "p_s": 1.0,
        "sigma2": 0.0,
        "k": 2,
    }
    origin = {key: "paper" for key in config}
    for key, value in overrides.items():
        config[key] = value
        origin[key] = "paper"
    scenario, resolved, base_origin = scenario_from_config(config)
    full_origin = {k: origin.get(k, "default") for k in resolved}
    return resolved, full_origin


def _ratio_scenarios(resolved: dict[str, Any], ratios: Sequence[float]):
    for ratio in ratios:
        cfg = dict(resolved)
        cfg["lambda_s_ratio"] = ratio
        scenario, _, _ = scenario_from_config(cfg)
        yield ratio, scenario


def _mark_ratio_swept(origin: dict[str, str], ratios: Sequence[float]) -> list[str]:
    origin["lambda_s_ratio"] = "default"
    return [f"lambda_s_ratio grid: {','.join(_fmt(r) for r in ratios)} [default]"]


_FIG_RATE_RATIOS = (1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0)


def _figure_fig2(out: Path) -> tuple[list[str], list[list[Any]], dict, dict, list[str]]:
    resolved, origin = _figure_config()
    scenario, _, _ = scenario_from_config(resolved)
    header = ["theta_db", "cov_mbs_noncoop", "cov_sbs_noncoop", "cov_mbs_coop", "cov_sbs_coop"]
    rows = []
    for theta_db in range(-10, 21):
        theta = db_to_linear(theta_db)
        rows.append(
            [
                float(theta_db),
                analytic.coverage_mbs_noncoop(scenario, theta),
                analytic.coverage_sbs_noncoop(scenario, theta),
                analytic.coverage_mbs_coop(scenario, theta),
                analytic.coverage_sbs_coop(scenario, theta),
            ]
        )
    return header, rows, resolved, origin, ["curves: conditional coverage per association event"]


def _figure_fig3(out: Path):
    resolved, origin = _figure_config()
    origin["alpha"] = "default"  # stated only for the per-event figure
    scenario, _, _ = scenario_from_config(resolved)
    header = ["theta_db", "p_cov_overall_noncoop", "p_cov_overall_coop"]
    rows = []
    for theta_db in range(-10, 21):
        theta = db_to_linear(theta_db)
        rows.append(
            [
                float(theta_db),
                analytic.coverage_overall_noncoop(scenario, theta).p_cov_overall,
                analytic.coverage_overall_coop(scenario, theta).p_cov_overall,
            ]
        )
    return header, rows, resolved, origin, ["curves: overall coverage, both models"]


def _figure_fig4(out: Path):
    resolved, origin = _figure_config()
    origin["alpha"] = "default"
    theta = 5.0  # linear threshold from the reference scenario
    p_m_grid = (20.0, 50.0, 80.0)
    ratios = (1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0)
    header = ["lambda_s_ratio"] + [f"p_cov_overall_coop_pm{int(pm)}" for pm in p_m_grid]
    rows = []
    for ratio in ratios:
        row: list[Any] = [ratio]
        for p_m in p_m_grid:
            cfg = dict(resolved)
            cfg["lambda_s_ratio"] = ratio
            cfg["p_m"] = p_m
            scenario, _, _ = scenario_from_config(cfg)
            row.append(analytic.coverage_overall_coop(scenario, theta).p_cov_overall)
        rows.append(row)
    origin["p_m"] = "default"  # swept over a grid, not a single reference value
    extra = _mark_ratio_swept(origin, ratios)
    return header, rows, resolved, origin, [
        "theta (linear): 5 [paper]",
        f"p_m grid: {','.join(str(int(p)) for p in p_m_grid)} [default]",
        *extra,
    ]


def _figure_fig5(out: Path):
    resolved, origin = _figure_config(alpha=3.0, p_s=2.0)
    ratios = (1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    header = ["lambda_s_ratio", "p_sbs_no", "p_sbs_co"]
    rows = []
    for ratio, scenario in _ratio_scenarios(resolved, ratios):
        rows.append(
            [ratio, analytic.assoc_prob_sbs_noncoop(scenario), geometry.sbs_win_prob_coop(scenario)]
        )
    extra = _mark_ratio_swept(origin, ratios)
    return header, rows, resolved, origin, ["curves: association probability, both models", *extra]


def _figure_fig6(out: Path):
    resolved, origin = _figure_config(p_s=2.0, bandwidth_hz=20e6)
    header = ["lambda_s_ratio", "rate_noncoop", "rate_coop"]
    rows = []
    for ratio, scenario in _ratio_scenarios(resolved, _FIG_RATE_RATIOS):
        rows.append(
            [
                ratio,
                analytic.mean_rate_mixture(scenario, "noncoop"),
                analytic.mean_rate_mixture(scenario, "coop"),
            ]
        )
    extra = _mark_ratio_swept(origin, _FIG_RATE_RATIOS)
    return header, rows, resolved, origin, [
        "curves: mean achievable rate (bit/s/Hz), both models", *extra
    ]


def _figure_fig7(out: Path):
    resolved, origin = _figure_config(p_s=2.0, bandwidth_hz=20e6, p_static=20.0, p_backhaul=1.0)
    header = ["lambda_s_ratio", "ee_noncoop", "ee_coop"]
    rows = []
    for ratio, scenario in _ratio_scenarios(resolved, _FIG_RATE_RATIOS):
        row: list[Any] = [ratio]
        for model in ("noncoop", "coop"):
            rate = analytic.mean_rate_mixture(scenario, model)
            row.append(analytic.throughput_and_ee(scenario, model, rate=rate).ee_bits_per_joule)
        rows.append(row)
    pm = resolved
    extra = _mark_ratio_swept(origin, _FIG_RATE_RATIOS)
    return header, rows, resolved, origin, [
        "curves: energy efficiency (bit/J), both models",
        *extra,
        f"artifact-chosen load model: n_users={pm['n_users']} n_max={pm['n_max']} "
        f"p_max={_fmt(pm['p_max'])} [default] (unstated in the reference scenario)",
    ]


_FIGURES: dict[str, Callable] = {
    "fig2": _figure_fig2,
    "fig3": _figure_fig3,
    "fig4": _figure_fig4,
    "fig5": _figure_fig5,
    "fig6": _figure_fig6,
    "fig7": _figure_fig7,
}


def cmd_figure(args: argparse.Namespace) -> int:
    figure_id = args.figure_id
    if figure_id not in _FIGURES:
        print(
            f"unknown figure id {figure_id!r}; choose from {', '.join(sorted(_FIGURES))}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    out = Path(args.out or f"{figure_id}.csv")
    header, rows, resolved, origin, extra = _FIGURES[figure_id](out)
    provenance = _provenance_lines(f"figure {figure_id}", resolved, origin, extra=extra)
    _write_csv(out, provenance, header, rows)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetcoop",
        description="Two-tier HetNet evaluation: association, coverage, rate, energy efficiency.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a scenario config, write a JSON report")
    p_eval.add_argument("--config", required=True, help="TOML or JSON scenario config")
    p_eval.add_argument(
        "--theta-db",
        default="",
        help="SINR thresholds in dB: 'a,b,c' or 'start:stop:step' "
        "(empty: association and power only)",
    )
    p_eval.add_argument("--model", choices=["noncoop", "coop", "both"], default="both")
    p_eval.add_argument("--out", default=None, help="output path (default eval.json)")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="sweep one config parameter, write CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--param", required=True, help="config key to sweep")
    p_sweep.add_argument("--grid", required=True, help="comma-separated grid values")
    p_sweep.add_argument(
        "--grid-db", action="store_true", help="grid values are in dB; convert to linear"
    )
    p_sweep.add_argument("--metrics", required=True, help=f"comma list from: {', '.join(METRIC_IDS)}")
    p_sweep.add_argument("--theta-db", default="", help="threshold (dB) for coverage metrics")
    p_sweep.add_argument("--out", default=None, help="output path (default sweep.csv)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="cross-validate analytic layer against Monte Carlo")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--theta-db", default="", help="thresholds in dB (default -5,0,5,10)")
    p_val.add_argument("--reps", type=int, default=100_000, help="Monte Carlo replications")
    p_val.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
    p_val.add_argument("--workers", type=int, default=1, help="parallel worker count")
    p_val.add_argument("--out", default=None, help="output path (default validate.csv)")
    p_val.add_argument(
        "--self-test-perturb",
        action="store_true",
        help="test hook: scale one analytic value by 1.1 to prove failures are caught",
    )
    p_val.set_defaults(func=cmd_validate)

    p_fig = sub.add_parser("figure", help="emit curve data for a named figure preset")
    p_fig.add_argument("figure_id", help=f"one of: {', '.join(sorted(_FIGURES))}")
    p_fig.add_argument("--out", default=None, help="output path (default <figure_id>.csv)")
    p_fig.set_defaults(func=cmd_figure)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"config error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToleranceNotMetError as exc:
        print(f"tolerance not met: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
