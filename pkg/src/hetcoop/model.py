"""Scenario parameters for the two-tier downlink network.

All quantities are carried in linear SI units internally: densities in
BS/m^2, transmit powers and noise in watts, bandwidth in Hz.  dB values are
converted at the interface boundary only (see :func:`db_to_linear`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

try:  # stdlib from 3.11 on
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib


class ScenarioError(ValueError):
    """Rejected scenario or configuration.

    ``code`` is a stable machine-readable tag; the message names the config
    key that failed so CLI users can fix their file directly.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class TierParams:
    """One network tier: spatial density and per-BS transmit power."""

    density: float  # BS per m^2
    tx_power: float  # W


@dataclass(frozen=True)
class PowerModelParams:
    """Load-dependent power accounting for one macro Voronoi cell.

    ``n_users`` users live in the cell; the macro's dynamic draw scales with
    the fraction of them it serves, relative to the full-load count
    ``n_max``.  ``p_backhaul`` is the extra per-SBS draw when small cells
    cooperate and must exchange user data.
    """

    n_users: int
    n_max: int
    p_max: float  # W, macro output power at full load
    p_static: float  # W, macro baseline draw
    p_backhaul: float  # W, per cooperating small cell


@dataclass(frozen=True)
class Scenario:
    """Full parameterization of the two-tier network.

    Immutable once validated; safe to share across workers.
    """

    macro: TierParams
    small: TierParams
    alpha: float  # path loss exponent, > 2
    sigma2: float  # noise power, W (0 = interference limited)
    k: int  # cooperative cluster size (number of nearest small cells)
    bandwidth_hz: float
    power_model: PowerModelParams

    # Shorthands used throughout the math layers.
    @property
    def lambda_m(self) -> float:
        return self.macro.density

    @property
    def lambda_s(self) -> float:
        return self.small.density

    @property
    def p_m(self) -> float:
        return self.macro.tx_power

    @property
    def p_s(self) -> float:
        return self.small.tx_power

    @property
    def power_ratio(self) -> float:
        """Macro-to-small transmit power ratio P_m/P_s (exact quotient)."""
        return self.macro.tx_power / self.small.tx_power

    @property
    def amplitude_ratio(self) -> float:
        """sqrt(P_m/P_s), the amplitude-domain power ratio."""
        return math.sqrt(self.power_ratio)


def _require(cond: bool, code: str, message: str) -> None:
    if not cond:
        raise ScenarioError(code, message)


def validate_scenario(raw: Scenario) -> Scenario:
    """Check every invariant and return the scenario unchanged.

    Idempotent: the returned object is the argument itself, so validating a
    validated scenario is a no-op.  Error messages echo the config keys
    (lambda_m, p_s, ...) rather than internal field paths.
    """
    _require(raw.macro.density > 0, "invalid-density", "lambda_m must be > 0")
    _require(raw.small.density > 0, "invalid-density", "lambda_s must be > 0")
    _require(raw.macro.tx_power > 0, "invalid-power", "p_m must be > 0")
    _require(raw.small.tx_power > 0, "invalid-power", "p_s must be > 0")
    _require(
        raw.alpha > 2,
        "divergent-interference",
        "alpha must be > 2: at alpha <= 2 the aggregate interference "
        "integral over the plane diverges",
    )
    _require(raw.sigma2 >= 0, "invalid-noise", "sigma2 must be >= 0")
    _require(int(raw.k) == raw.k and raw.k >= 1, "invalid-cluster", "k must be an integer >= 1")
    _require(raw.bandwidth_hz > 0, "invalid-bandwidth", "bandwidth_hz must be > 0")
    pm = raw.power_model
    _require(
        int(pm.n_users) == pm.n_users and int(pm.n_max) == pm.n_max,
        "invalid-user-load",
        "n_users and n_max must be integers",
    )
    _require(0 <= pm.n_users <= pm.n_max, "invalid-user-load", "need 0 <= n_users <= n_max")
    _require(pm.p_max >= 0, "invalid-power", "p_max must be >= 0")
    _require(pm.p_static >= 0, "invalid-power", "p_static must be >= 0")
    _require(pm.p_backhaul >= 0, "invalid-power", "p_backhaul must be >= 0")
    return raw


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


# Config schema.  Densities come in as an absolute macro density plus a
# small/macro ratio and are resolved to absolute values here.
_REQUIRED_KEYS = ("alpha", "lambda_m", "lambda_s_ratio", "p_m", "p_s")
_DEFAULTS: dict[str, Any] = {
    "sigma2": 0.0,  # interference-limited unless stated
    "k": 2,
    "bandwidth_hz": 20e6,
    "n_users": 30,
    "n_max": 100,
    "p_max": 8000.0,  # W, full-load macro dynamic draw (artifact default, see README)
    "p_static": 20.0,
    "p_backhaul": 1.0,
}
CONFIG_KEYS = _REQUIRED_KEYS + tuple(_DEFAULTS)

_INT_KEYS = ("k", "n_users", "n_max")


def scenario_from_config(config: Mapping[str, Any]) -> tuple[Scenario, dict[str, Any], dict[str, str]]:
    """Build and validate a scenario from a config mapping.

    Returns ``(scenario, resolved, origin)`` where ``resolved`` is the full
    key->value mapping after defaulting and ``origin`` tags each key with
    ``"config"`` or ``"default"``.
    """
    unknown = sorted(set(config) - set(CONFIG_KEYS))
    if unknown:
        raise ScenarioError("unknown-key", f"unknown config keys: {', '.join(unknown)}")
    missing = [key for key in _REQUIRED_KEYS if key not in config]
    if missing:
        raise ScenarioError("missing-key", f"missing config keys: {', '.join(missing)}")

    resolved: dict[str, Any] = {}
    origin: dict[str, str] = {}
    for key in CONFIG_KEYS:
        if key in config:
            resolved[key] = config[key]
            origin[key] = "config"
        else:
            resolved[key] = _DEFAULTS[key]
            origin[key] = "default"

    for key, value in resolved.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError("bad-value", f"config key {key} must be a number, got {value!r}")
        if key in _INT_KEYS and int(value) != value:
            raise ScenarioError("bad-value", f"config key {key} must be an integer, got {value!r}")

    _require(resolved["lambda_s_ratio"] > 0, "invalid-density", "lambda_s_ratio must be > 0")
    scenario = Scenario(
        macro=TierParams(density=float(resolved["lambda_m"]), tx_power=float(resolved["p_m"])),
        small=TierParams(
            density=float(resolved["lambda_m"]) * float(resolved["lambda_s_ratio"]),
            tx_power=float(resolved["p_s"]),
        ),
        alpha=float(resolved["alpha"]),
        sigma2=float(resolved["sigma2"]),
        k=int(resolved["k"]),
        bandwidth_hz=float(resolved["bandwidth_hz"]),
        power_model=PowerModelParams(
            n_users=int(resolved["n_users"]),
            n_max=int(resolved["n_max"]),
            p_max=float(resolved["p_max"]),
            p_static=float(resolved["p_static"]),
            p_backhaul=float(resolved["p_backhaul"]),
        ),
    )
    return validate_scenario(scenario), resolved, origin


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a TOML or JSON config file (chosen by extension)."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            with path.open("rb") as fh:
                data = json.load(fh)
        elif path.suffix.lower() == ".toml":
            with path.open("rb") as fh:
                data = tomllib.load(fh)
        else:
            raise ScenarioError("bad-value", f"config file must be .toml or .json, got {path.name}")
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioError("bad-value", f"cannot parse {path.name}: {exc}") from exc
    except OSError as exc:
        raise ScenarioError("bad-value", f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError("bad-value", "config root must be a table/object")
    return data


def load_scenario(path: str | Path) -> tuple[Scenario, dict[str, Any], dict[str, str]]:
    """Load, default and validate a scenario config file."""
    return scenario_from_config(load_config(path))
