"""Two-tier heterogeneous network evaluation toolkit.

Computes association probabilities, SINR coverage, mean achievable rate and
energy efficiency for a macro tier overlaid with small cells, for both
single-BS (non-cooperative) and small-cell-cluster (cooperative) downlink
association.  Every analytic expression has an independent Monte Carlo
counterpart built on explicit Poisson point process sampling.
"""

from hetcoop.model import (
    PowerModelParams,
    Scenario,
    ScenarioError,
    TierParams,
    db_to_linear,
    linear_to_db,
    load_scenario,
    scenario_from_config,
    validate_scenario,
)
from hetcoop.analytic import AssociationModel, CoverageReport

__version__ = "0.1.0"

__all__ = [
    "AssociationModel",
    "CoverageReport",
    "PowerModelParams",
    "Scenario",
    "ScenarioError",
    "TierParams",
    "db_to_linear",
    "linear_to_db",
    "load_scenario",
    "scenario_from_config",
    "validate_scenario",
    "__version__",
]
