"""vecsim: deterministic slotted simulator for software-defined vehicular edge networks.

The package models the full loop of a vehicular edge deployment: grant-free
uplink contention on a CTU grid, vehicle-centric AP clustering with resource
slicing, Bayesian mobility prediction from association history, SDN controller
placement and control-traffic balancing, edge service caching/offloading under
an energy budget, and an association-fingerprint stream cipher.

Entry points:
    vecsim.simulation.run_scenario  -- run one scenario, get a MetricsReport
    vecsim.cli.main                 -- `vecsim run|validate|sweep|compare`
"""

__version__ = "0.1.0"

from vecsim.config import ScenarioConfig, load_scenario
from vecsim.metrics import MetricsReport
from vecsim.simulation import run_scenario

__all__ = ["ScenarioConfig", "MetricsReport", "load_scenario", "run_scenario", "__version__"]
