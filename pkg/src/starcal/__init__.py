"""Joint spacecraft attitude and star-tracker misalignment estimation.

A bank of 9-state multiplicative EKFs, each conditioned on a candidate
mounting misalignment, runs under a Bayesian model-probability layer with
adaptive hypothesis-grid refinement.  A seeded Monte Carlo harness drives
end-to-end campaigns and writes CSV/plot artifacts.
"""

import os as _os

# Small batched matrix ops gain nothing from BLAS threading; one thread per
# process keeps parallel campaigns from oversubscribing the machine.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

__version__ = "0.1.0"

from .config import SimConfig, load_config  # noqa: E402
from .harness import run_monte_carlo, run_trial  # noqa: E402

__all__ = ["SimConfig", "load_config", "run_monte_carlo", "run_trial", "__version__"]
