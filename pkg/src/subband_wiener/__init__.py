"""Time-domain Wiener and perfect-reconstruction synthesis for FIR filter banks."""

from .bank import Bank, Channel, KMatrix, build_K, elt_bank, load_bank, nufb_to_ufb
from .pr import (PRCertificate, check_pseudocirculant, polyphase_product,
                 pr_feasibility, pr_solution)
from .runtime import block, empirical_mse, run_pipeline, unblock
from .stochastic import SignalModel, acf, correlation_bundle, simulate
from .wiener import SynthesisSolution, WienerProblem, make_problem, mse_vs_delay, solve

__version__ = "0.1.0"
