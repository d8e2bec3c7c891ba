"""Free-energy estimation for Ising models and binary MRFs from small vertex samples."""

from .errors import IsingSampleError
from .model import (
    IsingModel,
    ModelNorms,
    Mrf,
    energy,
    free_energy_complete_graph,
    free_energy_exact,
    kl_free_energy_gap,
    norms,
    restrict_scaled,
)
from .meanfield import MeanFieldConfig, MeanFieldResult, entropy_term, mean_field_gap_bound, variational_free_energy
from .regularity import CutDecomposition, CutMatrix, fk_decompose, infty_to_one_norm, max_entry_bound, restrict_cuts
from .maxent import (
    MaxEntProgram,
    cut_free_energy_terms,
    dual_objective,
    grid_maximize,
    primal_x_of_y,
    solve_dual_bounded,
    solve_primal,
)
from .sampler import EstimatorConfig, SampleEstimate, estimate_free_energy, estimate_free_energy_mrf
from .magnet import estimate_magnetization, exact_magnetization, adversarial_instance_demo
from .lowerbound import generate_pair, free_energy_separation, probe_experiment
from .instances import InstanceSpec, generate_instance
from .experiments import run_experiment

__version__ = "0.1.0"
