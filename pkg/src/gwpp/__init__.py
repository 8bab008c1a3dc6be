"""Generalized Wasserstein pseudo posteriors (GWPP) for informative survey samples.

Pipeline: simulate a finite population, draw an informative PPS sample, split
it into K subsets with rescaled weights, fit a sampling-weighted pseudo
posterior on each subset, and combine the subset marginals through their 1-D
Wasserstein-2 barycenter.
"""

from .barycenter import (EmpiricalMeasure1D, barycenter_exact, barycenter_lp_discrete, barycenter_quantile,
                         combine_marginals, w2_empirical_1d)
from .config import ExperimentConfig, desk_profile, load_config, study_profile
from .design import (SubsetAssignment, SurveySample, build_sample, compute_inclusion_probs, design_diagnostics,
                     draw_sample_pps, normalize_weights_subset, partition_random, partition_stratified)
from .draws import ChainDraws
from .harness import ExperimentReport, run_pipeline, timing_report
from .metrics import ess_fixed_width, kde_gaussian, summarize, tv_accuracy
from .nbmodel import CaseData, ChainConfig, posterior_predictive_impute, run_chain
from .synthpop import (FinitePopulation, PopulationConfig, build_car_precision, generate_population,
                       hold_out_missing, sample_matrix_normal)

__version__ = "0.1.0"
