"""Multi-objective day-ahead dispatch for isolated microgrids under
renewable and load uncertainty."""

from ._kernels import backend_name
from .decision import (BcsSelection, FcmParams, GrpParams, fcm_cluster,
                       grey_relation_coeff, projection_and_rpv, select_bcs,
                       standardize_decision_matrix)
from .dispatch import (DecisionVector, ESSParams, EquivalentLoad, MTUnit,
                       ObjectiveVector, Scenario, TOUSchedule,
                       build_equivalent_load, check_constraints, eval_cost,
                       eval_emissions, eval_satisfaction, evaluate,
                       min_required_reserve, repair, reserve_chance_satisfied)
from .pipeline import (RunConfig, RunReport, cmd_decide, cmd_optimize,
                       cmd_reserve_sweep, cmd_validate)
from .probmodel import (LoadParams, ProbSeq, PVParams, WindParams, discretize,
                        distribution_mean, load_pdf, pv_output_pdf,
                        wind_speed_pdf, wt_output_pdf, wt_point_masses)
from .scenario_io import (load_bundled_scenario, load_scenario, load_schedule,
                          save_scenario, save_schedule)
from .sequences import (expectation, expected_equivalent_load, seq_add,
                        seq_sub_floor)
from .thetadea import (Individual, OptimizeResult, ThetaDeaParams,
                       assign_clusters, generate_reference_points, normalize,
                       run, theta_fitness, theta_sort_and_select, vary)

__version__ = "0.1.0"
