"""Adversarially robust multi-task shrinkage estimators.

Fits m related estimation tasks jointly by penalizing the distance of each
per-task parameter vector to a shared structure (a common center, cluster
centers, or a low-dimensional subspace) with a per-task group-lasso penalty.
The penalty makes every fit collapse onto the structure when tasks agree and
fall back to single-task behavior for tasks that do not.
"""

from .baselines import (fit_clustered_mtl, fit_lowrank_mtl, fit_pooled,
                        fit_single_task)
from .core import (Clustered, FitResult, GlobalLambda, LowRank, PenaltyConfig,
                   PerTaskLambda, SolverConfig, TaskCollection, TaskDataset,
                   Vanilla, validate_collection)
from .errors import (ArmulError, BadFraction, BadLabel, ConfigError,
                     DegenerateS, DimensionMismatch, EmptyCluster, EmptySubset,
                     EmptyTask, KTooLarge, NonFinite, ParseError,
                     RankDeficientBasis, SingularDesign, StructureMismatch,
                     TooFewSamples, TooFewTasks)
from .losses import (BatchedLoss, GaussianMean, Logistic, SquaredError,
                     grad_lipschitz_bound, loss_grad, loss_value)
from .metrics import (cluster_alignment, max_l2_error, misclassification_rate,
                      mean_squared_prediction_error)
from .pca import apply_transform, reduce_features
from .prox import (group_soft_threshold, huber_grad, huber_value,
                   scalar_soft_threshold)
from .serialize import (read_collection, read_fit_result, write_collection,
                        write_fit_result, write_scenario)
from .simgen import (Scenario, gen_clustered_scenario, gen_lowrank_scenario,
                     gen_vanilla_scenario, sample_uniform_sphere,
                     true_cluster_labels)
from .solver import fit_armul, kkt_residual, objective
from .transfer import transfer_clustered, transfer_lowrank, transfer_vanilla
from .tuning import (CvPlan, cv_score, make_folds, select_c,
                     select_structure_param)
from .warmup import (MeansProblem, armul_means_closed_form, huber_location,
                     js_estimators, js_shrink_mean, js_shrink_mean_positive,
                     js_shrink_zero, ridge_mtl_means)

__version__ = "0.1.0"
