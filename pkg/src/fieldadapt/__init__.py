"""Learning agents that align qubit measurement directions with an unknown
stray field, composition of new directions, baseline estimators, and a
measurement-based Grover search run under the field."""

__version__ = "0.1.0"

from .angles import (DegenerateDistribution, circular_distance, circular_mean,
                     circular_std, normalize_angle, resultant)
from .composition import (CompositionOutcome, DegenerateGlow, bisect_compose,
                          glow_compose)
from .estimators import (FourierPosterior, InsufficientData,
                         TomographyEstimate, bayes_update, flat_prior,
                         posterior_from_record, posterior_mean_std, tomography)
from .experiments import (ConfigError, Scenario, emit_csv, run_scenario,
                          sweep_asymptotics)
from .grover import (GroverRun, grover_analytic_success, run_grover,
                     run_grover_adapted)
from .multipercept import (FeedbackAgent, conditioned_success, feedback_round,
                           translate_direction)
from .pscore import (ClipNetwork, LearningParams, NonConvergence, NotReached,
                     accumulate_glow, action_distribution, apply_update,
                     asymptotic_success, learning_time_tau90, select_action,
                     single_percept_network, steady_state_weights,
                     subjective_success)
from .quantum import (DegenerateBranch, MeasurementRecord,
                      apply_field_rotation, evolve_phase, measure_qubit,
                      outcome_probability, post_measurement_phase,
                      ring_cluster_state, sample_outcome)
