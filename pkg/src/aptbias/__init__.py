"""Bias-driven APT attacker simulator and bias-profile inference toolkit."""

__version__ = "0.1.0"

from .biases import (  # noqa: F401
    BIAS_STATES,
    BiasLevel,
    BiasParams,
    BiasState,
    ChoiceConfig,
    DEFAULT_PARAM_TABLE,
    GaussianSpec,
    ParamDistributionTable,
    Prospect,
    aggressive_probability,
    calibrate_choice,
    default_choice_config,
    sample_params,
)
from .world import ScenarioConfig, TriggerSpec, generate_network  # noqa: F401
from .agents import ActionSequence, Episode, run_episode  # noqa: F401
from .inference import (  # noqa: F401
    EmissionTable,
    FeatureVector,
    Posterior,
    compute_emissions,
    extract_features,
    map_state,
    sequence_posterior,
)
from .tree import BiasTreeModel, classify, train_tree  # noqa: F401
from .evaluation import (  # noqa: F401
    DistanceReport,
    accuracy_and_cross_entropy,
    distance_experiment,
    run_statistics,
    welch_t_test,
)
