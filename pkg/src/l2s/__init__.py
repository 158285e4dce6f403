"""Learning to search: structured prediction as imperative task programs."""

from .core import (
    Counters,
    Session,
    TrainerConfig,
    choose_policy_tied,
    learn_example,
    make_cost_vector,
    test_decode,
)
from .cslearn import CostSensitiveExample, LinearCSModel, load_model, save_model
from .dataio import FeatureBuilder, FeatureVector, LabelDict, Sentence, TemplateSpec, hash_feature
from .errors import (
    ConfigurationError,
    ContractError,
    DataError,
    L2SError,
    ModelFormatError,
    NonTerminationError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ContractError",
    "CostSensitiveExample",
    "Counters",
    "DataError",
    "FeatureBuilder",
    "FeatureVector",
    "L2SError",
    "LabelDict",
    "LinearCSModel",
    "ModelFormatError",
    "NonTerminationError",
    "Sentence",
    "Session",
    "TemplateSpec",
    "TrainerConfig",
    "choose_policy_tied",
    "hash_feature",
    "learn_example",
    "load_model",
    "make_cost_vector",
    "save_model",
    "test_decode",
]
