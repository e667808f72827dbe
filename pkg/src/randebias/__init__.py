"""Gender debiasing of word embeddings by repulsion, attraction and neutralization.

Also provides the knowledge-based vocabulary classifier, the GIPE
proximity-bias audit and the usual intrinsic evaluations.
"""
from ._backend import BACKEND
from .bias_geometry import (
    DEFAULT_GENDER_PAIRS,
    GenderDirection,
    UndefinedBiasError,
    compute_gender_direction,
    direct_bias,
    indirect_bias,
)
from .embedding_io import EmbeddingSet, Vocabulary, load_embedding, save_embedding, unit_normalize
from .gipe import BiasNetwork, GipeReport, build_bbn, gipe, node_weight, proximity_bias
from .kbc import Classification, KnowledgeBase, WordLists, classify_vocabulary, score_classification
from .neighbourhood import NeighbourTable, top_k_neighbours
from .ran_debias import (
    DebiasResult,
    ObjectiveWeights,
    OptimizerConfig,
    RepulsionSet,
    debias_all,
    debias_word,
    objective,
    objective_gradient,
    repulsion_set,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BiasNetwork",
    "Classification",
    "DEFAULT_GENDER_PAIRS",
    "DebiasResult",
    "EmbeddingSet",
    "GenderDirection",
    "GipeReport",
    "KnowledgeBase",
    "NeighbourTable",
    "ObjectiveWeights",
    "OptimizerConfig",
    "RepulsionSet",
    "UndefinedBiasError",
    "Vocabulary",
    "WordLists",
    "build_bbn",
    "classify_vocabulary",
    "compute_gender_direction",
    "debias_all",
    "debias_word",
    "direct_bias",
    "gipe",
    "indirect_bias",
    "load_embedding",
    "node_weight",
    "objective",
    "objective_gradient",
    "proximity_bias",
    "repulsion_set",
    "save_embedding",
    "score_classification",
    "top_k_neighbours",
    "unit_normalize",
]
