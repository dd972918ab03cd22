"""Predicting text quality ratings from readers' eye movements and text features."""

from .agreement import AgreementTable, build_rating_table, gwet_ac1, gwet_ac2, quadratic_weighted_kappa
from .corpus import (
    AnnotatedDocument, ComprehensionLevel, RatingRecord, comprehension_level, parse_document,
    quality_score, read_ratings,
)
from .errors import DomainError, FormatError, GazeRateError, ParseError, SchemaError, TrainingError, ValidationError
from .experiment import (
    ExperimentConfig, Instance, SplitPlan, ablation, assemble_instances, derive_seed, run_experiment,
    stratified_split,
)
from .gaze import GazeFeatureVector, InterestAreaRecord, aggregate_gaze, parse_ia_report
from .network import Network, TrainConfig, forward, grad_check, init_network, train
from .resources import EmbeddingTable, NgramLM, load_glove_text, load_word2vec_binary, train_ngram_lm
from .text_features import TextFeatureVector, build_entity_grid, entity_grid_features, extract_text_features

__version__ = "0.1.0"
