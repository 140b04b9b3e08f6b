"""Texture classification toolkit.

Extracts 104 textural features per image source (original plus four
filtered variants), classifies with Gaussian naive Bayes, and optimizes
the feature set with covariance PCA and a genetic algorithm over seeded
train/test permutations.
"""

from .bayes import ConfusionMatrix, GaussianNaiveBayes
from .config import ExperimentConfig, load_config
from .dataset import (
    ImageSample,
    QuantizedImage,
    SplitSpec,
    load_dataset,
    load_manifest,
    permute_split,
    quantize,
    split_ids,
)
from .errors import (
    ConfigError,
    DataError,
    EstimationError,
    SplitError,
    TexclassError,
)
from .features import (
    FeatureConfig,
    FeatureVector,
    GlcmFeatures,
    ImageFeatureBlock,
    feature_block,
    feature_vector,
    fractal_dimension,
    glcm_features,
    sato_mle,
    vector_feature_names,
)
from .filters import (
    FilterParams,
    SourceSelection,
    apply_filter_bank,
    canny_filter,
    entropy_filter,
    gaussian_filter,
    variance_filter,
)
from .glcm import Direction, Glcm, GlcmSet, compute_glcm, glcm_set, marginals
from .pipeline import (
    CaseResult,
    FeatureTable,
    extract_features,
    filter_correlations,
    read_results,
    relevance_report,
    run_case,
    run_experiment,
    write_results,
)
from .reduce import (
    Chromosome,
    CovariancePca,
    GaConfig,
    GeneticFeatureSelector,
    ga_fitness,
    ga_select,
)

__version__ = "0.1.0"

__all__ = [
    "CaseResult",
    "Chromosome",
    "ConfigError",
    "ConfusionMatrix",
    "CovariancePca",
    "DataError",
    "Direction",
    "EstimationError",
    "ExperimentConfig",
    "FeatureConfig",
    "FeatureTable",
    "FeatureVector",
    "FilterParams",
    "GaConfig",
    "GaussianNaiveBayes",
    "GeneticFeatureSelector",
    "Glcm",
    "GlcmFeatures",
    "GlcmSet",
    "ImageFeatureBlock",
    "ImageSample",
    "QuantizedImage",
    "SourceSelection",
    "SplitError",
    "SplitSpec",
    "TexclassError",
    "apply_filter_bank",
    "canny_filter",
    "compute_glcm",
    "entropy_filter",
    "extract_features",
    "feature_block",
    "feature_vector",
    "filter_correlations",
    "fractal_dimension",
    "ga_fitness",
    "ga_select",
    "gaussian_filter",
    "glcm_features",
    "glcm_set",
    "load_config",
    "load_dataset",
    "load_manifest",
    "marginals",
    "permute_split",
    "quantize",
    "read_results",
    "relevance_report",
    "run_case",
    "run_experiment",
    "sato_mle",
    "split_ids",
    "variance_filter",
    "vector_feature_names",
    "write_results",
]
