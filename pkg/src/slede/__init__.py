"""Toolkit for span-annotated ESL dialogue corpora.

Models dialogue corpora with two annotation layers (micro-level token spans
and four 1-5 interactivity labels), measures inter-annotator agreement,
turns spans into per-feature weights, trains interpretable classifiers for
the labels, and extracts common vs. label-specific high-impact features. An
HTTP annotation service and a browser UI produce corpora in the same format.
"""

from .agreement import (
    AgreementReport,
    UndefinedStatisticError,
    agreement_report,
    binarize,
    binarize_dialogue,
    krippendorff_alpha,
    pearson,
)
from .analysis import (
    AblationTable,
    CommonFeatureSet,
    ImportanceReport,
    SpecificFeatureSet,
    WeightedFeatureList,
    common_features,
    importance_report,
    model_importance,
    permutation_importance,
    run_ablation,
    specific_features,
)
from .corpus import (
    Corpus,
    CorpusFormatError,
    CorpusValidationError,
    Dialogue,
    FeatureDef,
    InteractivityScore,
    LabelDef,
    MiniDialogue,
    Speaker,
    SpanAnnotation,
    SyntheticConfig,
    Turn,
    corpus_from_dict,
    corpus_to_dict,
    default_labels,
    default_registry,
    generate_synthetic,
    load_corpus,
    majority_label,
    majority_labels,
    minis_from_dict,
    minis_to_dict,
    save_corpus,
    split_corpus,
    split_mini,
    validate_corpus,
    validate_label_copy,
)
from .featurize import DesignMatrix, FeatureVector, build_matrix, feature_vector, feature_weight
from .models import (
    ClassifierSpec,
    MetricsReport,
    TrainedModel,
    bow_baseline,
    cross_validate,
    evaluate,
    model_from_dict,
    model_to_dict,
    predict,
    predict_proba,
    train,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
