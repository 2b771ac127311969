"""driftbench: margin-density drift detection and a stream benchmark harness.

The library tracks the fraction of unlabeled stream samples falling inside a
trained classifier's margin and flags drift when that density deviates from a
cross-validated reference, spending oracle labels only to confirm suspicions
and retrain. Comparison detectors (full accuracy tracking, Hellinger-distance
feature tracking, CUSUM, Page-Hinkley, mean-uncertainty tracking), synthetic
drift scenarios, and an information-gain drift-induction framework round out
the benchmark.
"""

from .data import (
    Dataset,
    Instance,
    NormalizationParams,
    apply_normalizer,
    fit_normalizer,
    load_csv,
    shuffle,
)
from .detectors import (
    CONFIRMED,
    CusumTracker,
    DriftEvent,
    EwmaTracker,
    FALSE_ALARM,
    HellingerDetector,
    MarginDensityDetector,
    PageHinkleyTracker,
    ReferenceDistribution,
    SUSPECTED,
    UncertaintyTracker,
    hellinger_between,
    hellinger_distance,
    histogram_counts,
    reference_from_bands,
    reference_from_cv,
)
from .harness import (
    Oracle,
    RunConfig,
    RunReport,
    margin_width_sweep,
    run_stream,
    run_suite,
    sensitivity_sweep,
    table8_sweep,
)
from .induction import (
    FeatureRanking,
    InductionPlan,
    induce,
    information_gain,
    rank_by_information_gain,
    rotate_features,
)
from .margins import (
    MarginSpec,
    ensemble_margin_signal,
    margin_density,
    margin_signal,
    probabilistic_margin_signal,
    sample_uncertainty,
    svm_margin_signal,
)
from .models import (
    LinearModel,
    SubspaceEnsemble,
    TrainConfig,
    TreeModel,
    ensemble_confidence,
    model_from_dict,
    model_to_dict,
    predict_label,
    predict_signed,
    train_linear_svm,
    train_logistic,
    train_subspace_ensemble,
    train_tree,
)
from .synth import GaussianBlobSpec, ScenarioId, generate_scenario, sample_blobs

__version__ = "0.1.0"
