"""Distance-based labeling of synthetic images with a built-in bias audit.

Workflow: reduce every image to a normalized luminance histogram, measure
Earth Mover's Distances from each labeled real image to each unlabeled
synthetic image, fit a ridge (logistic) regression of the labels on those
distances, label each synthetic image by its coefficient's sign, and test
the resulting label counts for bias with an exact binomial sign test.
"""

from .audit import AuditResult, RocCurve, cv_scores_for_roc, roc_auc, sign_test
from .dataset import (
    ImageDecodeError,
    ImageRecord,
    Manifest,
    ManifestError,
    load_images,
    load_manifest,
    save_manifest,
)
from .glm import (
    DesignMatrix,
    LambdaPath,
    RidgeFit,
    cross_validate_lambda,
    logistic_loglik,
    ridge_least_squares,
    ridge_logistic_fit,
)
from .histogram import CostMatrix, Histogram, bin_distance_costs, to_histogram
from .labeler import (
    LabelEntry,
    LabelReport,
    PipelineArtifacts,
    PipelineError,
    build_design_matrix,
    classify_by_sign,
    run_pipeline,
    run_pipeline_artifacts,
)
from .transport import TransportPlan, emd_1d, emd_exact, pairwise_emd

__version__ = "0.1.0"

__all__ = [
    "AuditResult",
    "CostMatrix",
    "DesignMatrix",
    "Histogram",
    "ImageDecodeError",
    "ImageRecord",
    "LabelEntry",
    "LabelReport",
    "LambdaPath",
    "Manifest",
    "ManifestError",
    "PipelineArtifacts",
    "PipelineError",
    "RidgeFit",
    "RocCurve",
    "TransportPlan",
    "bin_distance_costs",
    "build_design_matrix",
    "classify_by_sign",
    "cross_validate_lambda",
    "cv_scores_for_roc",
    "emd_1d",
    "emd_exact",
    "load_images",
    "load_manifest",
    "logistic_loglik",
    "pairwise_emd",
    "ridge_least_squares",
    "ridge_logistic_fit",
    "roc_auc",
    "run_pipeline",
    "run_pipeline_artifacts",
    "save_manifest",
    "sign_test",
    "to_histogram",
]
