"""End-to-end labeling: histograms -> pairwise EMD -> ridge fit -> sign labels.

Each synthetic image is one feature column of the design matrix; its fitted
coefficient's sign decides its class. Two sign conventions are supported:

* ``negative_is_reference`` (default): negative coefficient -> reference
  class (y=0).
* ``negative_is_positive``: negative coefficient -> positive class (y=1),
  reading a negative weight on a distance column as "far from the
  reference class".

On distance features the two are mirror images; the choice is recorded in
the report.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING

import numpy as np

from .dataset import ImageRecord, Manifest, load_images
from .glm import (
    DesignMatrix,
    LambdaPath,
    RidgeFit,
    cross_validate_lambda,
    ridge_least_squares,
    ridge_logistic_fit,
)
from .histogram import to_histogram
from .transport import pairwise_emd

if TYPE_CHECKING:  # pragma: no cover
    from .cli import Config

UNDETERMINED_EPS = 1e-12

SIGN_CONVENTIONS = ("negative_is_reference", "negative_is_positive")


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message is prefixed with the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class LabelEntry:
    synthetic_id: str
    coefficient: float
    sign: str  # "negative" | "positive" | "undetermined"
    assigned_class: str | None


@dataclass
class LabelReport:
    """One entry per synthetic image plus per-class totals."""

    entries: list[LabelEntry]
    model_kind: str
    lambda_used: float
    counts: dict[str, int]
    sign_convention: str = "negative_is_reference"

    @property
    def undetermined(self) -> int:
        return sum(1 for e in self.entries if e.sign == "undetermined")

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "lambda_used": self.lambda_used,
            "sign_convention": self.sign_convention,
            "counts": self.counts,
            "undetermined": self.undetermined,
            "entries": [asdict(e) for e in self.entries],
        }


@dataclass
class PipelineArtifacts:
    """Everything a run produces, for report writers and audits downstream."""

    report: LabelReport
    fit: RidgeFit
    lambda_path: LambdaPath | None
    design: DesignMatrix


def build_design_matrix(
    reals: list[ImageRecord],
    labels: list[int],
    synthetics: list[ImageRecord],
    bins: int = 64,
    workers: int = 1,
) -> DesignMatrix:
    """Design matrix with x[i][j] = EMD(hist(real_i), hist(synthetic_j))."""
    if not reals or not synthetics:
        raise ValueError("need at least one real and one synthetic image")
    if len(labels) != len(reals):
        raise ValueError("labels must match the real images one-to-one")
    real_hists = [to_histogram(r, bins) for r in reals]
    syn_hists = [to_histogram(s, bins) for s in synthetics]
    x = pairwise_emd(real_hists, syn_hists, c=None, workers=workers)
    return DesignMatrix(
        x=x,
        y=np.asarray(labels, dtype=float),
        real_ids=[r.id for r in reals],
        synthetic_ids=[s.id for s in synthetics],
    )


def classify_by_sign(
    fit: RidgeFit,
    manifest: Manifest,
    convention: str = "negative_is_reference",
) -> LabelReport:
    """Map each coefficient's sign to a class name.

    Coefficients within ``UNDETERMINED_EPS`` of zero are reported as
    undetermined and excluded from the class counts.
    """
    if convention not in SIGN_CONVENTIONS:
        raise ValueError(f"unknown sign convention {convention!r}")
    syn_ids = manifest.synthetic_entries
    if len(fit.coefficients) != len(syn_ids):
        raise ValueError(
            f"{len(fit.coefficients)} coefficients for {len(syn_ids)} synthetics"
        )
    if convention == "negative_is_reference":
        negative_class = manifest.reference_class_name
        positive_class = manifest.positive_class_name
    else:
        negative_class = manifest.positive_class_name
        positive_class = manifest.reference_class_name

    entries = []
    counts = {manifest.reference_class_name: 0, manifest.positive_class_name: 0}
    for syn_id, coef in zip(syn_ids, fit.coefficients):
        coef = float(coef)
        if abs(coef) < UNDETERMINED_EPS:
            entries.append(LabelEntry(syn_id, coef, "undetermined", None))
            continue
        sign = "negative" if coef < 0 else "positive"
        assigned = negative_class if sign == "negative" else positive_class
        counts[assigned] += 1
        entries.append(LabelEntry(syn_id, coef, sign, assigned))
    return LabelReport(
        entries=entries,
        model_kind=fit.kind,
        lambda_used=fit.lam,
        counts=counts,
        sign_convention=convention,
    )


def run_pipeline_artifacts(manifest: Manifest, config: "Config") -> PipelineArtifacts:
    """Run every stage and return the report plus intermediate artifacts.

    Deterministic given the manifest, the config, and its seed; stage
    failures surface as PipelineError tagged with the stage name.
    """
    workers = config.resolve_workers()

    try:
        records = load_images(manifest)
    except Exception as exc:
        raise PipelineError("load", str(exc)) from exc
    n_real = len(manifest.real_entries)
    reals, synthetics = records[:n_real], records[n_real:]

    try:
        design = build_design_matrix(
            reals, manifest.labels, synthetics, bins=config.bins, workers=workers
        )
    except Exception as exc:
        raise PipelineError("distances", str(exc)) from exc

    lambda_path = None
    if config.lam == "auto":
        try:
            lambda_path = cross_validate_lambda(
                design,
                folds=config.folds,
                grid_size=config.grid_size,
                seed=config.seed,
                kind=config.model_kind,
            )
        except Exception as exc:
            raise PipelineError("cross_validation", str(exc)) from exc
        lam = lambda_path.chosen
    else:
        lam = float(config.lam)

    try:
        if config.model_kind == "ridge_logistic":
            fit = ridge_logistic_fit(design, lam)
            if not fit.converged:
                raise RuntimeError(
                    f"fit did not converge (final gradient norm "
                    f"{fit.final_gradient_norm:.3e})"
                )
        else:
            fit = ridge_least_squares(design, lam)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("fit", str(exc)) from exc

    try:
        report = classify_by_sign(fit, manifest, config.sign_convention)
    except Exception as exc:
        raise PipelineError("classify", str(exc)) from exc

    return PipelineArtifacts(
        report=report, fit=fit, lambda_path=lambda_path, design=design
    )


def run_pipeline(manifest: Manifest, config: "Config") -> LabelReport:
    """Label every synthetic image in the manifest; see run_pipeline_artifacts."""
    return run_pipeline_artifacts(manifest, config).report


def write_labels_csv(report: LabelReport, path) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["synthetic_id", "coefficient", "sign", "assigned_class"])
        for e in report.entries:
            writer.writerow(
                [e.synthetic_id, repr(e.coefficient), e.sign, e.assigned_class or ""]
            )


def write_labels_json(report: LabelReport, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
