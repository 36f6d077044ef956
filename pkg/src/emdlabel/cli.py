"""Command-line entry point: ``label``, ``audit``, and ``selftest``.

``label`` runs the whole pipeline from two manifest CSVs and writes
labels.csv, labels.json, fit.json, audit.json, roc.csv, and run.json into
the output directory (plus distances.csv on request). run.json captures the
full config and input digests; ``label --from-run run.json`` replays a run.

Exit codes: 0 success, 1 pipeline-stage failure, 2 config or input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from math import comb
from pathlib import Path

import numpy as np

from . import audit as audit_mod
from . import glm as glm_mod
from . import transport as transport_mod
from .dataset import ImageDecodeError, ManifestError, load_manifest
from .histogram import bin_distance_costs
from .labeler import PipelineError, run_pipeline_artifacts, write_labels_csv, write_labels_json
from .transport import write_distances_csv

OUTPUT_DIR_ENV = "EMDLABEL_OUTPUT_DIR"

MODEL_KINDS = ("ridge_logistic", "ridge_ls")
SIGN_CONVENTIONS = ("negative_is_reference", "negative_is_positive")


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    """All knobs of a labeling run; validated on construction."""

    bins: int = 64
    model_kind: str = "ridge_logistic"
    lam: float | str = "auto"
    folds: int = 5
    alpha: float = 0.05
    sign_convention: str = "negative_is_reference"
    seed: int = 0
    output_dir: str = "."
    parallelism: int | str = "auto"
    grid_size: int = 50
    dump_distances: bool = False

    def __post_init__(self):
        if self.bins < 2:
            raise ConfigError(f"bins must be >= 2, got {self.bins}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"model_kind must be one of {MODEL_KINDS}")
        if self.sign_convention not in SIGN_CONVENTIONS:
            raise ConfigError(f"sign_convention must be one of {SIGN_CONVENTIONS}")
        if self.lam != "auto":
            try:
                lam = float(self.lam)
            except (TypeError, ValueError):
                raise ConfigError(f"lambda must be 'auto' or a number, got {self.lam!r}")
            if lam < 0:
                raise ConfigError("lambda must be nonnegative")
            self.lam = lam
        if self.parallelism != "auto":
            try:
                workers = int(self.parallelism)
            except (TypeError, ValueError):
                raise ConfigError(
                    f"parallelism must be 'auto' or a positive integer, got {self.parallelism!r}"
                )
            if workers < 1:
                raise ConfigError("parallelism must be >= 1")
            self.parallelism = workers
        if self.grid_size < 1:
            raise ConfigError("grid_size must be >= 1")

    def resolve_workers(self) -> int:
        if self.parallelism == "auto":
            return min(os.cpu_count() or 1, 8)
        return int(self.parallelism)

    def to_dict(self) -> dict:
        return asdict(self)


_CONFIG_COERCERS = {
    "bins": int,
    "folds": int,
    "seed": int,
    "grid_size": int,
    "alpha": float,
    "dump_distances": lambda v: v.lower() in ("1", "true", "yes"),
}


def load_config_file(path) -> dict:
    """Parse a flat ``key = value`` config file into Config kwargs."""
    values = {}
    valid = set(Config.__dataclass_fields__)
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected key = value at line {line_no} of {path}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "lambda":
                key = "lam"
            if key == "model":
                key = "model_kind"
            if key not in valid:
                raise ConfigError(f"unknown config key {key!r} at line {line_no} of {path}")
            value = value.strip("\"'")
            coerce = _CONFIG_COERCERS.get(key)
            values[key] = coerce(value) if coerce else value
    return values


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(obj, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_label(
    real_manifest,
    synthetic_manifest,
    config: Config,
    attribute_name: str = "attribute",
    positive_class_name: str = "1",
    reference_class_name: str = "0",
) -> int:
    """Run the pipeline and write all reports into config.output_dir."""
    manifest = load_manifest(
        real_manifest,
        synthetic_manifest,
        attribute_name=attribute_name,
        positive_class_name=positive_class_name,
        reference_class_name=reference_class_name,
    )
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    artifacts = run_pipeline_artifacts(manifest, config)
    report, fit, path_, design = (
        artifacts.report,
        artifacts.fit,
        artifacts.lambda_path,
        artifacts.design,
    )

    write_labels_csv(report, out_dir / "labels.csv")
    write_labels_json(report, out_dir / "labels.json")

    fit_dump = {
        "model_kind": fit.kind,
        "chosen_lambda": fit.lam,
        "intercept": fit.intercept,
        "coefficients": dict(zip(design.synthetic_ids, fit.coefficients.tolist())),
        "converged": fit.converged,
        "iterations": fit.iterations,
        "final_gradient_norm": fit.final_gradient_norm,
        "lambda_grid": path_.grid.tolist() if path_ else None,
        "cv_mean_deviance": path_.cv_mean.tolist() if path_ else None,
        "cv_se_deviance": path_.cv_se.tolist() if path_ else None,
    }

    try:
        counts = report.counts
        result = audit_mod.sign_test(
            counts[manifest.reference_class_name],
            counts[manifest.positive_class_name],
            alpha=config.alpha,
        )
        audit_dump = {
            "attribute": manifest.attribute_name,
            "class_a": manifest.reference_class_name,
            "class_b": manifest.positive_class_name,
            **asdict(result),
        }

        roc_scores = audit_mod.cv_scores_for_roc(
            design,
            fit.lam,
            folds=config.folds,
            seed=config.seed,
            kind=config.model_kind,
        )
        curve = audit_mod.roc_auc(
            [s for s, _ in roc_scores], [y for _, y in roc_scores]
        )
        fit_dump["cv_auc"] = curve.auc
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("report", str(exc)) from exc

    _write_json(fit_dump, out_dir / "fit.json")
    _write_json(audit_dump, out_dir / "audit.json")
    audit_mod.write_roc_csv(curve, out_dir / "roc.csv")
    if config.dump_distances:
        write_distances_csv(
            out_dir / "distances.csv", design.real_ids, design.synthetic_ids, design.x
        )

    image_paths = [p for p, _ in manifest.real_entries] + list(manifest.synthetic_entries)
    run_dump = {
        "config": config.to_dict(),
        "attribute_name": attribute_name,
        "positive_class_name": positive_class_name,
        "reference_class_name": reference_class_name,
        "inputs": {
            "real_manifest": {
                "path": os.path.abspath(real_manifest),
                "sha256": _sha256(real_manifest),
            },
            "synthetic_manifest": {
                "path": os.path.abspath(synthetic_manifest),
                "sha256": _sha256(synthetic_manifest),
            },
            "images": [
                {"path": os.path.abspath(p), "sha256": _sha256(p)} for p in image_paths
            ],
        },
    }
    _write_json(run_dump, out_dir / "run.json")
    return 0


def cmd_audit(count_a: int, count_b: int, alpha: float = 0.05) -> int:
    """Print the sign-test AuditResult for two counts as JSON on stdout."""
    result = audit_mod.sign_test(count_a, count_b, alpha=alpha)
    print(json.dumps(asdict(result), indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------


def _check_emd_routes() -> str | None:
    rng = np.random.default_rng(20240901)
    costs = bin_distance_costs(16, exponent=1)
    worst = 0.0
    for _ in range(50):
        q = rng.random(16)
        q /= q.sum()
        p = rng.random(16)
        p /= p.sum()
        fast = transport_mod.emd_1d(q, p)
        exact = transport_mod.emd_exact(q, p, costs).total_cost
        worst = max(worst, abs(fast - exact))
    if worst >= 1e-9:
        return f"1D and exact solver disagree by {worst:.3e}"
    return None


def _check_logistic_gradient() -> str | None:
    rng = np.random.default_rng(20240902)
    x = rng.random((24, 5))
    y = (rng.random(24) < 0.5).astype(float)
    if y.min() == y.max():
        y[0] = 1.0 - y[0]
    d = glm_mod.DesignMatrix(
        x=x, y=y, real_ids=[f"r{i}" for i in range(24)], synthetic_ids=list("abcde")
    )
    lam = 0.3
    fit = glm_mod.ridge_logistic_fit(d, lam)
    points = [(fit.intercept, fit.coefficients)]
    for _ in range(3):
        points.append((float(rng.normal()), rng.normal(size=5)))
    h = 1e-5
    for beta0, beta in points:
        analytic = glm_mod.logistic_gradient(d, beta0, beta, lam)
        numeric = np.zeros_like(analytic)
        full = np.concatenate(([beta0], beta))
        for k in range(len(full)):
            plus, minus = full.copy(), full.copy()
            plus[k] += h
            minus[k] -= h
            numeric[k] = (
                glm_mod.penalized_loglik(d, plus[0], plus[1:], lam)
                - glm_mod.penalized_loglik(d, minus[0], minus[1:], lam)
            ) / (2 * h)
        scale = np.maximum(np.abs(analytic), 1.0)
        err = float(np.max(np.abs(analytic - numeric) / scale))
        if err >= 1e-6:
            return f"gradient disagrees with finite differences (rel err {err:.3e})"
    return None


def _check_sign_test() -> str | None:
    for a, b in [(18, 46), (31, 33), (36, 28), (22, 36), (0, 5), (7, 7), (100, 80)]:
        n = a + b
        k = min(a, b)
        exact_one = Fraction(sum(comb(n, i) for i in range(k + 1)), 2**n)
        result = audit_mod.sign_test(a, b)
        if abs(result.p_one_tailed - float(exact_one)) > 1e-12 * float(exact_one):
            return f"p-value for ({a},{b}) off the exact tail sum"
    return None


SELFTEST_CHECKS = [
    ("emd-1d-vs-exact-solver", _check_emd_routes),
    ("logistic-gradient-vs-finite-differences", _check_logistic_gradient),
    ("sign-test-vs-exact-tail-sum", _check_sign_test),
]


def cmd_selftest() -> int:
    """Run the embedded oracle checks, printing one PASS/FAIL line per check."""
    failures = 0
    for name, check in SELFTEST_CHECKS:
        try:
            problem = check()
        except Exception as exc:  # a crash is a failure, not an abort
            problem = f"raised {type(exc).__name__}: {exc}"
        if problem is None:
            print(f"PASS {name}")
        else:
            print(f"FAIL {name}: {problem}")
            failures += 1
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emdlabel",
        description="Label synthetic images from distances to labeled reals, then audit for bias.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    label = sub.add_parser("label", help="run the labeling pipeline")
    label.add_argument("real_manifest", nargs="?", help="CSV with header path,label")
    label.add_argument("synthetic_manifest", nargs="?", help="CSV with header path")
    label.add_argument("--config", help="key = value config file")
    label.add_argument("--from-run", help="replay a previous run.json")
    label.add_argument("--bins", type=int)
    label.add_argument("--model", choices=MODEL_KINDS, dest="model_kind")
    label.add_argument("--lambda", dest="lam", help="'auto' or a nonnegative number")
    label.add_argument("--folds", type=int)
    label.add_argument("--grid-size", type=int)
    label.add_argument("--alpha", type=float)
    label.add_argument("--sign-convention", choices=SIGN_CONVENTIONS)
    label.add_argument("--seed", type=int)
    label.add_argument("--output-dir")
    label.add_argument("--parallelism", help="'auto' or a worker count")
    label.add_argument("--dump-distances", action="store_true", default=None)
    label.add_argument("--attribute", default=None)
    label.add_argument("--positive-class", default=None)
    label.add_argument("--reference-class", default=None)

    audit_cmd = sub.add_parser("audit", help="sign test on two class counts")
    audit_cmd.add_argument("count_a", type=int)
    audit_cmd.add_argument("count_b", type=int)
    audit_cmd.add_argument("--alpha", type=float, default=0.05)

    sub.add_parser("selftest", help="run embedded oracle checks")
    return parser


_FLAG_KEYS = (
    "bins",
    "model_kind",
    "lam",
    "folds",
    "grid_size",
    "alpha",
    "sign_convention",
    "seed",
    "output_dir",
    "parallelism",
    "dump_distances",
)


def _label_from_args(args) -> int:
    values: dict = {}
    meta = {
        "attribute_name": "attribute",
        "positive_class_name": "1",
        "reference_class_name": "0",
    }
    real_manifest, synthetic_manifest = args.real_manifest, args.synthetic_manifest

    if args.config:
        values.update(load_config_file(args.config))
    if args.from_run:
        with open(args.from_run) as fh:
            run = json.load(fh)
        values.update(run["config"])
        for key in meta:
            meta[key] = run.get(key, meta[key])
        if real_manifest is None:
            real_manifest = run["inputs"]["real_manifest"]["path"]
        if synthetic_manifest is None:
            synthetic_manifest = run["inputs"]["synthetic_manifest"]["path"]
    for key in _FLAG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if values.get("output_dir") is None:
        values["output_dir"] = os.environ.get(OUTPUT_DIR_ENV, ".")
    if args.attribute is not None:
        meta["attribute_name"] = args.attribute
    if args.positive_class is not None:
        meta["positive_class_name"] = args.positive_class
    if args.reference_class is not None:
        meta["reference_class_name"] = args.reference_class

    if real_manifest is None or synthetic_manifest is None:
        raise ConfigError("label needs two manifest paths (or --from-run)")

    config = Config(**values)
    return cmd_label(
        real_manifest,
        synthetic_manifest,
        config,
        attribute_name=meta["attribute_name"],
        positive_class_name=meta["positive_class_name"],
        reference_class_name=meta["reference_class_name"],
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "label":
            return _label_from_args(args)
        if args.command == "audit":
            return cmd_audit(args.count_a, args.count_b, alpha=args.alpha)
        return cmd_selftest()
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ManifestError, ImageDecodeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
