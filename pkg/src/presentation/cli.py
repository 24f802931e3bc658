"""
Command-line frontend.

Every command loads the effective configuration, runs one library
operation and writes its artifacts under ``--out`` together with a
``manifest.json`` (deterministic: command, arguments, config echo, seed,
inputs, outputs relative to ``--out``) and ``timings.json``. ``replay``
re-runs a manifest's command with its recorded arguments.

Exit codes: 0 success, 2 configuration or usage error, 3 data error,
4 numerical failure.
"""

from dataclasses import replace
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, Optional
import logging
import sys

import click
import numpy as np

from ..application.services.match_graph_service import GroupDistances, MatchGraphService
from ..application.services.metrics_service import make_pairs, pr_curve, purity_counts, verification_accuracy
from ..application.services.pipeline_service import CleaningPipeline, calibrate_threshold
from ..application.services.synth_service import SynthGenerator
from ..application.services.triplet_service import TripletTrainer
from ..domain.models.clean_run import CleanRun
from ..domain.models.embedding_model import EmbeddingModel
from ..domain.models.identity_graph import CleanParams, ComponentRule
from ..domain.models.run_manifest import RunManifest
from ..domain.models.weak_dataset import WeakDataset, holdout_split
from ..infrastructure.exceptions import (
    ConfigurationException,
    IdentityCleanerException,
    PipelineAbortedException,
    StorageAccessException,
)
from ..infrastructure.logging.logger import CleanerLogger, StageTimer
from ..infrastructure.repositories import (
    CleanerConfig,
    FileCleanedRepository,
    FileConfigRepository,
    FileDatasetRepository,
    FileModelRepository,
    FileReportRepository,
)

PACKAGE_LOGGER = __name__.split(".")[0]
MANIFEST_FILE = "manifest.json"
TIMINGS_FILE = "timings.json"
PARTIAL_SUFFIX = ".partial"

logger = logging.getLogger(__name__)


class CommandRun:
    """Bookkeeping of one command: config, logger, output paths and manifest."""

    def __init__(self, command: str, params: Dict[str, Any]):
        self.config: CleanerConfig = FileConfigRepository().load_config(params.get("config"), params.get("seed"))
        self.logger = CleanerLogger(PACKAGE_LOGGER, self.config.log_level, self.config.log_dir)
        self.out = Path(params["out"])
        self.timings: Dict[str, float] = {}
        self.manifest = RunManifest(
            command=command,
            arguments={name: value for name, value in params.items() if name != "out"},
            config=self.config.to_dict(),
            seed=self.config.seed,
            config_path=params.get("config"),
        )
        self.datasets = FileDatasetRepository()
        self.models = FileModelRepository()
        self.cleaned = FileCleanedRepository()
        self.reports = FileReportRepository()
        self._embeddings: Optional[Dict[int, np.ndarray]] = None
        self.logger.info(f"Running '{command}' (seed={self.config.seed}, out={self.out})")

    def stage(self, name: str, **details) -> StageTimer:
        return StageTimer(self.logger, name, self.timings, details=details)

    def output(self, name: str, relative: str) -> Path:
        """Register an output and return its absolute path."""
        self.manifest.add_output(name, relative)
        return self.out / relative

    def load_dataset(self, name: str, path: str, embeddings: Optional[str] = None) -> WeakDataset:
        """Load a dataset; ``embeddings`` replaces every record's features."""
        self.manifest.inputs[name] = path
        with self.stage(f"load_{name}"):
            ds = self.datasets.load_dataset(path)
            if embeddings is None:
                return ds
            if self._embeddings is None:
                self.manifest.inputs["embeddings"] = embeddings
                self._embeddings = self.datasets.load_embeddings(embeddings)
            return ds.with_features(self._embeddings)

    def load_model(self, path: Optional[str], dim: int) -> EmbeddingModel:
        """The model at ``path``, or the identity model of the dataset's dimension."""
        if path is None:
            return EmbeddingModel.identity(dim)
        if self._embeddings is not None:
            raise ConfigurationException("--model cannot be combined with --embeddings", setting="model")
        self.manifest.inputs["model"] = path
        return self.models.load(path)

    def finish(self, partial: bool = False) -> None:
        manifest_path = self.out / MANIFEST_FILE
        if partial:
            self._mark_partial()
            manifest_path = self.out / (MANIFEST_FILE + PARTIAL_SUFFIX)
        self.reports.save(self.manifest, manifest_path)
        self.reports.save_timings(self.timings, self.out / TIMINGS_FILE)
        self.logger.info(f"Wrote {manifest_path}")

    def _mark_partial(self) -> None:
        """Suffix every written output and point the manifest at the new names."""
        renamed: Dict[str, str] = {}
        for relative in self.manifest.outputs.values():
            source = self.out / relative
            if not source.exists():
                continue
            try:
                source.replace(self.out / (relative + PARTIAL_SUFFIX))
            except OSError as e:
                raise StorageAccessException(f"Failed to mark {source} partial: {e}",
                                             path=str(source), operation="rename")
            renamed[relative] = relative + PARTIAL_SUFFIX
        self.manifest.outputs = {name: renamed.get(relative, relative)
                                 for name, relative in self.manifest.outputs.items()}
        for entry in self.manifest.iterations:
            for key, value in entry.items():
                if key.endswith("_path") and value in renamed:
                    entry[key] = renamed[value]


def handle_errors(func: Callable) -> Callable:
    """Map library exceptions to the process exit code."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except IdentityCleanerException as e:
            logger.error(str(e))
            click.echo(f"Error: {e}", err=True)
            sys.exit(e.exit_code)

    return wrapper


def common_options(func: Callable) -> Callable:
    """--config, --seed, --workers and --out, shared by every run command."""
    func = click.option("--out", required=True, type=click.Path(file_okay=False),
                        help="Output directory.")(func)
    func = click.option("--workers", default=1, show_default=True, type=click.IntRange(min=1),
                        help="Threads used for per-group filtering.")(func)
    func = click.option("--seed", default=None, type=click.IntRange(min=0),
                        help="Overrides the config seed; every random stream derives from it.")(func)
    func = click.option("--config", default=None, type=click.Path(exists=True, dir_okay=False),
                        help="TOML or JSON config file.")(func)
    return func


def embeddings_option(func: Callable) -> Callable:
    """--embeddings, for commands that can skip the base model."""
    return click.option("--embeddings", default=None, type=click.Path(exists=True, dir_okay=False),
                        help="Precomputed embeddings JSONL keyed by record_id; filtering uses them "
                             "in place of the dataset features and the base model.")(func)


def _clean_params(run: CommandRun, params: Dict[str, Any]) -> CleanParams:
    clean = run.config.clean
    return CleanParams(
        threshold=clean.threshold if params.get("threshold") is None else params["threshold"],
        min_group_size=clean.min_group_size if params.get("min_group_size") is None else params["min_group_size"],
        component_rule=clean.component_rule if params.get("rule") is None else params["rule"],
    )


@click.group()
def cli():
    """Clean weakly labeled identity datasets with per-identity match graphs."""


@cli.command()
@common_options
@handle_errors
def gen(**params):
    """Generate a synthetic weakly labeled dataset with ground truth."""
    run = CommandRun("gen", params)
    with run.stage("generate"):
        result = SynthGenerator(run.logger.logger).generate(run.config.synth)
    run.datasets.save_dataset(result.dataset, run.output("dataset", "dataset.jsonl"))
    run.reports.save_json(result.metadata.to_dict(), run.output("metadata", "meta.json"))
    run.models.save(result.oracle_model(), run.output("oracle_model", "oracle_model.json"))
    run.finish()


@cli.command()
@common_options
@embeddings_option
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Embedding model JSON; identity model when omitted.")
@click.option("--threshold", default=None, type=float, help="Overrides clean.threshold.")
@click.option("--min-group-size", default=None, type=int, help="Overrides clean.min_group_size.")
@click.option("--rule", default=None, type=click.Choice([r.value for r in ComponentRule]),
              help="Overrides clean.component_rule.")
@handle_errors
def clean(**params):
    """Filter every weak label down to its anchor-rooted component."""
    run = CommandRun("clean", params)
    ds = run.load_dataset("dataset", params["dataset"], params["embeddings"])
    model = run.load_model(params["model"], ds.dim)
    clean_params = _clean_params(run, params)
    service = MatchGraphService(params["workers"], run.logger.logger)
    with run.stage("clean", threshold=clean_params.threshold):
        cleaned, diagnostics = service.clean_with_diagnostics(GroupDistances(ds, model), clean_params)
    run.cleaned.save_cleaned(cleaned, run.output("cleaned", "cleaned.jsonl"))
    run.reports.save_diagnostics(diagnostics, run.output("diagnostics", "diagnostics.jsonl"))
    if ds.is_labeled:
        counts = purity_counts(cleaned, ds)
        run.reports.save_json({"kept": counts.kept, "correct_kept": counts.correct_kept,
                               "correct_total": counts.correct_total, "precision": counts.precision,
                               "recall": counts.recall}, run.output("metrics", "metrics.json"))
    run.finish()


@cli.command()
@common_options
@embeddings_option
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--cleaned", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Cleaned file restricting the dataset to its kept records.")
@click.option("--model", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--iterations", default=None, type=click.IntRange(min=0), help="Overrides train.iterations.")
@handle_errors
def train(**params):
    """Train the embedding head with the triplet hinge loss."""
    run = CommandRun("train", params)
    ds = run.load_dataset("dataset", params["dataset"], params["embeddings"])
    if params["cleaned"] is not None:
        run.manifest.inputs["cleaned"] = params["cleaned"]
        cleaned = run.cleaned.load_cleaned(params["cleaned"])
        cleaned.check_against(ds)
        ds = ds.restrict(cleaned.kept)
    model = run.load_model(params["model"], ds.dim)
    train_cfg = run.config.train
    if params["iterations"] is not None:
        train_cfg = replace(train_cfg, iterations=params["iterations"])
    with run.stage("train_head", iterations=train_cfg.iterations):
        result = TripletTrainer(run.logger.logger).train_head(ds, model, train_cfg)
    run.models.save(result.model, run.output("model", "model.json"))
    run.reports.save_loss_trace(result.trace, run.output("loss_trace", "loss_trace.csv"))
    run.finish()


@cli.command()
@common_options
@click.option("--validation", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Labeled validation dataset.")
@click.option("--model", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--target-precision", default=None, type=float, help="Overrides iterate.target_precision.")
@handle_errors
def calibrate(**params):
    """Find the largest threshold reaching the target precision."""
    run = CommandRun("calibrate", params)
    validation = run.load_dataset("validation", params["validation"])
    model = run.load_model(params["model"], validation.dim)
    iterate = run.config.iterate
    target = iterate.target_precision if params["target_precision"] is None else params["target_precision"]
    service = MatchGraphService(params["workers"], run.logger.logger)
    with run.stage("calibrate", target_precision=target):
        calibration = calibrate_threshold(model, validation, target, run.config.clean,
                                          iterate.sweep_points, service, run.logger.logger)
    run.reports.save_json({"threshold": calibration.threshold, "precision": calibration.precision,
                           "recall": calibration.recall, "target_precision": target},
                          run.output("calibration", "calibration.json"))
    run.reports.save_pr_curve(calibration.curve, run.output("curve", "calibration_curve.csv"))
    run.finish()


@cli.command()
@common_options
@embeddings_option
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--validation", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Labeled validation dataset; held-out labels of --dataset when omitted.")
@click.option("--model", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Base model of the first pass; identity model when omitted.")
@click.option("--max-iterations", default=None, type=click.IntRange(min=1),
              help="Overrides iterate.max_iterations.")
@handle_errors
def iterate(**params):
    """Run the iterative clean, train and re-clean loop."""
    run = CommandRun("iterate", params)
    config = run.config
    ds = run.load_dataset("dataset", params["dataset"], params["embeddings"])
    rng = np.random.default_rng(config.eval.seed)
    if params["validation"] is not None:
        validation = run.load_dataset("validation", params["validation"], params["embeddings"])
    else:
        ds, validation = _hold_out(ds, config.holdout_labels, rng)
        run.manifest.inputs["holdout_labels"] = ",".join(validation.labels)
    base_model = run.load_model(params["model"], ds.dim)
    cfg = config.iterate
    if params["max_iterations"] is not None:
        cfg = replace(cfg, max_iterations=params["max_iterations"])

    pairs = None
    if config.verify:
        pairs = make_pairs(validation, config.eval.n_pos, config.eval.n_neg, rng)
        with run.stage("verify_base"):
            report = verification_accuracy(pairs, base_model, validation, config.eval.folds, config.eval.seed)
        run.reports.save_json(report.to_dict(), run.output("base_verification", "base_verification.json"))

    def write_iteration(clean_run: CleanRun) -> None:
        prefix = f"iter_{clean_run.iteration}"
        entry = clean_run.to_dict()
        entry["cleaned_path"] = f"{prefix}/cleaned.jsonl"
        entry["loss_trace_path"] = f"{prefix}/loss_trace.csv"
        entry["model_path"] = f"{prefix}/model.json"
        entry["pr_curve_path"] = f"{prefix}/pr_curve.csv"
        run.cleaned.save_cleaned(clean_run.cleaned, run.output(f"{prefix}.cleaned", entry["cleaned_path"]))
        run.reports.save_loss_trace(clean_run.trace, run.output(f"{prefix}.loss_trace", entry["loss_trace_path"]))
        run.models.save(clean_run.model, run.output(f"{prefix}.model", entry["model_path"]))
        run.reports.save_pr_curve(clean_run.calibration.curve,
                                  run.output(f"{prefix}.pr_curve", entry["pr_curve_path"]))
        if clean_run.verification is not None:
            entry["verification_path"] = f"{prefix}/verification.json"
            run.reports.save_json(clean_run.verification.to_dict(),
                                  run.output(f"{prefix}.verification", entry["verification_path"]))
        run.manifest.iterations.append(entry)

    pipeline = CleaningPipeline(MatchGraphService(params["workers"], run.logger.logger),
                                TripletTrainer(run.logger.logger), run.logger.logger)
    try:
        with run.stage("iterate", max_iterations=cfg.max_iterations):
            pipeline.run(ds, base_model, validation, cfg, pairs=pairs, folds=config.eval.folds,
                         pair_seed=config.eval.seed, on_iteration=write_iteration)
    except PipelineAbortedException as e:
        run.logger.error(f"Pipeline aborted after {len(e.runs)} completed iteration(s)")
        run.finish(partial=True)
        raise
    run.finish()


def _hold_out(ds: WeakDataset, count: int, rng: np.random.Generator):
    """Move ``count`` seeded-random weak labels of ``ds`` into a validation set."""
    if count < 1 or count >= len(ds.labels):
        raise ConfigurationException(
            f"holdout_labels must lie in [1, {len(ds.labels) - 1}] without --validation, got {count}",
            setting="iterate.holdout_labels")
    chosen = rng.choice(len(ds.labels), size=count, replace=False)
    return holdout_split(ds, [ds.labels[i] for i in sorted(chosen)])


@cli.command("eval-pr")
@common_options
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Dataset with truth labels.")
@click.option("--model", default=None, type=click.Path(exists=True, dir_okay=False))
@handle_errors
def eval_pr(**params):
    """Precision and recall across a threshold sweep, as CSV."""
    run = CommandRun("eval-pr", params)
    ds = run.load_dataset("dataset", params["dataset"])
    model = run.load_model(params["model"], ds.dim)
    sweep = run.config.eval
    thresholds = np.linspace(sweep.sweep_min, sweep.sweep_max, sweep.sweep_points)
    service = MatchGraphService(params["workers"], run.logger.logger)
    with run.stage("pr_curve", points=sweep.sweep_points):
        curve = pr_curve(ds, model, run.config.clean, thresholds, service)
    run.reports.save_pr_curve(curve, run.output("pr_curve", "pr_curve.csv"))
    run.finish()


@cli.command("eval-verify")
@common_options
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Dataset with truth labels.")
@click.option("--model", default=None, type=click.Path(exists=True, dir_okay=False))
@handle_errors
def eval_verify(**params):
    """Cross-validated same/different verification accuracy."""
    run = CommandRun("eval-verify", params)
    ds = run.load_dataset("dataset", params["dataset"])
    model = run.load_model(params["model"], ds.dim)
    evaluation = run.config.eval
    pairs = make_pairs(ds, evaluation.n_pos, evaluation.n_neg, np.random.default_rng(evaluation.seed))
    with run.stage("verify", pairs=len(pairs)):
        report = verification_accuracy(pairs, model, ds, evaluation.folds, evaluation.seed)
    run.reports.save_json(report.to_dict(), run.output("verification", "verification.json"))
    run.finish()


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory of the re-run.")
@click.pass_context
@handle_errors
def replay(ctx: click.Context, manifest_path: str, out: str):
    """Re-run the command recorded in a manifest."""
    manifest = FileReportRepository().load(manifest_path)
    command = cli.commands.get(manifest.command)
    if command is None or command is replay:
        raise ConfigurationException(f"manifest records unknown command '{manifest.command}'",
                                     config_file=manifest_path, setting="command")
    logger.info(f"Replaying '{manifest.command}' from {manifest_path}")
    ctx.invoke(command, out=out, **manifest.arguments)


def main() -> None:
    cli()
