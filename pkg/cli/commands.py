"""
Command-line entry point: gen, train, eval, trace and gradcheck.

Exit codes: 0 success, 1 usage/configuration/data error, 2 failed
numerical check.
"""

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from evaluation.performance_monitor import RunMonitor, in_phase
from evaluation.retrieval import evaluate, write_embeddings_csv
from gltr_model.checkpoint import load_checkpoint
from gltr_model.config import ModelConfig
from gltr_model.gradcheck import grad_check, randomize_zero_init
from gltr_model.network import GltrNetwork
from shared import rng as rng_streams
from shared.exceptions import (
    ConfigurationError,
    GltrError,
    NumericalCheckError,
    create_user_friendly_error_message,
)
from shared.logging_utils import configure_logging
from synth_data.feature_io import read_features, write_features
from synth_data.generator import generate_benchmark
from trainer.loop import train

from .config import ConfigManager, ExperimentConfig
from .pipeline import embed_sequences, model_for_dataset, trace_sequence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NUMERICAL = 2

CHECKPOINT_NAME = "checkpoint.gltr"
TRAIN_LOG_NAME = "train_log.csv"
REPORT_NAME = "eval_report.json"
GRADCHECK_NAME = "gradcheck.json"
MANIFEST_NAME = "manifest.json"
SPLITS = ("train", "query", "gallery")


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the configuration-error code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _global_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=argparse.SUPPRESS,
                        help="Experiment configuration (JSON or YAML)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="Master seed")
    common.add_argument("--out", type=str, default=argparse.SUPPRESS, help="Output directory")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="Worker thread cap")
    common.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help="Debug logging")
    common.add_argument("--log-file", type=str, default=argparse.SUPPRESS,
                        help="Also write a plain-text log to this file inside the output directory")
    common.add_argument("--run-metrics", type=str, default=argparse.SUPPRESS,
                        help="Write wall time, memory and phase timings to this JSON file inside the output directory")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per operation."""
    common = _global_options()
    parser = CliArgumentParser(
        prog="gltr",
        description="Temporal aggregation of frame features for video re-identification",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)

    sub.add_parser("gen", parents=[common], help="Generate synthetic train/query/gallery feature files")

    p_train = sub.add_parser("train", parents=[common], help="Train a network on the training features")
    p_train.add_argument("--no-dtp", action="store_true", help="Disable the temporal pyramid")
    p_train.add_argument("--no-tsa", action="store_true", help="Disable temporal self-attention")
    p_train.add_argument("--resume", action="store_true", help="Continue from <out>/checkpoint.gltr")

    p_eval = sub.add_parser("eval", parents=[common], help="Rank query against gallery and report CMC/mAP")
    p_eval.add_argument("--checkpoint", type=str, help="Checkpoint (default <out>/checkpoint.gltr)")
    p_eval.add_argument("--query", type=str, help="Query feature file")
    p_eval.add_argument("--gallery", type=str, help="Gallery feature file")
    p_eval.add_argument("--embeddings-out", type=str, help="CSV receiving every embedding")
    p_eval.add_argument("--all-cameras", action="store_true", help="Keep same-camera gallery matches")

    p_trace = sub.add_parser("trace", parents=[common], help="Export PCA rows and the attention mask of one tracklet")
    p_trace.add_argument("--checkpoint", type=str, help="Checkpoint (default <out>/checkpoint.gltr)")
    p_trace.add_argument("--features", type=str, help="Feature file (default: query features)")
    p_trace.add_argument("--index", type=int, default=0, help="Record index inside the feature file")
    p_trace.add_argument("--trace-dir", type=str, help="Directory for the CSV bundle (default <out>/trace)")

    p_check = sub.add_parser("gradcheck", parents=[common], help="Verify analytic gradients on a tiny network")
    p_check.add_argument("--frame-dim", type=int, default=8, help="Frame dimension d")
    p_check.add_argument("--length", type=int, default=12, help="Sequence length T")
    p_check.add_argument("--identities", type=int, default=5, help="Number of classes")
    p_check.add_argument("--step", type=float, default=1e-4, help="Central-difference step h")
    p_check.add_argument("--tol", type=float, default=1e-5, help="Relative-error tolerance")
    return parser


def load_experiment(args: argparse.Namespace, extra: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Configuration file (if any) plus command-line overrides."""
    manager = ConfigManager(getattr(args, "config", None))
    overrides: Dict[str, Any] = {
        "seed": getattr(args, "seed", None),
        "output_dir": getattr(args, "out", None),
        "threads": getattr(args, "threads", None),
    }
    overrides.update(extra or {})
    return manager.update_config(**overrides)


def save_run_config(config: ExperimentConfig) -> Path:
    path = config.output_path / "config.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.model_dump(mode="json"), indent=2))
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_gen(config: ExperimentConfig, console: Console, monitor: Optional[RunMonitor] = None) -> int:
    """Generate the benchmark and write one feature file per split plus a manifest."""
    with in_phase(monitor, "generate"):
        benchmark = generate_benchmark(config.data, config.seed, config.threads)
    files: Dict[str, Any] = {}
    with in_phase(monitor, "write"):
        for split in SPLITS:
            records = getattr(benchmark, split)
            path = write_features(config.feature_path(split), records, config.data.frame_dim)
            files[split] = {"path": str(path), "sequences": len(records), "sha256": _sha256(path)}

    manifest = {
        "seed": config.seed,
        "frame_dim": config.data.frame_dim,
        "num_identities": config.data.num_identities,
        "cameras": config.data.cameras,
        "files": files,
    }
    config.output_path.mkdir(parents=True, exist_ok=True)
    (config.output_path / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2))
    save_run_config(config)

    table = Table(title="Generated feature files")
    table.add_column("Split", style="cyan")
    table.add_column("Sequences", style="magenta")
    table.add_column("Path")
    for split, info in files.items():
        table.add_row(split, str(info["sequences"]), info["path"])
    console.print(table)
    return EXIT_OK


def _training_records(config: ExperimentConfig) -> List:
    path = config.feature_path("train")
    if not path.exists() and config.train_features is None:
        logger.info(f"{path} not found; generating the benchmark first")
        benchmark = generate_benchmark(config.data, config.seed, config.threads)
        for split in SPLITS:
            write_features(config.feature_path(split), getattr(benchmark, split), config.data.frame_dim)
    return read_features(path)


def cmd_train(config: ExperimentConfig, console: Console, resume: bool = False,
              monitor: Optional[RunMonitor] = None) -> int:
    """Train on the training split and write the checkpoint and per-epoch CSV log."""
    with in_phase(monitor, "load"):
        records = _training_records(config)
    if not records:
        raise ConfigurationError("training feature file holds no sequences",
                                 config_path=str(config.feature_path("train")))
    checkpoint_path = config.output_path / CHECKPOINT_NAME
    log_path = config.output_path / TRAIN_LOG_NAME

    start_epoch = 0
    if resume:
        if not checkpoint_path.exists():
            raise ConfigurationError("--resume given but no checkpoint exists", config_path=str(checkpoint_path))
        net, start_epoch = load_checkpoint(checkpoint_path)
        if net.config.variant_name != config.model.variant_name:
            logger.warning(f"checkpoint variant {net.config.variant_name} differs from configured "
                           f"{config.model.variant_name}; continuing with the checkpoint")
        config.model = net.config
        logger.info(f"Resuming from epoch {start_epoch}")
    else:
        config.model = model_for_dataset(config.model, records, config.seed)
        net = GltrNetwork.build(config.model)
    config.train = config.train.model_copy(update={"seed": config.seed})
    save_run_config(config)

    with in_phase(monitor, "train"):
        log = train(records, net, config.train, checkpoint_path=checkpoint_path, log_path=log_path,
                    start_epoch=start_epoch)

    last = log.entries[-1] if log.entries else None
    table = Table(title=f"Training ({net.config.variant_name})")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="magenta")
    table.add_row("Epochs", str(config.train.total_epochs))
    table.add_row("Final loss", f"{last.mean_loss:.4f}" if last else "-")
    table.add_row("Train accuracy", f"{last.train_accuracy:.3f}" if last else "-")
    table.add_row("Checkpoint", str(checkpoint_path))
    console.print(table)
    return EXIT_OK


def _checkpoint_arg(config: ExperimentConfig, checkpoint: Optional[str]) -> Path:
    return Path(checkpoint) if checkpoint else config.output_path / CHECKPOINT_NAME


def cmd_eval(config: ExperimentConfig, console: Console, checkpoint: Optional[str] = None,
             query: Optional[str] = None, gallery: Optional[str] = None,
             embeddings_out: Optional[str] = None, monitor: Optional[RunMonitor] = None) -> int:
    """Embed query and gallery with a checkpoint and write the JSON report."""
    with in_phase(monitor, "load"):
        net, _ = load_checkpoint(_checkpoint_arg(config, checkpoint))
        query_records = read_features(query or config.feature_path("query"), expected_dim=net.frame_dim)
        gallery_records = read_features(gallery or config.feature_path("gallery"), expected_dim=net.frame_dim)

    with in_phase(monitor, "embed"):
        query_embeddings = embed_sequences(query_records, net, config.threads)
        gallery_embeddings = embed_sequences(gallery_records, net, config.threads)
    with in_phase(monitor, "rank"):
        report = evaluate(query_embeddings, gallery_embeddings, config.protocol)
    report_path = report.save_json(config.output_path / REPORT_NAME, config.protocol.report_ranks)
    save_run_config(config)

    if embeddings_out:
        write_embeddings_csv(embeddings_out, {"query": query_embeddings, "gallery": gallery_embeddings})
        logger.info(f"Wrote embeddings to {embeddings_out}")

    table = Table(title=f"Evaluation ({net.config.variant_name})")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="magenta")
    for k in config.protocol.report_ranks:
        table.add_row(f"rank{k}", f"{report.rank(k):.4f}")
    table.add_row("mAP", f"{report.mean_ap:.4f}")
    table.add_row("Queries", f"{report.num_queries} (skipped {report.skipped_queries})")
    console.print(table)
    console.print(f"Report: {report_path}")
    return EXIT_OK


def _write_row(path: Path, values: np.ndarray) -> None:
    pd.DataFrame(np.atleast_2d(values)).to_csv(path, index=False, header=False)


def cmd_trace(config: ExperimentConfig, console: Console, checkpoint: Optional[str] = None,
              features: Optional[str] = None, index: int = 0, trace_dir: Optional[str] = None) -> int:
    """Write PCA rows of the frame, pyramid and attention stages plus the mask of one record."""
    net, _ = load_checkpoint(_checkpoint_arg(config, checkpoint))
    records = read_features(features or config.feature_path("query"), expected_dim=net.frame_dim)
    if not 0 <= index < len(records):
        raise ConfigurationError(f"record index {index} outside [0, {len(records)})")
    bundle = trace_sequence(records[index].features, net)

    out_dir = Path(trace_dir) if trace_dir else config.output_path / "trace"
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_row(out_dir / "pca_frames.csv", bundle.pca_frames)
    _write_row(out_dir / "pca_dtp.csv", bundle.pca_dtp)
    _write_row(out_dir / "pca_tsa.csv", bundle.pca_tsa)
    if bundle.mask is not None:
        _write_row(out_dir / "mask.csv", bundle.mask)
        _write_row(out_dir / "mask_weights.csv", bundle.mask_weights)
    else:
        logger.warning("network has no attention stage; mask files not written")
    console.print(f"Trace of record {index} (person {records[index].person_id}) written to {out_dir}")
    return EXIT_OK


def cmd_gradcheck(config: ExperimentConfig, console: Console, frame_dim: int = 8, length: int = 12,
                  identities: int = 5, step: float = 1e-4, tol: float = 1e-5) -> int:
    """Central-difference check of every parameter group on a tiny random network."""
    data = config.model.model_dump()
    data.update(frame_dim=frame_dim, num_identities=identities, init_seed=config.seed)
    net = GltrNetwork.build(ModelConfig(**data))
    rng = rng_streams.stream(config.seed, rng_streams.GRADCHECK)
    randomize_zero_init(net, rng)
    f = rng.normal(0.0, 0.5, size=(frame_dim, length))
    label = int(rng.integers(0, identities))

    report = grad_check(net, f, label, h=step, tol=tol)
    config.output_path.mkdir(parents=True, exist_ok=True)
    (config.output_path / GRADCHECK_NAME).write_text(report.model_dump_json(indent=2))

    table = Table(title="Gradient check")
    table.add_column("Group", style="cyan")
    table.add_column("Max rel. error", style="magenta")
    table.add_column("Status")
    for group in report.groups:
        table.add_row(group.name, f"{group.max_relative_error:.2e}",
                      "[green]ok[/green]" if group.passed else "[red]FAIL[/red]")
    console.print(table)

    if not report.passed:
        raise NumericalCheckError("analytic gradients disagree with central differences",
                                  failing_groups=report.failing, tolerance=tol)
    console.print(Panel.fit("All gradient groups within tolerance", style="bold green"))
    return EXIT_OK


def _dispatch(args: argparse.Namespace, config: ExperimentConfig, console: Console, monitor: RunMonitor) -> int:
    if args.command == "gen":
        return cmd_gen(config, console, monitor)
    if args.command == "train":
        return cmd_train(config, console, resume=args.resume, monitor=monitor)
    if args.command == "eval":
        return cmd_eval(config, console, args.checkpoint, args.query, args.gallery, args.embeddings_out, monitor)
    if args.command == "trace":
        return cmd_trace(config, console, args.checkpoint, args.features, args.index, args.trace_dir)
    return cmd_gradcheck(config, console, args.frame_dim, args.length, args.identities, args.step, args.tol)


def _command_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if args.command == "train":
        if args.no_dtp:
            overrides["model.use_dtp"] = False
        if args.no_tsa:
            overrides["model.use_tsa"] = False
    if args.command == "eval" and args.all_cameras:
        overrides["protocol.cross_camera_only"] = False
    return overrides


def main(argv: Optional[Sequence[str]] = None, console: Optional[Console] = None) -> int:
    """
    Run one command and return its exit code.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])
        console: Console for tables and messages
    """
    console = console or Console()
    args = build_parser().parse_args(argv)
    level = "DEBUG" if getattr(args, "verbose", False) else "INFO"
    configure_logging(level)

    try:
        config = load_experiment(args, _command_overrides(args))
        if getattr(args, "log_file", None):
            configure_logging(level, log_file=config.output_path / args.log_file)
        with RunMonitor(command=args.command, sampling_interval=0.5) as monitor:
            code = _dispatch(args, config, console, monitor)
        if getattr(args, "run_metrics", None):
            monitor.save(config.output_path / args.run_metrics)
        else:
            monitor.log_summary()
        return code
    except NumericalCheckError as e:
        console.print(create_user_friendly_error_message(e), style="bold red", markup=False)
        return EXIT_NUMERICAL
    except GltrError as e:
        console.print(create_user_friendly_error_message(e), style="bold red", markup=False)
        return EXIT_ERROR
