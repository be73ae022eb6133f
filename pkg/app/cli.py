"""
Command-line entry point.

    python -m app generate   --experiment ms-wave --seed 7 --out data/
    python -m app train      --experiment e1 --model msmp-pde --config small.cfg
    python -m app evaluate   --checkpoint runs/checkpoint.msmc --data data/
    python -m app plot       --checkpoint runs/checkpoint.msmc --data data/ --sample 3
    python -m app grad-check --model msmp-pde --tiny
    python -m app run-matrix --experiments ms-wave --folds 3
    python -m app param-count

Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.
"""
import argparse
import configparser
import json
import logging
import sys
from pathlib import Path

import torch
from pydantic import BaseModel, ValidationError

from app.config import configure_logging, get_settings
from app.data.generate import generate_experiment
from app.data.storage import dataset_path, read_dataset
from app.errors import ConfigurationError, MsmpError
from app.evaluation.heatmaps import emit_comparison, emit_heatmaps
from app.evaluation.matrix import directional_check, run_matrix
from app.evaluation.metrics import format_results_table
from app.evaluation.rollout import evaluate_model, unroll
from app.graph import build_graph
from app.models import (
    MODEL_VARIANTS,
    ArchitectureOverrides,
    DatasetSizes,
    ExperimentId,
    ExperimentSpec,
    GridOverrides,
    TrainConfig,
)
from app.network.checkpoint import Domain, read_checkpoint
from app.network.solver import (
    TINY_K,
    TINY_N_HID,
    TINY_N_LAYERS,
    TINY_N_X,
    build_model,
    format_parameter_table,
    parameter_table,
    tiny_model_config,
)
from app.nn.gradcheck import COORDS_PER_TENSOR, grad_check
from app.training.trainer import rmse_loss, train_model

logger = logging.getLogger(__name__)

GRAD_TOLERANCE = 1e-4
TINY_N_T = 40

CONFIG_SECTIONS = {
    "experiment": None,
    "sizes": "sizes",
    "grid": "grid",
    "train": "train",
    "model": "architecture",
}
TUPLE_KEYS = {"betas", "decoder_kernels"}


class UsageError(Exception):
    """Bad flags or arguments."""


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ============================================================================
# Configuration
# ============================================================================

def _parse_value(key: str, value: str):
    if key in TUPLE_KEYS:
        return tuple(v.strip() for v in value.split(",") if v.strip())
    return value


def load_spec(path: str | Path) -> ExperimentSpec:
    """
    Read an experiment config file.

    ``.json`` files hold the ExperimentSpec shape directly; anything else is
    read as sectioned ``key = value`` text with sections [experiment],
    [sizes], [grid], [train] and [model].

    Raises:
        FileNotFoundError: the file does not exist
        ConfigurationError: unknown section or unparsable file
        ValidationError: unknown keys or invalid values
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    if path.suffix == ".json":
        return ExperimentSpec.model_validate(json.loads(path.read_text()))

    parser = configparser.ConfigParser()
    # keys are case-sensitive (K)
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as e:
        raise ConfigurationError(f"{path}: {e.message.splitlines()[0]}") from e

    data = {}
    for section in parser.sections():
        if section not in CONFIG_SECTIONS:
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        values = {k: _parse_value(k, v) for k, v in parser.items(section)}
        target = CONFIG_SECTIONS[section]
        if target is None:
            data.update(values)
        else:
            data[target] = values
    return ExperimentSpec.model_validate(data)


def _default(model: type[BaseModel], name: str):
    return model.model_fields[name].default


def _given(args: argparse.Namespace, names: list[str]) -> dict:
    return {n: getattr(args, n) for n in names if getattr(args, n, None) is not None}


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    """Config file values overridden by explicit flags."""
    spec = load_spec(args.config) if args.config else ExperimentSpec(out=get_settings().output_dir)
    data = spec.model_dump()

    data.update(_given(args, ["experiment", "model", "seed", "out"]))
    experiment = ExperimentId.from_slug(data["experiment"])

    size_flags = _given(args, list(DatasetSizes.model_fields))
    if size_flags:
        base = data["sizes"] or DatasetSizes.defaults_for(experiment).model_dump()
        data["sizes"] = {**base, **size_flags}

    data["grid"].update(_given(args, list(GridOverrides.model_fields)))
    data["train"].update(_given(args, [n for n in TrainConfig.model_fields if n != "seed"]))
    data["architecture"].update(_given(args, list(ArchitectureOverrides.model_fields)))
    if args.seed is not None:
        data["train"]["seed"] = args.seed

    if args.tiny:
        data["architecture"].update(n_hid=TINY_N_HID, n_layers=TINY_N_LAYERS, K=TINY_K)
        data["grid"].update(n_x=TINY_N_X, n_t=data["grid"].get("n_t") or TINY_N_T)
    return ExperimentSpec.model_validate(data)


def run_dtype(args: argparse.Namespace) -> torch.dtype:
    return torch.float64 if args.tiny else torch.float32


# ============================================================================
# Subcommands
# ============================================================================

def cmd_generate(args: argparse.Namespace) -> int:
    spec = resolve_spec(args)
    out = Path(args.out) if args.out else get_settings().data_dir
    paths = generate_experiment(
        spec.experiment_id,
        spec.seed,
        spec.dataset_sizes(),
        out,
        fold=args.fold,
        threads=args.threads,
        **spec.grid.solver_grid(),
    )
    for split, path in paths.items():
        print(f"{split}: {path}")
    return 0


def _split_path(data: str | Path, experiment: ExperimentId, split: str) -> Path:
    data = Path(data)
    path = data if data.is_file() else dataset_path(data, experiment, split)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    return path


def cmd_train(args: argparse.Namespace) -> int:
    spec = resolve_spec(args)
    data = Path(args.data) if args.data else get_settings().data_dir
    experiment = spec.experiment_id
    train = read_dataset(_split_path(data, experiment, "train"))
    valid = read_dataset(_split_path(data, experiment, "valid"))
    domain = Domain(experiment, train[0].L, train[0].T, train[0].n_t, train[0].n_x)

    _, result = train_model(
        spec.model_config_for(), train, valid, spec.train, domain, spec.out, dtype=run_dtype(args)
    )
    print(f"checkpoint: {result.checkpoint}")
    print(f"best epoch: {result.best_epoch + 1}, valid relative error: {result.best_valid_error:.6f}")
    return 0


def _load(args: argparse.Namespace, path: str | Path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    checkpoint = read_checkpoint(path)
    return checkpoint, checkpoint.build(run_dtype(args))


def cmd_evaluate(args: argparse.Namespace) -> int:
    checkpoint, model = _load(args, args.checkpoint)
    data = Path(args.data) if args.data else get_settings().data_dir
    test = read_dataset(_split_path(data, checkpoint.domain.experiment, args.split))

    result = evaluate_model(model, test, checkpoint.graph(), checkpoint.config.K)
    out = Path(args.out) if args.out else get_settings().output_dir
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "model": checkpoint.config.variant,
        "experiment": checkpoint.domain.experiment.slug,
        "split": args.split,
        "relative_error": result.relative_error,
        "failures": result.failures,
        "per_sample": result.per_sample.tolist(),
    }
    with open(out / "evaluation.json", "w") as f:
        json.dump(report, f, indent=2)
    print(f"relative error: {result.relative_error:.6f} ({result.failures} failed rollouts)")
    return 2 if result.failed else 0


def cmd_plot(args: argparse.Namespace) -> int:
    checkpoint, model = _load(args, args.checkpoint)
    data = Path(args.data) if args.data else get_settings().data_dir
    test = read_dataset(_split_path(data, checkpoint.domain.experiment, args.split))
    if not 0 <= args.sample < len(test):
        raise UsageError(f"sample {args.sample} out of range (0..{len(test) - 1})")
    truth = test[args.sample]
    K = checkpoint.config.K

    out = Path(args.out) if args.out else get_settings().output_dir
    pred = unroll(model, truth, checkpoint.graph(), K)
    paths = emit_heatmaps(pred, truth, out, K, stem=f"{checkpoint.config.variant}_sample{args.sample}")

    if args.compare:
        predictions = {checkpoint.config.variant: pred}
        for other_path in args.compare:
            other, other_model = _load(args, other_path)
            predictions[other.config.variant] = unroll(other_model, truth, other.graph(), other.config.K)
        paths.append(emit_comparison(truth, predictions, out / f"comparison_sample{args.sample}.png", K))

    for path in paths:
        print(path)
    return 0


def _grad_check_variant(variant: str, experiment: ExperimentId, seed: int, per_tensor: int) -> float:
    config = tiny_model_config(variant, experiment)
    model, store = build_model(config, seed=seed, dtype=torch.float64)
    graph = build_graph(TINY_N_X, 16.0, config.neighbors)

    generator = torch.Generator().manual_seed(seed)
    shape = (2, config.K, TINY_N_X, config.n_ch)
    window = torch.randn(shape, generator=generator, dtype=torch.float64)
    target = torch.randn(shape, generator=generator, dtype=torch.float64)
    eta = torch.rand((2, config.d_eta), generator=generator, dtype=torch.float64)
    t_k = torch.tensor([0.3, 1.1], dtype=torch.float64)

    def loss_fn():
        return rmse_loss(model(window, graph, eta, t_k, 0.016), target)

    return grad_check(loss_fn, store, per_tensor=per_tensor, seed=seed)


def cmd_grad_check(args: argparse.Namespace) -> int:
    if not args.tiny:
        logger.warning("grad-check always runs on the tiny float64 profile")
    experiment = ExperimentId.from_slug(args.experiment or "e1")
    variants = list(MODEL_VARIANTS) if args.model == "all" else [args.model or "msmp-pde"]
    for variant in variants:
        if variant not in MODEL_VARIANTS:
            raise UsageError(f"unknown model '{variant}'")

    worst = 0.0
    for variant in variants:
        error = _grad_check_variant(variant, experiment, args.seed or 0, args.coords)
        worst = max(worst, error)
        print(f"{variant}: max relative error {error:.3e}")
    return 0 if worst < GRAD_TOLERANCE else 2


def cmd_run_matrix(args: argparse.Namespace) -> int:
    spec = resolve_spec(args)
    experiments = [ExperimentId.from_slug(e) for e in args.experiments]
    models = args.models
    for model in models:
        if model not in MODEL_VARIANTS:
            raise UsageError(f"unknown model '{model}'")

    results = run_matrix(
        experiments,
        models,
        folds=args.folds,
        train_config=spec.train,
        sizes=spec.sizes,
        architecture=spec.architecture,
        data_dir=Path(args.data) if args.data else get_settings().data_dir,
        out_dir=spec.out,
        master_seed=spec.seed,
        threads=args.threads,
        grid=spec.grid.solver_grid(),
    )
    print(format_results_table(results))
    if "ms-wave" in args.experiments and {"mp-pde", "gated", "msmp-pde"} <= set(models):
        check = directional_check(results)
        print(f"directional check: {'passed' if check.passed else 'failed'} "
              f"(msmp-pde/mp-pde={check.msmp_ratio:.3f}, gated/mp-pde={check.gated_ratio:.3f})")
    return 0


def cmd_param_count(args: argparse.Namespace) -> int:
    table = parameter_table(
        n_hid=args.n_hid or 128,
        n_layers=args.n_layers or 6,
        K=args.K or 25,
    )
    print(format_parameter_table(table))
    return 0


# ============================================================================
# Parser
# ============================================================================

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="master seed (default: 0)")
    parser.add_argument("--out", help="output directory (default: MSMP_OUTPUT_DIR or MSMP_DATA_DIR)")
    parser.add_argument("--threads", type=int, default=get_settings().threads, help="worker threads (default: %(default)s)")
    parser.add_argument("--config", help="experiment config file (.cfg/.ini or .json)")
    parser.add_argument("--tiny", action="store_true", help=f"tiny float64 profile (n_x={TINY_N_X}, K={TINY_K}, n_hid={TINY_N_HID}, {TINY_N_LAYERS} layers)")
    parser.add_argument("--log-level", help="logging level (default: MSMP_LOG_LEVEL or INFO)")


def _names(parser: argparse.ArgumentParser, model: bool = True) -> None:
    parser.add_argument("--experiment", help="e1 | e2 | ms-wave (default: e1)")
    if model:
        parser.add_argument("--model", help=f"{' | '.join(MODEL_VARIANTS)} (default: msmp-pde)")


def _sizes(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-train", dest="n_train", type=int, help="train trajectories (default: 2048, 1024 for ms-wave)")
    parser.add_argument("--n-valid", dest="n_valid", type=int, help="validation trajectories (default: 128)")
    parser.add_argument("--n-test", dest="n_test", type=int, help="test trajectories (default: 128)")
    parser.add_argument("--n-t", dest="n_t", type=int, help="stored time steps (default: 250)")
    parser.add_argument("--n-x", dest="n_x", type=int, help="stored grid points (default: 100)")


def _training(parser: argparse.ArgumentParser) -> None:
    flags = [
        ("--epochs", "epochs", int),
        ("--batch-size", "batch_size", int),
        ("--lr", "lr", float),
        ("--lr-decay", "lr_decay", float),
        ("--lr-step", "lr_step", int),
        ("--max-unroll", "max_unroll", int),
        ("--weight-decay", "weight_decay", float),
        ("--batches-per-epoch", "batches_per_epoch", int),
    ]
    for flag, name, kind in flags:
        default = _default(TrainConfig, name)
        parser.add_argument(flag, dest=name, type=kind, help=f"{TrainConfig.model_fields[name].description or name.replace('_', ' ')} (default: {default})")

    parser.add_argument("--n-hid", dest="n_hid", type=int, help="hidden width (default: 128)")
    parser.add_argument("--n-layers", dest="n_layers", type=int, help="processor layers (default: 6)")
    parser.add_argument("-K", "--K", dest="K", type=int, help="time window length (default: 25)")
    parser.add_argument("--neighbors", type=int, help="graph neighbours per side (default: 3)")
    parser.add_argument("--lem-dt", dest="lem_dt", type=float, help="LEM time step (default: 1.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="msmp", description="Multi-scale message-passing neural PDE solver")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    p = sub.add_parser("generate", help="generate train/valid/test datasets")
    _common(p)
    _names(p, model=False)
    _sizes(p)
    p.add_argument("--fold", type=int, default=0, help="cross-validation fold (default: %(default)s)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train one model")
    _common(p)
    _names(p)
    _training(p)
    p.add_argument("--data", help="dataset directory or train file (default: MSMP_DATA_DIR)")
    p.set_defaults(func=cmd_train)

    for name, func, help_text in (
        ("evaluate", cmd_evaluate, "relative error of a checkpoint on a split"),
        ("plot", cmd_plot, "heatmaps of one rollout"),
    ):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.add_argument("--checkpoint", required=True, help="checkpoint file")
        p.add_argument("--data", help="dataset directory or file (default: MSMP_DATA_DIR)")
        p.add_argument("--split", default="test", choices=["train", "valid", "test"], help="split (default: %(default)s)")
        if name == "plot":
            p.add_argument("--sample", type=int, default=0, help="sample index (default: %(default)s)")
            p.add_argument("--compare", nargs="*", default=[], help="further checkpoints for a side-by-side figure")
        p.set_defaults(func=func)

    p = sub.add_parser("grad-check", help="reverse-mode vs finite-difference gradients")
    _common(p)
    _names(p)
    p.add_argument("--coords", type=int, default=COORDS_PER_TENSOR, help="coordinates per weight tensor (default: %(default)s)")
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("run-matrix", help="train and evaluate the ablation matrix")
    _common(p)
    _sizes(p)
    _training(p)
    p.add_argument("--experiments", nargs="+", default=[e.slug for e in ExperimentId], help="experiments (default: all)")
    p.add_argument("--models", nargs="+", default=list(MODEL_VARIANTS), help="models (default: all six)")
    p.add_argument("--folds", type=int, default=5, help="folds per cell (default: %(default)s)")
    p.add_argument("--data", help="dataset root (default: MSMP_DATA_DIR)")
    p.set_defaults(func=cmd_run_matrix, experiment=None, model=None)

    p = sub.add_parser("param-count", help="parameter counts of every variant")
    _common(p)
    p.add_argument("--n-hid", dest="n_hid", type=int, help="hidden width (default: 128)")
    p.add_argument("--n-layers", dest="n_layers", type=int, help="processor layers (default: 6)")
    p.add_argument("-K", "--K", dest="K", type=int, help="time window length (default: 25)")
    p.set_defaults(func=cmd_param_count)

    return parser


def _one_line(error: Exception) -> str:
    if isinstance(error, ValidationError):
        first = error.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        return f"{where}: {first['msg']}" if where else first["msg"]
    return str(error).splitlines()[0] if str(error) else type(error).__name__


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    configure_logging(args.log_level)
    torch.set_num_threads(max(1, args.threads))
    try:
        return args.func(args)
    except (UsageError, ValidationError, ValueError, FileNotFoundError) as e:
        print(f"error: {_one_line(e)}", file=sys.stderr)
        return 1
    except (MsmpError, OSError, RuntimeError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {_one_line(e)}", file=sys.stderr)
        return 2
