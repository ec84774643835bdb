"""
Command-line interface.

    stgt train      --data DIR --out CKPT
    stgt eval       --ckpt CKPT --data DIR [--baseline linear] [--folds FOLDS.json]
    stgt predict    --ckpt CKPT --data FILE --out CSV [--svg FILE]
    stgt synth      --kind meeting --out FILE
    stgt gradcheck  [--seed N] [--corrupt]

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
``STGT_DATA_DIR`` (environment or .env) is the default for --data.
"""

import argparse
import csv
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from src import __version__
from src.core.checkpoint import load_checkpoint, save_checkpoint
from src.core.errors import (
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    CheckpointError,
    DataError,
    TrajectoryError,
    UsageError,
)
from src.core.evaluator import PREDICTORS, evaluate, leave_one_out, make_predictor
from src.core.gradient_suite import run_gradient_suite, scaled_gradient, suite_summary
from src.core.metrics import COLLISION_THRESHOLD
from src.core.run_manifest import finish_manifest, start_manifest, stdout_anchor
from src.core.trainer import train
from src.models.config import ModelConfig, TrainConfig, load_run_config
from src.models.trajectory import Scene
from src.tools.data_collection.synthetic import SCENARIO_KINDS, ScenarioParams, synth_scenario
from src.tools.data_collection.trajectory_loader import (
    load_scene_dir,
    parse_dataset,
    scene_files,
    serialize_scene,
)
from src.tools.processing.windowing import make_sequences
from src.utils.json_loader import JSONLoader
from src.utils.logger import setup_logger

logger = logging.getLogger(__name__)

DATA_DIR_ENV = "STGT_DATA_DIR"
PREDICTION_COLUMNS = ["scene", "ped_id", "step", "x_pred", "y_pred"]


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ========================================================================
# Helpers
# ========================================================================

def _data_dir(value: Optional[str]) -> Path:
    value = value or os.environ.get(DATA_DIR_ENV)
    if not value:
        raise UsageError(f"--data is required (or set {DATA_DIR_ENV})")
    return Path(value)


def load_folds(path: Path, data_dir: Path) -> Dict[str, List[Scene]]:
    """
    Fold file layout: {"folds": {"<name>": ["<scene file stem or path relative to data dir>", ...]}}

    Returns:
        fold name -> scenes, in file order
    """
    layout = JSONLoader.load(Path(path))
    folds = layout.get("folds")
    if not isinstance(folds, dict) or not folds:
        raise UsageError(f"{path}: expected a non-empty 'folds' mapping")
    by_stem = {p.stem: p for p in scene_files(data_dir)}
    loaded: Dict[str, List[Scene]] = {}
    for name, entries in folds.items():
        scenes: List[Scene] = []
        for entry in entries:
            target = data_dir / entry
            if not target.exists():
                if entry not in by_stem:
                    raise DataError(f"Fold {name}: no scene file '{entry}' under {data_dir}")
                target = by_stem[entry]
            scenes.extend(load_scene_dir(target))
        loaded[name] = scenes
    return loaded


def _input_files(data: Path) -> List[Path]:
    return scene_files(data) if data.exists() else []


def _train_config(args, base: TrainConfig) -> TrainConfig:
    overrides = {
        "epochs": args.epochs,
        "batch_size": args.batch,
        "lr": args.lr,
        "t_obs": args.obs,
        "t_pred": args.pred,
        "seed": args.seed,
        "lambda_recon": args.lambda_recon,
        "teacher_forcing": args.teacher_forcing,
    }
    values = base.model_dump()
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


# ========================================================================
# Commands
# ========================================================================

def cmd_train(args) -> int:
    base_model, base_train = ModelConfig(), TrainConfig()
    if args.config:
        loaded = load_run_config(Path(args.config))
        base_model, base_train = loaded["model"], loaded["training"]
    config = _train_config(args, base_train)
    data_dir = _data_dir(args.data)

    if args.folds:
        folds = load_folds(Path(args.folds), data_dir)
        if args.holdout and args.holdout not in folds:
            raise UsageError(f"Unknown holdout fold '{args.holdout}', expected one of {', '.join(folds)}")
        scenes = [s for name, group in folds.items() if name != args.holdout for s in group]
    else:
        if args.holdout:
            raise UsageError("--holdout needs --folds")
        scenes = load_scene_dir(data_dir)

    out = Path(args.out)
    manifest = start_manifest("train", {"model": base_model.model_dump(), "training": config.model_dump()},
                              config.seed, _input_files(data_dir) + ([Path(args.config)] if args.config else []))
    result = train(config, scenes, base_model)
    save_checkpoint(out, result.params, base_model, config)
    loss_path = _write_text(out.with_name(out.name + ".loss.csv"), result.loss_csv())
    finish_manifest(manifest, out, [out, loss_path])
    logger.info(f"Final mean loss {result.loss_curve[-1]:.6f} after {config.epochs} epochs")
    return EXIT_OK


def _emit_report(report, prefix: Optional[Path], suffix: str = "") -> List[Path]:
    if prefix is None:
        sys.stdout.write(report.to_json() + "\n")
        return []
    base = prefix.with_name(prefix.name + suffix)
    return [
        _write_text(base.with_name(base.name + ".json"), report.to_json() + "\n"),
        _write_text(base.with_name(base.name + ".csv"), report.to_csv()),
    ]


def cmd_eval(args) -> int:
    predictor = args.baseline
    params, model_config = None, ModelConfig()
    inputs: List[Path] = []
    if args.ckpt:
        checkpoint = load_checkpoint(args.ckpt)
        params, model_config, config = checkpoint.params, checkpoint.model_config, checkpoint.train_config
        inputs.append(Path(args.ckpt))
        if args.obs is not None and args.obs != config.t_obs:
            raise CheckpointError(f"checkpoint was trained with t_obs={config.t_obs}, --obs asks for {args.obs}")
    elif predictor == "model":
        raise UsageError("--ckpt is required to evaluate the model")
    else:
        config = TrainConfig(t_obs=args.obs or TrainConfig().t_obs)
    if args.seed is not None:
        config = TrainConfig(**{**config.model_dump(), "seed": args.seed})

    data_dir = _data_dir(args.data)
    inputs.extend(_input_files(data_dir))
    options = {
        "threshold": args.collision_threshold,
        "gt_collision": args.gt_collision,
        "sample_agents": args.sample_agents,
    }
    prefix = Path(args.out) if args.out else None
    manifest = start_manifest("eval", {"predictor": predictor, "training": config.model_dump(), **options},
                              config.seed, inputs)

    outputs: List[Path] = []
    if args.folds:
        folds = load_folds(Path(args.folds), data_dir)
        reports = leave_one_out(folds, config, model_config, predictor, **options)
        for report in reports:
            outputs.extend(_emit_report(report, prefix, f".{report.label}"))
    else:
        report = evaluate(load_scene_dir(data_dir), config, predictor, params, model_config, **options)
        outputs.extend(_emit_report(report, prefix))

    finish_manifest(manifest, outputs[0] if outputs else stdout_anchor("eval"), outputs)
    return EXIT_OK


def cmd_predict(args) -> int:
    checkpoint = load_checkpoint(args.ckpt)
    config = checkpoint.train_config
    scene = parse_dataset(Path(args.data))
    predict = make_predictor("model", config.t_pred, checkpoint.params, checkpoint.model_config)

    # first complete window of every pedestrian
    chosen = {}
    for window in make_sequences(scene, config.t_obs, config.t_pred, config.stride):
        pending = [i for i, ped in enumerate(window.ped_ids) if int(ped) not in chosen]
        if not pending:
            continue
        pred = predict(window)
        for i in pending:
            chosen[int(window.ped_ids[i])] = (window.positions_obs[i], window.positions_gt[i], pred[i])
    if not chosen:
        raise DataError(f"{args.data}: no pedestrian has a complete "
                              f"{config.t_obs + config.t_pred}-step window")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PREDICTION_COLUMNS)
        for ped in sorted(chosen):
            for step, (x, y) in enumerate(chosen[ped][2], start=1):
                writer.writerow([scene.name, ped, step, repr(float(x)), repr(float(y))])
    outputs = [out]

    if args.svg:
        from src.utils.plotting import plot_predictions

        peds = sorted(chosen)
        outputs.append(plot_predictions(
            Path(args.svg),
            observed=[chosen[p][0] for p in peds],
            ground_truth=[chosen[p][1] for p in peds],
            predicted=[chosen[p][2] for p in peds],
            labels=[f"ped {p}" for p in peds],
            title=scene.name,
        ))

    manifest = start_manifest("predict", {"training": config.model_dump()}, config.seed,
                              [Path(args.ckpt), Path(args.data)])
    finish_manifest(manifest, out, outputs)
    logger.info(f"Predicted {len(chosen)} pedestrians of {scene.name}")
    return EXIT_OK


def cmd_synth(args) -> int:
    params = ScenarioParams(
        speed=args.speed,
        separation=args.separation,
        n_frames=args.frames,
        noise_std=args.noise,
        angle_deg=args.angle,
    )
    scene = synth_scenario(args.kind, params, seed=args.seed, name=Path(args.out).stem)
    manifest = start_manifest("synth", {"kind": args.kind, **asdict(params)}, args.seed)
    out = serialize_scene(scene, Path(args.out))
    finish_manifest(manifest, out)
    logger.info(f"Wrote {args.kind} scenario with {len(scene.pedestrian_ids())} pedestrians to {out}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    manifest = start_manifest("gradcheck", {"corrupt": args.corrupt}, args.seed)
    reports = run_gradient_suite(seed=args.seed, corrupt=scaled_gradient if args.corrupt else None)
    summary = suite_summary(reports)
    text = JSONLoader.dumps(summary)
    if args.out:
        out = _write_text(Path(args.out), text)
        finish_manifest(manifest, out)
    else:
        sys.stdout.write(text)
        finish_manifest(manifest, stdout_anchor("gradcheck"), [])
    if not summary["passed"]:
        logger.error(f"Gradient check failed: max relative error {summary['max_error']:.3e} "
                     f">= {summary['tolerance']:g}")
        return EXIT_NUMERICAL
    logger.info(f"Gradient check passed: max relative error {summary['max_error']:.3e}")
    return EXIT_OK


# ========================================================================
# Parser
# ========================================================================

def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="stgt", description="Spatio-temporal graph trajectory forecaster")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--log-file", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="Train a forecaster and write a checkpoint")
    p.add_argument("--data", default=None, help=f"Scene file or directory (default ${DATA_DIR_ENV})")
    p.add_argument("--out", required=True, help="Checkpoint path")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--obs", type=int)
    p.add_argument("--pred", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda-recon", type=float)
    p.add_argument("--teacher-forcing", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--config", help="Run configuration JSON ({model, training})")
    p.add_argument("--folds", help="Fold definition JSON")
    p.add_argument("--holdout", help="Fold left out of training")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="Report ADE/FDE/collisions")
    p.add_argument("--ckpt")
    p.add_argument("--data", default=None)
    p.add_argument("--collision-threshold", type=float, default=COLLISION_THRESHOLD)
    p.add_argument("--sample-agents", type=int)
    p.add_argument("--gt-collision", action="store_true")
    p.add_argument("--baseline", choices=PREDICTORS, default="model")
    p.add_argument("--folds", help="Run leave-one-out over these folds")
    p.add_argument("--out", help="Output prefix (<prefix>.json / .csv); stdout JSON when omitted")
    p.add_argument("--obs", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("predict", help="Forecast every pedestrian of one scene file")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("synth", help="Generate a synthetic interaction scene")
    p.add_argument("--kind", required=True, choices=SCENARIO_KINDS)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--separation", type=float)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--frames", type=int, default=20)
    p.add_argument("--angle", type=float, default=90.0)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("gradcheck", help="Finite-difference check of the full network")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", action="store_true", help="Scale analytic gradients by 1.01 (must fail)")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_gradcheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)

    setup_logger("src", args.log_level, Path(args.log_file) if args.log_file else None)
    try:
        return args.handler(args)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except TrajectoryError as e:
        logger.error(str(e))
        return e.exit_code
    except FileNotFoundError as e:
        logger.error(str(e))
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
