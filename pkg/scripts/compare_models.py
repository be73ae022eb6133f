#!/usr/bin/env python3
"""
Compare trained checkpoints on one test set.

Usage:
    python scripts/compare_models.py runs/mp-pde/checkpoint.msmc runs/msmp-pde/checkpoint.msmc

Evaluates every checkpoint, prints a comparison table and writes a
side-by-side heatmap of one test sample to ``comparison.png``.
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import argparse
import json
import logging

from app.config import configure_logging, get_settings
from app.data.storage import dataset_path, read_dataset
from app.evaluation.heatmaps import emit_comparison
from app.evaluation.rollout import evaluate_model, unroll
from app.network.checkpoint import read_checkpoint

configure_logging()
logger = logging.getLogger(__name__)


def main():
    """Evaluate and compare checkpoints."""
    settings = get_settings()
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("checkpoints", nargs="+", help="checkpoint files")
    parser.add_argument("--data", default=str(settings.data_dir), help="dataset directory")
    parser.add_argument("--sample", type=int, default=0, help="sample shown in the figure")
    parser.add_argument("--out", default=str(settings.output_dir), help="output directory")
    args = parser.parse_args()

    checkpoints = [read_checkpoint(path) for path in args.checkpoints]
    experiments = {c.domain.experiment for c in checkpoints}
    if len(experiments) != 1:
        print(f"❌ Checkpoints span several experiments: {sorted(e.slug for e in experiments)}")
        return 1
    experiment = experiments.pop()
    test = read_dataset(dataset_path(args.data, experiment, "test"))

    print("\n" + "=" * 60)
    print(f"MODEL COMPARISON: {experiment.slug} ({len(test)} test trajectories)")
    print("=" * 60)
    print()
    print("| Model | Parameters | Relative error | Failed rollouts |")
    print("|-------|------------|----------------|-----------------|")

    report, predictions = {}, {}
    for checkpoint in checkpoints:
        model = checkpoint.build()
        result = evaluate_model(model, test, checkpoint.graph(), checkpoint.config.K)
        name = checkpoint.config.variant
        print(f"| {name} | {checkpoint.params.size} | {result.relative_error:.2%} | {result.failures} |")
        report[name] = {"relative_error": result.relative_error, "failures": result.failures}
        predictions[name] = unroll(model, test[args.sample], checkpoint.graph(), checkpoint.config.K)
    print()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    figure = emit_comparison(test[args.sample], predictions, out_dir / "comparison.png", checkpoints[0].config.K)
    with open(out_dir / "comparison.json", "w") as f:
        json.dump(report, f, indent=2)

    best = min(report, key=lambda name: report[name]["relative_error"])
    print(f"🏆 Lowest relative error: {best}")
    print(f"✅ Figure saved to: {figure}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
