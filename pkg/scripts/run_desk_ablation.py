#!/usr/bin/env python3
"""
Run the reduced MS-wave ablation and its directional check.

This convenience script:
1. Trains mp-pde, gated and msmp-pde on desk-scale MS-wave data
2. Repeats every cell over three folds sharing one test set
3. Prints the results table
4. Checks msmp-pde and gated against the ungated FFN baseline
"""
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import logging

from app.config import configure_logging, get_settings
from app.evaluation.matrix import directional_check, run_matrix
from app.evaluation.metrics import format_results_table
from app.models import ArchitectureOverrides, DatasetSizes, ExperimentId, TrainConfig

configure_logging()
logger = logging.getLogger(__name__)

MODELS = ["mp-pde", "gated", "msmp-pde"]
FOLDS = 3
SIZES = DatasetSizes(n_train=256, n_valid=64, n_test=64)
ARCHITECTURE = ArchitectureOverrides(n_hid=64)
TRAIN = TrainConfig(epochs=10, lr_step=3)


def main():
    """Run the desk ablation."""
    settings = get_settings()
    out_dir = settings.output_dir / "desk_ablation"

    print("\n" + "=" * 60)
    print("MS-WAVE DESK ABLATION")
    print("=" * 60)
    print()
    print(f"  Models: {', '.join(MODELS)}")
    print(f"  Folds:  {FOLDS}")
    print(f"  Data:   {SIZES.n_train}/{SIZES.n_valid}/{SIZES.n_test} trajectories")
    print(f"  Width:  {ARCHITECTURE.n_hid}, epochs: {TRAIN.epochs}")
    print()

    results = run_matrix(
        [ExperimentId.MS_WAVE],
        MODELS,
        folds=FOLDS,
        train_config=TRAIN,
        sizes=SIZES,
        architecture=ARCHITECTURE,
        data_dir=settings.data_dir / "desk_ablation",
        out_dir=out_dir,
        threads=settings.threads,
    )

    print("📊 RESULTS")
    print()
    print(format_results_table(results))
    print()

    check = directional_check(results)
    print(f"  msmp-pde / mp-pde: {check.msmp_ratio:.3f} (needs <= {check.threshold})")
    print(f"  gated / mp-pde:    {check.gated_ratio:.3f} (needs <= 1.0)")
    print()
    if check.passed:
        print("✅ Directional check passed")
    else:
        print("❌ Directional check failed")
    print(f"\n✅ Results saved to: {out_dir}")
    return 0 if check.passed else 2


if __name__ == "__main__":
    sys.exit(main())
