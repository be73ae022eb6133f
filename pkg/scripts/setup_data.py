#!/usr/bin/env python3
"""
Generate desk-scale datasets for all three experiments.

This script:
1. Solves E1, E2 and MS-wave trajectories at reduced sizes
2. Writes the train/valid/test split files under MSMP_DATA_DIR
3. Prints the size of every written file

Run this before training from the command line.
"""
import sys
import logging
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.config import configure_logging, get_settings
from app.data.generate import generate_experiment
from app.errors import GenerationError
from app.models import DatasetSizes, ExperimentId

configure_logging()
logger = logging.getLogger(__name__)

DESK_SIZES = DatasetSizes(n_train=256, n_valid=64, n_test=64)
SEED = 0


def main():
    """Generate desk datasets."""
    settings = get_settings()
    print("=" * 60)
    print("MSMP-PDE Dataset Generation")
    print("=" * 60)
    print(f"   Output: {settings.data_dir}")
    print(f"   Sizes:  {DESK_SIZES.n_train}/{DESK_SIZES.n_valid}/{DESK_SIZES.n_test}")
    print()

    for step, experiment in enumerate(ExperimentId, start=1):
        print(f"📦 Step {step}: {experiment.slug}...")
        try:
            paths = generate_experiment(
                experiment, SEED, DESK_SIZES, settings.data_dir, threads=settings.threads
            )
        except GenerationError as e:
            print(f"   ❌ {e}")
            return 1
        for split, path in paths.items():
            print(f"   ✅ {split}: {path} ({path.stat().st_size / 1e6:.1f} MB)")
        print()

    print("=" * 60)
    print("✅ Datasets ready")
    print("=" * 60)
    print()
    print("Next: python -m app train --experiment ms-wave --model msmp-pde")
    return 0


if __name__ == "__main__":
    sys.exit(main())
