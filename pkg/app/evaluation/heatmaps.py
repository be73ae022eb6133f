"""
Space-time heatmaps (x horizontal, t vertical) of rollouts against ground
truth, plus the raw grids as CSV.
"""
import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.evaluation.metrics import relative_error  # noqa: E402
from app.solvers.trajectory import Trajectory  # noqa: E402

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("t_index", "x_index", "channel", "truth", "prediction", "error")
PANELS = ("truth", "prediction", "error")


def trajectory_error(pred: Trajectory, truth: Trajectory, K: int) -> float:
    """Relative error of one predicted trajectory; NaN when undefined."""
    try:
        return relative_error(pred.u[None], truth.u[None], truth.dt, truth.dx, K)
    except ValueError:
        return math.nan


def _extent(traj: Trajectory) -> tuple[float, float, float, float]:
    return (0.0, traj.L, 0.0, traj.T)


def _save(fig, path: Path, error: float) -> Path:
    fig.savefig(path, dpi=120, metadata={"relative_error": f"{error:.17g}"})
    plt.close(fig)
    return path


def write_grid_csv(pred: Trajectory, truth: Trajectory, path: Path) -> Path:
    """One row per (t, x, channel) with truth, prediction and pred - truth."""
    n_t, n_x, n_ch = truth.u.shape
    t_idx, x_idx, c_idx = np.meshgrid(np.arange(n_t), np.arange(n_x), np.arange(n_ch), indexing="ij")
    truth_u = np.asarray(truth.u, dtype=np.float64)
    pred_u = np.asarray(pred.u, dtype=np.float64)
    table = np.column_stack([
        t_idx.ravel(),
        x_idx.ravel(),
        c_idx.ravel(),
        truth_u.ravel(),
        pred_u.ravel(),
        (pred_u - truth_u).ravel(),
    ])
    np.savetxt(
        path,
        table,
        delimiter=",",
        header=",".join(CSV_COLUMNS),
        comments="",
        fmt=["%d", "%d", "%d", "%.17g", "%.17g", "%.17g"],
    )
    return path


def read_grid_csv(path: str | Path, shape: tuple[int, int, int]) -> dict[str, np.ndarray]:
    """Grids of a heatmap CSV as (n_t, n_x, n_ch) arrays keyed by column."""
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {
        name: table[:, 3 + i].reshape(shape)
        for i, name in enumerate(("truth", "prediction", "error"))
    }


def emit_heatmaps(
    pred: Trajectory,
    truth: Trajectory,
    out_dir: str | Path,
    K: int,
    stem: str = "sample"
) -> list[Path]:
    """
    Write truth, prediction and error heatmaps per channel and one CSV.

    File names carry the trajectory's relative error in percent, e.g.
    ``sample_re9.60_truth_ch0.png``; the exact value is also stored as PNG
    metadata under ``relative_error``.

    Returns:
        Written paths, images first and the CSV last
    """
    if pred.u.shape != truth.u.shape:
        raise ValueError(f"prediction shape {pred.u.shape} differs from truth {truth.u.shape}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    error = trajectory_error(pred, truth, K)
    tag = f"{stem}_re{100 * error:.2f}"
    diff = np.asarray(pred.u, dtype=np.float64) - truth.u

    paths = []
    for c in range(truth.n_ch):
        vmin = float(min(truth.u[..., c].min(), pred.u[..., c].min()))
        vmax = float(max(truth.u[..., c].max(), pred.u[..., c].max()))
        lim = float(np.abs(diff[..., c]).max()) or 1e-12
        grids = {
            "truth": (truth.u[..., c], "viridis", vmin, vmax),
            "prediction": (pred.u[..., c], "viridis", vmin, vmax),
            "error": (diff[..., c], "RdBu_r", -lim, lim),
        }
        for panel in PANELS:
            grid, cmap, lo, hi = grids[panel]
            fig, ax = plt.subplots(figsize=(5, 4), constrained_layout=True)
            im = ax.imshow(grid, origin="lower", aspect="auto", extent=_extent(truth), cmap=cmap, vmin=lo, vmax=hi)
            ax.set_xlabel("x")
            ax.set_ylabel("t")
            ax.set_title(f"{panel} (channel {c}), RE {100 * error:.2f}%")
            fig.colorbar(im, ax=ax)
            paths.append(_save(fig, out_dir / f"{tag}_{panel}_ch{c}.png", error))

    paths.append(write_grid_csv(pred, truth, out_dir / f"{tag}.csv"))
    logger.info(f"[Heatmaps] Wrote {len(paths)} files for {stem} (RE {error:.4%}) to {out_dir}")
    return paths


def emit_comparison(
    truth: Trajectory,
    predictions: dict[str, Trajectory],
    out_path: str | Path,
    K: int,
    channel: int = 0
) -> Path:
    """
    Side-by-side heatmaps of the truth and several models' rollouts of the
    same sample, each model panel titled with its relative error.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    panels = [("ground truth", truth, None)] + [
        (name, pred, trajectory_error(pred, truth, K)) for name, pred in predictions.items()
    ]
    vmin = min(float(p.u[..., channel].min()) for _, p, _ in panels)
    vmax = max(float(p.u[..., channel].max()) for _, p, _ in panels)

    fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 4), constrained_layout=True, squeeze=False)
    for ax, (name, traj, error) in zip(axes[0], panels):
        im = ax.imshow(
            traj.u[..., channel], origin="lower", aspect="auto", extent=_extent(truth),
            cmap="viridis", vmin=vmin, vmax=vmax
        )
        ax.set_title(name if error is None else f"{name}: RE {100 * error:.2f}%")
        ax.set_xlabel("x")
        ax.set_ylabel("t")
    fig.colorbar(im, ax=list(axes[0]))

    errors = {name: error for name, _, error in panels if error is not None}
    fig.savefig(out_path, dpi=120, metadata={"relative_errors": repr(errors)})
    plt.close(fig)
    logger.info(f"[Heatmaps] Wrote comparison of {', '.join(predictions)} to {out_path}")
    return out_path
