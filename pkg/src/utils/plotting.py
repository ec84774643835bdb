"""Trajectory plots (SVG)."""
import logging
from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed id salt and no date so equal inputs give byte-identical SVG
matplotlib.rcParams["svg.hashsalt"] = "stgt"


def plot_predictions(
    path: Union[str, Path],
    observed: Sequence[np.ndarray],
    ground_truth: Sequence[np.ndarray],
    predicted: Sequence[np.ndarray],
    labels: Sequence[str] = (),
    title: str = "",
) -> Path:
    """
    Draw one colour per pedestrian: observed solid, ground truth dashed,
    prediction dotted.

    Args:
        observed / ground_truth / predicted: per pedestrian [T × 2] arrays in meters
        labels: Legend entry per pedestrian
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7.2, 5.76))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]

    for i, (obs, gt, pred) in enumerate(zip(observed, ground_truth, predicted)):
        color = colors[i % len(colors)]
        label = labels[i] if i < len(labels) else None
        # future lines start at the last observed point so tracks stay connected
        anchor = obs[-1:]
        ax.plot(obs[:, 0], obs[:, 1], color=color, linestyle="-", linewidth=2, label=label)
        ax.plot(*np.vstack([anchor, gt]).T, color=color, linestyle="--", linewidth=1.5)
        ax.plot(*np.vstack([anchor, pred]).T, color=color, linestyle=":", linewidth=2)

    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    if title:
        ax.set_title(title)
    if labels:
        ax.legend(loc="best", fontsize="small")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote trajectory plot {path}")
    return path
