"""Matplotlib rendering for CLI reports: previews and report figures."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from PIL import Image  # noqa: E402

# Perceptually-uniform ramp pinned for reproducible previews.
PREVIEW_CMAP = "magma"


def save_disparity_preview(disp, path, max_disp):
    """8-bit colormapped preview of a 2-D disparity map over [0, max_disp]."""
    disp = np.asarray(disp, dtype=np.float64)
    norm = np.clip(disp / max_disp, 0.0, 1.0)
    cmap = plt.get_cmap(PREVIEW_CMAP)
    rgb = (cmap(norm)[:, :, :3] * 255.0).astype(np.uint8)
    Image.fromarray(rgb).save(path, format="PNG")


def save_bench_figure(records, path):
    """Runtime/memory bars per exit level, next to the bench CSV."""
    labels = [r.exit_level.name for r in records]
    medians = [r.median_ms for r in records]
    p95s = [r.p95_ms for r in records]
    mem_mb = [r.activation_bytes / 2 ** 20 for r in records]

    fig, (ax_t, ax_m) = plt.subplots(1, 2, figsize=(9, 3.5))
    x = np.arange(len(labels))
    ax_t.bar(x, medians, color="#30519e", label="median")
    ax_t.plot(x, p95s, "k_", markersize=18, label="p95")
    ax_t.set_xticks(x, labels)
    ax_t.set_ylabel("forward time [ms]")
    ax_t.set_title("runtime by exit level")
    ax_t.legend(frameon=False)

    ax_m.bar(x, mem_mb, color="#8a3341")
    ax_m.set_xticks(x, labels)
    ax_m.set_ylabel("activation footprint [MB]")
    ax_m.set_title("peak live tensors")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_eval_figure(names, per_image, aggregate, path):
    """Per-image abs_rel bars plus the aggregate metric profile."""
    fig, (ax_a, ax_b) = plt.subplots(1, 2, figsize=(10, 3.5))
    x = np.arange(len(names))
    ax_a.bar(x, [m.abs_rel for m in per_image], color="#30519e")
    ax_a.axhline(aggregate.abs_rel, color="#8a3341", lw=1.5,
                 label=f"mean {aggregate.abs_rel:.3f}")
    ax_a.set_xticks(x, names, rotation=60, ha="right", fontsize=7)
    ax_a.set_ylabel("abs rel")
    ax_a.set_title("per-image abs rel")
    ax_a.legend(frameon=False)

    bars = ("abs_rel", "sq_rel", "rmse_log", "d1", "d2", "d3")
    vals = [getattr(aggregate, n) for n in bars]
    ax_b.bar(np.arange(len(bars)), vals, color="#4a7a4a")
    ax_b.set_xticks(np.arange(len(bars)), bars, rotation=30, ha="right")
    ax_b.set_title("aggregate metrics")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
