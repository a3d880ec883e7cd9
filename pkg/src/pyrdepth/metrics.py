"""Depth evaluation: disparity-to-depth conversion, error metrics, crop mask.

Operates on 2-D (h, w) rasters; the CLI squeezes network output down to 2-D
before evaluation. Ground truth follows the 16-bit convention
depth_m = pixel / 256 with 0 marking invalid pixels.
"""

from dataclasses import dataclass

import numpy as np

METRIC_NAMES = ("abs_rel", "sq_rel", "rmse", "rmse_log", "d1", "d2", "d3")
CSV_HEADER = ",".join(METRIC_NAMES)

# Fractional evaluation crop shared across methods for comparability.
CROP_TOP = 0.40810811
CROP_BOTTOM = 0.99189189
CROP_LEFT = 0.03594771
CROP_RIGHT = 0.96405229


@dataclass(frozen=True)
class CameraModel:
    focal_px: float
    baseline_m: float
    min_depth_m: float = 1e-3
    max_depth_m: float = 80.0

    def __post_init__(self):
        if self.focal_px <= 0 or self.baseline_m <= 0:
            raise ValueError(
                f"focal_px and baseline_m must be positive, got "
                f"{self.focal_px}, {self.baseline_m}")
        if not 0 < self.min_depth_m < self.max_depth_m:
            raise ValueError(
                f"need 0 < min_depth < max_depth, got "
                f"{self.min_depth_m}, {self.max_depth_m}")


@dataclass(frozen=True)
class DepthMetrics:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    d1: float
    d2: float
    d3: float

    def as_tuple(self):
        return tuple(getattr(self, name) for name in METRIC_NAMES)

    def as_csv_row(self):
        return ",".join(f"{v:.6f}" for v in self.as_tuple())


def disparity_to_depth(disp, cam):
    """depth = focal * baseline / disparity, clamped to the camera's range.

    Non-positive disparities clamp to max depth rather than erroring.
    """
    disp = np.asarray(disp, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        depth = cam.focal_px * cam.baseline_m / disp
    depth = np.where(disp > 0, depth, cam.max_depth_m)
    return np.clip(depth, cam.min_depth_m, cam.max_depth_m).astype(np.float32)


def compute_metrics(pred_depth, gt_depth, mask, cap_m):
    """Seven-statistic error summary over the masked pixels.

    Both depths are capped at cap_m (idempotent if the caller pre-clamped).
    Raises on an empty mask or non-positive masked depths.
    """
    pred_depth = np.asarray(pred_depth, dtype=np.float64)
    gt_depth = np.asarray(gt_depth, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred_depth.shape != gt_depth.shape or pred_depth.shape != mask.shape:
        raise ValueError(
            f"shape mismatch: pred {pred_depth.shape}, gt {gt_depth.shape}, "
            f"mask {mask.shape}")
    if not mask.any():
        raise ValueError("empty evaluation mask")
    p = np.minimum(pred_depth[mask], cap_m)
    g = np.minimum(gt_depth[mask], cap_m)
    if (p <= 0).any() or (g <= 0).any():
        raise ValueError("non-positive depths under the evaluation mask")

    diff = p - g
    ratio = np.maximum(p / g, g / p)
    return DepthMetrics(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        sq_rel=float(np.mean(diff * diff / g)),
        rmse=float(np.sqrt(np.mean(diff * diff))),
        rmse_log=float(np.sqrt(np.mean((np.log(p) - np.log(g)) ** 2))),
        d1=float(np.mean(ratio < 1.25)),
        d2=float(np.mean(ratio < 1.25 ** 2)),
        d3=float(np.mean(ratio < 1.25 ** 3)),
    )


def mean_metrics(items):
    """Unweighted mean of per-image metrics."""
    if not items:
        raise ValueError("no metrics to aggregate")
    stacked = np.array([m.as_tuple() for m in items], dtype=np.float64)
    return DepthMetrics(*(float(v) for v in stacked.mean(axis=0)))


def eval_crop_mask(h, w):
    """Boolean (h, w) mask of the conventional evaluation crop."""
    if h < 10 or w < 10:
        raise ValueError(f"crop needs h, w >= 10, got {h}x{w}")
    mask = np.zeros((h, w), dtype=bool)
    r0, r1 = int(CROP_TOP * h), int(CROP_BOTTOM * h)
    c0, c1 = int(CROP_LEFT * w), int(CROP_RIGHT * w)
    mask[r0:r1, c0:c1] = True
    return mask
