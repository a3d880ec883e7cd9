"""Unsupervised stereo training objective and its verification tools.

The objective is a per-scale weighted sum of three terms, computed for both
views: SSIM+L1 photometric reconstruction of each view warped from the
other, edge-aware disparity smoothness damped by image gradients, and
left-right disparity consistency. Disparities enter in each scale's own
pixel units. The module also carries the finite-difference gradient oracle,
a toy direct-disparity optimizer, and the photometric training
augmentations.
"""

from dataclasses import dataclass, field

import numpy as np

from .tensor import (ShapeError, bilinear_resize, check_nchw, pool3x3_mean64)

# SSIM stabilizers for [0,1]-ranged images (module-level so the verification
# battery can detect a corrupted constant).
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


@dataclass(frozen=True)
class StereoPair:
    """Rectified image pair; purely horizontal disparity is assumed, not checked."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        check_nchw(self.left, "left image")
        check_nchw(self.right, "right image")
        if self.left.shape != self.right.shape:
            raise ShapeError(
                f"stereo pair dims differ: {self.left.shape} vs {self.right.shape}")
        if self.left.shape[0] != 1:
            raise ShapeError(f"stereo pair batch must be 1, got {self.left.shape[0]}")

    @property
    def dims(self):
        return self.left.shape


@dataclass(frozen=True)
class LossWeights:
    alpha_ap: float = 1.0
    alpha_lr: float = 1.0
    alpha_ds_base: float = 0.1
    ssim_alpha: float = 0.85

    def __post_init__(self):
        for name in ("alpha_ap", "alpha_lr", "alpha_ds_base", "ssim_alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def smoothness_weight(self, level):
        """Per-scale smoothness weight alpha_ds_base / r, r = 2^level."""
        return self.alpha_ds_base / float(2 ** level)


@dataclass(frozen=True)
class ScaleTerms:
    ap_left: float
    ap_right: float
    ds_left: float
    ds_right: float
    lr_left: float
    lr_right: float


@dataclass
class LossBreakdown:
    """Raw per-scale term values plus the weighted multi-scale total."""

    weights: LossWeights
    terms: dict = field(default_factory=dict)   # level -> ScaleTerms
    total: float = 0.0

    def recompute_total(self):
        total = 0.0
        for level, t in self.terms.items():
            total += (self.weights.alpha_ap * (t.ap_left + t.ap_right)
                      + self.weights.smoothness_weight(level) * (t.ds_left + t.ds_right)
                      + self.weights.alpha_lr * (t.lr_left + t.lr_right))
        return total


def _check_match(a, b, what):
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def warp_horizontal(image, disparity, sign):
    """Sample `image` at x + sign*disparity(x) along width, edge-clamped.

    1-D linear interpolation between neighbouring columns; sign -1 with a
    left disparity field reconstructs the left view from the right image.
    """
    check_nchw(image, "warp image")
    check_nchw(disparity, "warp disparity")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    b, c, h, w = image.shape
    if disparity.shape != (b, 1, h, w):
        raise ShapeError(
            f"disparity shape {disparity.shape} does not match image "
            f"{image.shape} (expected {(b, 1, h, w)})")
    xs = np.arange(w, dtype=np.float32) + np.float32(sign) * disparity[:, 0]
    np.clip(xs, 0.0, w - 1.0, out=xs)
    x0 = np.floor(xs).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    frac = (xs - x0)[:, None]                      # (b, 1, h, w)
    rows = np.arange(h)[:, None]
    out = np.empty_like(image)
    for n in range(b):
        g0 = image[n][:, rows, x0[n]]
        g1 = image[n][:, rows, x1[n]]
        out[n] = g0 * (1.0 - frac[n]) + g1 * frac[n]
    return out


def ssim_map(a, b):
    """Per-pixel SSIM over 3x3 valid-region local statistics."""
    check_nchw(a, "ssim a")
    check_nchw(b, "ssim b")
    _check_match(a, b, "ssim_map")
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    mu_a = pool3x3_mean64(a64)
    mu_b = pool3x3_mean64(b64)
    var_a = pool3x3_mean64(a64 * a64) - mu_a * mu_a
    var_b = pool3x3_mean64(b64 * b64) - mu_b * mu_b
    cov = pool3x3_mean64(a64 * b64) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return (num / den).astype(np.float32)


def appearance_loss(orig, warped, ssim_alpha=0.85):
    """Alpha-blended SSIM and L1 reconstruction error.

    ssim_alpha weights mean (1 - SSIM)/2 against the mean absolute
    difference; the SSIM term is averaged over its (h-2)x(w-2) valid region,
    the L1 term over the full raster.
    """
    _check_match(orig, warped, "appearance_loss")
    ssim_term = 0.0
    if ssim_alpha > 0.0:
        ssim_term = np.mean((1.0 - ssim_map(orig, warped)) / 2.0,
                            dtype=np.float64)
    l1_term = np.mean(np.abs(orig.astype(np.float64) - warped.astype(np.float64)))
    return float(ssim_alpha * ssim_term + (1.0 - ssim_alpha) * l1_term)


def smoothness_loss(disparity, image):
    """Edge-aware L1 penalty on disparity gradients.

    Forward differences; each image gradient is the channel-mean absolute
    difference, entering through exp(-|grad I|).
    """
    check_nchw(disparity, "smoothness disparity")
    check_nchw(image, "smoothness image")
    if disparity.shape[2:] != image.shape[2:] or disparity.shape[0] != image.shape[0]:
        raise ShapeError(
            f"smoothness_loss: disparity {disparity.shape} does not match "
            f"image {image.shape}")
    d = disparity.astype(np.float64)
    img = image.astype(np.float64)
    dx_d = np.abs(d[:, :, :, 1:] - d[:, :, :, :-1])
    dy_d = np.abs(d[:, :, 1:, :] - d[:, :, :-1, :])
    gx = np.mean(np.abs(img[:, :, :, 1:] - img[:, :, :, :-1]), axis=1, keepdims=True)
    gy = np.mean(np.abs(img[:, :, 1:, :] - img[:, :, :-1, :]), axis=1, keepdims=True)
    return float(np.mean(dx_d * np.exp(-gx)) + np.mean(dy_d * np.exp(-gy)))


def lr_consistency_loss(d_left, d_right):
    """Mean |d_left(x) - d_right(x + d_left(x))| with linear interpolation."""
    _check_match(d_left, d_right, "lr_consistency_loss")
    if d_left.shape[1] != 1:
        raise ShapeError(f"disparity fields must be 1-channel, got {d_left.shape}")
    sampled = warp_horizontal(d_right, d_left, +1)
    return float(np.mean(np.abs(d_left.astype(np.float64)
                                - sampled.astype(np.float64))))


def total_loss(left_pyramid, right_pyramid, pair, weights=LossWeights()):
    """Weighted multi-scale objective over both views (sum across scales).

    Images are bilinearly downsampled to each computed pyramid level;
    disparity maps are taken from the pyramids' scaled (pixel-unit) outputs.
    """
    if tuple(left_pyramid.levels) != tuple(right_pyramid.levels):
        raise ShapeError(
            f"pyramid levels differ: {left_pyramid.levels} vs "
            f"{right_pyramid.levels}")
    breakdown = LossBreakdown(weights=weights)
    total = 0.0
    for level in left_pyramid.levels:
        d_l = left_pyramid.scaled_at(level)
        d_r = right_pyramid.scaled_at(level)
        _check_match(d_l, d_r, f"scale {level} disparities")
        hh, ww = d_l.shape[2:]
        il = bilinear_resize(pair.left, hh, ww)
        ir = bilinear_resize(pair.right, hh, ww)
        terms = ScaleTerms(
            ap_left=appearance_loss(il, warp_horizontal(ir, d_l, -1),
                                    weights.ssim_alpha),
            ap_right=appearance_loss(ir, warp_horizontal(il, d_r, +1),
                                     weights.ssim_alpha),
            ds_left=smoothness_loss(d_l, il),
            ds_right=smoothness_loss(d_r, ir),
            lr_left=lr_consistency_loss(d_l, d_r),
            lr_right=lr_consistency_loss(d_r, d_l),
        )
        breakdown.terms[level] = terms
        total += (weights.alpha_ap * (terms.ap_left + terms.ap_right)
                  + weights.smoothness_weight(level) * (terms.ds_left + terms.ds_right)
                  + weights.alpha_lr * (terms.lr_left + terms.lr_right))
    breakdown.total = float(total)
    return breakdown


def fd_gradient(loss_fn, disparity, epsilon=1e-3):
    """Central finite differences of a scalar loss, one element at a time.

    The subgradient convention for |.| kinks is 0 at the kink; comparisons
    against analytic forms should mask elements within epsilon of a kink.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    d = np.array(disparity, dtype=np.float32, copy=True)
    grad = np.zeros(d.size, dtype=np.float64)
    flat = d.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + epsilon
        lp = loss_fn(d)
        flat[i] = orig - epsilon
        lm = loss_fn(d)
        flat[i] = orig
        grad[i] = (lp - lm) / (2.0 * epsilon)
    return grad.reshape(d.shape).astype(np.float32)


def photometric_objective(pair, smoothness_weight=0.1, ssim_alpha=0.85):
    """Appearance + smoothness objective of the left view as a function of d."""
    def objective(d):
        recon = warp_horizontal(pair.right, d, -1)
        return (appearance_loss(pair.left, recon, ssim_alpha)
                + smoothness_weight * smoothness_loss(d, pair.left))
    return objective


def optimize_disparity(pair, steps, step_size, smoothness_weight=0.1,
                       epsilon=1e-3):
    """Gradient-descend the disparity field itself via finite differences.

    A desk-scale demonstration that the photometric signal recovers
    geometry: no network, just the field. Starts from zero disparity.
    step_size is a per-pixel rate: the mean-reduced objective's gradient is
    rescaled by the pixel count so the rate is resolution-independent.
    """
    b, c, h, w = pair.dims
    if h * w > 32 * 64:
        raise ValueError(
            f"pair {h}x{w} too large for finite-difference optimization "
            f"(limit 32x64 pixels)")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps > 0 and step_size <= 0:
        raise ValueError("step_size must be positive")
    objective = photometric_objective(pair, smoothness_weight)
    d = np.zeros((1, 1, h, w), dtype=np.float32)
    for t in range(steps):
        grad = fd_gradient(objective, d, epsilon)
        # 1/sqrt(t) schedule: the L1 terms make this a subgradient method,
        # which needs diminishing steps to settle instead of oscillating
        rate = np.float32(step_size * h * w / np.sqrt(t + 1.0))
        d = (d - rate * grad).astype(np.float32)
    return d


def augment(pair, seed, flip_prob=0.5, gamma_range=(0.8, 1.2),
            brightness_range=(0.5, 2.0), color_range=(0.8, 1.2)):
    """Seeded photometric augmentation, identical parameters on both views.

    Draws, in order: horizontal flip (swap and mirror the views), gamma,
    brightness factor, per-channel color factors; outputs clamped to [0,1].
    All four draws happen regardless of the ranges so a given seed always
    yields the same photometric parameters.
    """
    rng = np.random.default_rng(seed)
    do_flip = rng.random() < flip_prob
    gamma = rng.uniform(*gamma_range)
    brightness = rng.uniform(*brightness_range)
    c = pair.left.shape[1]
    colors = rng.uniform(color_range[0], color_range[1], size=c)

    left, right = pair.left, pair.right
    if do_flip:
        left, right = right[:, :, :, ::-1], left[:, :, :, ::-1]

    shift = colors.astype(np.float32)[None, :, None, None]

    def photometric(img):
        out = np.power(img, np.float32(gamma))
        out = out * np.float32(brightness) * shift
        return np.clip(out, 0.0, 1.0).astype(np.float32)

    return StereoPair(left=photometric(left), right=photometric(right))
