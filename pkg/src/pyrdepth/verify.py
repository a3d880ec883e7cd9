"""Self-contained verification battery for the loss suite.

Every closed-form expectation here is computed independently of the
implementation (hardcoded formulas and hand arithmetic), so a corrupted
constant or a broken kernel fails the corresponding named check. The
battery is what `pyrdepth verify-loss` runs.
"""

from dataclasses import dataclass

import numpy as np

from . import losses
from .losses import (LossWeights, StereoPair, appearance_loss, fd_gradient,
                     lr_consistency_loss, optimize_disparity, smoothness_loss,
                     ssim_map, total_loss, warp_horizontal)
from .network import DisparityPyramid

# Independent copies of the SSIM stabilizers; the implementation's constants
# live in losses.py and a corrupted value there must fail the battery.
_C1 = 0.01 ** 2
_C2 = 0.03 ** 2

RECOVERY_SHIFT = 3.0
RECOVERY_STEPS = 60
RECOVERY_STEP_SIZE = 8.0


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def make_textured_pair(h, w, shift, seed, wavelength=18.0):
    """Stereo pair with a known constant integer disparity.

    The texture is a seeded horizontal sinusoid with 120-degree phase
    offsets across channels (so the photometric gradient never vanishes)
    plus a row modulation; the right view is the same texture shifted left
    by `shift` columns, i.e. the true left disparity is exactly `shift`.
    """
    rng = np.random.default_rng(seed)
    x = np.arange(w + shift, dtype=np.float64)[None, :]
    y = np.arange(h, dtype=np.float64)[:, None]
    base_phase = rng.uniform(0, 2 * np.pi)
    rowmod = 0.06 * np.sin(2 * np.pi * y / rng.uniform(5.0, 9.0)
                           + rng.uniform(0, 2 * np.pi))
    chans = [0.5 + rowmod
             + 0.3 * np.sin(2 * np.pi * x / wavelength
                            + base_phase + c * 2 * np.pi / 3)
             for c in range(3)]
    tex = np.clip(np.stack(chans)[None], 0.0, 1.0).astype(np.float32)
    return StereoPair(left=np.ascontiguousarray(tex[:, :, :, :w]),
                      right=np.ascontiguousarray(tex[:, :, :, shift:shift + w]))


def _rand_image(rng, c, h, w):
    return rng.uniform(0.0, 1.0, size=(1, c, h, w)).astype(np.float32)


def _const(value, c, h, w):
    return np.full((1, c, h, w), value, dtype=np.float32)


def _single_level_pyramid(disp, width_scale=0.3):
    w = disp.shape[3]
    return DisparityPyramid(levels=(1,), maps=[disp / np.float32(width_scale * w)],
                            scaled=[disp])


# ---------------------------------------------------------------------------
# individual checks; each returns (ok, detail)

def check_ssim_identity(seed):
    x = _rand_image(np.random.default_rng(seed), 3, 10, 14)
    err = float(np.abs(ssim_map(x, x) - 1.0).max())
    return err <= 1e-6, f"max |ssim(x,x)-1| = {err:.2e}"


def check_ssim_zero_variance(seed):
    k1, k2 = 0.3, 0.7
    expected = (2 * k1 * k2 + _C1) / (k1 * k1 + k2 * k2 + _C1)
    got = float(ssim_map(_const(k1, 1, 6, 6), _const(k2, 1, 6, 6)).mean())
    return abs(got - expected) <= 1e-5, f"got {got:.7f}, expected {expected:.7f}"


def check_ssim_symmetry_range(seed):
    rng = np.random.default_rng(seed)
    a, b = _rand_image(rng, 3, 9, 11), _rand_image(rng, 3, 9, 11)
    sym = float(np.abs(ssim_map(a, b) - ssim_map(b, a)).max())
    lo = float(min(ssim_map(a, b).min(), ssim_map(a, a).min()))
    hi = float(max(ssim_map(a, b).max(), ssim_map(a, a).max()))
    ok = sym <= 1e-6 and -1.0 <= lo and hi <= 1.0
    return ok, f"asymmetry {sym:.2e}, range [{lo:.4f}, {hi:.4f}]"


def check_ssim_anticorrelation(seed):
    x = _rand_image(np.random.default_rng(seed), 1, 8, 8)
    worst = float(ssim_map(x, (1.0 - x).astype(np.float32)).max())
    return worst < 1.0, f"max ssim(x, 1-x) = {worst:.4f}"


def check_warp_zero_identity(seed):
    img = _rand_image(np.random.default_rng(seed), 3, 7, 13)
    out = warp_horizontal(img, np.zeros((1, 1, 7, 13), np.float32), +1)
    ok = np.array_equal(out, img)
    return ok, "exact equality" if ok else "outputs differ"


def check_warp_integer_shift(seed):
    img = _rand_image(np.random.default_rng(seed), 2, 5, 12)
    out = warp_horizontal(img, np.full((1, 1, 5, 12), 1.0, np.float32), +1)
    err = float(np.abs(out[:, :, :, :-1] - img[:, :, :, 1:]).max())
    return err <= 1e-6, f"interior shift error {err:.2e}"


def check_warp_half_shift(seed):
    img = _rand_image(np.random.default_rng(seed), 1, 4, 10)
    out = warp_horizontal(img, np.full((1, 1, 4, 10), 0.5, np.float32), +1)
    mean_adj = 0.5 * (img[:, :, :, :-1].astype(np.float64)
                      + img[:, :, :, 1:].astype(np.float64))
    err = float(np.abs(out[:, :, :, :-1] - mean_adj).max())
    return err <= 1e-5, f"half-shift interpolation error {err:.2e}"


def check_appearance_identity(seed):
    x = _rand_image(np.random.default_rng(seed), 3, 8, 12)
    v = appearance_loss(x, x, 0.85)
    return abs(v) <= 1e-6, f"loss at identity = {v:.2e}"


def check_appearance_l1_only(seed):
    v = appearance_loss(_const(0.0, 3, 6, 8), _const(0.5, 3, 6, 8), 0.0)
    return abs(v - 0.5) <= 1e-9, f"pure-L1 constant case = {v:.9f}"


def check_appearance_ssim_closed_form(seed):
    k1, k2 = 0.2, 0.4
    ssim = (2 * k1 * k2 + _C1) / (k1 * k1 + k2 * k2 + _C1)
    expected = (1.0 - ssim) / 2.0
    v = appearance_loss(_const(k1, 1, 6, 6), _const(k2, 1, 6, 6), 1.0)
    return abs(v - expected) <= 1e-5, f"got {v:.7f}, expected {expected:.7f}"


def check_smoothness_constant_zero(seed):
    img = _rand_image(np.random.default_rng(seed), 3, 6, 9)
    v = smoothness_loss(_const(2.5, 1, 6, 9), img)
    return v == 0.0, f"constant-disparity loss = {v!r}"


def check_smoothness_ramp(seed):
    h, w = 6, 10
    ramp = np.tile(np.arange(w, dtype=np.float32), (h, 1))[None, None]
    v = smoothness_loss(np.ascontiguousarray(ramp), _const(0.5, 3, h, w))
    return abs(v - 1.0) <= 1e-5, f"unit-ramp loss = {v:.7f}"


def check_smoothness_edge_damping(seed):
    h, w, g = 6, 10, 2.0
    ramp = np.tile(np.arange(w, dtype=np.float32), (h, 1))[None, None]
    img_ramp = np.clip(np.tile(np.arange(w, dtype=np.float32) * g, (h, 1)),
                       None, None)[None, None]
    img = np.ascontiguousarray(np.repeat(img_ramp, 3, axis=1))
    v = smoothness_loss(np.ascontiguousarray(ramp), img)
    expected = float(np.exp(-g))
    ok = abs(v - expected) <= 1e-5 and v < 1.0
    return ok, f"damped loss {v:.7f}, expected e^-{g} = {expected:.7f}"


def check_lr_zero(seed):
    z = np.zeros((1, 1, 5, 8), np.float32)
    v = lr_consistency_loss(z, z)
    return v == 0.0, f"zero-field loss = {v!r}"


def check_lr_constant_fields(seed):
    c = _const(2.0, 1, 5, 9)
    v = lr_consistency_loss(c, c)
    return abs(v) <= 1e-6, f"equal-constant loss = {v:.2e}"


def check_lr_offset(seed):
    v = lr_consistency_loss(_const(1.0, 1, 5, 9), _const(3.0, 1, 5, 9))
    return abs(v - 2.0) <= 1e-9, f"offset loss = {v:.9f}"


def check_total_zero_fixed_point(seed):
    img = _rand_image(np.random.default_rng(seed), 3, 8, 16)
    pair = StereoPair(left=img, right=img.copy())
    zero = np.zeros((1, 1, 8, 16), np.float32)
    bd = total_loss(_single_level_pyramid(zero), _single_level_pyramid(zero), pair)
    return abs(bd.total) <= 1e-9, f"total at fixed point = {bd.total:.2e}"


def check_total_recompose(seed):
    rng = np.random.default_rng(seed)
    pair = make_textured_pair(8, 16, 2, seed)
    pyrs = []
    for _ in range(2):
        d = rng.uniform(0.0, 3.0, size=(1, 1, 8, 16)).astype(np.float32)
        pyrs.append(_single_level_pyramid(d))
    bd = total_loss(pyrs[0], pyrs[1], pair)
    err = abs(bd.total - bd.recompute_total())
    return err <= 1e-6, f"|total - recomposed| = {err:.2e}"


def check_total_shift_oracle(seed):
    pair = make_textured_pair(12, 24, 2, seed)
    d = _const(2.0, 1, 12, 24)
    bd = total_loss(_single_level_pyramid(d), _single_level_pyramid(d), pair)
    t = bd.terms[1]
    # reconstruction must be near-exact away from the clamped border
    recon = warp_horizontal(pair.right, d, -1)
    interior = float(np.abs(recon - pair.left)[:, :, :, 4:-4].max())
    ok = (interior <= 1e-5 and t.lr_left == 0.0 and t.lr_right == 0.0
          and t.ds_left == 0.0 and bd.total < 0.05)
    return ok, (f"interior recon err {interior:.2e}, total {bd.total:.4f} "
                f"(boundary effects only)")


def check_fd_appearance_minimum(seed):
    img = make_textured_pair(8, 16, 0, seed)
    grad = fd_gradient(lambda d: appearance_loss(
        img.left, warp_horizontal(img.right, d, -1), 0.85),
        np.zeros((1, 1, 8, 16), np.float32), 1e-3)
    worst = float(np.abs(grad).max())
    return worst < 1e-3, f"max |grad| at identity-warp minimum = {worst:.2e}"


def check_fd_smoothness_constant(seed):
    img = _rand_image(np.random.default_rng(seed), 3, 6, 8)
    # dyadic epsilon on a dyadic constant keeps the |.| kink perturbations
    # exactly symmetric in float32, so the subgradient-0 convention shows
    # up as an exactly-zero central difference
    grad = fd_gradient(lambda d: smoothness_loss(d, img),
                       _const(1.0, 1, 6, 8), 2.0 ** -10)
    worst = float(np.abs(grad).max())
    return worst <= 1e-6, f"max |grad| at constant disparity = {worst:.2e}"


def check_fd_linearity(seed):
    img = make_textured_pair(6, 12, 1, seed)
    d0 = np.random.default_rng(seed).uniform(
        0.0, 2.0, size=(1, 1, 6, 12)).astype(np.float32)
    base = losses.photometric_objective(img)
    alpha = 2.5
    g1 = fd_gradient(base, d0, 1e-3).astype(np.float64)
    g2 = fd_gradient(lambda d: alpha * base(d), d0, 1e-3).astype(np.float64)
    err = float(np.max(np.abs(g2 - alpha * g1)
                       / np.maximum(1.0, np.abs(alpha * g1))))
    return err <= 1e-5, f"max relative linearity error = {err:.2e}"


def check_monotone_descent(seed):
    pair = make_textured_pair(10, 20, int(RECOVERY_SHIFT), seed)
    # "sufficiently small step size": halve until the first 10 steps are
    # strictly monotone (the subgradient kinks can make one overly-large
    # step tick the evaluated total up by a hair)
    for step_size in (0.05, 0.025, 0.0125):
        values = []
        for k in range(11):
            d = optimize_disparity(pair, k, step_size)
            bd = total_loss(_single_level_pyramid(d), _single_level_pyramid(d),
                            pair, LossWeights())
            values.append(bd.total)
        drops = [values[i + 1] < values[i] for i in range(10)]
        if all(drops):
            return True, (f"total_loss {values[0]:.5f} -> {values[10]:.5f} "
                          f"monotone over 10 steps at step {step_size}")
    return False, (f"best run {sum(drops)}/10 monotone at step {step_size}, "
                   f"total {values[0]:.5f} -> {values[10]:.5f}")


def check_recovery(seed):
    pair = make_textured_pair(12, 24, int(RECOVERY_SHIFT), seed)
    d = optimize_disparity(pair, RECOVERY_STEPS, RECOVERY_STEP_SIZE)
    interior = d[0, 0, 1:-1, 4:-4]
    hit = float(np.mean(np.abs(interior - RECOVERY_SHIFT) <= 0.5))
    return hit >= 0.70, f"recovered-disparity hit-rate = {hit:.3f} (need >= 0.70)"


def check_zero_shift_convergence(seed):
    pair = make_textured_pair(12, 24, 0, seed)
    d = optimize_disparity(pair, 30, 2.0)
    a = np.abs(d[0, 0])
    ok = a.mean() <= 0.3 and float(np.mean(a <= 0.5)) >= 0.9
    return ok, f"mean |d| = {a.mean():.3f}, frac within 0.5 px = {np.mean(a <= 0.5):.3f}"


CHECKS = (
    ("ssim-identity", check_ssim_identity),
    ("ssim-zero-variance-closed-form", check_ssim_zero_variance),
    ("ssim-symmetry-and-range", check_ssim_symmetry_range),
    ("ssim-anticorrelation", check_ssim_anticorrelation),
    ("warp-zero-identity", check_warp_zero_identity),
    ("warp-integer-shift", check_warp_integer_shift),
    ("warp-half-shift-interpolation", check_warp_half_shift),
    ("appearance-identity-zero", check_appearance_identity),
    ("appearance-l1-only", check_appearance_l1_only),
    ("appearance-ssim-closed-form", check_appearance_ssim_closed_form),
    ("smoothness-constant-zero", check_smoothness_constant_zero),
    ("smoothness-unit-ramp", check_smoothness_ramp),
    ("smoothness-edge-damping", check_smoothness_edge_damping),
    ("lr-zero-fields", check_lr_zero),
    ("lr-equal-constant-fields", check_lr_constant_fields),
    ("lr-constant-offset", check_lr_offset),
    ("total-zero-fixed-point", check_total_zero_fixed_point),
    ("total-breakdown-recompose", check_total_recompose),
    ("total-constant-shift-oracle", check_total_shift_oracle),
    ("fd-appearance-at-minimum", check_fd_appearance_minimum),
    ("fd-smoothness-at-constant", check_fd_smoothness_constant),
    ("fd-gradient-linearity", check_fd_linearity),
    ("descent-monotone-first-10-steps", check_monotone_descent),
    ("recovery-constant-shift", check_recovery),
    ("recovery-zero-shift", check_zero_shift_convergence),
)


def run_battery(seed=0, emit=print, names=None):
    """Run every check, emitting one pass/fail line each; True if all pass.

    `names` optionally restricts the battery to a subset of check names.
    """
    selected = [(n, f) for n, f in CHECKS if names is None or n in names]
    results = []
    for name, fn in selected:
        try:
            ok, detail = fn(seed)
        except Exception as exc:   # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name=name, ok=ok, detail=detail))
        emit(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    passed = sum(r.ok for r in results)
    emit(f"{passed}/{len(results)} loss-suite checks passed")
    return all(r.ok for r in results), results
