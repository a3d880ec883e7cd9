"""Dense NCHW float32 tensor kernels for CPU execution of the depth network.

Tensors are plain numpy arrays of shape (batch, channels, height, width),
dtype float32, C-contiguous (row-major). All kernels are pure functions,
validate shapes explicitly (no implicit broadcasting anywhere) and never
mutate their inputs.
"""

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Raised when tensor shapes do not match an operation's contract."""


# Largest sigmoid output representable strictly below 1.0 in float32 is
# 1 - 2^-24; clamping into the open interval keeps the sigmoid-head
# guarantee even for weights extreme enough to saturate float32.
_SIGMOID_MARGIN = 2.0 ** -24

# Row block for the im2col GEMM: caps scratch memory and fixes the work
# partition so results do not depend on input size beyond the block grid.
_CONV_BLOCK_ROWS = 8192


def as_tensor(data, shape=None):
    """Coerce to a C-contiguous float32 NCHW array, optionally reshaping."""
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if shape is not None:
        arr = arr.reshape(shape)
    if arr.ndim != 4:
        raise ShapeError(f"expected a rank-4 (N,C,H,W) tensor, got shape {arr.shape}")
    return arr


def check_nchw(t, name="tensor"):
    if not isinstance(t, np.ndarray) or t.ndim != 4:
        raise ShapeError(f"{name} must be a rank-4 (N,C,H,W) array, got "
                         f"{getattr(t, 'shape', type(t))}")
    if t.dtype != np.float32:
        raise ShapeError(f"{name} must be float32, got {t.dtype}")


@dataclass(frozen=True)
class ConvWeights:
    """Kernel (out_channels, in_channels, kh, kw) plus per-output-channel bias."""

    kernel: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.kernel.ndim != 4:
            raise ShapeError(f"kernel must be rank-4, got shape {self.kernel.shape}")
        if self.bias.ndim != 1 or self.bias.shape[0] != self.kernel.shape[0]:
            raise ShapeError(
                f"bias shape {self.bias.shape} does not match out_channels "
                f"{self.kernel.shape[0]}")

    @property
    def out_channels(self):
        return self.kernel.shape[0]

    @property
    def in_channels(self):
        return self.kernel.shape[1]

    def param_count(self):
        return self.kernel.size + self.bias.size


def leaky_relu(x, slope=0.2):
    """Elementwise max(x, slope*x); identity on non-negative inputs."""
    return np.where(x >= 0, x, np.float32(slope) * x).astype(np.float32, copy=False)


def sigmoid(x):
    """Elementwise logistic, clamped into the open interval (0, 1)."""
    with np.errstate(over="ignore"):   # exp overflow saturates; the clip handles it
        y = 1.0 / (1.0 + np.exp(-x.astype(np.float64)))
    np.clip(y, _SIGMOID_MARGIN, 1.0 - _SIGMOID_MARGIN, out=y)
    return y.astype(np.float32)


def _apply_activation(x, act, leaky_slope):
    if act is None:
        return x
    if act == "leaky_relu":
        return leaky_relu(x, leaky_slope)
    if act == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown activation {act!r}")


def conv2d(input, w, stride=1, act=None, leaky_slope=0.2):
    """2-D convolution with zero "same" padding for odd kernels.

    3x3 kernels get one pixel of zero padding per side so stride-2 layers
    produce exact ceil-halving; 2x2 kernels run unpadded ("valid"), which is
    the adjoint configuration of deconv2x2.
    """
    check_nchw(input, "conv2d input")
    b, c, h, wd = input.shape
    oc, ic, kh, kw = w.kernel.shape
    if c != ic:
        raise ShapeError(
            f"conv2d channel mismatch: input {input.shape} has {c} channels, "
            f"kernel {w.kernel.shape} expects {ic}")
    if stride not in (1, 2):
        raise ValueError(f"unsupported stride {stride}, expected 1 or 2")

    ph, pw = (0, 0) if (kh == 2 and kw == 2) else (kh // 2, kw // 2)
    if h + 2 * ph < kh or wd + 2 * pw < kw:
        raise ValueError(f"input {input.shape} smaller than kernel {(kh, kw)}")
    if ph or pw:
        padded = np.zeros((b, c, h + 2 * ph, wd + 2 * pw), dtype=np.float32)
        padded[:, :, ph:ph + h, pw:pw + wd] = input
    else:
        padded = input
    oh = (padded.shape[2] - kh) // stride + 1
    ow = (padded.shape[3] - kw) // stride + 1

    # im2col with the patch matrix in (c*kh*kw, rows) layout: the gather then
    # copies contiguous image rows, and the SGEMM writes (out_ch, rows)
    # directly into NCHW. Row blocks cap the scratch buffer without changing
    # the per-element reduction order.
    wmat = np.ascontiguousarray(w.kernel.reshape(oc, ic * kh * kw))
    bias_col = w.bias[:, None]
    block_h = max(1, _CONV_BLOCK_ROWS // ow)
    out = np.empty((b, oc, oh, ow), dtype=np.float32)
    for n in range(b):
        windows = np.lib.stride_tricks.sliding_window_view(
            padded[n], (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
        for y0 in range(0, oh, block_h):
            y1 = min(y0 + block_h, oh)
            cols = windows[:, y0:y1].transpose(0, 3, 4, 1, 2).reshape(
                ic * kh * kw, (y1 - y0) * ow)
            block = wmat @ cols
            block += bias_col
            out[n, :, y0:y1] = block.reshape(oc, y1 - y0, ow)
    return _apply_activation(out, act, leaky_slope)


def deconv2x2(input, w):
    """Transposed convolution with a 2x2 kernel at stride 2 (exact 2x upsample).

    Each input element scatters a 2x2 weighted patch; patches do not overlap,
    so output (b, out_ch, 2h, 2w) is a disjoint tiling. No activation is
    applied here; the graph applies leaky ReLU on the hand-off path itself.
    """
    check_nchw(input, "deconv2x2 input")
    b, c, h, wd = input.shape
    oc, ic, kh, kw = w.kernel.shape
    if (kh, kw) != (2, 2):
        raise ShapeError(f"deconv2x2 kernel must be 2x2, got {w.kernel.shape}")
    if c != ic:
        raise ShapeError(
            f"deconv2x2 channel mismatch: input {input.shape} has {c} channels, "
            f"kernel {w.kernel.shape} expects {ic}")
    out = np.empty((b, oc, 2 * h, 2 * wd), dtype=np.float32)
    flat = input.transpose(0, 2, 3, 1).reshape(b * h * wd, c)
    for dy in range(2):
        for dx in range(2):
            tap = flat @ w.kernel[:, :, dy, dx].T + w.bias
            out[:, :, dy::2, dx::2] = (
                tap.reshape(b, h, wd, oc).transpose(0, 3, 1, 2))
    return out


def bilinear_resize(input, out_h, out_w):
    """Bilinear interpolation with half-pixel centers and edge clamping.

    Sample coordinate for output index i is (i + 0.5) * in/out - 0.5, clamped
    to the valid range; constant images are exact fixed points and resizing
    to identical dims is the identity.
    """
    check_nchw(input, "bilinear_resize input")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output dims must be >= 1, got {(out_h, out_w)}")
    b, c, h, w = input.shape
    if (out_h, out_w) == (h, w):
        return input.copy()

    def axis_weights(n_in, n_out):
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = src - lo
        return lo, hi, frac

    y0, y1, fy = axis_weights(h, out_h)
    x0, x1, fx = axis_weights(w, out_w)
    data = input.astype(np.float64)
    rows = data[:, :, y0, :] * (1.0 - fy)[None, None, :, None] \
        + data[:, :, y1, :] * fy[None, None, :, None]
    out = rows[:, :, :, x0] * (1.0 - fx)[None, None, None, :] \
        + rows[:, :, :, x1] * fx[None, None, None, :]
    return out.astype(np.float32)


def concat_channels(a, b):
    """Concatenate along the channel axis, a's channels first."""
    check_nchw(a, "concat_channels a")
    check_nchw(b, "concat_channels b")
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ShapeError(
            f"concat_channels batch/spatial mismatch: {a.shape} vs {b.shape}")
    return np.concatenate([a, b], axis=1)


def pool3x3_mean64(input):
    """avg_pool3x3's float64 accumulator, before the float32 cast.

    Shared with the SSIM statistics, where keeping the moments in float64
    preserves the exact cancellation of variance terms on constant inputs.
    """
    b, c, h, w = input.shape
    if h < 3 or w < 3:
        raise ValueError(f"3x3 pooling needs h,w >= 3, got {input.shape}")
    acc = np.zeros((b, c, h - 2, w - 2), dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            acc += input[:, :, dy:dy + h - 2, dx:dx + w - 2]
    return acc / 9.0


def avg_pool3x3(input):
    """Valid-region 3x3 mean pooling at stride 1: (b,c,h,w) -> (b,c,h-2,w-2)."""
    check_nchw(input, "avg_pool3x3 input")
    return pool3x3_mean64(input).astype(np.float32)
