"""Assembly and execution of the pyramidal depth network.

The graph is a 6-level feature pyramid (two 3x3 convs per level, the first
at stride 2) with a small per-level depth decoder (four 3x3 convs ending in
8 feature maps). Disparity at each level is sigmoid(channel 0) of the
decoder output scaled by disparity_scale * that level's width; the 8-channel
decoder output is handed to the next-finer level through a 2x2 stride-2
transposed convolution followed by leaky ReLU, and concatenated with that
level's encoder features. Decoding runs coarse-to-fine and can stop early at
any level, skipping every finer decoder.
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .tensor import (ConvWeights, ShapeError, bilinear_resize, concat_channels,
                     conv2d, deconv2x2, leaky_relu, sigmoid)


class ExitLevel(IntEnum):
    """Pyramid level of the finest decoder to run (H = half resolution)."""

    H = 1
    Q = 2
    E = 3
    S16 = 4
    S32 = 5
    S64 = 6


def parse_exit_level(text):
    try:
        return ExitLevel[text.strip().upper()]
    except KeyError:
        names = ", ".join(lv.name.lower() for lv in ExitLevel)
        raise ValueError(f"unknown exit level {text!r}, expected one of {names}")


@dataclass(frozen=True)
class NetworkConfig:
    levels: int = 6
    encoder_channels: tuple = (16, 32, 64, 96, 128, 192)
    decoder_channels: tuple = (96, 64, 32, 8)
    leaky_slope: float = 0.2
    disparity_scale: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "encoder_channels", tuple(self.encoder_channels))
        object.__setattr__(self, "decoder_channels", tuple(self.decoder_channels))
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if len(self.encoder_channels) != self.levels:
            raise ValueError(
                f"encoder_channels has {len(self.encoder_channels)} entries "
                f"for {self.levels} levels")
        if not self.decoder_channels or self.decoder_channels[-1] != 8:
            raise ValueError(
                f"decoder_channels must end with the 8 hand-off features, "
                f"got {self.decoder_channels}")

    @property
    def handoff_channels(self):
        return self.decoder_channels[-1]

    def encoder_in_channels(self, level):
        return 3 if level == 1 else self.encoder_channels[level - 2]

    def decoder_in_channels(self, level):
        base = self.encoder_channels[level - 1]
        return base if level == self.levels else base + self.handoff_channels

    def layer_specs(self):
        """Yield (name, shape) for every tensor the graph demands.

        The order is fixed (encoders, decoders, deconvs) and is also the
        generation order used by weights.random_init.
        """
        for k in range(1, self.levels + 1):
            cin, cout = self.encoder_in_channels(k), self.encoder_channels[k - 1]
            yield f"encoder{k}/conv1/kernel", (cout, cin, 3, 3)
            yield f"encoder{k}/conv1/bias", (cout,)
            yield f"encoder{k}/conv2/kernel", (cout, cout, 3, 3)
            yield f"encoder{k}/conv2/bias", (cout,)
        for k in range(1, self.levels + 1):
            cin = self.decoder_in_channels(k)
            for i, cout in enumerate(self.decoder_channels, start=1):
                yield f"decoder{k}/conv{i}/kernel", (cout, cin, 3, 3)
                yield f"decoder{k}/conv{i}/bias", (cout,)
                cin = cout
        for k in range(2, self.levels + 1):
            c = self.handoff_channels
            yield f"deconv{k}/kernel", (c, c, 2, 2)
            yield f"deconv{k}/bias", (c,)


@dataclass(frozen=True)
class Network:
    """Immutable assembled graph: config plus bound weights."""

    config: NetworkConfig
    encoder: tuple       # per level: (conv1, conv2)
    decoders: tuple      # per level: tuple of decoder convs
    deconvs: dict        # level k -> ConvWeights feeding level k-1, k = 2..levels

    @property
    def levels(self):
        return self.config.levels


def build(config, container):
    """Validate every tensor the config demands and bind an immutable Network."""
    bound = {}
    for name, shape in config.layer_specs():
        arr = container.get(name)   # KeyError names the missing tensor
        if tuple(arr.shape) != tuple(shape):
            raise ShapeError(
                f"weight {name!r} has shape {tuple(arr.shape)}, expected {shape}")
        bound[name] = np.ascontiguousarray(arr, dtype=np.float32)

    def conv(prefix):
        return ConvWeights(bound[f"{prefix}/kernel"], bound[f"{prefix}/bias"])

    encoder = tuple(
        (conv(f"encoder{k}/conv1"), conv(f"encoder{k}/conv2"))
        for k in range(1, config.levels + 1))
    decoders = tuple(
        tuple(conv(f"decoder{k}/conv{i}")
              for i in range(1, len(config.decoder_channels) + 1))
        for k in range(1, config.levels + 1))
    deconvs = {k: conv(f"deconv{k}") for k in range(2, config.levels + 1)}
    return Network(config=config, encoder=encoder, decoders=decoders,
                   deconvs=deconvs)


@dataclass
class DisparityPyramid:
    """Per-level disparity maps, coarsest-computed to finest.

    `levels[i]` is the pyramid level of `maps[i]`/`scaled[i]`; levels are
    ascending, so index 0 is the finest computed map (the exit level).
    `maps` hold raw sigmoid outputs in (0,1); `scaled` are the same maps in
    pixel units, multiplied by disparity_scale * that level's own width.
    """

    levels: tuple
    maps: list = field(default_factory=list)
    scaled: list = field(default_factory=list)

    def index_of(self, level):
        return self.levels.index(level)

    def map_at(self, level):
        return self.maps[self.index_of(level)]

    def scaled_at(self, level):
        return self.scaled[self.index_of(level)]

    @property
    def finest(self):
        return self.levels[0]


def _check_image(net, image):
    if not isinstance(image, np.ndarray) or image.ndim != 4 or image.shape[1] != 3:
        raise ShapeError(
            f"expected an image tensor of shape (1, 3, H, W), got "
            f"{getattr(image, 'shape', type(image))}")
    if image.shape[0] != 1:
        raise ShapeError(f"batch size must be 1, got {image.shape[0]}")
    h, w = image.shape[2:]
    div = 1 << net.levels
    if h % div or w % div:
        raise ValueError(
            f"input dims {h}x{w} are not divisible by 2^{net.levels} = {div}; "
            f"resize the image first (the CLI does this with --resize)")


def _check_exit(net, exit_level):
    level = int(exit_level)
    if not 1 <= level <= net.levels:
        raise ValueError(
            f"exit level {level} outside this network's pyramid (1..{net.levels})")
    return level


def infer(net, image, exit_level=ExitLevel.H):
    """Run the pyramid and return disparity maps for levels exit..levels.

    The full encoder and every decoder at or below (coarser than) the exit
    level always run; decoders finer than the exit are skipped entirely,
    which is what shrinks runtime and memory at coarse exits.
    """
    _check_image(net, image)
    exit_lv = _check_exit(net, exit_level)
    slope = net.config.leaky_slope
    image = np.ascontiguousarray(image, dtype=np.float32)

    feats = []
    x = image
    for conv1, conv2 in net.encoder:
        x = conv2d(x, conv1, stride=2, act="leaky_relu", leaky_slope=slope)
        x = conv2d(x, conv2, stride=1, act="leaky_relu", leaky_slope=slope)
        feats.append(x)

    pyramid = DisparityPyramid(levels=tuple(range(exit_lv, net.levels + 1)))
    maps = {}
    scaled = {}
    up = None
    for k in range(net.levels, exit_lv - 1, -1):
        fk = feats[k - 1]
        dec_in = fk if k == net.levels else concat_channels(fk, up)
        t = dec_in
        for conv in net.decoders[k - 1][:-1]:
            t = conv2d(t, conv, stride=1, act="leaky_relu", leaky_slope=slope)
        d8 = conv2d(t, net.decoders[k - 1][-1], stride=1, act=None)
        disp = sigmoid(d8[:, 0:1])
        maps[k] = disp
        level_width = image.shape[3] >> k
        scaled[k] = disp * np.float32(net.config.disparity_scale * level_width)
        if k > exit_lv:
            up = leaky_relu(deconv2x2(d8, net.deconvs[k]), slope)
    pyramid.maps = [maps[k] for k in pyramid.levels]
    pyramid.scaled = [scaled[k] for k in pyramid.levels]
    return pyramid


def infer_fullres(net, image, exit_level=ExitLevel.H):
    """Finest scaled map, upsampled to input resolution in full-res pixel units."""
    pyramid = infer(net, image, exit_level)
    h, w = image.shape[2:]
    finest = pyramid.scaled[0]
    full = bilinear_resize(finest, h, w)
    # scaled maps are in their own level's pixel units; the width ratio
    # converts to full-resolution pixels
    return full * np.float32(w / (w >> pyramid.finest))


def count_parameters(net):
    """Total element count over every kernel and bias in the graph."""
    total = 0
    for conv1, conv2 in net.encoder:
        total += conv1.param_count() + conv2.param_count()
    for dec in net.decoders:
        total += sum(c.param_count() for c in dec)
    for w in net.deconvs.values():
        total += w.param_count()
    return total


def activation_footprint(net, h, w, exit_level=ExitLevel.H):
    """Peak bytes of simultaneously-live tensor buffers for one infer call.

    Accounting follows the documented execution order: the input is live for
    the whole call; encoder outputs are retained until their decoder consumes
    them; decoder scratch dies layer by layer; disparity maps (raw and
    scaled) accumulate until the call returns. Kernel-internal scratch (e.g.
    im2col blocks) is not counted.
    """
    div = 1 << net.levels
    if h % div or w % div:
        raise ValueError(f"dims {h}x{w} not divisible by 2^{net.levels}")
    exit_lv = _check_exit(net, exit_level)
    cfg = net.config

    live = {}
    state = {"cur": 0, "peak": 0}

    def alloc(key, c, hh, ww):
        live[key] = 4 * c * hh * ww
        state["cur"] += live[key]
        state["peak"] = max(state["peak"], state["cur"])

    def free(key):
        state["cur"] -= live.pop(key)

    dims = [(h >> k, w >> k) for k in range(net.levels + 1)]
    alloc("input", 3, h, w)
    for k in range(1, net.levels + 1):
        c = cfg.encoder_channels[k - 1]
        hh, ww = dims[k]
        alloc(("tmp", k), c, hh, ww)
        alloc(("feat", k), c, hh, ww)
        free(("tmp", k))

    for k in range(net.levels, exit_lv - 1, -1):
        hh, ww = dims[k]
        if k < net.levels:
            alloc(("up", k), cfg.handoff_channels, hh, ww)
            free(("d8", k + 1))
            alloc(("cat", k), cfg.decoder_in_channels(k), hh, ww)
            free(("feat", k))
            free(("up", k))
            prev = ("cat", k)
        else:
            prev = ("feat", k)
        for i, c in enumerate(cfg.decoder_channels):
            key = ("dec", k, i) if i < len(cfg.decoder_channels) - 1 else ("d8", k)
            alloc(key, c, hh, ww)
            free(prev)
            prev = key
        alloc(("map", k), 1, hh, ww)
        alloc(("scaled", k), 1, hh, ww)
        if k == exit_lv:
            free(("d8", k))
    return state["peak"]
