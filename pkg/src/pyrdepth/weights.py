"""PYDW weight containers: binary load/save and seeded initialization.

File layout (little-endian throughout, no alignment padding):
  magic "PYDW" | u32 version (=1) | u32 entry count
  per entry: u32 name length | name (UTF-8) | u32 rank | u32 dims...
             | u8 dtype tag (0 = float32) | raw float32 data

Names are the single source of truth binding files to graph slots; see
network.layer_specs for the naming convention.

Training-schedule notes (for a future trainer; no trainer is built here):
the reference training recipe pairs these weights with Adam (beta1=0.9,
beta2=0.999, eps=1e-8), lr 1e-4 for the first 60% of epochs then halved
every 20%, batches of 8 images at 512x256.
"""

import struct

import numpy as np

MAGIC = b"PYDW"
FORMAT_VERSION = 1
DTYPE_F32 = 0


class FormatError(ValueError):
    """Raised when a weight file violates the PYDW layout."""


class WeightContainer:
    """Ordered name -> float32 array mapping with shape bookkeeping."""

    def __init__(self):
        self._entries = {}

    def add(self, name, data):
        if name in self._entries:
            raise FormatError(f"duplicate tensor name {name!r}")
        self._entries[name] = np.ascontiguousarray(data, dtype=np.float32)

    def get(self, name):
        if name not in self._entries:
            raise KeyError(f"weight container has no tensor named {name!r}")
        return self._entries[name]

    def names(self):
        return list(self._entries)

    def shapes(self):
        return {name: arr.shape for name, arr in self._entries.items()}

    def param_count(self):
        return sum(arr.size for arr in self._entries.values())

    def __len__(self):
        return len(self._entries)

    def __contains__(self, name):
        return name in self._entries

    def __eq__(self, other):
        if not isinstance(other, WeightContainer):
            return NotImplemented
        if self.names() != other.names():
            return False
        return all(
            a.shape == b.shape and np.array_equal(a, b, equal_nan=True)
            for a, b in zip(self._entries.values(), other._entries.values()))


def save(container, path):
    """Write the container to `path`; byte-identical for equal containers."""
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(container))]
    for name in container.names():
        arr = container.get(name)
        name_b = name.encode("utf-8")
        parts.append(struct.pack("<I", len(name_b)))
        parts.append(name_b)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(struct.pack("<B", DTYPE_F32))
        parts.append(arr.astype("<f4", copy=False).tobytes())
    try:
        with open(path, "wb") as fh:
            fh.write(b"".join(parts))
    except OSError as exc:
        raise OSError(f"cannot write weight file {path}: {exc}") from exc


class _Reader:
    def __init__(self, buf, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise FormatError(
                f"{self.path}: truncated while reading {what} "
                f"(needed {n} bytes at offset {self.pos}, "
                f"have {len(self.buf) - self.pos})")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def load(path):
    """Parse and validate a PYDW file."""
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read weight file {path}: {exc}") from exc

    rd = _Reader(buf, path)
    magic = rd.take(4, "magic")
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    version = rd.u32("format version")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    count = rd.u32("entry count")

    container = WeightContainer()
    for i in range(count):
        name_len = rd.u32(f"name length of entry {i}")
        name = rd.take(name_len, f"name of entry {i}").decode("utf-8")
        rank = rd.u32(f"rank of {name!r}")
        dims = struct.unpack(f"<{rank}I", rd.take(4 * rank, f"dims of {name!r}"))
        if any(d == 0 for d in dims):
            raise FormatError(f"{path}: entry {name!r} has a zero dimension {dims}")
        tag = rd.take(1, f"dtype tag of {name!r}")[0]
        if tag != DTYPE_F32:
            raise FormatError(f"{path}: entry {name!r} has unknown dtype tag {tag}")
        n_elems = int(np.prod(dims, dtype=np.int64))
        raw = rd.take(4 * n_elems, f"data of {name!r}")
        if name in container:
            raise FormatError(f"{path}: duplicate tensor name {name!r}")
        container.add(name, np.frombuffer(raw, dtype="<f4").reshape(dims))
    if rd.pos != len(buf):
        raise FormatError(
            f"{path}: {len(buf) - rd.pos} trailing bytes after last entry")
    return container


def random_init(config, seed):
    """Deterministic fan-in-scaled uniform weights for every graph slot.

    Kernels are uniform in [-sqrt(6/fan_in), +sqrt(6/fan_in)] with
    fan_in = in_channels * kh * kw; biases are zero. The fan-in scaling keeps
    activations bounded through the 12+ layer stack so sigmoids stay far from
    saturation in structural tests.
    """
    rng = np.random.default_rng(seed)
    container = WeightContainer()
    for name, shape in config.layer_specs():
        if name.endswith("/bias"):
            container.add(name, np.zeros(shape, dtype=np.float32))
        else:
            fan_in = shape[1] * shape[2] * shape[3]
            bound = np.sqrt(6.0 / fan_in)
            container.add(
                name, rng.uniform(-bound, bound, size=shape).astype(np.float32))
    return container
