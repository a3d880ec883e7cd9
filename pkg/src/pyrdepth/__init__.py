"""CPU inference engine and verification suite for a pyramidal depth network."""

import os

# PYRDEPTH_THREADS caps internal parallelism (0 or unset = auto). BLAS reads
# its thread-count env vars at load time, so this must happen before the
# first numpy import anywhere in the package.
_threads = os.environ.get("PYRDEPTH_THREADS", "0")
if _threads not in ("", "0"):
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from . import tensor, weights, network, losses, metrics  # noqa: E402

__all__ = ["tensor", "weights", "network", "losses", "metrics"]
__version__ = "0.1.0"


def max_threads():
    """Worker cap from PYRDEPTH_THREADS; 0/unset means one per CPU."""
    try:
        n = int(os.environ.get("PYRDEPTH_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)
