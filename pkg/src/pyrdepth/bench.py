"""Runtime/memory benchmark harness for the inference engine."""

import time
from dataclasses import dataclass

import numpy as np

from .network import activation_footprint, infer

WARMUP_RUNS = 3

BENCH_CSV_HEADER = ("exit_level,height,width,reps,median_ms,mean_ms,p95_ms,"
                    "activation_bytes")


@dataclass(frozen=True)
class BenchRecord:
    exit_level: object
    height: int
    width: int
    reps: int
    median_ms: float
    mean_ms: float
    p95_ms: float
    activation_bytes: int

    def as_csv_row(self):
        return (f"{self.exit_level.name.lower()},{self.height},{self.width},"
                f"{self.reps},{self.median_ms:.3f},{self.mean_ms:.3f},"
                f"{self.p95_ms:.3f},{self.activation_bytes}")


def time_level(net, image, exit_level, reps, warmup=WARMUP_RUNS):
    """Median/mean/p95 forward time over `reps` runs after `warmup` runs."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    for _ in range(warmup):
        infer(net, image, exit_level)
    samples = np.empty(reps, dtype=np.float64)
    for i in range(reps):
        t0 = time.perf_counter()
        infer(net, image, exit_level)
        samples[i] = (time.perf_counter() - t0) * 1e3
    h, w = image.shape[2:]
    return BenchRecord(
        exit_level=exit_level,
        height=h,
        width=w,
        reps=reps,
        median_ms=float(np.median(samples)),
        mean_ms=float(np.mean(samples)),
        p95_ms=float(np.percentile(samples, 95)),
        activation_bytes=activation_footprint(net, h, w, exit_level),
    )


def run_benchmark(net, image, levels, reps):
    return [time_level(net, image, lv, reps) for lv in levels]


def write_bench_csv(records, path):
    lines = [BENCH_CSV_HEADER] + [r.as_csv_row() for r in records]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
