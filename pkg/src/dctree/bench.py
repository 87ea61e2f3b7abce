"""Per-phase timing of the MSHR pipeline as the channel count grows."""
from __future__ import annotations

import gc
import time
from dataclasses import dataclass

import numpy as np

from .ctree import TreeBuildParams, build_tree
from .dgraph import build_grid
from .fixtures import stack_channels
from .mcimage import MultiChannelImage
from .pipeline import TreeConfig, preprocess
from .regions import ExtractParams, extract_stable

PHASES = ("preprocess", "construct", "traverse")


@dataclass(frozen=True)
class PhaseStats:
    mean_ms: float
    var_ms: float


@dataclass(frozen=True)
class BenchRow:
    channels: int
    phases: dict  # phase name -> PhaseStats
    samples: dict  # phase name -> per-repetition times in ms


@dataclass(frozen=True)
class BenchReport:
    width: int
    height: int
    repetitions: int
    rows: list
    clock: str = "wall"
    loops: int = 1

    def means(self, phase: str) -> np.ndarray:
        return np.array([r.phases[phase].mean_ms for r in self.rows])

    def channel_counts(self) -> np.ndarray:
        return np.array([r.channels for r in self.rows])

    def to_tsv(self) -> str:
        head = ["channels"] + [f"{p}_{s}" for p in PHASES for s in ("mean_ms", "var_ms")]
        lines = ["\t".join(head)]
        for r in self.rows:
            vals = [str(r.channels)]
            for p in PHASES:
                vals += [f"{r.phases[p].mean_ms:.3f}", f"{r.phases[p].var_ms:.3f}"]
            lines.append("\t".join(vals))
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        lines = [
            f"{self.width}x{self.height}, {self.repetitions} repetitions of {self.loops} runs, {self.clock} times in ms (mean +- std)",
            f"{'channels':>8}  " + "  ".join(f"{p:>18}" for p in PHASES),
        ]
        for r in self.rows:
            cells = [f"{r.phases[p].mean_ms:9.2f} +- {np.sqrt(r.phases[p].var_ms):5.2f}" for p in PHASES]
            lines.append(f"{r.channels:>8}  " + "  ".join(f"{c:>18}" for c in cells))
        spread = relative_spread(self.means("construct") + self.means("traverse"))
        r2 = linear_fit_r2(self.channel_counts(), self.means("preprocess"))
        lines.append(f"construct+traverse spread {100 * spread:.1f}%  preprocess linear R^2 {r2:.3f}")
        return "\n".join(lines) + "\n"


def relative_spread(values) -> float:
    """(max - min) / mean."""
    v = np.asarray(values, dtype=np.float64)
    return float((v.max() - v.min()) / v.mean())


def linear_fit_r2(x, y) -> float:
    """Coefficient of determination of a least-squares line through ``(x, y)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = ((y - y.mean()) ** 2).sum()
    return 1.0 if total == 0 else float(1.0 - (resid**2).sum() / total)


CLOCKS = {"wall": time.perf_counter, "cpu": time.process_time}


def time_phases(
    image: MultiChannelImage, config: TreeConfig, params: ExtractParams, clock: str = "wall", loops: int = 1
) -> dict:
    """Seconds per phase, each averaged over ``loops`` back-to-back runs."""
    now = CLOCKS[clock]
    t0 = now()
    for _ in range(loops):
        q = preprocess(image, config)
    t1 = now()
    build = TreeBuildParams(bins=config.bins, min_area=config.min_area)
    for _ in range(loops):
        tree = build_tree(build_grid(q), build)
    t2 = now()
    for _ in range(loops):
        extract_stable(tree, params)
    t3 = now()
    return {"preprocess": (t1 - t0) / loops, "construct": (t2 - t1) / loops, "traverse": (t3 - t2) / loops}


def run_bench(
    base: MultiChannelImage,
    channel_counts=(1, 2, 4, 8, 16, 32),
    repetitions: int = 5,
    config: TreeConfig = TreeConfig(),
    params: ExtractParams = ExtractParams(),
    sigma: float = 2.0,
    seed: int = 0,
    clock: str = "wall",
    loops: int = 5,
) -> BenchReport:
    """Time every phase ``repetitions`` times per synthesized channel count.

    One repetition is the mean of ``loops`` runs per channel count. Runs
    cycle through the channel counts, so slow drifts in machine speed hit
    every row alike. ``clock="cpu"`` measures process CPU time instead of
    wall time.
    """
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    if loops < 1:
        raise ValueError("loops must be >= 1")
    if clock not in CLOCKS:
        raise ValueError(f"clock must be one of {sorted(CLOCKS)}")
    images = {c: stack_channels(base, c, sigma, seed + c) for c in channel_counts}
    # compile and warm caches outside the measurement
    for c in channel_counts:
        time_phases(images[c], config, params)
    samples = {c: {p: [] for p in PHASES} for c in channel_counts}
    enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repetitions):
            sums = {c: dict.fromkeys(PHASES, 0.0) for c in channel_counts}
            for _ in range(loops):
                for c in channel_counts:
                    for p, t in time_phases(images[c], config, params, clock).items():
                        sums[c][p] += t
                    gc.collect()
            for c in channel_counts:
                for p in PHASES:
                    samples[c][p].append(1000.0 * sums[c][p] / loops)
    finally:
        if enabled:
            gc.enable()
    rows = []
    for c in channel_counts:
        phases = {p: PhaseStats(float(np.mean(v)), float(np.var(v))) for p, v in samples[c].items()}
        rows.append(BenchRow(c, phases, {p: list(v) for p, v in samples[c].items()}))
    return BenchReport(base.width, base.height, repetitions, rows, clock, loops)
