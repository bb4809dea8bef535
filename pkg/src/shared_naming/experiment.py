"""(lambda, C) sweeps over seeded trials and the statistics built on them."""

from __future__ import annotations

import math
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from shared_naming.metrics import RunResult, track_run
from shared_naming.model import ConsultMissMode, GameConfig, InvalidConfig, default_max_steps

STATISTICS = ("t_conv", "max_nd", "t_max_nd", "max_nw", "t_max_nw")
BOUND_SLACK = 0.05

PAPER_LAMBDAS = tuple(round(0.1 * k, 1) for k in range(11))
PAPER_C_VALUES = (1, 5, 10, 50, 100, 500)


class InsufficientGrid(ValueError):
    pass


def derive_seed(master_seed: int, run_index: int) -> int:
    """64-bit seed for trial ``run_index``.

    Independent of lambda and C on purpose: every cell of a sweep replays
    the same seeds, so cells that never read the shared memory (lambda = 0)
    are identical across C.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=(run_index,))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SweepConfig:
    n_agents: int
    lambdas: tuple[float, ...]
    c_values: tuple[int, ...]
    runs_per_cell: int
    master_seed: int = 0
    max_steps: int | None = None
    sample_stride: int = 1
    series: bool = False
    workers: int = 1
    consult_miss: ConsultMissMode = ConsultMissMode.NO_OP

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        object.__setattr__(self, "c_values", tuple(int(x) for x in self.c_values))
        object.__setattr__(self, "consult_miss", ConsultMissMode(self.consult_miss))
        if self.max_steps is None:
            object.__setattr__(self, "max_steps", default_max_steps(self.n_agents))
        if not self.lambdas:
            raise InvalidConfig("lambdas", "empty list")
        if not self.c_values:
            raise InvalidConfig("c_values", "empty list")
        if self.runs_per_cell < 1:
            raise InvalidConfig("runs_per_cell", f"must be >= 1, got {self.runs_per_cell}")
        if self.workers < 1:
            raise InvalidConfig("workers", f"must be >= 1, got {self.workers}")
        for lam, c in product(self.lambdas, self.c_values):
            self.game_config(lam, c, 0)

    def game_config(self, lam: float, c_words: int, run_index: int) -> GameConfig:
        return GameConfig(
            n_agents=self.n_agents,
            lam=lam,
            c_words=c_words,
            seed=derive_seed(self.master_seed, run_index),
            max_steps=self.max_steps,
            sample_stride=self.sample_stride,
            consult_miss=self.consult_miss,
        )

    def as_dict(self) -> dict:
        return {
            "n_agents": self.n_agents,
            "lambdas": list(self.lambdas),
            "c_values": list(self.c_values),
            "runs_per_cell": self.runs_per_cell,
            "master_seed": self.master_seed,
            "max_steps": self.max_steps,
            "sample_stride": self.sample_stride,
            "consult_miss": self.consult_miss.value,
        }


@dataclass
class SweepCell:
    lam: float
    c_words: int
    n_agents: int
    runs: int
    n_converged: int
    n_shared: int
    mean: dict[str, float]
    sd: dict[str, float]
    lambda_index: int = 0
    c_index: int = 0
    # columns t, mean n_w, mean n_d, mean s on the stride grid
    series: np.ndarray | None = field(default=None, repr=False)

    @property
    def non_converged(self) -> int:
        return self.runs - self.n_converged

    @property
    def p_shared(self) -> float:
        return self.n_shared / self.n_converged if self.n_converged else math.nan

    def stderr(self, statistic: str) -> float:
        if statistic == "p_shared":
            p = self.p_shared
            return math.sqrt(p * (1.0 - p) / self.n_converged)
        return self.sd[statistic] / math.sqrt(self.n_converged)


def pooled_se(a: SweepCell, b: SweepCell, statistic: str) -> float:
    return math.hypot(a.stderr(statistic), b.stderr(statistic))


def _run_chunk(configs: list[GameConfig], series: bool) -> list[RunResult]:
    return [track_run(cfg, series=series) for cfg in configs]


def _averaged_series(results: list[RunResult], n_agents: int, stride: int) -> np.ndarray:
    last = max(r.steps for r in results) // stride
    grid = np.arange(1, last + 1, dtype=np.int64) * stride
    totals = np.zeros((len(grid), 3), dtype=np.int64)
    for r in results:
        rows = r.series[r.series[:, 0] % stride == 0]
        k = len(rows)
        totals[:k] += rows[:, 1:]
        # consensus is absorbing: converged runs contribute (N, 1, 1) afterwards
        totals[k:] += (n_agents, 1, 1)
    out = np.empty((len(grid), 4))
    out[:, 0] = grid
    out[:, 1:] = totals / len(results)
    return out


def aggregate(results: list[RunResult], lam: float, c_words: int, n_agents: int,
              stride: int = 1, lambda_index: int = 0, c_index: int = 0) -> SweepCell:
    """Reduce trials (in run-index order) to one cell; means use converged runs only."""
    done = [r for r in results if r.converged]
    mean, sd = {}, {}
    for stat in STATISTICS:
        values = np.array([getattr(r, stat) for r in done], dtype=np.int64)
        mean[stat] = float(values.mean()) if len(values) else math.nan
        sd[stat] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    series = None
    if results and results[0].series is not None:
        series = _averaged_series(results, n_agents, stride)
    return SweepCell(
        lam=lam,
        c_words=c_words,
        n_agents=n_agents,
        runs=len(results),
        n_converged=len(done),
        n_shared=sum(r.consensus_in_shared for r in done),
        mean=mean,
        sd=sd,
        lambda_index=lambda_index,
        c_index=c_index,
        series=series,
    )


def _execute(configs: list[GameConfig], series: bool, executor: Executor | None,
             workers: int) -> list[RunResult]:
    if executor is None or workers <= 1:
        return _run_chunk(configs, series)
    size = math.ceil(len(configs) / (4 * workers))
    chunks = [configs[i:i + size] for i in range(0, len(configs), size)]
    out: list[RunResult] = []
    for part in executor.map(_run_chunk, chunks, [series] * len(chunks)):
        out.extend(part)
    return out


def run_cell(n_agents: int, lam: float, c_words: int, runs_per_cell: int,
             master_seed: int = 0, max_steps: int | None = None, sample_stride: int = 1,
             series: bool = False, consult_miss=ConsultMissMode.NO_OP,
             workers: int = 1, executor: Executor | None = None,
             lambda_index: int = 0, c_index: int = 0) -> SweepCell:
    sweep = SweepConfig(n_agents, (lam,), (c_words,), runs_per_cell, master_seed,
                        max_steps, sample_stride, series, workers, consult_miss)
    return _cell(sweep, lam, c_words, executor, lambda_index, c_index)


def _cell(sweep: SweepConfig, lam: float, c_words: int, executor: Executor | None,
          lambda_index: int, c_index: int) -> SweepCell:
    configs = [sweep.game_config(lam, c_words, i) for i in range(sweep.runs_per_cell)]
    if len({cfg.seed for cfg in configs}) != len(configs):
        raise InvalidConfig("master_seed", "derived run seeds collide")
    if executor is None and sweep.workers > 1:
        with ProcessPoolExecutor(sweep.workers) as pool:
            results = _execute(configs, sweep.series, pool, sweep.workers)
    else:
        results = _execute(configs, sweep.series, executor, sweep.workers)
    return aggregate(results, lam, c_words, sweep.n_agents, sweep.sample_stride,
                     lambda_index, c_index)


def run_sweep(config: SweepConfig) -> list[SweepCell]:
    """One cell per (lambda, C), lambda-major; bit-identical for any worker count."""
    grid = list(product(enumerate(config.lambdas), enumerate(config.c_values)))
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            return [_cell(config, lam, c, pool, li, ci) for (li, lam), (ci, c) in grid]
    return [_cell(config, lam, c, None, li, ci) for (li, lam), (ci, c) in grid]


def nd_upper_bound(n_agents: int, lam: float, c_words: int) -> float:
    """Upper bound on the mean peak number of distinct words.

    Half the agents speak while still empty; a fraction ``lam`` of them
    draw from the C shared words (at most ``min(C, lam*N/2)`` distinct) and
    the rest invent fresh words.
    """
    if n_agents < 2:
        raise InvalidConfig("n_agents", f"need at least 2 agents, got {n_agents}")
    if not 0.0 <= lam <= 1.0:
        raise InvalidConfig("lambda", f"must lie in [0, 1], got {lam}")
    if c_words < 1:
        raise InvalidConfig("c_words", f"need at least 1 shared word, got {c_words}")
    half = n_agents / 2
    return (1.0 - lam) * half + min(c_words, lam * half)


@dataclass(frozen=True)
class BoundReport:
    lam: float
    c_words: int
    n_agents: int
    bound_value: float
    observed_mean_max_nd: float
    satisfied: bool


def check_bound(cells: list[SweepCell], slack: float = BOUND_SLACK) -> list[BoundReport]:
    reports = []
    for cell in cells:
        bound = nd_upper_bound(cell.n_agents, cell.lam, cell.c_words)
        observed = cell.mean["max_nd"]
        reports.append(BoundReport(cell.lam, cell.c_words, cell.n_agents, bound, observed,
                                   observed <= bound * (1.0 + slack)))
    return reports


def find_peak_lambda(cells: list[SweepCell], statistic: str, c_words: int) -> float:
    """Grid lambda maximising the cell mean of ``statistic`` at fixed C.

    Ties go to the smaller lambda.
    """
    if statistic not in ("t_conv", "max_nw"):
        raise ValueError(f"unsupported statistic {statistic!r}")
    column = sorted((c for c in cells if c.c_words == c_words), key=lambda c: c.lam)
    if len(column) < 3:
        raise InsufficientGrid(f"need >= 3 lambda values at C={c_words}, got {len(column)}")
    best = column[0]
    for cell in column[1:]:
        if cell.mean[statistic] > best.mean[statistic]:
            best = cell
    return best.lam


@dataclass(frozen=True)
class TrendViolation:
    statistic: str
    fixed: str
    before: SweepCell
    after: SweepCell
    gap: float
    tolerance: float

    def __str__(self) -> str:
        a, b = self.before, self.after
        return (f"{self.statistic} at fixed {self.fixed}: (lambda={a.lam}, C={a.c_words}) -> "
                f"(lambda={b.lam}, C={b.c_words}) moved {self.gap:+.4g}, "
                f"tolerance {self.tolerance:.4g}")


def trend_violations(cells: list[SweepCell], statistic: str, along: str, direction: int,
                     z: float = 2.0) -> list[TrendViolation]:
    """Adjacent grid pairs that move against ``direction`` by more than ``z``
    pooled standard errors.

    ``along`` is ``"lambda"`` (C held fixed) or ``"c"`` (lambda held fixed);
    ``direction`` is +1 for non-decreasing and -1 for non-increasing.
    """
    if along == "lambda":
        fixed, key, order = "C", (lambda c: c.c_words), (lambda c: c.lam)
    elif along == "c":
        fixed, key, order = "lambda", (lambda c: c.lam), (lambda c: c.c_words)
    else:
        raise ValueError(f"unknown axis {along!r}")
    groups: dict = {}
    for cell in cells:
        groups.setdefault(key(cell), []).append(cell)
    out = []
    for group in groups.values():
        group.sort(key=order)
        for a, b in zip(group, group[1:]):
            value_a = a.p_shared if statistic == "p_shared" else a.mean[statistic]
            value_b = b.p_shared if statistic == "p_shared" else b.mean[statistic]
            gap = value_b - value_a
            tol = z * pooled_se(a, b, statistic)
            if direction * gap < -tol:
                out.append(TrendViolation(statistic, fixed, a, b, gap, tol))
    return out
