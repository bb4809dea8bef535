"""Observables of a trajectory: total words N_w, distinct words N_d, and the
per-interaction success indicator S, plus the run-level summary."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from shared_naming import _kernel
from shared_naming.model import (
    ConsultMissMode,
    GameConfig,
    GameState,
    StepOutcome,
    make_rng,
    negotiate_step,
    new_game,
)

SERIES_COLUMNS = ("t", "n_w", "n_d", "s")


@dataclass(frozen=True)
class Observation:
    t: int
    n_w: int
    n_d: int
    s: int


@dataclass
class RunResult:
    config: GameConfig
    steps: int
    converged: bool
    max_nd: int
    t_max_nd: int
    max_nw: int
    t_max_nw: int
    n_invented: int
    consensus_word: int | None = None
    # int64 array with SERIES_COLUMNS, or None when no series was requested
    series: np.ndarray | None = None

    @property
    def t_conv(self) -> int | None:
        return self.steps if self.converged else None

    @property
    def consensus_in_shared(self) -> bool | None:
        if self.consensus_word is None:
            return None
        return self.consensus_word < self.config.c_words

    def observations(self) -> list[Observation]:
        if self.series is None:
            return []
        return [Observation(*map(int, row)) for row in self.series]

    def summary(self) -> dict:
        return {
            "converged": self.converged,
            "steps": self.steps,
            "t_conv": self.t_conv,
            "consensus_word": self.consensus_word,
            "consensus_in_shared": self.consensus_in_shared,
            "max_nd": self.max_nd,
            "t_max_nd": self.t_max_nd,
            "max_nw": self.max_nw,
            "t_max_nw": self.t_max_nw,
            "n_invented": self.n_invented,
        }


def compute_nw(state: GameState) -> int:
    return sum(len(memory) for memory in state.agents)


def compute_nd(state: GameState) -> int:
    # shared words only count once some agent holds them
    return len(set().union(*state.agents))


def is_converged(state: GameState) -> bool:
    first = state.agents[0]
    if len(first) != 1:
        return False
    return all(memory == first for memory in state.agents)


def observe(state: GameState, last_outcome: StepOutcome) -> Observation:
    """Observation at ``state.t`` from the state's maintained word tally."""
    return Observation(state.t, state.n_words, state.n_distinct, int(last_outcome.success))


def _track_reference(config: GameConfig, want_series: bool) -> RunResult:
    state = new_game(config)
    max_nw = t_max_nw = max_nd = t_max_nd = 0
    rows = []
    converged = False
    while state.t < config.max_steps:
        obs = observe(state, negotiate_step(state))
        if obs.n_w > max_nw:
            max_nw, t_max_nw = obs.n_w, obs.t
        if obs.n_d > max_nd:
            max_nd, t_max_nd = obs.n_d, obs.t
        converged = obs.n_w == config.n_agents and obs.n_d == 1
        if want_series and (obs.t % config.sample_stride == 0 or converged
                            or obs.t == config.max_steps):
            rows.append((obs.t, obs.n_w, obs.n_d, obs.s))
        if converged:
            break
    return RunResult(
        config=config,
        steps=state.t,
        converged=converged,
        max_nd=max_nd,
        t_max_nd=t_max_nd,
        max_nw=max_nw,
        t_max_nw=t_max_nw,
        n_invented=state.next_invented_id - config.c_words,
        consensus_word=state.agents[0][0] if converged else None,
        series=np.array(rows, dtype=np.int64).reshape(-1, 4) if want_series else None,
    )


def _track_fast(config: GameConfig, want_series: bool) -> RunResult:
    (steps, converged, consensus, max_nd, t_max_nd, max_nw, t_max_nw,
     n_invented, series) = _kernel.run_trajectory(
        make_rng(config.seed),
        config.n_agents,
        float(config.lam),
        config.c_words,
        config.max_steps,
        config.sample_stride,
        want_series,
        config.consult_miss is ConsultMissMode.COLLAPSE,
    )
    return RunResult(
        config=config,
        steps=int(steps),
        converged=bool(converged),
        max_nd=int(max_nd),
        t_max_nd=int(t_max_nd),
        max_nw=int(max_nw),
        t_max_nw=int(t_max_nw),
        n_invented=int(n_invented),
        consensus_word=int(consensus) if converged else None,
        series=series if want_series else None,
    )


def track_run(config: GameConfig, series: bool = False, engine: str = "fast") -> RunResult:
    """Play one game until consensus or ``config.max_steps`` interactions.

    ``engine="reference"`` steps the pure Python model one interaction at a
    time; ``"fast"`` runs the compiled loop. Both give identical results.
    Extremum times are the first step at which the maximum is reached.
    """
    config.validate()
    if engine == "fast":
        return _track_fast(config, series)
    if engine == "reference":
        return _track_reference(config, series)
    raise ValueError(f"unknown engine {engine!r}")
