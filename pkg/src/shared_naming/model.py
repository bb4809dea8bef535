"""Naming game with a read-only shared memory.

A population of ``n_agents`` agents, each holding an ordered, duplicate-free
list of word ids. The shared memory holds the ``c_words`` ids ``0 .. C-1``;
invented words are minted from a counter starting at ``C``.

Random draws
------------
Every random decision consumes one double ``u`` in ``[0, 1)`` from a numpy
``PCG64`` generator (``Generator.random()``), in this order per step:

1. speaker ``= floor(u * N)``
2. hearer ``= floor(u * (N - 1))``, shifted up by one if ``>= speaker``
3. speaker word:

   * non-empty memory: index ``floor(u * len(memory))``
   * empty memory: ``u < lambda`` selects the shared branch, which draws one
     more ``u`` for the shared word ``floor(u * C)``; otherwise a word is
     invented (no further draw)

4. on success only: ``u < lambda`` decides whether the pair consults the
   shared memory (one joint draw for both agents)

The numba kernel in :mod:`shared_naming._kernel` consumes the stream in the
same order, so both engines produce identical trajectories for a seed.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np


class InvalidConfig(ValueError):
    """Raised for unusable game or sweep parameters.

    ``field`` names the offending parameter.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class SpeakerSource(str, enum.Enum):
    OWN_MEMORY = "own-memory"
    SHARED_MEMORY = "shared-memory"
    INVENTED = "invented"


class ConsultMissMode(str, enum.Enum):
    """What a successful pair does when it consults the shared memory and
    the transmitted word is not there.

    ``NO_OP`` leaves both memories untouched. ``COLLAPSE`` falls through to
    the local collapse, as if the memory had not been consulted.
    """

    NO_OP = "no-op"
    COLLAPSE = "collapse"


def default_max_steps(n_agents: int) -> int:
    return 1000 * n_agents


@dataclass(frozen=True)
class GameConfig:
    n_agents: int
    lam: float
    c_words: int
    seed: int = 0
    max_steps: int | None = None
    sample_stride: int = 1
    consult_miss: ConsultMissMode = ConsultMissMode.NO_OP

    def __post_init__(self):
        object.__setattr__(self, "consult_miss", ConsultMissMode(self.consult_miss))
        if self.max_steps is None:
            object.__setattr__(self, "max_steps", default_max_steps(self.n_agents))
        self.validate()

    def validate(self) -> None:
        if int(self.n_agents) != self.n_agents or self.n_agents < 2:
            raise InvalidConfig("n_agents", f"need at least 2 agents, got {self.n_agents}")
        if int(self.c_words) != self.c_words or self.c_words < 1:
            raise InvalidConfig("c_words", f"need at least 1 shared word, got {self.c_words}")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidConfig("lambda", f"must lie in [0, 1], got {self.lam}")
        if self.max_steps < 1:
            raise InvalidConfig("max_steps", f"must be >= 1, got {self.max_steps}")
        if self.sample_stride < 1:
            raise InvalidConfig("sample_stride", f"must be >= 1, got {self.sample_stride}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed", f"must be a 64-bit unsigned integer, got {self.seed}")

    def as_dict(self) -> dict:
        return {
            "n_agents": self.n_agents,
            "lambda": self.lam,
            "c_words": self.c_words,
            "seed": self.seed,
            "max_steps": self.max_steps,
            "sample_stride": self.sample_stride,
            "consult_miss": self.consult_miss.value,
        }


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class StepOutcome:
    speaker: int
    hearer: int
    word: int
    success: bool
    speaker_source: SpeakerSource
    consulted_shared: bool = False
    collapse_applied: bool = False


@dataclass
class GameState:
    config: GameConfig
    agents: list[list[int]]
    rng: np.random.Generator
    t: int = 0
    next_invented_id: int = 0
    # word id -> number of agents holding it; keeps N_w and N_d O(1)
    counts: Counter = field(default_factory=Counter)
    n_words: int = 0

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def shared(self) -> range:
        return range(self.config.c_words)

    @property
    def n_distinct(self) -> int:
        return len(self.counts)

    def in_shared(self, word: int) -> bool:
        return 0 <= word < self.config.c_words

    def _add(self, agent: int, word: int) -> None:
        self.agents[agent].append(word)
        self.counts[word] += 1
        self.n_words += 1

    def _collapse(self, agent: int, word: int) -> None:
        memory = self.agents[agent]
        for w in memory:
            if w != word:
                self.counts[w] -= 1
                if not self.counts[w]:
                    del self.counts[w]
        self.n_words -= len(memory) - 1
        self.agents[agent] = [word]


def new_game(config: GameConfig) -> GameState:
    config.validate()
    return GameState(
        config=config,
        agents=[[] for _ in range(config.n_agents)],
        rng=make_rng(config.seed),
        next_invented_id=config.c_words,
    )


def select_pair(state: GameState) -> tuple[int, int]:
    """Uniform ordered pair of distinct agents."""
    n = state.n_agents
    speaker = int(state.rng.random() * n)
    hearer = int(state.rng.random() * (n - 1))
    if hearer >= speaker:
        hearer += 1
    return speaker, hearer


def invent_word(state: GameState) -> int:
    word = state.next_invented_id
    state.next_invented_id += 1
    return word


def speaker_select_word(state: GameState, speaker: int) -> tuple[int, SpeakerSource]:
    memory = state.agents[speaker]
    if memory:
        return memory[int(state.rng.random() * len(memory))], SpeakerSource.OWN_MEMORY
    if state.rng.random() < state.config.lam:
        word = int(state.rng.random() * state.config.c_words)
        source = SpeakerSource.SHARED_MEMORY
    else:
        word = invent_word(state)
        source = SpeakerSource.INVENTED
    state._add(speaker, word)
    return word, source


def negotiate_step(state: GameState) -> StepOutcome:
    """Play one speaker/hearer interaction and advance ``t`` by one."""
    speaker, hearer = select_pair(state)
    word, source = speaker_select_word(state, speaker)
    state.t += 1

    if word not in state.agents[hearer]:
        state._add(hearer, word)
        return StepOutcome(speaker, hearer, word, False, source)

    consulted = state.rng.random() < state.config.lam
    if consulted:
        collapse = state.in_shared(word) or state.config.consult_miss is ConsultMissMode.COLLAPSE
    else:
        collapse = True
    if collapse:
        state._collapse(speaker, word)
        state._collapse(hearer, word)
    return StepOutcome(speaker, hearer, word, True, source, consulted, collapse)
