"""Naming game with a read-only shared memory."""

from shared_naming.model import (
    ConsultMissMode,
    GameConfig,
    GameState,
    InvalidConfig,
    SpeakerSource,
    StepOutcome,
    invent_word,
    negotiate_step,
    new_game,
    select_pair,
    speaker_select_word,
)
from shared_naming.metrics import (
    Observation,
    RunResult,
    compute_nd,
    compute_nw,
    is_converged,
    observe,
    track_run,
)

__version__ = "0.1.0"
