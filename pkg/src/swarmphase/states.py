"""Agent state machine: six states, three flags, three behavior groups.

An agent is either Unaware or Aware; Aware agents carry a subset of three
flags (alert token, witness, all-clear), with the restriction that the
all-clear flag never coexists with the other two.  That leaves exactly six
states, encoded as small integers so state vectors can live in int8 arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class AgentState(enum.IntEnum):
    U = 0      # Unaware
    A0 = 1     # Aware, no flags
    AA = 2     # Aware + alert token
    AW = 3     # Aware + witness flag
    AAW = 4    # Aware + alert token + witness flag
    AC = 5     # Aware + all-clear token


#: Wire/file tags, indexed by state value.
STATE_TAGS = ("U", "A0", "AA", "AW", "AAW", "AC")
STATE_FROM_TAG = {tag: AgentState(i) for i, tag in enumerate(STATE_TAGS)}

N_STATES = 6


class BehaviorGroup(enum.IntEnum):
    UNAWARE = 0
    MOBILE = 1
    IMMOBILE = 2


# {U} -> Unaware; {A0, AA} -> Mobile; {AW, AAW, AC} -> Immobile.
_GROUP_OF = (
    BehaviorGroup.UNAWARE,
    BehaviorGroup.MOBILE,
    BehaviorGroup.MOBILE,
    BehaviorGroup.IMMOBILE,
    BehaviorGroup.IMMOBILE,
    BehaviorGroup.IMMOBILE,
)


def behavior_group(state: AgentState) -> BehaviorGroup:
    """Behavior group of a state; total over the six states."""
    return _GROUP_OF[state]


def is_aware(state: AgentState) -> bool:
    return state != AgentState.U


def has_alert_token(state: AgentState) -> bool:
    return state == AgentState.AA or state == AgentState.AAW


def has_witness_flag(state: AgentState) -> bool:
    return state == AgentState.AW or state == AgentState.AAW


def has_all_clear(state: AgentState) -> bool:
    return state == AgentState.AC


@dataclass(frozen=True)
class ProtocolParams:
    """Global protocol constants every agent knows.

    w         -- upper bound on the number of concurrent stimuli (witnesses)
    p         -- per-activation probability used for witness flag-setting and
                 token generation; must satisfy 0 < p < 1/w.  Defaults to the
                 midpoint 1/(2w) for headroom in the drift bound.
    delta_max -- upper bound on the maximum degree of every graph shown to
                 the engine (the walk normalizer).
    """

    w: int = 1
    p: float | None = None
    delta_max: int = 6

    def __post_init__(self):
        if self.w < 1:
            raise ValueError(f"w must be a positive integer, got {self.w}")
        if self.p is None:
            object.__setattr__(self, "p", 1.0 / (2.0 * self.w))
        if not (0.0 < self.p < 1.0 / self.w):
            raise ValueError(f"p must lie in (0, 1/w) = (0, {1.0 / self.w}); got {self.p}")
        if self.delta_max < 1:
            raise ValueError(f"delta_max must be >= 1, got {self.delta_max}")
