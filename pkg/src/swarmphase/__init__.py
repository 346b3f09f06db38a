"""swarmphase: stimulus-driven phase changes in programmable matter.

A deterministic, seedable simulator for token-passing awareness waves on
dynamic graphs, the biased lattice compression that solves foraging, and an
executable ergodicity witness for the compression chain.
"""

from .states import (AgentState, BehaviorGroup, ProtocolParams, STATE_TAGS,
                     behavior_group, has_alert_token, has_witness_flag, is_aware)
from .rng import RngStream, trial_seed
from .engine import (World, WitnessEvent, WitnessSchedule, activate,
                     apply_witness_schedule, run_until, step)
from .graphs import (Adjacency, GraphSnapshot, RecurrenceLedger, ScriptedAdversary,
                     StaticAdversary, record_recurrence, validate_local_reconfiguration)
from .lattice import (FoodEvent, LatticeWorld, MoveProposal, apply_food_event,
                      execute_gather, execute_search, foraging_step, foraging_world,
                      is_valid_compression_move, snapshot, snapshot_json)
from .metrics import (DriftChainSpec, PerimeterReading, PotentialReading,
                      convergence_report, drift_absorption_trials, p_min, perimeter,
                      potential, residual_components, state_invariant_ok)
from .ergodicity import (CombPlanState, MoveCertificate, Orientation, PlanarConfig,
                         SpineFrame, comb, reduce_to_line, reorient_tail, spine_comb,
                         verify_certificate)
from .scenarios import (Scenario, TrialRecord, load_scenario, parse_scenario,
                        run_scenario, write_outputs)
from .errors import ScenarioViolation, StructuralError

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
