"""
Dispatching-rule baselines.

Three workstation rules (SPT, SQL, SWL_W) crossed with three AIV rules
(MC, STT, SWL_A) give nine policies, named ``<AIV rule>.<WS rule>``.
Every rule breaks ties by the lowest id.
"""

from typing import Callable, Dict, List, Sequence

from .errors import ConfigurationError
from .policy import Policy
from .simulation import Job, SimState, TransportRequest

WS_RULES = ("SPT", "SQL", "SWL_W")
AIV_RULES = ("STT", "SWL_A", "MC")

# Column order of the comparison tables.
HEURISTIC_NAMES = tuple(f"{a}.{w}" for a in AIV_RULES for w in WS_RULES)


def _argmin(candidates: Sequence[int], score: Callable[[int], float]) -> int:
    return min(candidates, key=lambda c: (score(c), c))


def _argmax(candidates: Sequence[int], score: Callable[[int], float]) -> int:
    return min(candidates, key=lambda c: (-score(c), c))


def select_workstation(rule: str, job: Job, state: SimState) -> int:
    """Pick a workstation for the job's next operation.

    Args:
        rule: SPT (shortest processing time), SQL (shortest queue) or
            SWL_W (lowest busy-time percentage).
    """
    op = job.current_operation
    eligible: List[int] = op.eligible_workstations
    if rule == "SPT":
        return _argmin(eligible, lambda w: op.processing_time[w])
    if rule == "SQL":
        return _argmin(eligible, lambda w: state.workstations[w].queue_length)
    if rule == "SWL_W":
        return _argmin(eligible, state.busy_percentage_ws)
    raise ConfigurationError(f"Unknown workstation rule '{rule}', expected one of {WS_RULES}")


def select_aiv(rule: str, job: Job, state: SimState, pickup_node: int = None) -> int:
    """Pick the AIV that receives the job's transport request.

    Args:
        rule: MC (most charge), STT (shortest transfer time to the pickup
            node) or SWL_A (lowest busy-time percentage).
        pickup_node: Node the job is collected from; defaults to its location.
    """
    candidates = list(range(len(state.aivs)))
    if rule == "MC":
        return _argmax(candidates, state.battery)
    if rule == "STT":
        node = job.location if pickup_node is None else pickup_node
        return _argmin(candidates, lambda a: state.layout.time(state.aivs[a].location, node))
    if rule == "SWL_A":
        return _argmin(candidates, state.busy_percentage_aiv)
    raise ConfigurationError(f"Unknown AIV rule '{rule}', expected one of {AIV_RULES}")


class HeuristicPolicy(Policy):
    """A stateless pairing of one workstation rule and one AIV rule."""

    def __init__(self, ws_rule: str, aiv_rule: str):
        if ws_rule not in WS_RULES:
            raise ConfigurationError(f"Unknown workstation rule '{ws_rule}', expected one of {WS_RULES}")
        if aiv_rule not in AIV_RULES:
            raise ConfigurationError(f"Unknown AIV rule '{aiv_rule}', expected one of {AIV_RULES}")
        self.ws_rule = ws_rule
        self.aiv_rule = aiv_rule
        self.name = f"{aiv_rule}.{ws_rule}"

    def choose_workstation(self, state: SimState, job: Job) -> int:
        return select_workstation(self.ws_rule, job, state)

    def choose_aiv(self, state: SimState, job: Job, request: TransportRequest) -> int:
        return select_aiv(self.aiv_rule, job, state, pickup_node=request.origin)


def heuristic_from_name(name: str) -> HeuristicPolicy:
    """Build a policy from ``AIV.WS`` notation, e.g. ``STT.SPT``.

    Raises:
        ConfigurationError: Listing the nine valid names when ``name`` is unknown.
    """
    if name not in HEURISTIC_NAMES:
        raise ConfigurationError(f"Unknown policy '{name}'. Valid heuristics: {', '.join(HEURISTIC_NAMES)}")
    aiv_rule, ws_rule = name.split(".")
    return HeuristicPolicy(ws_rule, aiv_rule)


def all_heuristics() -> Dict[str, HeuristicPolicy]:
    return {name: heuristic_from_name(name) for name in HEURISTIC_NAMES}
