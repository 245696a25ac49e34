"""
AIV energy model and the per-vehicle energy ledger.

Battery levels are percentages. Consumption is a rate per time unit that
depends on what the vehicle is doing and how many products it carries:

    not moving                  0.01 %
    moving, carrying 0 products 0.02 %
    moving, carrying 1 product  0.05 %
    moving, carrying 2 products 0.10 %

Charging consumes nothing. Every simulated interval of every vehicle is
booked against exactly one activity class.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .errors import ConfigurationError

NOT_MOVING = "not-moving"
CHARGING = "charging"
CONSERVATION_TOLERANCE = 1e-9


def moving_class(load: int) -> str:
    """Activity class of a vehicle moving with ``load`` products aboard."""
    return f"moving-{load}"


@dataclass(frozen=True)
class EnergyModel:
    """Consumption rates in battery percent per time unit.

    Args:
        not_moving: Rate while idle or waiting.
        moving: ``moving[k]`` is the rate while moving with k products aboard.
    """
    not_moving: float = 0.01
    moving: Tuple[float, ...] = (0.02, 0.05, 0.10)

    def rate(self, activity: str) -> float:
        if activity == NOT_MOVING:
            return self.not_moving
        if activity == CHARGING:
            return 0.0
        if activity.startswith("moving-"):
            load = int(activity.split("-", 1)[1])
            if 0 <= load < len(self.moving):
                return self.moving[load]
        raise ConfigurationError(f"No consumption rate for activity class '{activity}'")

    def validate(self, capacity: int):
        if self.not_moving < 0 or any(r < 0 for r in self.moving):
            raise ConfigurationError("Energy rates must be nonnegative")
        if len(self.moving) < capacity + 1:
            raise ConfigurationError(
                f"Energy model defines moving rates for up to {len(self.moving) - 1} products "
                f"but AIV capacity is {capacity}"
            )

    def to_dict(self) -> Dict:
        return {"not_moving": self.not_moving, "moving": list(self.moving)}

    @classmethod
    def from_dict(cls, data: Dict) -> "EnergyModel":
        return cls(not_moving=float(data["not_moving"]), moving=tuple(float(r) for r in data["moving"]))


@dataclass(frozen=True)
class LedgerEntry:
    aiv_id: int
    start: float
    end: float
    activity: str
    pct: float


@dataclass
class EnergyLedger:
    """Contiguous, non-overlapping consumption intervals for every AIV."""
    entries: Dict[int, List[LedgerEntry]] = field(default_factory=dict)
    recharged: Dict[int, float] = field(default_factory=dict)

    def append(self, entry: LedgerEntry):
        rows = self.entries.setdefault(entry.aiv_id, [])
        if rows and abs(rows[-1].end - entry.start) > CONSERVATION_TOLERANCE:
            raise ValueError(
                f"Ledger gap for AIV {entry.aiv_id}: last interval ends at {rows[-1].end}, "
                f"new one starts at {entry.start}"
            )
        if entry.end < entry.start:
            raise ValueError(f"Ledger interval ends before it starts: {entry}")
        rows.append(entry)

    def record_recharge(self, aiv_id: int, pct: float):
        self.recharged[aiv_id] = self.recharged.get(aiv_id, 0.0) + pct

    def total(self, aiv_id: int = None) -> float:
        """Total consumption of one AIV, or of the whole fleet."""
        if aiv_id is None:
            return sum(self.total(a) for a in self.entries)
        return sum(e.pct for e in self.entries.get(aiv_id, []))

    def consumed_between(self, aiv_id: int, start: float, end: float) -> float:
        """Consumption of one AIV over ``[start, end]``.

        Intervals partly inside the window are prorated; consumption is
        linear in time within an interval.
        """
        total = 0.0
        for e in self.entries.get(aiv_id, []):
            lo, hi = max(start, e.start), min(end, e.end)
            if hi <= lo:
                continue
            span = e.end - e.start
            total += e.pct if span == 0 else e.pct * (hi - lo) / span
        return total

    def conservation_error(self, aiv_id: int, initial: float, current: float) -> float:
        """|Σ consumption − (initial − current + recharged)| for one AIV."""
        return abs(self.total(aiv_id) - (initial - current + self.recharged.get(aiv_id, 0.0)))
