"""
Problem instances: generation, persistence and the due-date model.

A scenario fixes everything a run needs: the layout (transfer times between
storage, workstations and charging stations), the processing time of every
product operation on every eligible workstation, the job arrivals with their
due dates, the pre-drawn unavailability trace of each workstation and the
AIV fleet configuration.

Scenario files are JSON documents with a versioned header::

    {"format": "aivsched-scenario", "version": 1, "seed": ..., "config": {...},
     "layout": {...}, "products": [...], "processing_times": [...],
     "jobs": [...], "breakdowns": {...}}
"""

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import case_study
from .energy import EnergyModel
from .errors import ConfigurationError, ScenarioParseError
from ..utils.log import get_logger
from ..utils.seeding import SeededStreams

logger = get_logger("scenario")

SCENARIO_FORMAT = "aivsched-scenario"
SCENARIO_VERSION = 1
T_FLOOR = 0.1


@dataclass(frozen=True)
class BreakdownConfig:
    """Workstation unavailability model (exponential gaps and repair times).

    Args:
        mean_tbi: Mean time between two unavailabilities.
        mean_trf: Mean time required for fixing.
        enabled: Draw no unavailabilities at all when False.
    """
    mean_tbi: float = 200.0
    mean_trf: float = 50.0
    enabled: bool = True


@dataclass(frozen=True)
class AivConfig:
    count: int = 2
    capacity: int = 2
    charge_threshold: float = 40.0
    recharge_duration: float = 30.0
    initial_battery: float = 100.0
    n_chargers: int = case_study.DEFAULT_N_CHARGERS


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to draw a scenario.

    ``arrival_mean`` is the mean inter-arrival time unless ``arrival_is_rate``
    is set, in which case it is read as arrivals per time unit. The due-date
    coefficient T is drawn from Normal(``due_date_mu``, ``due_date_sigma``);
    ``due_date_mu`` defaults to ``n_jobs / 4``.
    """
    n_jobs: int = 20
    n_products: int = 4
    n_workstations: int = case_study.DEFAULT_N_WORKSTATIONS
    routings: Tuple[Tuple[Tuple[int, ...], ...], ...] = case_study.DEFAULT_ROUTINGS
    arrival_mean: float = 5.0
    arrival_is_rate: bool = False
    due_date_mu: Optional[float] = None
    due_date_sigma: float = 4.0
    breakdown: BreakdownConfig = field(default_factory=BreakdownConfig)
    layout_range: Tuple[int, int] = (10, 50)
    processing_time_range: Tuple[int, int] = (5, 50)
    aiv: AivConfig = field(default_factory=AivConfig)
    energy: EnergyModel = field(default_factory=EnergyModel)
    preset: str = "random"
    seed: int = 0
    layout_seed: Optional[int] = None

    @property
    def t_mu(self) -> float:
        return self.n_jobs / 4.0 if self.due_date_mu is None else self.due_date_mu

    @property
    def mean_interarrival(self) -> float:
        return 1.0 / self.arrival_mean if self.arrival_is_rate else self.arrival_mean

    def validate(self):
        if self.n_jobs <= 0 or self.n_products <= 0:
            raise ConfigurationError("n_jobs and n_products must be positive")
        if self.n_jobs % self.n_products != 0:
            raise ConfigurationError(
                f"n_jobs ({self.n_jobs}) must be divisible by n_products ({self.n_products}) "
                "so every product gets the same number of jobs"
            )
        if len(self.routings) != self.n_products:
            raise ConfigurationError(
                f"{len(self.routings)} routings configured for {self.n_products} products"
            )
        for p, routing in enumerate(self.routings):
            if not routing:
                raise ConfigurationError(f"Product P{p + 1} has no operations")
            for o, eligible in enumerate(routing):
                if not eligible:
                    raise ConfigurationError(f"Operation {o + 1} of P{p + 1} has no eligible workstation")
                if any(ws < 0 or ws >= self.n_workstations for ws in eligible):
                    raise ConfigurationError(
                        f"Operation {o + 1} of P{p + 1} references a workstation outside 1..{self.n_workstations}"
                    )
        if self.arrival_mean <= 0 or self.due_date_sigma < 0:
            raise ConfigurationError("Arrival parameter must be positive and sigma nonnegative")
        if self.breakdown.mean_tbi <= 0 or self.breakdown.mean_trf <= 0:
            raise ConfigurationError("Breakdown means must be positive")
        for name, (lo, hi) in (("layout_range", self.layout_range),
                               ("processing_time_range", self.processing_time_range)):
            if lo <= 0 or hi < lo:
                raise ConfigurationError(f"{name} must be a positive interval, got [{lo}, {hi}]")
        aiv = self.aiv
        if aiv.count <= 0 or aiv.capacity <= 0 or aiv.n_chargers <= 0:
            raise ConfigurationError("AIV count, capacity and charger count must be positive")
        if not 0 <= aiv.charge_threshold <= 100 or not 0 < aiv.initial_battery <= 100:
            raise ConfigurationError("Battery levels must lie in [0, 100]")
        if aiv.recharge_duration <= 0:
            raise ConfigurationError("recharge_duration must be positive")
        self.energy.validate(aiv.capacity)
        if self.preset not in case_study.PRESETS:
            raise ConfigurationError(f"Unknown preset '{self.preset}', expected one of {case_study.PRESETS}")
        if self.preset == "reference" and (
            tuple(self.routings) != case_study.DEFAULT_ROUTINGS
            or self.n_workstations != case_study.DEFAULT_N_WORKSTATIONS
            or aiv.n_chargers != case_study.DEFAULT_N_CHARGERS
        ):
            raise ConfigurationError("The reference preset needs the default routings, 5 workstations and 2 chargers")
        if self.seed < 0 or (self.layout_seed is not None and self.layout_seed < 0):
            raise ConfigurationError("Seeds must be nonnegative")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_jobs": self.n_jobs,
            "n_products": self.n_products,
            "n_workstations": self.n_workstations,
            "routings": [[list(e) for e in r] for r in self.routings],
            "arrival_mean": self.arrival_mean,
            "arrival_is_rate": self.arrival_is_rate,
            "due_date_mu": self.t_mu,
            "due_date_sigma": self.due_date_sigma,
            "breakdown": {
                "mean_tbi": self.breakdown.mean_tbi,
                "mean_trf": self.breakdown.mean_trf,
                "enabled": self.breakdown.enabled,
            },
            "layout_range": list(self.layout_range),
            "processing_time_range": list(self.processing_time_range),
            "aiv": {
                "count": self.aiv.count,
                "capacity": self.aiv.capacity,
                "charge_threshold": self.aiv.charge_threshold,
                "recharge_duration": self.aiv.recharge_duration,
                "initial_battery": self.aiv.initial_battery,
                "n_chargers": self.aiv.n_chargers,
            },
            "energy": self.energy.to_dict(),
            "preset": self.preset,
            "seed": self.seed,
            "layout_seed": self.layout_seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        base = cls()
        kwargs: Dict[str, Any] = {}
        for key in ("n_jobs", "n_products", "n_workstations", "seed"):
            if key in data:
                kwargs[key] = int(data[key])
        for key in ("arrival_mean", "due_date_sigma"):
            if key in data:
                kwargs[key] = float(data[key])
        if "due_date_mu" in data and data["due_date_mu"] is not None:
            kwargs["due_date_mu"] = float(data["due_date_mu"])
        if "arrival_is_rate" in data:
            kwargs["arrival_is_rate"] = bool(data["arrival_is_rate"])
        if "preset" in data:
            kwargs["preset"] = str(data["preset"])
        if data.get("layout_seed") is not None:
            kwargs["layout_seed"] = int(data["layout_seed"])
        if "routings" in data:
            kwargs["routings"] = tuple(tuple(tuple(int(w) for w in e) for e in r) for r in data["routings"])
        for key in ("layout_range", "processing_time_range"):
            if key in data:
                lo, hi = data[key]
                kwargs[key] = (int(lo), int(hi))
        if "breakdown" in data:
            b = data["breakdown"]
            kwargs["breakdown"] = BreakdownConfig(
                mean_tbi=float(b.get("mean_tbi", base.breakdown.mean_tbi)),
                mean_trf=float(b.get("mean_trf", base.breakdown.mean_trf)),
                enabled=bool(b.get("enabled", True)),
            )
        if "aiv" in data:
            a = data["aiv"]
            kwargs["aiv"] = AivConfig(
                count=int(a.get("count", base.aiv.count)),
                capacity=int(a.get("capacity", base.aiv.capacity)),
                charge_threshold=float(a.get("charge_threshold", base.aiv.charge_threshold)),
                recharge_duration=float(a.get("recharge_duration", base.aiv.recharge_duration)),
                initial_battery=float(a.get("initial_battery", base.aiv.initial_battery)),
                n_chargers=int(a.get("n_chargers", base.aiv.n_chargers)),
            )
        if "energy" in data:
            kwargs["energy"] = EnergyModel.from_dict(data["energy"])
        return replace(base, **kwargs)


class Layout:
    """Symmetric transfer-time matrix over the nodes S, WS1..WSm, CH1..CHc.

    Args:
        n_workstations: m.
        n_chargers: c.
        transfer: (1+m+c) x (1+m+c) matrix of transfer times, zero diagonal.
    """

    STORAGE = 0

    def __init__(self, n_workstations: int, n_chargers: int, transfer: Union[np.ndarray, Sequence[Sequence[float]]]):
        self.n_workstations = int(n_workstations)
        self.n_chargers = int(n_chargers)
        self.transfer = np.array(transfer, dtype=float)
        size = 1 + self.n_workstations + self.n_chargers
        if self.transfer.shape != (size, size):
            raise ConfigurationError(
                f"Transfer matrix must be {size}x{size} for {n_workstations} workstations "
                f"and {n_chargers} chargers, got {self.transfer.shape}"
            )

    @property
    def nodes(self) -> List[str]:
        return (["S"] + [f"WS{i + 1}" for i in range(self.n_workstations)]
                + [f"CH{c + 1}" for c in range(self.n_chargers)])

    @property
    def max_transfer(self) -> float:
        return float(self.transfer.max())

    def ws_node(self, ws: int) -> int:
        return 1 + ws

    def charger_node(self, charger: int) -> int:
        return 1 + self.n_workstations + charger

    def node_name(self, node: int) -> str:
        return self.nodes[node]

    def time(self, a: int, b: int) -> float:
        return float(self.transfer[a, b])

    def check(self, value_range: Optional[Tuple[float, float]] = None):
        """Raise ConfigurationError unless the matrix is a valid layout."""
        t = self.transfer
        if not np.array_equal(t, t.T):
            raise ConfigurationError("Transfer matrix is not symmetric")
        if np.any(np.diag(t) != 0):
            raise ConfigurationError("Transfer matrix diagonal must be zero")
        off = t[~np.eye(len(t), dtype=bool)]
        if np.any(off <= 0):
            raise ConfigurationError("Off-diagonal transfer times must be positive")
        if value_range is not None and (off.min() < value_range[0] or off.max() > value_range[1]):
            raise ConfigurationError(f"Transfer times outside [{value_range[0]}, {value_range[1]}]")

    def __eq__(self, other) -> bool:
        return (isinstance(other, Layout)
                and self.n_workstations == other.n_workstations
                and self.n_chargers == other.n_chargers
                and np.array_equal(self.transfer, other.transfer))

    def __repr__(self) -> str:
        return f"Layout(n_workstations={self.n_workstations}, n_chargers={self.n_chargers})"


@dataclass(frozen=True)
class JobSpec:
    id: int
    product: int
    arrival_time: float
    due_date: float
    t_draw: float


@dataclass
class Scenario:
    config: ScenarioConfig
    layout: Layout
    # processing_times[product][operation] maps workstation id -> time
    processing_times: List[List[Dict[int, float]]]
    jobs: List[JobSpec]
    # breakdowns[ws] is a list of (start, duration), sorted by start
    breakdowns: List[List[Tuple[float, float]]]

    @property
    def n_jobs(self) -> int:
        return len(self.jobs)

    @property
    def n_workstations(self) -> int:
        return self.layout.n_workstations

    @property
    def n_aivs(self) -> int:
        return self.config.aiv.count

    def operations_of(self, product: int) -> List[Dict[int, float]]:
        return self.processing_times[product]

    def horizon_estimate(self) -> float:
        """n_jobs x mean inter-arrival + Σ of all mean processing times."""
        total_mean = sum(
            sum(mean_processing_time(op) for op in self.operations_of(job.product)) for job in self.jobs
        )
        return self.n_jobs * self.config.mean_interarrival + total_mean

    def to_dict(self) -> Dict[str, Any]:
        ws_name = lambda ws: f"WS{ws + 1}"
        return {
            "format": SCENARIO_FORMAT,
            "version": SCENARIO_VERSION,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "layout": {
                "nodes": self.layout.nodes,
                "transfer": self.layout.transfer.tolist(),
            },
            "products": [
                {"name": f"P{p + 1}", "routing": [[ws_name(ws) for ws in sorted(op)] for op in ops]}
                for p, ops in enumerate(self.processing_times)
            ],
            "processing_times": [
                [{ws_name(ws): op[ws] for ws in sorted(op)} for op in ops] for ops in self.processing_times
            ],
            "jobs": [
                {"id": j.id, "product": f"P{j.product + 1}", "arrival": j.arrival_time,
                 "due": j.due_date, "t_draw": j.t_draw}
                for j in self.jobs
            ],
            "breakdowns": {
                ws_name(ws): [[start, duration] for start, duration in trace]
                for ws, trace in enumerate(self.breakdowns)
            },
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def content_hash(self) -> str:
        """SHA-256 of the stochastic inputs (layout, times, jobs, breakdowns)."""
        data = self.to_dict()
        payload = {k: data[k] for k in ("layout", "processing_times", "jobs", "breakdowns")}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def mean_processing_time(op: Union[Mapping[int, float], Any]) -> float:
    """Arithmetic mean of an operation's processing times over its eligible workstations.

    Accepts the processing-time mapping itself or any object exposing it as
    ``processing_time``.
    """
    times = op.processing_time if hasattr(op, "processing_time") else op
    if not times:
        raise ConfigurationError("Operation has no eligible workstation")
    return sum(times.values()) / len(times)


def draw_t(rng: np.random.Generator, mu: float, sigma: float, floor: float = T_FLOOR) -> float:
    """One due-date coefficient T ~ Normal(mu, sigma), clamped below at ``floor``."""
    return max(floor, float(rng.normal(mu, sigma)))


def due_date(arrival_time: float, operations: Sequence[Mapping[int, float]], t_draw: float) -> float:
    """ArrivalTime + T x Σ mean processing time over the job's operations."""
    return arrival_time + t_draw * sum(mean_processing_time(op) for op in operations)


def _draw_layout(config: ScenarioConfig, rng: np.random.Generator) -> Layout:
    size = 1 + config.n_workstations + config.aiv.n_chargers
    lo, hi = config.layout_range
    upper = rng.integers(lo, hi, size=(size, size), endpoint=True).astype(float)
    transfer = np.triu(upper, 1)
    transfer = transfer + transfer.T
    return Layout(config.n_workstations, config.aiv.n_chargers, transfer)


def _draw_processing_times(config: ScenarioConfig, rng: np.random.Generator) -> List[List[Dict[int, float]]]:
    lo, hi = config.processing_time_range
    times = []
    for routing in config.routings:
        ops = []
        for eligible in routing:
            ops.append({ws: float(rng.integers(lo, hi, endpoint=True)) for ws in sorted(eligible)})
        times.append(ops)
    return times


def _draw_breakdowns(config: ScenarioConfig, rng: np.random.Generator, horizon: float) -> List[List[Tuple[float, float]]]:
    traces: List[List[Tuple[float, float]]] = []
    for _ in range(config.n_workstations):
        trace: List[Tuple[float, float]] = []
        t = 0.0
        while config.breakdown.enabled:
            start = t + float(rng.exponential(config.breakdown.mean_tbi))
            if start > horizon:
                break
            duration = max(float(rng.exponential(config.breakdown.mean_trf)), 1e-9)
            trace.append((start, duration))
            t = start + duration
        traces.append(trace)
    return traces


def breakdown_horizon(arrivals: Sequence[float], operations: Sequence[Sequence[Mapping[int, float]]],
                      layout_max: float) -> float:
    """Time up to which unavailabilities are drawn."""
    busy = sum(max(op.values()) for ops in operations for op in ops)
    n_ops = sum(len(ops) for ops in operations)
    last = max(arrivals) if len(arrivals) else 0.0
    return 2.0 * (last + busy + 2.0 * layout_max * n_ops)


def generate_scenario(config: ScenarioConfig) -> Scenario:
    """Draw a complete scenario from ``config``.

    Raises:
        ConfigurationError: If the configuration is invalid.
    """
    config.validate()
    streams = SeededStreams(config.seed)
    layout_streams = SeededStreams(config.seed if config.layout_seed is None else config.layout_seed)

    if config.preset == "reference":
        layout = Layout(config.n_workstations, config.aiv.n_chargers, case_study.REFERENCE_LAYOUT)
        processing_times = [[{ws: float(t) for ws, t in op.items()} for op in ops]
                            for ops in case_study.REFERENCE_PROCESSING_TIMES]
    else:
        layout = _draw_layout(config, layout_streams["layout"])
        processing_times = _draw_processing_times(config, streams["processing-times"])

    gaps = streams["arrivals"].exponential(config.mean_interarrival, size=config.n_jobs)
    arrivals = np.cumsum(gaps)
    due_rng = streams["due-dates"]
    jobs = []
    for i in range(config.n_jobs):
        product = i % config.n_products
        t_draw = draw_t(due_rng, config.t_mu, config.due_date_sigma)
        arrival = float(arrivals[i])
        jobs.append(JobSpec(
            id=i,
            product=product,
            arrival_time=arrival,
            due_date=due_date(arrival, processing_times[product], t_draw),
            t_draw=t_draw,
        ))

    horizon = breakdown_horizon(
        [j.arrival_time for j in jobs], [processing_times[j.product] for j in jobs], layout.max_transfer
    )
    breakdowns = _draw_breakdowns(config, streams["breakdowns"], horizon)
    logger.info(
        f"Generated scenario: {config.n_jobs} jobs, seed {config.seed}, "
        f"{sum(len(b) for b in breakdowns)} unavailabilities"
    )
    return Scenario(config=config, layout=layout, processing_times=processing_times, jobs=jobs, breakdowns=breakdowns)


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(scenario.canonical_json() + "\n", encoding="utf-8")
    return path


def _require(data: Any, key: str, path: str, kind: Union[type, Tuple[type, ...]] = None) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise ScenarioParseError("Missing required field", field=f"{path}.{key}" if path else key)
    value = data[key]
    if kind is not None and not isinstance(value, kind):
        names = " or ".join(k.__name__ for k in (kind if isinstance(kind, tuple) else (kind,)))
        raise ScenarioParseError(f"Expected {names}", field=f"{path}.{key}" if path else key)
    return value


def _parse_name(name: Any, prefix: str, field_path: str, limit: int) -> int:
    if not isinstance(name, str) or not name.startswith(prefix) or not name[len(prefix):].isdigit():
        raise ScenarioParseError(f"Expected a name like '{prefix}1', got {name!r}", field=field_path)
    index = int(name[len(prefix):]) - 1
    if not 0 <= index < limit:
        raise ScenarioParseError(f"'{name}' is out of range", field=field_path)
    return index


def scenario_from_dict(data: Any) -> Scenario:
    """Rebuild a scenario from its JSON document and validate it; raise ScenarioParseError on any problem."""
    if not isinstance(data, dict):
        raise ScenarioParseError("Scenario document must be a JSON object")
    if data.get("format") != SCENARIO_FORMAT:
        raise ScenarioParseError(f"Not a scenario file (format must be '{SCENARIO_FORMAT}')", field="format")
    if _require(data, "version", "", int) != SCENARIO_VERSION:
        raise ScenarioParseError(f"Unsupported scenario version {data['version']}", field="version")
    try:
        layout_data = _require(data, "layout", "", dict)
        nodes = _require(layout_data, "nodes", "layout", list)
        n_ws = sum(1 for n in nodes if isinstance(n, str) and n.startswith("WS"))
        n_ch = sum(1 for n in nodes if isinstance(n, str) and n.startswith("CH"))
        transfer = _require(layout_data, "transfer", "layout", list)
        try:
            layout = Layout(n_ws, n_ch, transfer)
            layout.check()
        except (ValueError, TypeError, ConfigurationError) as e:
            raise ScenarioParseError(str(e), field="layout.transfer") from e

        products = _require(data, "products", "", list)
        raw_times = _require(data, "processing_times", "", list)
        if len(raw_times) != len(products):
            raise ScenarioParseError("One processing-time list per product is required", field="processing_times")
        processing_times: List[List[Dict[int, float]]] = []
        routings = []
        for p, ops in enumerate(raw_times):
            if not isinstance(ops, list) or not ops:
                raise ScenarioParseError("Expected a nonempty list of operations", field=f"processing_times[{p}]")
            parsed_ops = []
            for o, op in enumerate(ops):
                where = f"processing_times[{p}][{o}]"
                if not isinstance(op, dict) or not op:
                    raise ScenarioParseError("Expected a nonempty workstation -> time mapping", field=where)
                times = {}
                for name, value in op.items():
                    ws = _parse_name(name, "WS", where, n_ws)
                    if not isinstance(value, (int, float)) or value <= 0:
                        raise ScenarioParseError("Processing times must be positive numbers", field=f"{where}.{name}")
                    times[ws] = float(value)
                parsed_ops.append(times)
            processing_times.append(parsed_ops)
            routings.append(tuple(tuple(sorted(op)) for op in parsed_ops))

        jobs = []
        for i, job in enumerate(_require(data, "jobs", "", list)):
            where = f"jobs[{i}]"
            product = _parse_name(_require(job, "product", where, str), "P", f"{where}.product", len(products))
            arrival = float(_require(job, "arrival", where, (int, float)))
            t_draw = float(job.get("t_draw", 1.0))
            due = job.get("due")
            due = due_date(arrival, processing_times[product], t_draw) if due is None else float(due)
            jobs.append(JobSpec(id=int(_require(job, "id", where, int)), product=product,
                                arrival_time=arrival, due_date=due, t_draw=t_draw))
        if [j.id for j in jobs] != list(range(len(jobs))):
            raise ScenarioParseError("Job ids must be 0..n-1 in order", field="jobs")
        previous = 0.0
        for job in jobs:
            if not np.isfinite(job.arrival_time) or job.arrival_time < previous:
                raise ScenarioParseError("Arrival times must be finite, nonnegative and nondecreasing in job order",
                                         field=f"jobs[{job.id}].arrival")
            previous = job.arrival_time

        breakdowns: List[List[Tuple[float, float]]] = [[] for _ in range(n_ws)]
        for name, trace in data.get("breakdowns", {}).items():
            ws = _parse_name(name, "WS", f"breakdowns.{name}", n_ws)
            if not isinstance(trace, list):
                raise ScenarioParseError("Expected a list of [start, duration] pairs", field=f"breakdowns.{name}")
            for k, pair in enumerate(trace):
                if not isinstance(pair, list) or len(pair) != 2 or pair[0] < 0 or pair[1] <= 0:
                    raise ScenarioParseError("Expected [start>=0, duration>0]", field=f"breakdowns.{name}[{k}]")
                breakdowns[ws].append((float(pair[0]), float(pair[1])))

        header = data.get("config", {})
        if not isinstance(header, dict):
            raise ScenarioParseError("Expected an object", field="config")
        config = replace(
            ScenarioConfig.from_dict(header),
            n_jobs=len(jobs),
            n_products=len(products),
            n_workstations=n_ws,
            routings=tuple(routings),
            seed=int(data.get("seed", header.get("seed", 0))),
        )
        config = replace(config, aiv=replace(config.aiv, n_chargers=n_ch))
        try:
            config.validate()
        except ConfigurationError as e:
            raise ScenarioParseError(str(e), field="config") from e
    except ScenarioParseError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ScenarioParseError(f"Malformed scenario: {e}") from e
    return Scenario(config=config, layout=layout, processing_times=processing_times, jobs=jobs, breakdowns=breakdowns)


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Load a scenario file.

    Raises:
        ScenarioParseError: Malformed, truncated or invalid file; no partial scenario is returned.
        OSError: The file cannot be read.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"Invalid scenario file: {e.msg}", line=e.lineno) from e
    return scenario_from_dict(data)
