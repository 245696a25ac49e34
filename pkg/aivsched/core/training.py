"""
Training and evaluation loops for the MADQN scheduler, plus checkpoints.

A checkpoint is a JSON document holding the episode counter, the training
and scenario configuration and, for every agent pair, the online and
target parameters and the SGD step counter. Replay buffers are not saved;
a resumed run refills them from scratch.
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .errors import ConfigurationError, ScenarioParseError, TrainingDivergenceError
from .madqn import (
    WS,
    AIV,
    AgentPair,
    Learner,
    MadqnPolicy,
    TrainConfig,
    aiv_observation_width,
    build_agents,
    ws_observation_width,
)
from .policy import RunResult, run_episode
from .scenario import Scenario, ScenarioConfig, generate_scenario
from ..utils.log import get_logger
from ..utils.seeding import SeededStreams

logger = get_logger("train")

CHECKPOINT_FORMAT = "aivsched-checkpoint"
CHECKPOINT_VERSION = 1
LOG_COLUMNS = ["episode", "epsilon", "mean_loss_ws", "mean_loss_aiv", "total_tardiness", "n_tardy", "energy_pct"]


@dataclass
class Checkpoint:
    agents: List[AgentPair]
    config: TrainConfig
    episode: int = 0
    scenario_config: Optional[Dict[str, Any]] = None

    @property
    def n_workstations(self) -> int:
        return self.agents[0].ws.online.n_actions

    @property
    def n_aivs(self) -> int:
        return self.agents[0].aiv.online.n_actions


@dataclass
class TrainingResult:
    checkpoint: Checkpoint
    log: pd.DataFrame


def check_compatible(checkpoint: Checkpoint, scenario: Scenario):
    """Raise ConfigurationError unless the networks fit the scenario's shop."""
    ws, aiv = checkpoint.agents[0].ws.online, checkpoint.agents[0].aiv.online
    if ws.n_actions != scenario.n_workstations or ws.d_in != ws_observation_width(scenario.n_workstations):
        raise ConfigurationError(
            f"Checkpoint was trained for {ws.n_actions} workstations, scenario has {scenario.n_workstations}"
        )
    if aiv.n_actions != scenario.n_aivs or aiv.d_in != aiv_observation_width(scenario.n_aivs):
        raise ConfigurationError(f"Checkpoint was trained for {aiv.n_actions} AIVs, scenario has {scenario.n_aivs}")


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    path = Path(path)
    document = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "episode": checkpoint.episode,
        "train_config": checkpoint.config.to_dict(),
        "scenario_config": checkpoint.scenario_config,
        "agents": [{WS: pair.ws.to_dict(), AIV: pair.aiv.to_dict()} for pair in checkpoint.agents],
    }
    path.write_text(json.dumps(document) + "\n", encoding="utf-8")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Load a checkpoint written by ``save_checkpoint``.

    Raises:
        ScenarioParseError: On a malformed or foreign file.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"Invalid checkpoint file: {e.msg}", line=e.lineno) from e
    if not isinstance(data, dict) or data.get("format") != CHECKPOINT_FORMAT:
        raise ScenarioParseError(f"Not a checkpoint file (format must be '{CHECKPOINT_FORMAT}')", field="format")
    if data.get("version") != CHECKPOINT_VERSION:
        raise ScenarioParseError(f"Unsupported checkpoint version {data.get('version')}", field="version")
    try:
        config = TrainConfig.from_dict(data["train_config"])
        agents = [
            AgentPair(Learner.from_dict(pair[WS], config), Learner.from_dict(pair[AIV], config))
            for pair in data["agents"]
        ]
        episode = int(data["episode"])
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioParseError(f"Malformed checkpoint: {e}", field="agents") from e
    if not agents:
        raise ScenarioParseError("Checkpoint holds no agents", field="agents")
    return Checkpoint(agents=agents, config=config, episode=episode, scenario_config=data.get("scenario_config"))


def train(scenarios: Sequence[Scenario], config: TrainConfig, resume: Optional[Checkpoint] = None,
          checkpoint_path: Optional[Union[str, Path]] = None) -> TrainingResult:
    """Train the job agents' networks.

    Episode e simulates ``scenarios[e % len(scenarios)]`` under
    epsilon-greedy control. ``config.episodes`` is the total episode count:
    a resumed run continues at the checkpoint's episode counter.

    Raises:
        ConfigurationError: No training scenario or incompatible checkpoint.
        TrainingDivergenceError: On a non-finite loss or gradient; when
            ``checkpoint_path`` is given the last finite state is saved first.
    """
    config.validate()
    if not scenarios:
        raise ConfigurationError("At least one training scenario is required")
    streams = SeededStreams(config.seed)
    if resume is None:
        checkpoint = Checkpoint(
            agents=build_agents(scenarios[0], config, streams["weight-init"]),
            config=config,
            scenario_config=scenarios[0].config.to_dict(),
        )
    else:
        checkpoint = Checkpoint(resume.agents, config, resume.episode, resume.scenario_config)
        for pair in checkpoint.agents:
            pair.ws.config = pair.aiv.config = config
    for scenario in scenarios:
        check_compatible(checkpoint, scenario)

    rng = streams["exploration"]
    rows: List[Dict[str, Any]] = []
    for episode in range(checkpoint.episode, config.episodes):
        epsilon = config.epsilon(episode)
        policy = MadqnPolicy(checkpoint.agents, config, rng, epsilon=epsilon, training=True)
        scenario = scenarios[episode % len(scenarios)]
        try:
            result = run_episode(scenario, policy)
        except TrainingDivergenceError as e:
            logger.error(f"Training diverged in episode {episode}: {e}")
            if checkpoint_path is not None:
                save_checkpoint(checkpoint, checkpoint_path)
            raise
        checkpoint.episode = episode + 1
        row = {
            "episode": episode,
            "epsilon": epsilon,
            "mean_loss_ws": policy.mean_loss(WS),
            "mean_loss_aiv": policy.mean_loss(AIV),
            "total_tardiness": result.total_tardiness,
            "n_tardy": result.n_tardy,
            "energy_pct": result.total_energy,
        }
        rows.append(row)
        logger.info(
            f"Episode {episode}: eps={epsilon:.3f} tardiness={result.total_tardiness:.2f} "
            f"tardy={result.n_tardy} energy={result.total_energy:.2f}%"
        )
    if checkpoint_path is not None:
        save_checkpoint(checkpoint, checkpoint_path)
    return TrainingResult(checkpoint=checkpoint, log=pd.DataFrame(rows, columns=LOG_COLUMNS))


def write_training_log(log: pd.DataFrame, path: Union[str, Path], append: bool = False) -> Path:
    path = Path(path)
    if append and path.exists():
        log.to_csv(path, mode="a", header=False, index=False)
    else:
        log.to_csv(path, index=False)
    return path


def greedy_policy(checkpoint: Checkpoint) -> MadqnPolicy:
    """epsilon = 0, no learning; the exploration stream is never drawn from."""
    return MadqnPolicy(checkpoint.agents, checkpoint.config, np.random.default_rng(0), epsilon=0.0, training=False)


def evaluate(checkpoint: Checkpoint, scenario: Scenario, greedy: bool = True, epsilon: float = 0.0) -> RunResult:
    """Roll out the trained agents on ``scenario`` without learning."""
    check_compatible(checkpoint, scenario)
    if greedy:
        policy = greedy_policy(checkpoint)
    else:
        rng = SeededStreams(scenario.config.seed)["exploration"]
        policy = MadqnPolicy(checkpoint.agents, checkpoint.config, rng, epsilon=epsilon, training=False)
    return run_episode(scenario, policy)


def training_scenarios(base: ScenarioConfig, count: int) -> List[Scenario]:
    """``count`` scenarios with seeds base.seed .. base.seed + count - 1 and a shared layout."""
    layout_seed = base.seed if base.layout_seed is None else base.layout_seed
    return [generate_scenario(replace(base, seed=base.seed + i, layout_seed=layout_seed)) for i in range(count)]
