"""
Tests for the dispatching-rule policies
"""
import pytest

from aivsched.core.errors import ConfigurationError
from aivsched.core.heuristics import (
    HEURISTIC_NAMES,
    HeuristicPolicy,
    all_heuristics,
    heuristic_from_name,
    select_aiv,
    select_workstation,
)
from aivsched.core.policy import run_episode
from aivsched.core.scenario import ScenarioConfig, generate_scenario
from aivsched.core.simulation import SimState

#            S  WS1 WS2 WS3 CH1
TRANSFER = (
    (0, 10, 20, 30, 40),
    (10, 0, 15, 25, 35),
    (20, 15, 0, 12, 22),
    (30, 25, 12, 0, 18),
    (40, 35, 22, 18, 0),
)


@pytest.fixture
def state(scenario_factory):
    """A fresh state whose first job (arriving at 200) needs WS1, WS2 or WS3 (times 30, 10, 10)"""
    scenario = scenario_factory(
        transfer=TRANSFER,
        processing_times=[[{0: 30.0, 1: 10.0, 2: 10.0}]],
        arrivals=((200.0, 0),),
        aivs=3,
    )
    sim = SimState(scenario)
    sim.jobs[0].location = 0
    return sim


class TestWorkstationRules:
    """Tests for SPT, SQL and SWL_W"""

    def test_spt_ties_go_to_lowest_id(self, state):
        assert select_workstation("SPT", state.jobs[0], state) == 1

    def test_sql_counts_queue_and_machine(self, state):
        state.workstations[0].queue.extend([5, 6])
        state.workstations[1].current_job = 7
        assert select_workstation("SQL", state.jobs[0], state) == 2
        state.workstations[2].queue.extend([8, 9])
        assert select_workstation("SQL", state.jobs[0], state) == 1

    def test_swl_w_picks_least_busy(self, state):
        state.env.run(until=100.0)
        state.workstations[0].busy_time_accum = 50.0
        state.workstations[1].busy_time_accum = 20.0
        state.workstations[2].busy_time_accum = 20.0
        assert select_workstation("SWL_W", state.jobs[0], state) == 1

    def test_swl_w_counts_running_operation(self, state):
        state.env.run(until=100.0)
        state.workstations[1].busy_since = 10.0
        assert select_workstation("SWL_W", state.jobs[0], state) == 0

    def test_unknown_rule(self, state):
        with pytest.raises(ConfigurationError):
            select_workstation("LPT", state.jobs[0], state)


class TestAivRules:
    """Tests for STT, SWL_A and MC"""

    def test_stt_uses_pickup_node(self, state):
        state.aivs[0].location = 3
        state.aivs[1].location = 1
        state.aivs[2].location = 2
        assert select_aiv("STT", state.jobs[0], state, pickup_node=0) == 1
        assert select_aiv("STT", state.jobs[0], state, pickup_node=3) == 0

    def test_stt_ties_go_to_lowest_id(self, state):
        assert select_aiv("STT", state.jobs[0], state) == 0

    def test_swl_a(self, state):
        state.env.run(until=50.0)
        state.aivs[0].busy_time_accum = 10.0
        state.aivs[1].busy_time_accum = 5.0
        state.aivs[2].busy_time_accum = 5.0
        assert select_aiv("SWL_A", state.jobs[0], state) == 1

    def test_mc_reads_current_battery(self, state):
        state.aivs[0].battery_pct = 60.0
        state.aivs[1].battery_pct = 80.0
        state.aivs[2].battery_pct = 80.0
        assert select_aiv("MC", state.jobs[0], state) == 1

    def test_mc_includes_unsettled_drain(self, state):
        state.env.run(until=100.0)
        state.aivs[0].activity = "moving-1"
        state.aivs[2].activity = "moving-1"
        state.aivs[1].battery_pct = 99.5
        assert select_aiv("MC", state.jobs[0], state) == 1

    def test_unknown_rule(self, state):
        with pytest.raises(ConfigurationError):
            select_aiv("FIFO", state.jobs[0], state)


class TestPolicies:
    """Tests for the nine named policies"""

    def test_nine_names_in_table_order(self):
        assert HEURISTIC_NAMES == (
            "STT.SPT", "STT.SQL", "STT.SWL_W",
            "SWL_A.SPT", "SWL_A.SQL", "SWL_A.SWL_W",
            "MC.SPT", "MC.SQL", "MC.SWL_W",
        )
        assert list(all_heuristics()) == list(HEURISTIC_NAMES)

    def test_from_name(self):
        policy = heuristic_from_name("MC.SQL")
        assert isinstance(policy, HeuristicPolicy)
        assert (policy.aiv_rule, policy.ws_rule, policy.name) == ("MC", "SQL", "MC.SQL")

    def test_unknown_name_lists_valid_ones(self):
        with pytest.raises(ConfigurationError) as excinfo:
            heuristic_from_name("SPT.STT")
        for name in HEURISTIC_NAMES:
            assert name in str(excinfo.value)

    @pytest.mark.parametrize("name", HEURISTIC_NAMES)
    def test_every_policy_completes(self, name):
        scenario = generate_scenario(ScenarioConfig(n_jobs=8, seed=11))
        result = run_episode(scenario, heuristic_from_name(name))
        assert result.policy == name
        assert result.n_jobs == 8
        assert 0 <= result.n_tardy <= 8
        assert result.total_tardiness >= 0.0
        assert result.total_energy > 0.0

    def test_deterministic(self):
        scenario = generate_scenario(ScenarioConfig(n_jobs=8, seed=12))
        first = run_episode(scenario, heuristic_from_name("SWL_A.SWL_W"))
        second = run_episode(scenario, heuristic_from_name("SWL_A.SWL_W"))
        assert first.metrics_line() == second.metrics_line()
