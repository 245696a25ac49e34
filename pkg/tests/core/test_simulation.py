"""
Tests for the discrete-event engine
"""
import pytest
import simpy

from aivsched.core.errors import (
    BatteryDepletedWarning,
    InvalidTransitionError,
    SimulationCorruptionError,
)
from aivsched.core.heuristics import heuristic_from_name
from aivsched.core.policy import simulate, trace_text
from aivsched.core.scenario import ScenarioConfig, generate_scenario
from aivsched.core.simulation import (
    EVENT_PRIORITY,
    DecisionKind,
    EventKind,
    JobStatus,
    ShopEvent,
    SimState,
    merge_windows,
)

from tests.conftest import ScriptedPolicy

ONE_OP = [[{0: 10.0}]]


@pytest.fixture
def generated():
    return generate_scenario(ScenarioConfig(n_jobs=8, seed=3))


class TestDecisionFlow:
    """Tests for how the engine surfaces and accepts decisions"""

    def test_arrival_surfaces_workstation_decision(self, micro_scenario):
        state = SimState(micro_scenario)
        outcome = state.advance_to_next_event()
        assert outcome.kind == EventKind.ARRIVAL
        assert outcome.decision is None
        outcome = state.advance_to_next_event()
        assert outcome.kind == EventKind.DECISION
        assert outcome.decision.kind == DecisionKind.WORKSTATION
        assert outcome.decision.job_id == 0
        assert outcome.time == 5.0

    def test_workstation_then_aiv_decision(self, micro_scenario):
        state = SimState(micro_scenario)
        state.advance_to_next_event()
        state.advance_to_next_event()
        decision = state.assign_workstation(0, 1)
        assert decision.kind == DecisionKind.AIV
        assert decision.request.origin == 0
        assert decision.request.destination == 1
        state.assign_aiv(0, 0)
        assert state.pending_decision is None
        assert state.jobs[0].transport_requested

    def test_cannot_advance_with_pending_decision(self, micro_scenario):
        state = SimState(micro_scenario)
        state.advance_to_next_event()
        state.advance_to_next_event()
        with pytest.raises(SimulationCorruptionError, match="unresolved"):
            state.advance_to_next_event()

    def test_ineligible_workstation_rejected(self, scenario_factory):
        scenario = scenario_factory(processing_times=ONE_OP, arrivals=((0.0, 0),))
        state = SimState(scenario)
        state.advance_to_next_event()
        state.advance_to_next_event()
        with pytest.raises(InvalidTransitionError, match="not eligible"):
            state.assign_workstation(0, 1)

    def test_duplicate_transport_request_rejected(self, micro_scenario):
        state = SimState(micro_scenario)
        state.advance_to_next_event()
        state.advance_to_next_event()
        decision = state.assign_workstation(0, 0)
        state.assign_aiv(0, 0)
        with pytest.raises(InvalidTransitionError):
            state.enqueue_transport(decision.request, 0)

    def test_unknown_aiv_rejected(self, micro_scenario):
        state = SimState(micro_scenario)
        state.advance_to_next_event()
        state.advance_to_next_event()
        decision = state.assign_workstation(0, 0)
        state.pending_decision = None
        with pytest.raises(InvalidTransitionError, match="Unknown AIV"):
            state.enqueue_transport(decision.request, 5)

    def test_direct_handover_skips_aiv_decision(self, micro_scenario):
        policy = ScriptedPolicy({(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 0})
        state = simulate(micro_scenario, policy)
        assert all(len(job.transfer_windows) == 1 for job in state.jobs)
        # 5 + 14 + 8 + 6
        assert state.jobs[0].completion_time == pytest.approx(33.0)

    def test_all_jobs_complete(self, micro_scenario):
        policy = ScriptedPolicy({(0, 0): 1, (0, 1): 1, (1, 0): 0, (1, 1): 1})
        state = simulate(micro_scenario, policy)
        assert state.done
        assert all(job.status == JobStatus.COMPLETED for job in state.jobs)
        assert state.advance_to_next_event().done


class TestUnavailability:
    """Tests for workstation breakdowns"""

    def run_one(self, scenario_factory, breakdowns):
        scenario = scenario_factory(processing_times=ONE_OP, arrivals=((0.0, 0),), breakdowns=breakdowns)
        return simulate(scenario, ScriptedPolicy({(0, 0): 0}))

    def test_no_breakdown(self, scenario_factory):
        state = self.run_one(scenario_factory, [[], []])
        # 14 to WS1, 10 on WS1
        assert state.jobs[0].completion_time == pytest.approx(24.0)

    def test_breakdown_preempts_and_resumes(self, scenario_factory):
        state = self.run_one(scenario_factory, [[(18.0, 5.0)], []])
        # 4 units done before the breakdown, 6 after the repair at 23
        assert state.jobs[0].completion_time == pytest.approx(29.0)

    def test_overlapping_breakdowns_are_merged(self, scenario_factory):
        state = self.run_one(scenario_factory, [[(18.0, 5.0), (20.0, 10.0)], []])
        assert state.jobs[0].completion_time == pytest.approx(36.0)

    def test_breakdown_while_idle_delays_start(self, scenario_factory):
        state = self.run_one(scenario_factory, [[(10.0, 10.0)], []])
        assert state.jobs[0].completion_time == pytest.approx(30.0)

    def test_breakdown_on_other_workstation_is_harmless(self, scenario_factory):
        state = self.run_one(scenario_factory, [[], [(15.0, 100.0)]])
        assert state.jobs[0].completion_time == pytest.approx(24.0)

    def test_busy_time_excludes_downtime(self, scenario_factory):
        state = self.run_one(scenario_factory, [[(18.0, 5.0)], []])
        assert state.workstations[0].busy_time(state.now) == pytest.approx(10.0)
        assert state.busy_percentage_ws(0) == pytest.approx(100.0 * 10.0 / 29.0)

    def test_merge_windows(self):
        assert merge_windows([(20.0, 10.0), (18.0, 5.0), (40.0, 1.0)]) == [(18.0, 12.0), (40.0, 1.0)]
        assert merge_windows([]) == []

    def test_apply_unavailability_validates(self, micro_scenario):
        state = SimState(micro_scenario)
        with pytest.raises(ValueError):
            state.apply_unavailability(0, 1.0, 0.0)
        state.advance_to_next_event()
        with pytest.raises(ValueError):
            state.apply_unavailability(0, 1.0, 5.0)


class TestCharging:
    """Tests for the charging policy and the energy ledger"""

    def test_low_battery_charges_before_tour(self, scenario_factory):
        scenario = scenario_factory(processing_times=[[{0: 8.0}]], arrivals=((0.0, 0),),
                                    initial_battery=40.0, charge_threshold=50.0)
        state = simulate(scenario, ScriptedPolicy({(0, 0): 0}))
        # 30 to CH1, 30 charging, 30 back to S, 14 to WS1, 8 processing
        assert state.jobs[0].completion_time == pytest.approx(112.0)
        assert state.aivs[0].n_recharges == 1
        assert state.ledger.recharged[0] == pytest.approx(60.6)
        assert state.ledger.total() == pytest.approx(1.98)
        assert state.aivs[0].battery_pct == pytest.approx(98.62)
        assert state.ledger.conservation_error(0, 40.0, state.aivs[0].battery_pct) <= 1e-9

    def test_second_aiv_waits_for_busy_charger(self, scenario_factory):
        scenario = scenario_factory(processing_times=[[{0: 8.0, 1: 4.0}]], arrivals=((0.0, 0), (0.0, 0)),
                                    aivs=2, initial_battery=40.0, charge_threshold=50.0)
        policy = ScriptedPolicy({(0, 0): 0, (1, 0): 1}, aivs={0: 0, 1: 1})
        state = simulate(scenario, policy)
        assert [j.completion_time for j in state.jobs] == pytest.approx([112.0, 147.0])
        assert [a.n_recharges for a in state.aivs] == [1, 1]
        for aiv in state.aivs:
            assert state.ledger.conservation_error(aiv.id, 40.0, aiv.battery_pct) <= 1e-9

    def test_threshold_is_strict(self, scenario_factory):
        scenario = scenario_factory(processing_times=[[{0: 8.0}]], arrivals=((0.0, 0),),
                                    initial_battery=50.0, charge_threshold=50.0)
        state = simulate(scenario, ScriptedPolicy({(0, 0): 0}))
        assert state.aivs[0].n_recharges == 0

    def test_depletion_clamps_and_warns(self, scenario_factory):
        scenario = scenario_factory(processing_times=[[{0: 8.0}]], arrivals=((0.0, 0),), initial_battery=0.5)
        with pytest.warns(BatteryDepletedWarning):
            state = simulate(scenario, ScriptedPolicy({(0, 0): 0}))
        assert state.aivs[0].battery_pct == 0.0
        assert state.aivs[0].depleted
        assert state.diagnostics()["depleted"]
        assert state.ledger.total() == pytest.approx(0.5)

    def test_ledger_is_contiguous(self, generated):
        state = simulate(generated, heuristic_from_name("STT.SPT"))
        for aiv in state.aivs:
            entries = state.ledger.entries[aiv.id]
            assert entries[0].start == 0.0
            for a, b in zip(entries, entries[1:]):
                assert a.end == pytest.approx(b.start)
            assert entries[-1].end == pytest.approx(state.now)


class TestRunInvariants:
    """Tests on complete runs of generated scenarios"""

    @pytest.mark.parametrize("policy", ["STT.SPT", "SWL_A.SQL", "MC.SWL_W"])
    def test_run_completes_and_conserves_energy(self, generated, policy):
        state = simulate(generated, heuristic_from_name(policy))
        assert state.n_completed == len(state.jobs)
        assert all(job.completion_time >= job.arrival_time for job in state.jobs)
        for aiv in state.aivs:
            assert state.ledger.conservation_error(aiv.id, 100.0, aiv.battery_pct) <= 1e-6
            assert 0.0 <= aiv.battery_pct <= 100.0

    def test_trace_is_ordered_and_tab_separated(self, generated):
        state = simulate(generated, heuristic_from_name("STT.SQL"), keep_trace=True)
        lines = trace_text(state).splitlines()
        assert lines
        times = []
        for line in lines:
            fields = line.split("\t")
            assert len(fields) == 4
            times.append(float(fields[0]))
        assert times == sorted(times)

    def test_same_scenario_same_trace(self, generated):
        first = simulate(generated, heuristic_from_name("MC.SPT"), keep_trace=True)
        second = simulate(generated, heuristic_from_name("MC.SPT"), keep_trace=True)
        assert trace_text(first) == trace_text(second)

    def test_no_trace_by_default(self, generated):
        state = simulate(generated, heuristic_from_name("MC.SPT"))
        assert trace_text(state) == ""

    def test_tardiness_matches_jobs(self, generated):
        state = simulate(generated, heuristic_from_name("SWL_A.SWL_W"))
        expected = sum(max(0.0, j.completion_time - j.due_date) for j in state.jobs)
        assert state.total_tardiness() == pytest.approx(expected)
        assert state.n_tardy() == sum(1 for j in state.jobs if j.completion_time > j.due_date)


class TestEventKernel:
    """Tests for the simpy event queue underneath the engine"""

    def test_clock_lives_in_the_environment(self, micro_scenario):
        state = SimState(micro_scenario)
        assert isinstance(state.env, simpy.Environment)
        assert state.now == 0.0
        outcome = state.advance_to_next_event()
        assert outcome.kind == EventKind.ARRIVAL
        assert state.env.now == state.now == 5.0

    def test_equal_timestamps_follow_priority(self):
        env = simpy.Environment()
        fired = []
        for kind in reversed(list(EventKind)):
            ShopEvent(env, 3.0, kind, 0).callbacks.append(lambda event: fired.append(event.kind))
        env.run()
        priorities = [EVENT_PRIORITY[kind] for kind in fired]
        assert priorities == sorted(priorities)
        assert fired[:3] == [EventKind.CHARGE_DONE, EventKind.TRAVEL_DONE, EventKind.PROCESS_DONE]
        assert fired[-2:] == [EventKind.ARRIVAL, EventKind.DECISION]
        assert env.now == 3.0

    def test_same_kind_keeps_insertion_order(self):
        env = simpy.Environment()
        fired = []
        for target in (4, 1, 3):
            ShopEvent(env, 2.0, EventKind.ARRIVAL, target).callbacks.append(lambda event: fired.append(event.target))
        env.run()
        assert fired == [4, 1, 3]

    def test_breakdown_precedes_arrival_at_same_time(self, scenario_factory):
        scenario = scenario_factory(processing_times=ONE_OP, arrivals=((10.0, 0),), breakdowns=[[(10.0, 5.0)], []])
        state = SimState(scenario)
        kinds = [state.advance_to_next_event().kind for _ in range(3)]
        assert kinds == [EventKind.BREAKDOWN, EventKind.ARRIVAL, EventKind.DECISION]
        assert state.now == 10.0

    def test_negative_delay_rejected(self):
        with pytest.raises(SimulationCorruptionError, match="precedes clock"):
            ShopEvent(simpy.Environment(), -1.0, EventKind.ARRIVAL, 0)

    def test_empty_queue_finishes_run(self, scenario_factory):
        scenario = scenario_factory(processing_times=ONE_OP, arrivals=((0.0, 0),))
        state = SimState(scenario)
        state.advance_to_next_event()
        state.advance_to_next_event()
        state.assign_workstation(0, 0)
        state.assign_aiv(0, 0)
        outcome = state.advance_to_next_event()
        while not outcome.done:
            outcome = state.advance_to_next_event()
        assert state.jobs[0].completion_time == pytest.approx(24.0)
        assert state.env.now == pytest.approx(24.0)


#            S  WS1 WS2 CH1
LOAD_TRANSFER = (
    (0, 10, 22, 30),
    (10, 0, 12, 20),
    (22, 12, 0, 25),
    (30, 20, 25, 0),
)


class TestMultiLoad:
    """Tests for AIVs that carry two products at once"""

    def run_capacity_two(self, scenario_factory, n_jobs):
        scenario = scenario_factory(
            transfer=LOAD_TRANSFER,
            processing_times=[[{0: 5.0, 1: 5.0}]],
            arrivals=tuple((0.0, 0) for _ in range(n_jobs)),
            capacity=2,
        )
        script = {(j, 0): 0 for j in range(n_jobs)}
        script[(2, 0)] = 1
        return simulate(scenario, ScriptedPolicy(script), keep_trace=True)

    def tours(self, state):
        return [line.split("\t")[3] for line in trace_text(state).splitlines() if line.split("\t")[1] == "tour"]

    def test_both_pickups_before_either_delivery(self, scenario_factory):
        state = self.run_capacity_two(scenario_factory, 3)
        events = [line.split("\t") for line in trace_text(state).splitlines()]
        pickups = [(float(t), detail.split()[0]) for t, kind, _, detail in events if kind == "pickup"]
        delivers = [(float(t), detail.split()[0]) for t, kind, _, detail in events if kind == "deliver"]
        assert pickups == [(0.0, "J1"), (20.0, "J2"), (20.0, "J3")]
        assert delivers == [(10.0, "J1"), (30.0, "J2"), (42.0, "J3")]

    def test_loaded_leg_is_charged_at_the_two_product_rate(self, scenario_factory):
        state = self.run_capacity_two(scenario_factory, 3)
        entries = [e for e in state.ledger.entries[0] if e.activity == "moving-2"]
        assert len(entries) == 1
        assert (entries[0].start, entries[0].end) == (20.0, 30.0)
        # 10 time units at 0.10 %/unit
        assert entries[0].pct == pytest.approx(1.0)
        assert state.ledger.conservation_error(0, 100.0, state.aivs[0].battery_pct) <= 1e-9

    def test_shared_carriage_windows(self, scenario_factory):
        state = self.run_capacity_two(scenario_factory, 3)
        j2, j3 = state.jobs[1].transfer_windows[0], state.jobs[2].transfer_windows[0]
        assert (j2.start, j2.end) == (10.0, 30.0)
        assert (j3.start, j3.end) == (20.0, 42.0)
        assert (j3.origin, j3.destination) == (0, 2)
        assert [j.completion_time for j in state.jobs] == pytest.approx([15.0, 35.0, 47.0])

    def test_pending_requests_split_into_tours(self, scenario_factory):
        assert self.tours(self.run_capacity_two(scenario_factory, 3)) == ["J1", "J2 J3"]
        state = self.run_capacity_two(scenario_factory, 4)
        assert self.tours(state) == ["J1", "J2 J3", "J4"]
        # J4 waits for the second tour: WS2 -> S -> WS1
        assert state.jobs[3].transfer_windows[0].end == pytest.approx(74.0)
