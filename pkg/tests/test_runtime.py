"""
Stepper, agent messaging, roster, manager and artifact store tests
"""
import socket
from datetime import datetime

import pytest

from agents.messages import Assembler, MessageError, StateMessage, encode_state, split_message, symbol_prefix
from agents.rover_stub import RoverModel
from agents.runtime import COORDINATOR_ID, Roster, RosterEntry, default_roster
from agents.transport import InProcessBus, TransportError, UdpMulticastBus, open_bus
from engine.collaboration import CollaborationState
from engine.evaluator import RuntimeFault
from engine.stepper import World, flatten_suite
from engine.trace import Trace, TraceRow, check_interface_law, check_output_constancy, check_trace_laws
from managers.schedule_manager import ScheduleManager
from managers.systest_manager import Experiment, SystestManager
from managers.tick_manager import TickManager
from managers.verdict_manager import VerdictManager
from models.enums import AgentRole, FaultKind, Lifecycle, RunStatus, TickStatus, Verdict
from models.run_report import RunReport
from models.values import location
from persistence.artifact_store import ArtifactStore
from tests.conftest import load_spec


@pytest.fixture
def rover_world(rover_spec, rover_consts, init_suite):
    return World(rover_spec, rover_consts, init_suite, RoverModel(), max_ticks=40)


class TestStepper:
    """One tick at a time"""

    def test_initial_valuation(self, rover_world):
        first = rover_world.trace[0]
        assert first.tick == 0
        assert first.valuation["stim.set_item1"] is True
        assert first.valuation["EoT"] is False
        assert first.valuation["t_hat"] == 0.0
        assert {e['instance'] for e in first.events} == set(rover_world.graph.successors("<start>"))
        assert rover_world.lifecycles["Pickup1"] == Lifecycle.PASSIVE

    def test_stimulation_advances_per_tick(self, rover_world):
        row = rover_world.step()
        assert row.tick == 1
        assert row.valuation["stim.set_zone1"] is True
        assert rover_world.trace.first_tick("stim.set_zone1", True) == 1
        assert row.valuation["t_hat"] == pytest.approx(0.1)

    def test_trace_laws_hold(self, rover_world):
        rover_world.run_to_end()
        assert rover_world.finished
        assert rover_world.fault is None
        assert len(rover_world.trace) == rover_world.tick + 1
        assert check_trace_laws(rover_world.trace) == {
            'interface': [], 'output_constancy': [], 'end_of_test': [], 'frame': []}

    def test_rows_record_topology_and_phases(self, rover_world):
        rover_world.run_to_end()
        first, twentieth = rover_world.trace[1], rover_world.trace[20]
        assert first.cycles["coll.r[0]"] == (20, 0)
        assert first.cycles["coll.cc"] == (10, 0)
        assert twentieth.cycles["coll.r[0]"] == (20, 19)
        assert "coll.r[0]" in twentieth.published
        assert "coll.r[0]" not in first.published
        assert ("coll.r[1].s", "coll.cc.s[1]") in first.interfaces
        assert len(first.interfaces) == 12

    def test_tick_budget_forces_end_of_test(self, rover_world):
        rover_world.run_to_end()
        assert rover_world.tick == 40
        assert rover_world.timed_out
        assert rover_world.trace[-1].end_of_test
        assert rover_world.status != RunStatus.PASS
        with pytest.raises(RuntimeError):
            rover_world.prepare()

    def test_conclude_needs_prepare(self, rover_world):
        with pytest.raises(RuntimeError):
            rover_world.conclude([])

    def test_rejects_empty_budget(self, rover_spec):
        with pytest.raises(ValueError):
            World(rover_spec, max_ticks=0)

    def test_flatten_suite_prefixes_stimuli(self, init_suite):
        steps = flatten_suite(init_suite)
        assert len(steps) == 3
        assert steps[2] == {"stim.simulation_start": True}
        assert flatten_suite(None) == []


def two_row_trace(second: TraceRow, first_values=None) -> Trace:
    trace = Trace()
    trace.outputs["coll.a"] = ["coll.a.s"]
    trace.append(TraceRow(0, dict(first_values or {"coll.a.s": 1, "coll.b.cmd": 0, "EoT": False})))
    trace.append(second)
    return trace


class TestTraceLaws:
    """Laws checked against the recorded topology, not the engine's own bookkeeping"""

    def test_unpropagated_live_interface(self):
        row = TraceRow(1, {"coll.a.s": 1, "coll.b.cmd": 0, "EoT": True},
                       interfaces=[("coll.a.s", "coll.b.cmd")], cycles={"coll.a": (2, 0)})
        problems = check_interface_law(two_row_trace(row))
        assert problems == ["tick 1: live interface coll.a.s -> coll.b.cmd did not propagate",
                            "tick 1: coll.b.cmd does not carry coll.a.s"]

    def test_scenario_write_overrides_the_interface(self):
        row = TraceRow(1, {"coll.a.s": 1, "coll.b.cmd": 5, "EoT": True}, written={"coll.b.cmd": "Driver"},
                       links=[("coll.a.s", "coll.b.cmd")], interfaces=[("coll.a.s", "coll.b.cmd")])
        assert check_interface_law(two_row_trace(row)) == []

    def test_output_change_between_cycles(self):
        row = TraceRow(1, {"coll.a.s": 2, "coll.b.cmd": 0, "EoT": True}, published=["coll.a"],
                       cycles={"coll.a": (2, 0)})
        assert check_output_constancy(two_row_trace(row)) == [
            "tick 1: coll.a published at phase 0 of 2",
            "tick 1: coll.a.s changed between cycles of coll.a",
        ]

    def test_missed_publication(self):
        row = TraceRow(1, {"coll.a.s": 1, "coll.b.cmd": 0, "EoT": True}, cycles={"coll.a": (2, 1)})
        assert check_output_constancy(two_row_trace(row)) == ["tick 1: coll.a missed its publication"]

    def test_publication_at_the_last_phase(self):
        row = TraceRow(1, {"coll.a.s": 2, "coll.b.cmd": 0, "EoT": True}, published=["coll.a"],
                       cycles={"coll.a": (2, 1)})
        assert check_trace_laws(two_row_trace(row)) == {
            'interface': [], 'output_constancy': [], 'end_of_test': [], 'frame': []}


class TestMessages:
    """State datagrams"""

    def test_encode_decode(self):
        message = StateMessage("a", "tick", 3, 1, "current", encode_state({"coll.r[0].pos": location(1, 2)}))
        decoded = StateMessage.decode(message.encode())
        assert decoded == message
        assert decoded.values() == {"coll.r[0].pos": location(1, 2)}

    def test_malformed_datagrams(self):
        with pytest.raises(MessageError):
            StateMessage.decode(b"not json")
        with pytest.raises(MessageError):
            StateMessage.decode(b"[1, 2]")
        with pytest.raises(MessageError):
            StateMessage.decode(b'{"kind": "tick"}')

    def test_symbol_prefix(self):
        assert symbol_prefix("coll.r[2].pos") == "coll.r[2]"
        assert symbol_prefix("EoT") == "EoT"

    def test_split_and_reassemble(self):
        state = {f"coll.r[{i}].s{k}": "x" * 40 for i in range(6) for k in range(4)}
        message = StateMessage("a", "tick", 1, 5, "next", state)
        parts = split_message(message, 512)
        assert len(parts) > 1
        assert all(len(p.encode()) <= 512 for p in parts)
        assert all(p.parts == len(parts) for p in parts)

        assembler = Assembler()
        results = [assembler.add(p) for p in reversed(parts)]
        assert results[:-1] == [None] * (len(parts) - 1)
        assert results[-1].state == state
        assert assembler.add(parts[0]) is None

    def test_oversized_symbol(self):
        message = StateMessage("a", "tick", 1, 1, "next", {"big": "x" * 600})
        with pytest.raises(MessageError):
            split_message(message, 256)


class TestTransport:
    """In-process bus"""

    def test_broadcast_and_addressing(self):
        bus = InProcessBus()
        a, b, c = bus.endpoint("a"), bus.endpoint("b"), bus.endpoint("c")
        a.send(StateMessage("", "tick", 1, state={"x": 1}))
        a.send(StateMessage("", "finish", 2, to="b"))
        received = b.receive()
        assert [(m.sender, m.kind, m.seq) for m in received] == [("a", "tick", 1), ("a", "finish", 2)]
        assert [m.kind for m in c.receive()] == ["tick"]
        assert a.receive() == []

    def test_duplicate_endpoint(self):
        bus = InProcessBus()
        bus.endpoint("a")
        with pytest.raises(TransportError):
            bus.endpoint("a")

    def test_loss_is_seeded(self):
        def run():
            bus = InProcessBus(loss=0.5, seed=1)
            a, b = bus.endpoint("a"), bus.endpoint("b")
            for k in range(50):
                a.send(StateMessage("", "heartbeat", k))
            return a.dropped, [m.tick for m in b.receive()]

        dropped, ticks = run()
        assert 0 < dropped < 50
        assert len(ticks) + dropped == 50
        assert run() == (dropped, ticks)

    def test_loss_range(self):
        with pytest.raises(ValueError):
            InProcessBus(loss=1.0).endpoint("a")

    def test_socket_closed_when_joining_fails(self, monkeypatch):
        opened = []

        class RefusingSocket:
            def __init__(self, *args):
                self.closed = False
                opened.append(self)

            def setsockopt(self, *args):
                raise OSError("no multicast route")

            def close(self):
                self.closed = True

        monkeypatch.setattr(socket, "socket", RefusingSocket)
        with pytest.raises(TransportError):
            UdpMulticastBus("239.255.42.1", 45454).endpoint("a")
        assert len(opened) == 1
        assert opened[0].closed

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            open_bus("carrier-pigeon")


class TestRoster:
    """Agent deployment"""

    def test_default_roster(self, rover_world):
        roster = default_roster(rover_world.runtimes, rover_world.current)
        assert roster.validate(list(rover_world.runtimes)) == (True, "")
        assert roster.host_of("Approach1") == roster.host_of("Return1") == "oeh-coll.r[0]"
        assert roster.host_of("MishapHandler1") == "oeh-coll.r[0]"
        assert roster.host_of("PickupHandler") == "oeh-coll.cc"
        assert roster.host_of("EmergentPropertyChecker") == "epm"
        assert roster.get("epm").role == AgentRole.EPM
        assert roster.get(COORDINATOR_ID).role == AgentRole.COORDINATOR
        assert Roster.from_dict(roster.to_dict()).to_dict() == roster.to_dict()

    def test_validation_problems(self):
        ids = ["A", "B"]
        coordinator = RosterEntry(COORDINATOR_ID, AgentRole.COORDINATOR)
        assert Roster([RosterEntry("x", AgentRole.ORACLE, ids)]).validate(ids) == (
            False, "exactly one COORDINATOR required, found 0")
        assert Roster([coordinator, RosterEntry("x", AgentRole.ORACLE, ["A"])]).validate(ids) == (
            False, "instances without an agent: B")
        assert Roster([coordinator, RosterEntry("x", AgentRole.ORACLE, ids),
                       RosterEntry("y", AgentRole.ORACLE, ["A"])]).validate(ids) == (
            False, "A hosted by x and y")
        assert Roster([coordinator, RosterEntry("x", AgentRole.ORACLE, ids + ["C"])]).validate(ids) == (
            False, "unknown instances in roster: C")
        assert Roster([coordinator, coordinator]).validate([]) == (False, f"duplicate agent ids: {COORDINATOR_ID}")


class TestTickManager:
    """Pacing and overruns"""

    @pytest.fixture
    def clock(self):
        class Clock:
            now = 0.0

            def __call__(self):
                return self.now
        return Clock()

    def test_tick_status(self, clock):
        ticks = TickManager(100, clock=clock)
        ticks.begin_tick(0)
        clock.now = 0.05
        assert ticks.end_tick(0) == TickStatus.NORMAL
        ticks.begin_tick(1)
        clock.now = 0.13
        assert ticks.get_tick_status(1) == TickStatus.WARNING
        clock.now = 0.2
        assert ticks.end_tick(1) == TickStatus.OVERTIME
        assert ticks.missed_ticks == 1

    def test_pacing_sleeps_to_the_slot_end(self, clock):
        slept = []
        ticks = TickManager(100, pace=True, clock=clock, sleep=slept.append)
        ticks.begin_tick(0)
        clock.now = 0.03
        ticks.end_tick(0)
        assert slept == [pytest.approx(0.07)]

    def test_invalid_period(self):
        with pytest.raises(ValueError):
            TickManager(0)


class TestScheduleManager:
    """Lifecycle validation"""

    def test_activation_order(self, rover_world):
        schedule = ScheduleManager(rover_world.graph)
        lifecycles = dict(rover_world.lifecycles)
        assert schedule.can_activate("Approach1", lifecycles) == (True, "")
        assert schedule.can_activate("Pickup1", lifecycles) == (False, "Pickup1 is passive, not runnable")
        lifecycles["Pickup1"] = Lifecycle.RUNNABLE
        assert schedule.can_activate("Pickup1", lifecycles) == (
            False, "Pickup1 activated before Approach1 terminated")
        assert schedule.can_activate("Nowhere", lifecycles) == (False, "unknown instance 'Nowhere'")

    def test_history(self, rover_world):
        schedule = ScheduleManager(rover_world.graph)
        schedule.record_row(TraceRow(3, {}, events=[
            {'kind': 'activated', 'instance': 'Approach1', 'tick': 2},
            {'kind': 'delete', 'target': 'coll.r[0]'},
            {'kind': 'terminated', 'instance': 'Approach1'},
        ]))
        assert schedule.timeline("Approach1") == {'activated': 2, 'terminated': 3}
        assert len(schedule.get_history()) == 2


class TestVerdictManager:
    """Verdict records and run status"""

    def test_records(self, rover_world):
        verdicts = VerdictManager(rover_world)
        assert verdicts.validate_record({'instance': 'Approach1', 'verdict': 'PASS'})
        assert not verdicts.validate_record({'instance': 'Approach1', 'verdict': 'INCONCLUSIVE'})
        assert not verdicts.validate_record({'instance': 'Nowhere', 'verdict': 'PASS'})
        assert not verdicts.validate_record("PASS")

        verdicts.save_all([{'instance': 'Return1', 'verdict': 'FAIL', 'reason': 'late'},
                           {'instance': 'Approach1', 'verdict': 'PASS'}])
        assert list(rover_world.verdicts) == ["Approach1", "Return1"]
        assert rover_world.run_log.lines == ["[Approach1-ORA] PASS.", "[Return1-ORA] FAIL: late"]
        assert (verdicts.get_passed_count(), verdicts.get_failed_count()) == (1, 1)
        assert verdicts.determine_status() == RunStatus.FAIL

    def test_liveness_and_infrastructure(self, rover_world):
        verdicts = VerdictManager(rover_world)
        verdicts.liveness_failure("epm", ["EmergentPropertyChecker"], 5, 12)
        assert rover_world.verdicts["EmergentPropertyChecker"]['verdict'] == "FAIL"
        assert verdicts.determine_status() == RunStatus.FAIL
        assert verdicts.determine_status("socket closed") == RunStatus.ABORTED


class TestFrozenReports:
    """Counting identical position reports after a GPS fault"""

    LOG = [
        "[t=5.0] Rover 3 Pos (5.0,3.0) (State: approaching)",
        "[GPS] Simulate fault for Rover 3",
        "[t=6.0] Rover 1 Pos (5.0,6.0) (State: approaching)",
        "[t=6.0] Rover 3 Pos (5.0,3.5) (State: approaching)",
        "[t=7.0] Rover 3 Pos (5.0,3.5) (State: approaching)",
        "[t=8.0] Rover 3 Pos (5.0,3.5) (State: approaching)",
        "[t=9.0] Rover 3 Pos (5.0,4.0) (State: approaching)",
        "[t=10.0] Rover 3 Pos (5.0,4.0) (State: DEAD)",
    ]

    def test_counts_until_the_position_moves(self):
        assert SystestManager.frozen_reports(self.LOG, "Rover 3") == 3

    def test_without_a_fault_marker(self):
        assert SystestManager.frozen_reports(self.LOG, "Rover 1") == 0

    def test_dead_rover_ends_the_count(self):
        log = ["[GPS] Simulate fault for Rover 2",
               "[t=3.0] Rover 2 Pos (1.0,1.0) (State: fault)",
               "[t=4.0] Rover 2 Pos (1.0,1.0) (State: DEAD)"]
        assert SystestManager.frozen_reports(log, "Rover 2") == 1

    def test_expectation_mismatch_is_reported(self):
        experiment = Experiment(id="glitch", expected={'frozen_reports': {"Rover 3": 2}})
        report = RunReport("r")
        report.log = list(self.LOG)
        assert SystestManager.check_expectations(experiment, report) == [
            "Rover 3: 3 frozen position report(s), expected 2"]


class TestArtifactStore:
    """Run directories"""

    def test_run_id(self):
        moment = datetime(2026, 2, 3, 10, 15, 0)
        assert ArtifactStore.generate_run_id("RoverSalvage", 7, moment) == "20260203-101500_RoverSalvage_s7"
        assert ArtifactStore.generate_run_id("", 0, moment) == "20260203-101500_run_s0"

    def test_create_run_twice(self, store):
        first = store.create_run("r")
        second = store.create_run("r")
        assert (first.name, second.name) == ("r", "r_2")
        assert (first / "logs").is_dir()
        assert (first / "verdicts").is_dir()

    def test_report_round_trip(self, store):
        run_path = store.create_run("r")
        report = RunReport("r", "RoverSalvage", status=RunStatus.FAIL.value)
        report.verdicts = [{'instance': 'EmergentPropertyChecker', 'verdict': 'FAIL', 'reason': 'late'}]
        report.log = ["[EmergentPropertyChecker-ORA] FAIL: late"]
        assert store.write_report(run_path, report)
        assert store.write_log(run_path, report.log)
        assert store.list_runs() == ["r"]

        loaded = store.load_report("r")
        assert loaded.status == "FAIL"
        assert loaded.exit_code == 1
        assert loaded.verdict_of("EmergentPropertyChecker") == "FAIL"
        assert (run_path / "logs" / "run.log").read_text(encoding="utf-8") == report.log[0] + "\n"

    def test_missing_report(self, store):
        assert store.load_report("absent") is None



DEVICES = """
object type Dev(in cmd : int, out s : int)
  cycletime 1
end type
"""


def device_world(scenarios: str, schedule: str, members: str = "d : Dev;", max_ticks: int = 10) -> World:
    """World over a collaboration of Dev objects with a passive system under test"""
    source = (DEVICES + scenarios
              + "systemtest T\n  collaboration coll\n    " + members + "\n  end collaboration\n"
              + "  schedule\n    " + schedule + "\n  end schedule\nend systemtest\n")
    return World(load_spec(source), max_ticks=max_ticks)


class TestCollaborationState:
    """Structural mutations of the rover collaboration"""

    @pytest.fixture
    def collab(self, rover_spec, rover_consts):
        return CollaborationState(rover_spec, rover_consts)

    def test_delete_removes_attached_interfaces(self, collab):
        event = collab.delete("coll.r[2]")
        assert event['interfaces'] == ["Is[2]", "Icmd[2]", "Idst[2]", "Iid[2]"]
        assert not collab.is_live("coll.r[2]")
        assert collab.handles()["coll.r"][2] is None
        assert "Is[1]" in collab.interfaces

    def test_delete_is_idempotent(self, collab):
        collab.delete("coll.r[2]")
        remaining = list(collab.interfaces)
        event = collab.delete("coll.r[2]")
        assert event.get('noop') is True
        assert list(collab.interfaces) == remaining

    def test_create_beyond_the_array_leaves_gaps(self, collab):
        collab.create_object("r", 4, "Rover")
        slots = collab.handles()["coll.r"]
        assert len(slots) == 5
        assert slots[3] is None
        assert slots[4].path == "coll.r[4]"

    def test_create_into_an_occupied_slot(self, collab):
        with pytest.raises(RuntimeFault) as error:
            collab.create_object("r", 1, "Rover")
        assert error.value.kind == FaultKind.ILLEGAL_SCHEDULE

    def test_create_with_the_wrong_type(self, collab):
        with pytest.raises(RuntimeFault) as error:
            collab.create_object("r", 4, "CommandCentre")
        assert error.value.kind == FaultKind.TYPE_ERROR

    def test_interface_to_a_deleted_object(self, collab):
        collab.delete("coll.r[0]")
        with pytest.raises(RuntimeFault) as error:
            collab.create_interface("Iextra", "coll.cc.cmd[0]", "coll.r[0].cmd")
        assert error.value.kind == FaultKind.DANGLING_ENDPOINT

    def test_duplicate_interface_id(self, collab):
        with pytest.raises(RuntimeFault) as error:
            collab.create_interface("Is[0]", "coll.r[0].s", "coll.cc.s[0]")
        assert error.value.kind == FaultKind.ILLEGAL_SCHEDULE


class TestInstanceRules:
    """Frames, exclusive writes, change triggers and sequencing"""

    def test_write_outside_the_frame(self):
        world = device_world(
            "elementary scenario Writer(d : Dev)\n"
            "  initact frame := {d.cmd};\n"
            "  cndact [true] / d.s := 1;\n"
            "end scenario\n",
            "Writer(coll.d)").run_to_end()
        assert world.fault['kind'] == FaultKind.FRAME_VIOLATION.value
        assert world.fault['instance'] == "Writer"
        assert world.fault['symbol'] == "coll.d.s"
        assert world.status == RunStatus.ABORTED

    def test_two_writers_of_one_symbol(self):
        world = device_world(
            "elementary scenario Driver(d : Dev, v : int)\n"
            "  initact frame := {d.cmd};\n"
            "  cndact [true] / d.cmd := v;\n"
            "end scenario\n",
            "Driver(coll.d, 1) || Driver(coll.d, 2)").run_to_end()
        assert world.fault['kind'] == FaultKind.ILLEGAL_SCHEDULE.value
        assert world.fault['symbol'] == "coll.d.cmd"
        assert world.fault['message'] == "Driver and Driver_2 both write coll.d.cmd"
        assert world.status == RunStatus.ABORTED

    def test_change_trigger_fires_on_rising_edges_only(self):
        world = device_world(
            "elementary scenario Counter(d : Dev)\n"
            "  initact count := 0;\n"
            "  cndact chg((t_hat > 0.25 && t_hat < 0.45) || t_hat > 0.65) / count := count + 1;\n"
            "end scenario\n",
            "Counter(coll.d)", max_ticks=8).run_to_end()
        assert world.fault is None
        # condition holds at ticks 3, 4 and 7
        assert world.runtimes["Counter"].aux["count"] == 2

    def test_successor_of_a_never_activated_instance(self):
        world = device_world(
            "elementary scenario Never(d : Dev)\n"
            "  precondition d.cmd = 99;\n"
            "end scenario\n"
            "elementary scenario After(d : Dev)\n"
            "end scenario\n",
            "Never(coll.d); After(coll.d)", max_ticks=5).run_to_end()
        assert world.lifecycles["Never"] == Lifecycle.RUNNABLE
        assert world.lifecycles["After"] == Lifecycle.PASSIVE
        assert world.runtimes["After"].activated_at is None
        assert world.timed_out
        assert world.status == RunStatus.INCOMPLETE

    def test_guarded_read_of_a_deleted_object(self):
        world = device_world(
            "elementary scenario Remover(d : Dev, coll : collaboration)\n"
            "  cndact [t_hat > 0.15] / coll.delete(d);\n"
            "end scenario\n"
            "elementary scenario Watcher(ds : Dev[2])\n"
            "  spec forall i : 0..1 . G(ds[i] != null => ds[i].s = 0);\n"
            "end scenario\n",
            "Remover(coll.d[1], coll) || Watcher(coll.d)", members="d : Dev[2];", max_ticks=6).run_to_end()
        assert world.fault is None
        assert world.collab.handles()["coll.d"][1] is None
        assert "coll.d[1].s" not in world.current
        assert world.verdicts["Watcher"]['verdict'] == Verdict.PASS.value
        assert world.status == RunStatus.INCOMPLETE
