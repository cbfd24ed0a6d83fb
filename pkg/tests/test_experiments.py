"""
Rover salvage experiments reproduced end to end
"""
import pytest

from models.enums import RunStatus

pytestmark = pytest.mark.slow

EXPERIMENT_IDS = ["gps-glitch", "T-1", "T-2", "T-3", "T-4"]


class TestExperiments:
    """Simulated runs of the bundled experiments"""

    @pytest.mark.parametrize("experiment_id", EXPERIMENT_IDS)
    def test_expected_outcome(self, manager, experiments, experiment_id):
        experiment = experiments[experiment_id]
        report = manager.run_experiment(experiment)
        assert manager.check_expectations(experiment, report) == []
        assert all(not violations for violations in report.trace_laws.values())
        assert report.fault is None

    def test_gps_glitch_freezes_three_reports(self, manager, experiments):
        report = manager.run_experiment(experiments["gps-glitch"])
        assert manager.frozen_reports(report.log, "Rover 3") == 3
        assert manager.frozen_reports(report.log, "Rover 1") == 0
        assert report.fault is None

    def test_gps_glitch_leaves_the_third_item_unassigned(self, manager, experiments):
        experiment = experiments["gps-glitch"]
        manager.run_experiment(experiment)
        assert experiment.consts["m"] == len(experiment.consts["allIds"]) == 2
        placed = [k for k, v in experiment.suite[0]["stimulation"].items() if k.endswith(("1", "2", "3")) and v is True]
        assert len(placed) == 3
        commanded = {row.valuation.get(f"coll.cc.id[{i}]") for row in manager.last_world.trace for i in range(3)}
        assert "item3" not in commanded
        assert {"item1", "item2"} & commanded

    def test_artifacts_are_written(self, manager, experiments):
        report = manager.run_experiment(experiments["T-1"])
        run = manager.last_run_dir
        assert run is not None
        assert (run / "report.json").is_file()
        assert manager.store.load_report(str(run)).status == report.status

    def test_runs_are_reproducible(self, manager, experiments):
        first = manager.run_experiment(experiments["gps-glitch"], seed=5)
        second = manager.run_experiment(experiments["gps-glitch"], seed=5)
        assert first.log == second.log
        assert first.verdicts == second.verdicts


class TestDistributedExperiments:
    """Agent runs over the in-process transport"""

    def test_t1_on_agents(self, manager, experiments):
        experiment = experiments["T-1"]
        report = manager.run_experiment(experiment, distributed=True, mode="inproc")
        assert report.mode == "inproc"
        assert manager.check_expectations(experiment, report) == []

    def test_failing_experiment_on_agents(self, manager, experiments):
        experiment = experiments["T-3"]
        report = manager.run_experiment(experiment, distributed=True, mode="inproc")
        assert report.status == RunStatus.FAIL.value
        assert manager.check_expectations(experiment, report) == []


def verdict_set(report):
    return {(v['instance'], v['verdict']) for v in report.verdicts}


def failing(report):
    return sorted(v['instance'] for v in report.verdicts if v['verdict'] == "FAIL")


class TestTransportIndependence:
    """Verdicts do not depend on the transport or on datagram loss"""

    @pytest.mark.parametrize("experiment_id", ["T-1", "T-3"])
    def test_loss_keeps_the_verdicts(self, manager, experiments, experiment_id):
        experiment = experiments[experiment_id]
        clean = manager.run_experiment(experiment, distributed=True, mode="inproc", loss=0.0)
        lossy = manager.run_experiment(experiment, distributed=True, mode="inproc", loss=0.1)
        assert verdict_set(lossy) == verdict_set(clean)
        assert lossy.status == clean.status
        assert manager.check_expectations(experiment, lossy) == []

    def test_failing_oracle_under_loss(self, manager, experiments):
        report = manager.run_experiment(experiments["T-3"], distributed=True, mode="inproc", loss=0.1)
        assert report.status == RunStatus.FAIL.value
        assert failing(report) == ["EmergentPropertyChecker"]

    @pytest.mark.udp
    @pytest.mark.parametrize("experiment_id", ["T-1", "T-3"])
    def test_udp_matches_inproc(self, manager, experiments, experiment_id):
        experiment = experiments[experiment_id]
        inproc = manager.run_experiment(experiment, distributed=True, mode="inproc")
        udp = manager.run_experiment(experiment, distributed=True, mode="udp")
        assert udp.mode == "udp"
        assert verdict_set(udp) == verdict_set(inproc)
        assert udp.status == inproc.status

    @pytest.mark.udp
    def test_udp_under_loss(self, manager, experiments):
        experiment = experiments["T-3"]
        report = manager.run_experiment(experiment, distributed=True, mode="udp", loss=0.1)
        assert report.status == RunStatus.FAIL.value
        assert failing(report) == ["EmergentPropertyChecker"]
