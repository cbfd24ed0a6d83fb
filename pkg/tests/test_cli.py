"""
Command line and report exporter tests
"""
import json
from pathlib import Path

import pytest
from openpyxl import load_workbook

import config
from config import ExitCode
from exporters.excel_exporter import ExcelExporter
from exporters.text_exporter import TextExporter
from main import main
from models.run_report import RunReport
from testgen.suite_io import read_suite
from utils.settings_manager import SettingsManager


@pytest.fixture(autouse=True)
def private_settings(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "SETTINGS_FILE", str(tmp_path / "app_settings.json"))


@pytest.fixture
def failed_report() -> RunReport:
    report = RunReport("20260203-101500_RoverSalvage_s0", "RoverSalvage", "abc", status="FAIL")
    report.ticks = 120
    report.t_hat = 12.0
    report.verdicts = [
        {'instance': 'Approach1', 'verdict': 'PASS', 'reason': ''},
        {'instance': 'EmergentPropertyChecker', 'verdict': 'FAIL', 'reason': 'deadline missed'},
    ]
    report.log = ["[EmergentPropertyChecker-ORA] FAIL: deadline missed"]
    report.trace_laws = {'interface': [], 'frame': ["tick 3: x wrote y outside its frame"]}
    return report


def write_json(path: Path, data) -> str:
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


class TestExporters:
    """Text and Excel reports"""

    def test_text_report(self, failed_report):
        text = TextExporter().render(failed_report)
        assert "System test RoverSalvage" in text
        assert "Status:   FAIL (1 passed, 1 failed)" in text
        assert "EmergentPropertyChecker" in text and "deadline missed" in text
        assert "frame: 1 violation(s)" in text
        assert "Run log" not in text
        assert failed_report.log[0] in TextExporter().render(failed_report, show_log=True)

    def test_text_report_without_verdicts(self):
        assert "(none)" in TextExporter().render(RunReport("r"))

    def test_text_export_to_file(self, failed_report, tmp_path):
        path = tmp_path / "out" / "report.txt"
        assert TextExporter().export_report(failed_report, str(path))
        assert "Run log" in path.read_text(encoding="utf-8")

    def test_excel_report(self, failed_report, tmp_path):
        path = tmp_path / "report.xlsx"
        assert ExcelExporter().export_report(failed_report, str(path))
        workbook = load_workbook(str(path))
        assert workbook.sheetnames == ["Summary", "Verdicts", "Run Log"]
        assert workbook["Run Log"]["A1"].value == failed_report.log[0]

    def test_excel_filename(self, failed_report, tmp_path):
        name = Path(ExcelExporter().generate_filename(failed_report, str(tmp_path))).name
        assert name.startswith("SystemTestReport_")
        assert name.endswith("_20260203-101500_RoverSalvage_s0.xlsx")


class TestCheckCommand:
    """scsl check"""

    def test_bundled_specification(self, capsys):
        assert main(["check", config.ROVER_SPEC_FILE]) == ExitCode.PASS
        assert "OK" in capsys.readouterr().out

    def test_missing_file(self, tmp_path):
        assert main(["check", str(tmp_path / "absent.scsl")]) == ExitCode.USAGE

    def test_type_error(self, tmp_path, capsys):
        path = tmp_path / "bad.scsl"
        path.write_text("type A = Foo;\n", encoding="utf-8")
        assert main(["check", str(path)]) == ExitCode.FAIL
        assert "unknown type 'Foo'" in capsys.readouterr().err

    def test_syntax_error(self, tmp_path):
        path = tmp_path / "bad.scsl"
        path.write_text("type A = ;\n", encoding="utf-8")
        assert main(["check", str(path)]) == ExitCode.FAIL

    def test_usage(self):
        assert main([]) == ExitCode.USAGE
        assert main(["frobnicate"]) == ExitCode.USAGE


class TestGenCommand:
    """scsl gen"""

    def test_figure_suite(self, tmp_path, capsys):
        out = tmp_path / "suite.json"
        assert main(["gen", config.FIGURE_SPEC_FILE, "--out", str(out)]) == ExitCode.PASS
        assert "2 case(s)" in capsys.readouterr().out
        suite, diagnostics = read_suite(str(out))
        assert diagnostics == []
        assert len(suite.cases) == 2
        assert suite.generated_at

    def test_stdout(self, capsys):
        assert main(["gen", config.FIGURE_SPEC_FILE, "--budget", "1"]) == ExitCode.PASS
        out = capsys.readouterr().out
        data = json.loads(out[out.index("{\n"):out.rindex("\n}") + 2])
        assert len(data['cases']) == 1
        assert data['metadata']['incomplete'] is True

    def test_bad_constants(self, tmp_path):
        consts = write_json(tmp_path / "consts.json", {"k": 9})
        assert main(["gen", config.ROVER_SPEC_FILE, "--consts", consts]) == ExitCode.USAGE

    def test_build_timings(self, tmp_path, capsys):
        out = tmp_path / "suite.json"
        assert main(["gen", config.FIGURE_SPEC_FILE, "--out", str(out), "--timings"]) == ExitCode.PASS
        lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("build ")]
        assert len(lines) == 1
        assert lines[0].startswith("build figure: ")
        assert "over soft bound" not in lines[0]


class TestMonitorCommand:
    """scsl monitor"""

    def test_pass_and_fail(self, tmp_path):
        good = write_json(tmp_path / "good.json", [{"x": 1}, {"x": 2}])
        bad = write_json(tmp_path / "bad.json", [{"x": 1}, {"x": 0}])
        args = ["monitor", config.FIGURE_SPEC_FILE, "--formula", "G(x > 0)", "--trace"]
        assert main(args + [good]) == ExitCode.PASS
        assert main(args + [bad]) == ExitCode.FAIL

    def test_widened_next(self, tmp_path):
        trace = write_json(tmp_path / "t.json", [{"x": 0}, {"x": 0}, {"x": 1}])
        args = ["monitor", config.FIGURE_SPEC_FILE, "--formula", "X(x = 1)", "--trace", trace]
        assert main(args) == ExitCode.FAIL
        assert main(args + ["--cycle", "2"]) == ExitCode.PASS

    def test_bad_formula(self, tmp_path):
        trace = write_json(tmp_path / "t.json", [{"x": 0}])
        assert main(["monitor", config.FIGURE_SPEC_FILE, "--formula", "x +", "--trace", trace]) == ExitCode.USAGE

    def test_empty_trace(self, tmp_path):
        trace = write_json(tmp_path / "t.json", [])
        assert main(["monitor", config.FIGURE_SPEC_FILE, "--formula", "x", "--trace", trace]) == ExitCode.USAGE


class TestRunCommands:
    """scsl simulate, systest and report"""

    def test_simulate_needs_a_system_test(self):
        assert main(["simulate"]) == ExitCode.USAGE
        assert main(["simulate", config.FIGURE_SPEC_FILE, "--no-store"]) == ExitCode.USAGE

    def test_unknown_experiment(self):
        assert main(["simulate", "--experiment", "T-99", "--no-store"]) == ExitCode.USAGE

    def test_simulate_and_report(self, tmp_path, capsys):
        store = tmp_path / "store"
        code = main(["simulate", config.ROVER_SPEC_FILE, "--suite", config.INIT_SUITE_FILE,
                     "--max-ticks", "20", "--store", str(store)])
        assert code == ExitCode.FAIL
        assert "System test RoverSalvage" in capsys.readouterr().out

        runs = [p for p in store.iterdir() if p.is_dir()]
        assert len(runs) == 1
        run = runs[0]
        for name in ("report.json", "suite.json", "trace.ndjson", "logs/run.log"):
            assert (run / name).is_file()

        xlsx = tmp_path / "report.xlsx"
        assert main(["report", str(run), "--json", "--xlsx", str(xlsx)]) == ExitCode.FAIL
        out = capsys.readouterr().out
        data = json.loads(out[out.index("{\n"):out.rindex("\n}") + 2])
        assert data['status'] in ("FAIL", "INCOMPLETE")
        assert data['ticks'] == 20
        assert xlsx.is_file()

        out_dir = tmp_path / "exports"
        out_dir.mkdir()
        assert main(["report", str(run), "--xlsx", str(out_dir)]) == ExitCode.FAIL
        assert [p.name.startswith("SystemTestReport_") for p in out_dir.iterdir()] == [True]

    def test_report_of_missing_run(self, tmp_path):
        assert main(["report", str(tmp_path / "absent")]) == ExitCode.USAGE


class TestSettings:
    """Persistent preferences"""

    def test_defaults_are_written(self, tmp_path):
        path = tmp_path / "prefs" / "settings.json"
        settings = SettingsManager(str(path))
        assert path.is_file()
        assert settings.get_default_seed() == 0
        assert settings.get_tick_ms() == config.DEFAULT_TICK_MS

    def test_stored_values_and_last_spec(self, tmp_path):
        path = tmp_path / "settings.json"
        path.write_text(json.dumps({"default_seed": 7, "store_root": str(tmp_path / "runs")}), encoding="utf-8")
        settings = SettingsManager(str(path))
        assert settings.get_default_seed() == 7
        assert settings.get_store_root() == str(tmp_path / "runs")
        assert (tmp_path / "runs").is_dir()
        settings.set_last_spec("rover.scsl")
        assert json.loads(path.read_text(encoding="utf-8"))["last_spec"] == "rover.scsl"

    def test_unreadable_file_keeps_defaults(self, tmp_path):
        path = tmp_path / "settings.json"
        path.write_text("{not json", encoding="utf-8")
        assert SettingsManager(str(path)).get_tick_ms() == config.DEFAULT_TICK_MS
