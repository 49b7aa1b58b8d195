"""Tests for the command handler and the command line."""
import json
from pathlib import Path

import pytest

from torusaction.exceptions import ConfigurationError, ScenarioError
from torusaction.handlers.command_handler import CommandHandler
from torusaction.main import EXIT_ERROR, EXIT_FAILED, EXIT_OK, main, parse_tolerances
from torusaction.scenarios.scenario import Scenario
from torusaction.storage.file_storage import FileReportStore
from torusaction.utils.config import Config

SCENARIOS_DIR = Path(__file__).resolve().parent.parent / "data" / "scenarios"
SHEAR = SCENARIOS_DIR / "shear.json"
RIGID = SCENARIOS_DIR / "rigid.json"


@pytest.fixture
def handler(tmp_path):
    store = FileReportStore(str(tmp_path / "reports"))
    return CommandHandler(store, Config(str(tmp_path / "missing.json")))


def _write_shear(directory, **expect):
    data = json.loads(SHEAR.read_text())
    data['expect'].update(expect)
    path = directory / "shear.json"
    path.write_text(json.dumps(data))
    return path


def test_parse_tolerances():
    """Test KEY=VALUE pairs and a bare number for the quadrature tolerance."""
    assert parse_tolerances(None) == {}
    assert parse_tolerances(['5e-3']) == {'quad': 5e-3}
    assert parse_tolerances(['conv=1e-4', 'window = 4']) == {'conv': 1e-4, 'window': 4.0}
    with pytest.raises(ConfigurationError):
        parse_tolerances(['quad=small'])


def test_compute_rotation(handler):
    """Test the rotation command on a composed translation."""
    report = handler.compute(Scenario.from_file(str(RIGID)), 'rotation')

    rho = next(r for r in report.results if r.operation == 'rotation_vector')
    fixed = next(r for r in report.results if r.operation == 'contractible_fixed_points')
    assert rho.value == pytest.approx([0.4, 0.3], abs=1e-9)
    assert fixed.value == []
    assert report.grid == 64


def test_compute_rejects_unknown_command(handler):
    """Test unknown commands are refused."""
    with pytest.raises(ValueError):
        handler.compute(Scenario.from_file(str(RIGID)), 'entropy')


def test_load_scenario_uses_configured_modulus(tmp_path):
    """Test scenarios without L take the modulus from the config file."""
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"modulus": 8.0}))
    data = json.loads(RIGID.read_text())
    del data['L']
    scenario_path = tmp_path / "rigid.json"
    scenario_path.write_text(json.dumps(data))
    handler = CommandHandler(FileReportStore(str(tmp_path / "reports")), Config(str(config_path)))

    scenario = handler.load_scenario(str(scenario_path))

    assert scenario.L == 8.0
    assert scenario.build_isotopy().L == 8.0
    assert handler.load_scenario(str(RIGID)).L == 4.0


@pytest.mark.asyncio
async def test_run_stores_report(handler):
    """Test a run writes the report of the scenario."""
    report = await handler.run(str(SHEAR), 'verify')

    stored = await handler.store.get_report("shear")
    assert report.passed
    assert stored.verdicts == report.verdicts
    assert set(report.verdicts) == {'no_fixed', 'min_displacement', 'invariant', 'rho', 'schwarz'}


@pytest.mark.asyncio
async def test_run_suite(handler, tmp_path):
    """Test the suite verifies every scenario of a directory."""
    suite_dir = tmp_path / "suite"
    suite_dir.mkdir()
    _write_shear(suite_dir)

    result = await handler.run_suite(str(suite_dir))

    assert result.passed
    assert "PASS shear: no_fixed" in result.lines
    assert len(result.lines) == 5


@pytest.mark.asyncio
async def test_run_suite_on_empty_directory(handler, tmp_path):
    """Test an empty suite directory is an error."""
    with pytest.raises(ScenarioError):
        await handler.run_suite(str(tmp_path))


def test_main_verify_passes(tmp_path, capsys):
    """Test a passing verification exits with 0 and prints the results."""
    code = main(['verify', str(SHEAR), '--out', str(tmp_path), '--config', str(tmp_path / "missing.json")])

    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)['no_fixed'] == 0
    assert (tmp_path / "shear" / "report.json").exists()


def test_main_verify_fails(tmp_path):
    """Test a failed check exits with 2."""
    path = _write_shear(tmp_path, min_displacement={"value": 0.5, "tol": 1e-9})

    code = main(['verify', str(path), '--out', str(tmp_path / "out"), '--config', str(tmp_path / "missing.json")])

    assert code == EXIT_FAILED


def test_main_reports_bad_input(tmp_path):
    """Test malformed and missing scenario files exit with 1."""
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    config = str(tmp_path / "missing.json")

    assert main(['verify', str(broken), '--out', str(tmp_path), '--config', config]) == EXIT_ERROR
    assert main(['verify', str(tmp_path / "nope.json"), '--out', str(tmp_path), '--config', config]) == EXIT_ERROR
    assert main(['spectrum', '--out', str(tmp_path), '--config', config]) == EXIT_ERROR


def test_main_suite(tmp_path, capsys):
    """Test the suite command prints one line per check and the total."""
    suite_dir = tmp_path / "suite"
    suite_dir.mkdir()
    _write_shear(suite_dir)

    code = main(['suite', str(suite_dir), '--out', str(tmp_path / "out"), '--config', str(tmp_path / "missing.json")])

    out = capsys.readouterr().out.splitlines()
    assert code == EXIT_OK
    assert out[-1] == "PASS: 1 scenarios"
