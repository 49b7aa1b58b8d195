"""Tests for data models."""
import json

from torusaction.storage.models import OperationResult, Report


def _report():
    report = Report(
        scenario="twist",
        command="verify",
        seed=0,
        grid=64,
        echo={"name": "twist", "version": 1},
        spectrum=[{"label": "center", "l_mu": 0.0, "error": 0.0}],
        linking=[{"label_a": "center", "label_b": "exterior", "value": 0}],
    )
    report.add(OperationResult(operation="width", value=2.09, error=1e-3))
    report.add(OperationResult(operation="schwarz", value="nonconstant", passed=True))
    return report


def test_operation_result_to_dict():
    """Test OperationResult serialization to dict."""
    result = OperationResult(operation="rotation", value=[0.4, 0.3], error=1e-12, iterations=1,
                             details={"n": 8})

    result_dict = result.to_dict()

    assert result_dict['operation'] == "rotation"
    assert result_dict['value'] == [0.4, 0.3]
    assert result_dict['error'] == 1e-12
    assert result_dict['iterations'] == 1
    assert result_dict['passed'] is None
    assert result_dict['details'] == {"n": 8}


def test_operation_result_from_dict():
    """Test OperationResult deserialization from dict."""
    result = OperationResult.from_dict({
        'operation': "kac",
        'value': 1.0,
        'error': None,
        'iterations': 3,
        'passed': True,
        'details': {},
    })

    assert result.operation == "kac"
    assert result.iterations == 3
    assert result.passed is True


def test_report_verdicts():
    """Test only checks count towards the verdict."""
    report = _report()

    assert report.verdicts == {"schwarz": True}
    assert report.passed

    report.add(OperationResult(operation="iteration", value=[], passed=False))
    assert not report.passed


def test_report_without_checks_passes():
    """Test a report with no checks passes."""
    report = Report(scenario="identity", command="spectrum", seed=0, grid=16, echo={})

    assert report.verdicts == {}
    assert report.passed


def test_report_roundtrip():
    """Test Report serialization roundtrip."""
    original = _report()

    restored = Report.from_json(original.to_json())

    assert restored.scenario == original.scenario
    assert restored.results == original.results
    assert restored.spectrum == original.spectrum
    assert restored.linking == original.linking
    assert restored.verdicts == original.verdicts


def test_report_json_is_deterministic():
    """Test equal reports serialize to identical documents with sorted keys."""
    first = _report().to_json()
    second = _report().to_json()

    assert first == second
    data = json.loads(first)
    assert list(data) == sorted(data)
    assert data['passed'] is True
