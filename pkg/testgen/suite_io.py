"""
Suite Serialization
JSON text form of test suites with path-aware validation on load

Accepted documents:
- a full suite {"name", "metadata", "cases": [{"name", "steps": [...]}]}
- a list of steps (one case)
- a single step {"name", "stimulation", "expected_observations"}
"""
import json
from pathlib import Path
from typing import Any, List, Optional, Tuple, Union

from models.source import Diagnostic, SourceSpan
from models.test_suite import TestCase, TestStep, TestSuite
from utils.logger import setup_logger

logger = setup_logger(__name__)


def serialize_suite(suite: TestSuite) -> str:
    return json.dumps(suite.to_dict(), indent=2, ensure_ascii=False) + "\n"


def _problem(path: str, message: str, filename: str) -> Diagnostic:
    return Diagnostic.error(f"{path}: {message}", SourceSpan(filename))


def _check_step(data: Any, path: str, filename: str, problems: List[Diagnostic]):
    if not isinstance(data, dict):
        problems.append(_problem(path, "step must be an object", filename))
        return
    if not isinstance(data.get('name'), str):
        problems.append(_problem(f"{path}.name", "missing or not a string", filename))
    if not isinstance(data.get('stimulation', {}), dict):
        problems.append(_problem(f"{path}.stimulation", "must be an object", filename))
    observations = data.get('expected_observations', {})
    if not isinstance(observations, dict):
        problems.append(_problem(f"{path}.expected_observations", "must be an object", filename))
    elif not isinstance(observations.get('condition', ''), str):
        problems.append(_problem(f"{path}.expected_observations.condition", "must be a string", filename))


def validate_suite_document(data: Any, filename: str = "<suite>") -> List[Diagnostic]:
    """Problems of a parsed suite document, each naming its JSON path"""
    problems: List[Diagnostic] = []
    if isinstance(data, list):
        for k, step in enumerate(data):
            _check_step(step, f"$[{k}]", filename, problems)
        return problems
    if not isinstance(data, dict):
        return [_problem("$", "suite must be an object or a list of steps", filename)]
    if 'cases' not in data:
        _check_step(data, "$", filename, problems)
        return problems
    if not isinstance(data.get('name', ''), str):
        problems.append(_problem("$.name", "must be a string", filename))
    if not isinstance(data.get('metadata', {}), dict):
        problems.append(_problem("$.metadata", "must be an object", filename))
    cases = data['cases']
    if not isinstance(cases, list):
        return problems + [_problem("$.cases", "must be a list", filename)]
    for i, case in enumerate(cases):
        path = f"$.cases[{i}]"
        if not isinstance(case, dict):
            problems.append(_problem(path, "case must be an object", filename))
            continue
        if not isinstance(case.get('name'), str):
            problems.append(_problem(f"{path}.name", "missing or not a string", filename))
        steps = case.get('steps', [])
        if not isinstance(steps, list):
            problems.append(_problem(f"{path}.steps", "must be a list", filename))
            continue
        for k, step in enumerate(steps):
            _check_step(step, f"{path}.steps[{k}]", filename, problems)
    return problems


def load_suite(text: str, filename: str = "<suite>") -> Union[TestSuite, List[Diagnostic]]:
    """Suite from JSON text, or the diagnostics of a malformed document"""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        return [Diagnostic.error(f"$: invalid JSON: {e.msg}", SourceSpan(filename, e.lineno, e.colno, e.lineno, e.colno))]
    problems = validate_suite_document(data, filename)
    if problems:
        return problems
    if isinstance(data, list):
        return TestSuite(Path(filename).stem, [TestCase(Path(filename).stem, [TestStep.from_dict(s) for s in data])])
    if 'cases' not in data:
        step = TestStep.from_dict(data)
        return TestSuite(step.name, [TestCase(step.name, [step])])
    return TestSuite.from_dict(data)


def read_suite(path: str) -> Tuple[Optional[TestSuite], List[Diagnostic]]:
    """(suite, []) or (None, diagnostics) for a suite file"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except Exception as e:
        logger.error(f"Failed to read suite {path}: {e}")
        return None, [Diagnostic.error(f"cannot read suite: {e}", SourceSpan(str(path)))]
    result = load_suite(text, str(path))
    if isinstance(result, TestSuite):
        return result, []
    return None, result


def write_suite(suite: TestSuite, path: str) -> bool:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(serialize_suite(suite), encoding="utf-8")
        logger.info(f"Suite written: {path}")
        return True
    except Exception as e:
        logger.error(f"Failed to write suite {path}: {e}")
        return False
