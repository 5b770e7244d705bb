import json
from pathlib import Path

import pytest

from tingley_lab.isometry_factory import instance_from_json

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str):
    return json.loads((FIXTURES / name).read_text())


@pytest.fixture
def e2():
    return instance_from_json(load_fixture("e2_instance.json"))


@pytest.fixture
def e3():
    return instance_from_json(load_fixture("e3_instance.json"))


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance matrix")
        for line in lines:
            terminalreporter.write_line(line)
