import json
import shutil
import sys
from importlib import resources
from pathlib import Path

import pytest

from datamap.taxonomy import taxonomy_from_dict

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

FIXTURE_DIR = Path(str(resources.files("datamap") / "data" / "sdg7_fixture"))


@pytest.fixture
def fixture_dir():
    return FIXTURE_DIR


@pytest.fixture
def fixture_copy(tmp_path):
    """Writable copy of the bundled SDG 7 fixture."""
    dest = tmp_path / "fixture"
    shutil.copytree(FIXTURE_DIR, dest)
    return dest


@pytest.fixture
def truth():
    return json.loads((FIXTURE_DIR / "truth.json").read_text())["labels"]


@pytest.fixture
def small_taxonomy():
    return taxonomy_from_dict(
        {
            "name": "small",
            "children": [
                {
                    "segment": "sources",
                    "name": "Sources",
                    "children": [
                        {"segment": "eu", "children": [{"segment": "eurostat"}]},
                        {"segment": "other", "children": [{"segment": "iea"}, {"segment": "world-bank"}]},
                    ],
                },
                {"segment": "types", "name": "Types", "children": [{"segment": "gis"}]},
            ],
        }
    )


# -- one PASS/FAIL line per acceptance criterion --------------------------------

_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _acceptance.items():
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
