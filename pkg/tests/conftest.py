from pathlib import Path

import pytest

from sfgwg.config import load_config
from sfgwg.pipeline import Design, run_command

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def reference_config():
    return load_config(ROOT / "configs" / "reference.json")


@pytest.fixture(scope="session")
def reference_design(reference_config):
    """Reference waveguide on the default grid; eigensolves are memoised on the instance."""
    return Design(reference_config)


@pytest.fixture(scope="session")
def reference_modes(reference_design):
    return reference_design.fundamentals()


@pytest.fixture(scope="session")
def reference_qpm_report(reference_design, reference_config):
    return run_command("qpm", reference_config, design=reference_design)
