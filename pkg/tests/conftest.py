import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def e2e_env(tmp_path) -> Path:
    """Fresh copy of the end-to-end fixture (config, dataset, projects,
    pre-recorded generations)."""
    env = tmp_path / "e2e"
    shutil.copytree(FIXTURES / "e2e", env)
    return env


@pytest.fixture
def mathlib_copy(tmp_path) -> Path:
    root = tmp_path / "mathlib"
    shutil.copytree(FIXTURES / "projects" / "mathlib", root)
    return root
