import os
import pathlib

import pytest


@pytest.fixture(scope="session")
def source_dir():
    return pathlib.Path(os.environ.get("BOHMFLOW_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("BOHMFLOW_CLI", "")
    if not path:
        pytest.skip("command-line runner not built")
    return path
