"""Shared pytest fixtures; also puts the repository root on sys.path so tests import `src.*`"""
import logging
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from src.builtin_games import (build_chance_rps, build_figure1, build_kuhn_poker, build_rps,  # noqa: E402
                               build_skill_rps)
from src.policies import uniform_profile  # noqa: E402


@pytest.fixture
def figure1():
    return build_figure1()


@pytest.fixture
def kuhn():
    return build_kuhn_poker()


@pytest.fixture
def rps():
    return build_rps()


@pytest.fixture
def chance_rps():
    return build_chance_rps()


@pytest.fixture
def uniform(figure1):
    return uniform_profile(figure1)


@pytest.fixture
def builtin_games():
    return {
        "figure1": build_figure1(),
        "rps": build_rps(),
        "chance-rps": build_chance_rps(),
        "skill-rps": build_skill_rps(2, 0, 0.5),
        "kuhn": build_kuhn_poker(),
    }


@pytest.fixture
def write_file(tmp_path):
    def write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return write


@pytest.fixture(autouse=True)
def drop_cli_log_handler():
    """CLI runs bind a handler to the captured stderr; drop it once the capture closes"""
    yield
    root = logging.getLogger()
    for handler in [h for h in root.handlers if h.get_name() == "vardecomp"]:
        root.removeHandler(handler)
