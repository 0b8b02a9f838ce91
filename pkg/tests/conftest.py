"""Shared fixtures built from the fixed sample inputs in fixture_data."""

import asyncio
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixture_data import (  # noqa: E402
    SAMPLE_ESSAY_TEXT,
    SAMPLE_RUBRIC,
    build_sample_bank,
    build_sample_quiz,
)
from jitfeedback.domain import validate_essay  # noqa: E402


def run(coro):
    """Drive an async test body to completion on a fresh event loop."""
    return asyncio.run(coro)


@pytest.fixture
def sample_quiz():
    return build_sample_quiz()


@pytest.fixture
def sample_bank():
    return build_sample_bank()


@pytest.fixture
def sample_essay():
    return validate_essay(SAMPLE_ESSAY_TEXT, submitted_at=1_700_000_000_000)


@pytest.fixture
def sample_rubric():
    return SAMPLE_RUBRIC
