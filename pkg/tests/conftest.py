"""
Shared fixtures
"""

import pytest
from click.testing import CliRunner

from evdpor.bench import generate
from evdpor.program import parse_program


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def builtin():
    """Factory: builtin program by name and parameters"""
    def make(name, **params):
        return generate(name, params)
    return make


@pytest.fixture
def program_text():
    """Factory: parse program text"""
    return parse_program


@pytest.fixture
def fig1(builtin):
    return builtin("fig1_wrr")


@pytest.fixture
def fig2_nc(builtin):
    return builtin("fig2_nc")
