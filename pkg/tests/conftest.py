"""Shared fixtures.

The 30 s square maneuver is the expensive artifact everything wants to poke
at, so it runs once per session (compiled engine, warmed up) and the naive
counterpart likewise.
"""

import dataclasses

import pytest

from pivoted_tracking import cli, engine, simulator


@pytest.fixture(scope="session")
def paper_config():
    return cli.load_config(cli.bundled_config_path())


@pytest.fixture(scope="session")
def warm_engine():
    # compile the fast path once so no test pays (or times) JIT cost
    engine.warm_up()


@pytest.fixture(scope="session")
def square_put(paper_config, warm_engine):
    result = simulator.run(paper_config)
    assert result.completed
    return result


@pytest.fixture(scope="session")
def square_naive(paper_config, warm_engine):
    cfg = dataclasses.replace(paper_config, mode="naive")
    return simulator.run(cfg)


@pytest.fixture(scope="session")
def square_report(square_put):
    return simulator.certify(square_put)
