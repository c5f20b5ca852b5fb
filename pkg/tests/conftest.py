import logging

import numpy as np
import pytest

import oracles

from olgreform import equilibrium as eq
from olgreform.io_config import ModelConfig, load_inputs, policy_from_inputs
from olgreform.policy import build_scenario

logging.getLogger("numba").setLevel(logging.WARNING)


@pytest.fixture(scope="session")
def cfg():
    return ModelConfig()


@pytest.fixture(scope="session")
def inputs(cfg):
    return load_inputs(cfg)


@pytest.fixture(scope="session")
def initial(cfg, inputs):
    return eq.solve_steady_state(cfg, inputs)


@pytest.fixture(scope="session")
def terminal(cfg, inputs, initial):
    return eq.terminal_steady_state(cfg, inputs, guess=initial.state)


class RunCache:
    """Transition paths solved once per session, keyed by (scenario, reform, damping)."""

    def __init__(self, cfg, inputs, initial):
        self.cfg, self.inputs, self.initial = cfg, inputs, initial
        self.runs = {}

    def get(self, scenario="baseline", reform="none", damping=None):
        damping = self.cfg.solver.damping if damping is None else damping
        key = (scenario, reform, damping)
        if key not in self.runs:
            cfg = self.cfg.with_solver(damping=damping)
            years = cfg.start_year + np.arange(cfg.solver.horizon)
            sc = build_scenario(scenario, reform, years, policy_from_inputs(cfg, self.inputs))
            self.runs[key] = eq.solve_transition(cfg, self.inputs, sc, initial=self.initial)
        return self.runs[key]


@pytest.fixture(scope="session")
def runs(cfg, inputs, initial):
    return RunCache(cfg, inputs, initial)


@pytest.fixture(scope="session")
def baseline(runs):
    return runs.get()


def pytest_terminal_summary(terminalreporter):
    if oracles.ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(oracles.ACCEPTANCE, key=lambda x: x[0]):
            terminalreporter.write_line(line)
