import numpy as np
import pytest
from scipy.stats import unitary_group


def haar_unitary(n, seed):
    rng = np.random.default_rng(seed)
    if n == 1:
        # scipy's sampler starts at dimension 2
        return np.exp(2j * np.pi * rng.uniform()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# restart 74 of seed 0 climbs to a Knill-type CS solution in the unitary 6x6 chart
KNILL_SEED, KNILL_RESTART = 0, 74


@pytest.fixture(scope="session")
def cs_unitary_config():
    from loqcopt import ModeConfig, OptimizeConfig, make_cs

    return OptimizeConfig(make_cs(), ModeConfig(4, (1, 1)), "unitary", seed=KNILL_SEED, workers=1)


@pytest.fixture(scope="session")
def knill_run(cs_unitary_config):
    from loqcopt.optimize import restart_seeds, run_restart
    from loqcopt.param import random_start

    oc = cs_unitary_config
    ss = restart_seeds(KNILL_SEED, KNILL_RESTART + 1)[KNILL_RESTART]
    x0 = random_start(oc.chart, oc.cfg.n_modes, oc.mask, ss)
    return run_restart(x0, oc, KNILL_RESTART)


# one line per acceptance criterion, echoed again at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
