import numpy as np
import pytest
from hypothesis import settings, strategies as st

from mpirl.domains import DomainSpec
from mpirl.mdp import TabularMdp

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_mdp(seed: int, n_states: int = 5, n_actions: int = 3, temperature: float = 1.0) -> TabularMdp:
    rng = np.random.default_rng(seed)
    T = rng.dirichlet(np.ones(n_states), size=(n_actions, n_states))
    reward = rng.normal(size=n_states)
    rho0 = rng.dirichlet(np.ones(n_states))
    return TabularMdp(T, reward, rho0, temperature=temperature, name=f"random{seed}")


def random_policy(rng: np.random.Generator, n_states: int, n_actions: int) -> np.ndarray:
    return rng.dirichlet(np.ones(n_actions), size=n_states)


def random_actions(rng: np.random.Generator, n_states: int, n_actions: int) -> np.ndarray:
    return rng.integers(0, n_actions, size=n_states)


seeds = st.integers(min_value=0, max_value=2**31 - 1)
gammas = st.floats(min_value=0.0, max_value=0.98)


@pytest.fixture(scope="session")
def toy():
    return DomainSpec("toy").build()


@pytest.fixture(scope="session")
def big_small():
    return DomainSpec("big_small").build()


@pytest.fixture(scope="session")
def cliff():
    return DomainSpec("cliff").build()


@pytest.fixture(scope="session")
def domains(toy, big_small, cliff):
    return {"toy": toy, "big_small": big_small, "cliff": cliff}


# -- acceptance report -----------------------------------------------------------

_LINES = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_LINES, [])

    def emit(criterion: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
