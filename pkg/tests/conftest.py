from functools import lru_cache

import pytest

from pcaplab.manifold import DomainSpec, euclidean, smoothed_cone
from pcaplab.solver_axisym import GridParams, solve

PERTURBED = DomainSpec(kind="perturbed_ball", r0=1.0, eps=0.1, k=2)


@lru_cache(maxsize=None)
def perturbed_field(p, Nr=256, Ntheta=96, background="euclidean"):
    """Solved potential of the perturbed unit ball, shared across test modules."""
    prof = euclidean(3) if background == "euclidean" else smoothed_cone(3, 0.8)
    return solve(prof, p, PERTURBED, GridParams(Nr, Ntheta))


@lru_cache(maxsize=None)
def ball_field(kind, p, Nr=128, Ntheta=48):
    prof = {"euclidean": euclidean(3), "smoothed": smoothed_cone(3, 0.5)}[kind]
    return solve(prof, p, DomainSpec(r0=1.0), GridParams(Nr, Ntheta))


@pytest.fixture(scope="session")
def field_p2():
    return perturbed_field(2.0)


ACCEPTANCE_LINES = {}


def record(criterion, ok, detail):
    """Store the one-line verdict of an acceptance criterion for the terminal summary."""
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
