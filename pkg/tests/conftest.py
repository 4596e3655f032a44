import numpy as np
import pytest

from ggmstruct.model import FourNode, RegularRandom, ThreeNode, TriangleCloud, build_instance


@pytest.fixture
def triangle10():
    return build_instance(TriangleCloud(kappa=0.4, epsilon=0.01, sigma2=1000.0, p=10))


@pytest.fixture
def three_node():
    return build_instance(ThreeNode(kappa0=0.3, epsilon=0.1))


@pytest.fixture
def four_node():
    return build_instance(FourNode(kappa=0.4, epsilon=0.01))


@pytest.fixture
def regular10():
    return build_instance(RegularRandom(p=10, d=3, kappa_min=0.2, kappa_max=0.4, seed=7))


def random_covariance(rng, p, n):
    """Empirical covariance of n standard-normal draws through a random mixing."""
    mix = rng.standard_normal((p, p)) / np.sqrt(p) + np.eye(p)
    x = rng.standard_normal((n, p)) @ mix
    return x.T @ x / n


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = test_acceptance.format_results()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
