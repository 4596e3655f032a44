import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ggmstruct.exceptions import EmptyGraph, InvalidSpec, NotPositiveDefinite, SingularConditioningSet
from ggmstruct.model import (
    FourNode,
    GgmInstance,
    RegularRandom,
    ThreeNode,
    TriangleCloud,
    build_instance,
    conditional_correlation,
    load_model,
    normalized_strength,
    save_model,
    spec_from_params,
    true_min_kappa,
)


def closed_form_rho(kappa, eps):
    return kappa * math.sqrt(eps) / math.sqrt((1 - kappa**2) * (2 - eps))


def cofactor_rho(kappa, eps):
    # vertex 4 is isolated, so conditioning on it leaves the marginal 3x3 block;
    # Sigma_12 = -kappa*eps/det, Sigma_11 = 1-(1-eps)^2, Sigma_22 = 1-kappa^2
    s12 = -kappa * eps
    s11 = 1 - (1 - eps) ** 2
    s22 = 1 - kappa**2
    return s12 / math.sqrt(s11 * s22)


def test_triangle_cloud_matches_definition():
    inst = build_instance(TriangleCloud(kappa=0.4, epsilon=0.01, sigma2=1000.0, p=200))
    th = inst.theta
    assert th[0, 1] == th[0, 2] == 0.4
    assert th[1, 2] == 0.99
    assert np.all(np.diag(th)[3:] == 0.001)
    assert inst.edges == {(0, 1), (0, 2), (1, 2)}
    assert inst.kappa == pytest.approx(0.4, abs=1e-15)
    assert inst.d == 2 and inst.p == 200


def test_three_node(three_node):
    expected = np.array([[1, 0.3, 0.3], [0.3, 1, 0.9], [0.3, 0.9, 1]])
    np.testing.assert_array_equal(three_node.theta, expected)
    assert three_node.kappa == pytest.approx(0.3)
    assert normalized_strength(three_node.theta, 0, 1) == pytest.approx(0.3)


@pytest.mark.parametrize(
    "spec",
    [
        TriangleCloud(kappa=0.4, epsilon=0.0, sigma2=1.0, p=5),
        TriangleCloud(kappa=0.995, epsilon=0.01, sigma2=1.0, p=5),
        TriangleCloud(kappa=0.4, epsilon=0.01, sigma2=0.0, p=5),
        ThreeNode(kappa0=0.0, epsilon=0.1),
        FourNode(kappa=0.4, epsilon=1.0),
        RegularRandom(p=7, d=3, kappa_min=0.2, kappa_max=0.4),
        RegularRandom(p=8, d=3, kappa_min=0.5, kappa_max=0.4),
    ],
)
def test_invalid_specs_rejected(spec):
    with pytest.raises(InvalidSpec):
        build_instance(spec)


def test_regular_random_degrees_and_strengths(regular10):
    deg = np.zeros(10, dtype=int)
    for i, j in regular10.edges:
        deg[i] += 1
        deg[j] += 1
        assert 0.2 <= normalized_strength(regular10.theta, i, j) <= 0.4
    assert np.all(deg == 3)


def test_regular_random_is_deterministic():
    a = build_instance(RegularRandom(p=12, d=3, kappa_min=0.2, kappa_max=0.4, seed=3))
    b = build_instance(RegularRandom(p=12, d=3, kappa_min=0.2, kappa_max=0.4, seed=3))
    np.testing.assert_array_equal(a.theta, b.theta)


def test_regular_random_shrinks_until_definite():
    # a 2-regular graph at strength 0.5 is singular for many sign patterns
    kappas = {
        round(build_instance(RegularRandom(p=15, d=2, kappa_min=0.5, kappa_max=0.5, seed=s)).kappa, 12)
        for s in range(20)
    }
    assert kappas <= {0.5, 0.45}
    assert 0.45 in kappas


def test_regular_random_gives_up():
    # dense random signs at strength 0.99: twenty 0.9 shrinks are not enough
    with pytest.raises(NotPositiveDefinite):
        build_instance(RegularRandom(p=40, d=39, kappa_min=0.99, kappa_max=0.99, seed=0))


def test_not_positive_definite_from_precision():
    with pytest.raises(NotPositiveDefinite):
        GgmInstance.from_precision(np.array([[1.0, 2.0], [2.0, 1.0]]))


@pytest.mark.parametrize(
    "spec",
    [
        TriangleCloud(kappa=0.4, epsilon=0.01, sigma2=1e4, p=30),
        ThreeNode(kappa0=0.25, epsilon=0.5),
        FourNode(kappa=0.6, epsilon=0.1),
        RegularRandom(p=12, d=3, kappa_min=0.2, kappa_max=0.4, seed=11),
    ],
)
def test_sigma_inverts_theta(spec):
    inst = build_instance(spec)
    assert np.max(np.abs(inst.sigma @ inst.theta - np.eye(inst.p))) < 1e-8
    np.testing.assert_allclose(inst.theta, inst.theta.T, atol=1e-10, rtol=0)
    assert np.all(np.linalg.eigvalsh(inst.theta) > 0)


def test_true_min_kappa():
    assert true_min_kappa(build_instance(ThreeNode(kappa0=0.25, epsilon=0.5))) == pytest.approx(0.25)
    empty = GgmInstance.from_precision(np.eye(3))
    with pytest.raises(EmptyGraph):
        true_min_kappa(empty)


def test_true_min_kappa_constant_strengths():
    inst = build_instance(RegularRandom(p=10, d=3, kappa_min=0.3, kappa_max=0.3, seed=1))
    assert true_min_kappa(inst) == pytest.approx(inst.kappa)
    assert inst.kappa in (pytest.approx(0.3), pytest.approx(0.3 * 0.9**1), pytest.approx(0.3 * 0.9**2))


def test_normalized_strength_basic():
    assert normalized_strength(np.eye(4), 0, 3) == 0.0
    inst = build_instance(TriangleCloud(kappa=0.4, epsilon=0.01, sigma2=10.0, p=6))
    assert normalized_strength(inst.theta, 1, 2) == pytest.approx(0.99)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 100.0), min_size=6, max_size=6))
def test_strength_rescaling_invariant(scales):
    inst = build_instance(TriangleCloud(kappa=0.4, epsilon=0.05, sigma2=3.0, p=6))
    D = np.diag(scales)
    scaled = D @ inst.theta @ D
    for i, j in itertools.combinations(range(6), 2):
        assert normalized_strength(scaled, i, j) == pytest.approx(normalized_strength(inst.theta, i, j), abs=1e-12)
        assert normalized_strength(inst.theta, i, j) == normalized_strength(inst.theta, j, i)


def test_conditional_correlation_closed_form():
    inst = build_instance(FourNode(kappa=0.4, epsilon=0.01))
    rho = conditional_correlation(inst.sigma, 0, 1, [3])
    # the closed form gives the magnitude; the signed value is negative
    assert abs(rho) == pytest.approx(closed_form_rho(0.4, 0.01), abs=1e-10)
    assert rho == pytest.approx(cofactor_rho(0.4, 0.01), abs=1e-10)
    assert rho < 0


@pytest.mark.parametrize("kappa", [0.1, 0.2, 0.4, 0.6, 0.8])
@pytest.mark.parametrize("eps", [0.001, 0.01, 0.05, 0.1, 0.5])
def test_conditional_correlation_grid(kappa, eps):
    if kappa >= 1 - eps:
        pytest.skip("outside the family")
    inst = build_instance(FourNode(kappa=kappa, epsilon=eps))
    rho = conditional_correlation(inst.sigma, 0, 1, [3])
    assert abs(rho) == pytest.approx(closed_form_rho(kappa, eps), abs=1e-9)
    assert rho == pytest.approx(cofactor_rho(kappa, eps), abs=1e-9)


def test_conditional_correlation_diagonal_and_errors():
    sigma = np.diag([1.0, 2.0, 3.0, 4.0])
    assert conditional_correlation(sigma, 0, 1, [2, 3]) == 0.0
    with pytest.raises(SingularConditioningSet):
        conditional_correlation(np.block([[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), np.ones((2, 2))]]), 0, 1, [2, 3])


def test_model_file_roundtrip(tmp_path, regular10):
    path = tmp_path / "m.json"
    save_model(regular10, path)
    back = load_model(path)
    np.testing.assert_array_equal(back.theta, regular10.theta)
    assert back.edges == regular10.edges
    assert back.family == "regular-random" and back.seed == 7 and back.d == 3


def test_spec_from_params():
    spec = spec_from_params("three-node", {"kappa0": 0.3, "epsilon": 0.1})
    assert spec == ThreeNode(0.3, 0.1)
    with pytest.raises(InvalidSpec):
        spec_from_params("nope", {})
