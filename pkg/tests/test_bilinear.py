import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conformal_rigidity.bilinear import (
    FormClass,
    Signature,
    classify_form,
    contract,
    evaluate_form,
    invert_form,
    is_decomposable,
    linear_factors,
)
from conformal_rigidity.errors import DegenerateForm, DimensionMismatch, InvalidParameter


@pytest.mark.parametrize(
    "g, expected",
    [
        (np.eye(3), np.eye(3)),
        (np.diag([2.0, 2.0, 2.0]), np.diag([0.5, 0.5, 0.5])),
        (np.diag([1.0, 1.0, -1.0]), np.diag([1.0, 1.0, -1.0])),
    ],
)
def test_invert_form_examples(g, expected):
    np.testing.assert_allclose(invert_form(g), expected, atol=1e-15)


def test_invert_form_rejects_degenerate():
    with pytest.raises(DegenerateForm):
        invert_form(np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(DegenerateForm):
        invert_form(np.diag([1.0, 1.0, 1e-14]))


def test_degeneracy_threshold_scales_with_form():
    # a uniformly tiny but well-conditioned form is fine
    np.testing.assert_allclose(invert_form(1e-6 * np.eye(3)), 1e6 * np.eye(3))


@pytest.mark.parametrize(
    "g_inv, h, expected",
    [
        (np.eye(3), np.diag([-1.0, 0.0, 1.0]), 0.0),
        (np.eye(3), np.eye(3), 3.0),
        (np.diag([1.0, 1.0, -1.0]), np.eye(3), 1.0),
    ],
)
def test_contract_examples(g_inv, h, expected):
    assert contract(g_inv, h) == expected


def test_contract_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        contract(np.eye(3), np.eye(2))


@pytest.mark.parametrize(
    "q, expected",
    [
        (np.diag([1.0, -1.0, 0.0]), FormClass(2, 1, 1, True)),
        (np.eye(3), FormClass(3, 3, 0, False)),
        (np.zeros((3, 3)), FormClass(0, 0, 0, True)),
    ],
)
def test_classify_examples(q, expected):
    assert classify_form(q, 1e-9) == expected


@pytest.mark.parametrize(
    "q, expected",
    [
        (np.diag([1.0, -1.0, 0.0]), True),
        (np.diag([1.0, 1.0, 0.0]), False),
        (np.diag([1.0, 0.0, 0.0]), True),
    ],
)
def test_is_decomposable_examples(q, expected):
    assert is_decomposable(q, 1e-9) is expected


def test_explicit_factors_of_hyperbolic_form():
    alpha, beta = linear_factors(np.diag([1.0, -1.0, 0.0]))
    # (x1 - x2)(x1 + x2) up to reciprocal scaling of the factors
    sym = 0.5 * (np.outer(alpha, beta) + np.outer(beta, alpha))
    np.testing.assert_allclose(sym, np.diag([1.0, -1.0, 0.0]), atol=1e-15)


def test_linear_factors_refuses_definite_form():
    with pytest.raises(DegenerateForm):
        linear_factors(np.diag([1.0, 1.0, 0.0]))


@pytest.mark.parametrize(
    "g, v, expected",
    [
        (np.eye(3), [1, 0, 0], 1.0),
        (np.diag([1.0, 1.0, -1.0]), [1, 0, 1], 0.0),
        (np.diag([1.0, 2.0, 3.0]), [1, 1, 1], 6.0),
    ],
)
def test_evaluate_form_examples(g, v, expected):
    assert evaluate_form(g, v) == expected


def test_evaluate_form_wrong_length():
    with pytest.raises(DimensionMismatch):
        evaluate_form(np.eye(3), [1, 0])


def test_signature():
    s = Signature(3, 1)
    assert s.n == 4
    np.testing.assert_array_equal(s.metric(), np.diag([1, 1, 1, -1]))
    with pytest.raises(InvalidParameter):
        Signature(0, 2)


def test_classify_rejects_nonpositive_tol():
    with pytest.raises(InvalidParameter):
        classify_form(np.eye(2), 0.0)


def _random_congruence(rng, d):
    while True:
        P = rng.normal(size=(d, d))
        if np.linalg.cond(P) < 1e3:
            return P


def test_sylvester_law_under_random_congruences():
    rng = np.random.default_rng(7)
    checked = 0
    for trial in range(120):
        d = int(rng.integers(2, 7))
        plus = int(rng.integers(0, d + 1))
        minus = int(rng.integers(0, d - plus + 1))
        diag = np.concatenate(
            [rng.uniform(0.5, 3.0, plus), -rng.uniform(0.5, 3.0, minus), np.zeros(d - plus - minus)]
        )
        q = np.diag(rng.permutation(diag))
        P = _random_congruence(rng, d)
        moved = P.T @ q @ P
        assert classify_form(moved) == classify_form(q)
        assert classify_form(moved).rank == plus + minus
        checked += 1
    assert checked >= 100


def _symmetric(d):
    entries = st.floats(-3, 3, allow_nan=False, allow_subnormal=False)
    return arrays(np.float64, (d, d), elements=entries).map(lambda a: 0.5 * (a + a.T))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(_symmetric))
def test_double_inverse(g):
    if np.linalg.norm(g) < 1e-3 or np.linalg.cond(g) > 1e6:
        return
    back = invert_form(invert_form(g))
    assert np.linalg.norm(back - g) <= 1e-10 * np.linalg.norm(g)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(2, 6),
    st.integers(0, 2**31 - 1),
    st.sampled_from(["rank1", "hyperbolic", "generic"]),
)
def test_decomposable_forms_factor_explicitly(d, seed, kind):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=d)
    b = rng.normal(size=d)
    if kind == "rank1":
        q = rng.choice([-1, 1]) * np.outer(a, a)
    elif kind == "hyperbolic":
        q = 0.5 * (np.outer(a, b) + np.outer(b, a))
    else:
        m = rng.normal(size=(d, d))
        q = 0.5 * (m + m.T)
    if is_decomposable(q):
        alpha, beta = linear_factors(q)
        sym = 0.5 * (np.outer(alpha, beta) + np.outer(beta, alpha))
        assert np.max(np.abs(sym - q)) < 1e-8
    else:
        assert kind == "generic" or d == 1
        with pytest.raises(DegenerateForm):
            linear_factors(q)
