import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conformal_rigidity import expr as ex
from conformal_rigidity.bilinear import contract
from conformal_rigidity.catalog import CATALOG, catalog_surface
from conformal_rigidity.errors import (
    DimensionMismatch,
    DomainError,
    InvalidParameter,
    IsotropicDirection,
    IsotropicPoint,
    UnknownIdentifier,
)
from conformal_rigidity.hypersurface import (
    Immersion,
    canonical_element,
    fundamental_forms,
    invariant_I,
    is_umbilical,
    jet_at,
    jets_on_grid,
    umbilic_ratio,
)
from conformal_rigidity.mobius import AmbientSpace, apply_to_ambient_point, dilation, inversion, translation

from conftest import forms, tame_mobius

C4 = AmbientSpace.of(4, 0)
GRAPH = Immersion.from_strings(C4, ["u1", "u2", "u3", "(u1^2 + 2*u2^2 + 3*u3^2)/2"], [(-1, 1)] * 3)


# -- independent finite-difference oracle ------------------------------------

def fd_jet(imm, u, step=1e-4):
    """Point, tangents and second partials from point evaluations only."""
    f = lambda v: np.array([ex.evaluate(c, v) for c in imm.components])  # noqa: E731
    d = imm.d
    E = np.eye(d) * step
    x = f(u)
    T = np.array([(f(u + E[i]) - f(u - E[i])) / (2 * step) for i in range(d)])
    S = np.empty((d, d, len(x)))
    for i in range(d):
        for j in range(d):
            S[i, j] = (f(u + E[i] + E[j]) - f(u + E[i] - E[j]) - f(u - E[i] + E[j]) + f(u - E[i] - E[j])) / (
                4 * step * step
            )
    return x, T, S


def oracle_forms(space, T, S, orient):
    """g, lambda, h with the normal from a generalized cross product."""
    n = space.n
    Gd = space.metric.diagonal()
    # cofactor vector: sum_k n_k t_ik = 0, so nu = G^{-1} n is G-orthogonal to every t_i
    cof = np.array([(-1) ** k * np.linalg.det(np.delete(T, k, axis=1)) for k in range(n)])
    nu = Gd * cof
    norm = nu @ (Gd * nu)
    nu = nu / np.sqrt(abs(norm))
    if nu @ orient < 0:
        nu = -nu
    eps = np.sign(norm)
    g = eps * (T * Gd) @ T.T
    lam = np.einsum("ijk,k->ij", S, Gd * nu)
    lam_mean = np.trace(np.linalg.solve(g, lam)) / (n - 1)
    return g, lam, lam - lam_mean * g, eps


def catalog_points(name, n, count, rng):
    imm = catalog_surface(name, n)
    lo = np.array([a for a, _ in imm.domain])
    hi = np.array([b for _, b in imm.domain])
    return imm, lo + (hi - lo) * rng.uniform(0.05, 0.95, size=(count, imm.d))


# -- jets --------------------------------------------------------------------

def test_jet_of_graph_at_origin():
    jet = jet_at(GRAPH, np.zeros(3))
    np.testing.assert_array_equal(jet.x, np.zeros(4))
    np.testing.assert_array_equal(jet.tangents, np.eye(4)[:3])
    for i in range(3):
        expected = np.zeros(4)
        expected[3] = i + 1
        np.testing.assert_array_equal(jet.second[i, i], expected)
    assert np.all(jet.second[0, 1] == 0)


def test_jet_matches_taylor_oracle():
    # second-order Taylor expansion around 0 reproduces nearby points
    jet = jet_at(GRAPH, np.zeros(3))
    du = np.array([1e-3, -2e-3, 1.5e-3])
    taylor = jet.x + du @ jet.tangents + 0.5 * np.einsum("i,j,ijk->k", du, du, jet.second)
    np.testing.assert_allclose(GRAPH.point(du), taylor, atol=1e-15)


def test_linear_immersion_has_no_second_partials():
    plane = Immersion.from_strings(C4, ["u1 + u2", "u2 - u3", "2*u3", "u1 - 0.5*u2 + 3"], [(-1, 1)] * 3)
    jet = jet_at(plane, [0.2, -0.4, 0.9])
    assert np.all(jet.second == 0)


def test_jet_outside_domain():
    with pytest.raises(DomainError):
        jet_at(GRAPH, [1.5, 0, 0])
    with pytest.raises(DimensionMismatch):
        jet_at(GRAPH, [0.0, 0.0])


def test_second_partials_are_symmetric(rng):
    imm, pts = catalog_points("graph-cubic", 5, 5, rng)
    for jet in jets_on_grid(imm, pts):
        assert np.array_equal(jet.second, jet.second.transpose(1, 0, 2))


@pytest.mark.parametrize("name", CATALOG)
def test_jets_match_finite_differences(name, rng):
    imm, pts = catalog_points(name, 4, 4, rng)
    for u in pts:
        jet = jet_at(imm, u)
        x, T, S = fd_jet(imm, u)
        np.testing.assert_allclose(jet.x, x, rtol=1e-15, atol=1e-15)
        assert np.max(np.abs(jet.tangents - T)) < 1e-7
        assert np.max(np.abs(jet.second - S)) < 1e-5


def test_immersion_validation():
    with pytest.raises(DimensionMismatch):
        Immersion.from_strings(C4, ["u1", "u2", "u3"], [(-1, 1)] * 3)
    with pytest.raises(DimensionMismatch):
        Immersion.from_strings(C4, ["u1", "u2", "u3", "0"], [(-1, 1)] * 2)
    with pytest.raises(DimensionMismatch):
        Immersion.from_strings(C4, ["u1", "u2", "u3", "0"], [(-1, 1), (1, 1), (0, 1)])
    with pytest.raises(UnknownIdentifier):
        Immersion.from_strings(C4, ["u1", "u2", "u4", "0"], [(-1, 1)] * 3)


def test_catalog_errors():
    with pytest.raises(InvalidParameter):
        catalog_surface("torus", 4)
    with pytest.raises(InvalidParameter):
        catalog_surface("pseudo-graph", 4, AmbientSpace.of(4, 0))


def test_grid_ordering():
    grid = GRAPH.grid(3)
    assert grid.shape == (27, 3)
    np.testing.assert_array_equal(grid[0], [-1, -1, -1])
    np.testing.assert_array_equal(grid[1], [-1, -1, 0])
    np.testing.assert_array_equal(grid[-1], [1, 1, 1])


# -- fundamental forms -------------------------------------------------------

def test_graph_forms_at_origin():
    data = fundamental_forms(C4, jet_at(GRAPH, np.zeros(3)))
    np.testing.assert_allclose(data.g, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(data.lam, np.diag([1.0, 2.0, 3.0]), atol=1e-15)
    assert data.lam_mean == pytest.approx(2.0, abs=1e-15)
    np.testing.assert_allclose(data.h, np.diag([-1.0, 0.0, 1.0]), atol=1e-15)
    assert data.epsilon == 1


def test_graph_forms_match_fd_oracle():
    x, T, S = fd_jet(GRAPH, np.zeros(3))
    g, lam, h, eps = oracle_forms(C4, T, S, np.array([0, 0, 0, 1.0]))
    np.testing.assert_allclose(g, np.eye(3), atol=1e-8)
    np.testing.assert_allclose(lam, np.diag([1.0, 2.0, 3.0]), atol=1e-6)
    np.testing.assert_allclose(h, np.diag([-1.0, 0.0, 1.0]), atol=1e-6)


@pytest.mark.parametrize("name", CATALOG)
@pytest.mark.parametrize("n", [4, 5])
def test_forms_match_fd_oracle_on_catalog(name, n, rng):
    imm, pts = catalog_points(name, n, 3, rng)
    for u in pts:
        data = fundamental_forms(imm.space, jet_at(imm, u))
        _, T, S = fd_jet(imm, u)
        g, lam, h, eps = oracle_forms(imm.space, T, S, data.normal)
        assert eps == data.epsilon
        assert np.max(np.abs(data.g - g)) < 1e-5
        assert np.max(np.abs(data.lam - lam)) < 1e-5
        assert np.max(np.abs(data.h - h)) < 1e-5


def test_paraboloid_vertex_is_umbilical():
    imm = catalog_surface("paraboloid", 4)
    data = fundamental_forms(C4, jet_at(imm, np.zeros(3)))
    assert np.max(np.abs(data.h)) == 0.0
    assert is_umbilical(data)


def test_isotropic_point():
    space = AmbientSpace.of(3, 1)
    imm = Immersion.from_strings(space, ["u1", "u2", "u3", "u3"], [(-1, 1)] * 3)
    jet = jet_at(imm, [0.1, 0.2, 0.3])
    with pytest.raises(IsotropicPoint):
        fundamental_forms(space, jet)


def test_timelike_normal_convention():
    imm = catalog_surface("pseudo-graph", 4)
    data = fundamental_forms(imm.space, jet_at(imm, [0.1, -0.2, 0.05]))
    assert data.epsilon == -1
    # after the sign change g is the negated (negative definite) induced metric
    assert np.all(np.linalg.eigvalsh(data.g) < 0)
    Gd = imm.space.metric.diagonal()
    assert data.normal @ (Gd * data.normal) == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("name", CATALOG)
@pytest.mark.parametrize("n", [4, 5])
def test_normal_and_apolarity(name, n):
    imm = catalog_surface(name, n)
    Gd = imm.space.metric.diagonal()
    for jet in jets_on_grid(imm, imm.grid(4)):
        data = fundamental_forms(imm.space, jet)
        assert np.max(np.abs(jet.tangents @ (Gd * data.normal))) < 1e-10
        assert abs(contract(data.g_inv, data.h)) < 1e-10
        np.testing.assert_allclose(data.h, data.lam - data.lam_mean * data.g, atol=1e-15)


# -- invariant I and canonical element ---------------------------------------

DATA = forms(np.eye(3), np.diag([-1.0, 0.0, 1.0]))


def test_invariant_examples():
    assert invariant_I(DATA, [1, 0, 0]) == 1.0
    assert invariant_I(DATA, [0, 1, 0]) == 0.0
    umbilic = forms(np.eye(3), np.zeros((3, 3)))
    assert invariant_I(umbilic, [0.3, -1.0, 2.0]) == 0.0


def test_invariant_direct_substitution():
    g = np.array([[2.0, 0.5, 0], [0.5, 1.0, 0], [0, 0, 3.0]])
    h = np.array([[1.0, 0.2, 0.1], [0.2, -0.5, 0], [0.1, 0, 0.0]])
    w = np.array([1.0, 2.0, -1.0])
    hw = sum(h[i, j] * w[i] * w[j] for i in range(3) for j in range(3))
    gw = sum(g[i, j] * w[i] * w[j] for i in range(3) for j in range(3))
    assert invariant_I(forms(g, h), w) == pytest.approx(hw**2 / gw, rel=1e-14)


def test_isotropic_direction():
    data = forms(np.diag([1.0, 1.0, -1.0]), np.diag([1.0, 0.0, 1.0]))
    with pytest.raises(IsotropicDirection):
        invariant_I(data, [1, 0, 1])


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3),
    st.floats(-100, 100, allow_nan=False).filter(lambda c: abs(c) > 1e-3),
)
def test_invariant_homogeneity(w, c):
    w = np.asarray(w)
    if np.linalg.norm(w) < 1e-3:
        return
    data = forms(np.array([[2.0, 0.5, 0], [0.5, 1.0, 0], [0, 0, 3.0]]), np.diag([1.0, -2.0, 0.5]))
    base = invariant_I(data, w)
    assert invariant_I(data, c * w) == pytest.approx(c * c * base, rel=1e-13, abs=1e-300)


def test_canonical_element_examples():
    a = canonical_element(forms(4 * np.eye(3), 2 * np.diag([-1.0, 0.0, 1.0])))
    b = canonical_element(DATA)
    assert a.distance(b) < 1e-15
    zero = canonical_element(forms(np.eye(3), np.zeros((3, 3))))
    assert np.all(zero.h_hat == 0)
    c = canonical_element(forms(np.diag([1.0, 1.0, 4.0]), np.diag([1.0, 0.0, -0.25])))
    np.testing.assert_allclose(c.g_hat, np.diag([1.0, 1.0, 4.0]) / 4 ** (1 / 3), rtol=1e-15)
    assert abs(np.linalg.det(c.g_hat)) == pytest.approx(1.0, abs=1e-14)


def test_canonical_element_gauge(rng):
    for _ in range(20):
        A = rng.normal(size=(3, 3))
        g = A @ A.T + np.eye(3)
        h = rng.normal(size=(3, 3))
        h = h + h.T
        h = h - np.trace(np.linalg.solve(g, h)) / 3 * g
        r = rng.choice([-1, 1]) * rng.uniform(0.2, 5.0)
        el = canonical_element(forms(g, h))
        scaled = canonical_element(forms(r * r * g, r * h))
        assert el.distance(scaled) < 1e-12
        assert abs(abs(np.linalg.det(el.g_hat)) - 1) < 1e-10
        assert abs(contract(np.linalg.inv(el.g_hat), el.h_hat)) < 1e-10
        first = el.h_hat.ravel()[np.flatnonzero(el.h_hat.ravel())[0]]
        assert first >= 0


def test_umbilic_examples():
    sphere = catalog_surface("sphere-stereographic", 4)
    for jet in jets_on_grid(sphere, sphere.grid(3)):
        assert is_umbilical(fundamental_forms(C4, jet))
    assert not is_umbilical(DATA, 1e-8)
    almost = forms(np.eye(3), 1e-12 * np.diag([1.0, -1.0, 0.0]))
    assert is_umbilical(almost, 1e-8)
    assert umbilic_ratio(almost) < 1e-11


# -- conformal behaviour -----------------------------------------------------

@pytest.mark.parametrize("name", ["graph-cubic", "ellipsoid-graph", "pseudo-graph"])
@pytest.mark.parametrize("r", [2.0, 0.3, -1.5])
def test_weight_law(name, r):
    imm = catalog_surface(name, 4)
    for u in imm.grid(3):
        a = fundamental_forms(imm.space, jet_at(imm, u))
        b = fundamental_forms(imm.space, jet_at(imm.scaled(r), u))
        np.testing.assert_allclose(b.g, r * r * a.g, atol=1e-8)
        # h_bar = r h for a common normal; a flipped normal flips h
        sign = 1.0 if (b.normal @ a.normal) > 0 else -1.0
        np.testing.assert_allclose(b.h, sign * r * a.h, atol=1e-8)
        assert canonical_element(a).distance(canonical_element(b)) < 1e-8


def test_dilation_and_scaling_agree():
    imm = catalog_surface("graph-cubic", 4)
    via_map = imm.transformed(dilation(C4, 2.0))
    for u in imm.grid(3):
        np.testing.assert_allclose(via_map.point(u), imm.scaled(2.0).point(u), rtol=1e-14)


def test_transformed_points_follow_the_map(rng):
    imm = catalog_surface("ellipsoid-graph", 4)
    phi = inversion(C4, 1.3) @ translation(C4, [0.5, -1.0, 0.2, 2.0])
    bar = imm.transformed(phi)
    for u in imm.grid(3):
        np.testing.assert_allclose(bar.point(u), apply_to_ambient_point(phi, imm.point(u)), rtol=1e-13)


@pytest.mark.parametrize("name, n", [("graph-cubic", 5), ("ellipsoid-graph", 4), ("pseudo-graph", 4)])
def test_mobius_invariance_of_I(name, n, rng):
    imm = catalog_surface(name, n)
    grid = imm.grid(3)
    for _ in range(5):
        phi, _ = tame_mobius(imm.space, imm, grid, rng)
        bar = imm.transformed(phi)
        for j, jb in zip(jets_on_grid(imm, grid), jets_on_grid(bar, grid)):
            a = fundamental_forms(imm.space, j)
            b = fundamental_forms(imm.space, jb)
            for w in rng.normal(size=(4, imm.d)):
                I, Ib = invariant_I(a, w), invariant_I(b, w)
                assert abs(I - Ib) <= 1e-6 * abs(I)
