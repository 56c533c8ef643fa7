import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from complexcut.cuts import (
    clique_cut, clique_rhs, conjugate_cut, dedupe, facet_catalog_cut33, facet_eta, gap_cut, h_cut,
    h_matrix, polygon_facets_cut33, real_facets_cut33, roc_orbit, rotate_cut, separate, strength,
    triangle_facets_cut33, triangle_templates,
)
from complexcut.linalg import INF, inner, rank_one, roots_of_unity
from complexcut.oracle import brute_max, brute_min, enumerate_vertices, random_cut_point
from complexcut.relax import FeasibleSet, Kind, solve_relaxation

SQ3 = math.sqrt(3)


def same_cut(a, b, tol=1e-12):
    return abs(a.rhs - b.rhs) <= tol and np.max(np.abs(a.Q - b.Q)) <= tol


def test_catalog_shape():
    cat = facet_catalog_cut33()
    assert len(cat) == 27
    for cut in triangle_facets_cut33():
        assert cut.rhs == pytest.approx(SQ3 / 2)
        assert np.max(np.abs(facet_eta(cut))) == pytest.approx(1.0)
        assert np.all(np.diag(cut.Q) == 0)
    for cut in polygon_facets_cut33():
        assert np.max(np.abs(facet_eta(cut))) == pytest.approx(SQ3)


def test_catalog_examples():
    first = triangle_facets_cut33()[0]
    np.testing.assert_allclose(facet_eta(first), [1j, np.exp(1j * np.pi / 6), 1j], atol=1e-15)
    row21 = facet_catalog_cut33()[20]
    np.testing.assert_allclose(facet_eta(row21), [-SQ3, 0, 0], atol=1e-15)
    assert first.value(np.ones((3, 3))) == pytest.approx(SQ3 / 2)


def test_catalog_is_orbit_of_first_facet_and_polygon():
    first = triangle_facets_cut33()[0]
    orbit = roc_orbit(first, 3)
    conj_orbit = roc_orbit(conjugate_cut(first), 3)
    poly = dedupe([c for p in polygon_facets_cut33() for c in roc_orbit(p, 3)])
    assert len(orbit) == 9 and len(conj_orbit) == 9 and len(poly) == 9
    union = dedupe(orbit + conj_orbit + poly)
    cat = facet_catalog_cut33()
    assert len(union) == 27
    assert all(any(same_cut(u, c, 1e-10) for c in cat) for u in union)


def test_real_facets():
    cuts = real_facets_cut33()
    assert len(cuts) == 6
    assert all(c.violation(np.ones((3, 3))) <= 1e-12 for c in cuts)
    # vertex (1, -1/2, -1/2) of the real projection
    x = np.array([[1, 1, -0.5], [1, 1, -0.5], [-0.5, -0.5, 1]])
    tight = {c.name for c in cuts if abs(c.violation(x)) < 1e-12}
    assert tight == {"x2>=-1/2", "x3>=-1/2", "x1+x2-x3<=1", "x1-x2+x3<=1"}
    # two complex facets add up to sqrt(3) (x1 + x2 - x3) <= sqrt(3)
    etas = [facet_eta(c) for c in triangle_facets_cut33()]
    assert any(np.allclose(a + b, [SQ3, SQ3, -SQ3]) for a in etas for b in etas)


@pytest.mark.parametrize("n,m,size", [(3, 3, 9), (4, 3, 27)])
def test_orbit_sizes(n, m, size):
    assert len(roc_orbit(clique_cut(n, m), m)) == size


def test_clique_examples():
    assert clique_cut(3, 4).rhs == pytest.approx(2.0)
    assert clique_cut(4, 3).rhs == pytest.approx(3.0)
    assert clique_rhs(3, INF) == 3
    # sum_{i<j} Re(conj(x_i) x_j) over B_3^4 takes values {0, +-3/2, 6}
    vals = {round(float(np.sum(np.triu(v, 1)).real), 9) for v in enumerate_vertices(4, 3).vertices}
    assert vals == {0.0, -1.5, 1.5, 6.0}
    with pytest.raises(ValueError):
        clique_rhs(5, 3)


@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize("m", range(2, 13))
def test_clique_rhs_matches_enumeration(n, m):
    val, _ = brute_max(np.eye(n) - np.ones((n, n)), m)
    assert clique_rhs(n, m) == pytest.approx(val, abs=1e-9)


def gap_min_by_enumeration(b, m):
    """min <B, x x*> over B_m^n, enumerated directly."""
    n = b.size
    B = np.outer(b, b.conj())
    B[np.diag_indices(n)] = 0
    return min(inner(B, v) for v in enumerate_vertices(n, m).vertices)


def test_gap_examples():
    data, cut = gap_cut(np.ones(3), 4)
    assert data.sigma == 3 and data.gamma == pytest.approx(1.0)
    assert data.min_value == pytest.approx(-2.0)
    assert cut.rhs == pytest.approx(2.0)
    data, _ = gap_cut(np.array([2.0 + 1j, 0, 0]), 3)
    assert np.all(data.B == 0)
    assert data.gamma**2 == pytest.approx(5.0)


@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(2, 6))
def test_gap_identity(seed, n, m):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    data, cut = gap_cut(b, m)
    assert data.min_value == pytest.approx(gap_min_by_enumeration(b, m), abs=1e-9)
    assert np.all(np.diag(data.B) == 0) and data.gamma >= 0


def test_h_cut():
    cut = h_cut()
    assert cut.rhs == 6 and cut.value(np.ones((4, 4))) == pytest.approx(6.0)
    for m in (2, 3, 4, 5):
        assert brute_max(h_matrix(), m)[0] <= 6 + 1e-9


@pytest.mark.parametrize("m,expected", [(5, 1.146), (3, 1.0)])
def test_strength_clique3(m, expected):
    assert strength(np.eye(3) - np.ones((3, 3)), m).value == pytest.approx(expected, abs=1e-3)


def test_strength_examples():
    assert strength(triangle_facets_cut33()[0].Q, 3).value == pytest.approx(
        SQ3 * math.cos(math.pi / 18) / math.cos(math.pi / 9), abs=1e-6)
    assert strength(np.eye(4) - np.ones((4, 4)), 6).value == pytest.approx(1.0, abs=1e-6)
    assert strength(h_matrix(), 5).value == pytest.approx(2 / SQ3, abs=1e-6)
    with pytest.raises(ValueError, match="diagonal shift"):
        strength(-np.ones((3, 3)) + np.eye(3) * 0 - np.eye(3) * 5, 3)


@given(st.integers(0, 1000))
def test_strength_invariant_under_rotation_and_conjugation(seed):
    rng = np.random.default_rng(seed)
    base = triangle_facets_cut33()[int(rng.integers(0, 18))]
    alpha = roots_of_unity(3)[rng.integers(0, 3, 3)]
    s0 = strength(base.Q, 3).value
    assert strength(rotate_cut(base, alpha).Q, 3).value == pytest.approx(s0, abs=1e-6)
    assert strength(conjugate_cut(base).Q, 3).value == pytest.approx(s0, abs=1e-6)


@given(st.integers(0, 1000))
def test_diagonal_shift_does_not_increase_strength(seed):
    rng = np.random.default_rng(seed)
    q = np.eye(3) - np.ones((3, 3))
    shift = np.diag(rng.uniform(0, 2, 3))
    assert strength(q + shift, 5).value <= strength(q, 5).value + 1e-6


def test_triangle_templates():
    assert len(triangle_templates(3)) == 18
    assert len(triangle_templates(4)) == 16
    with pytest.raises(ValueError):
        triangle_templates(5)


def test_separate_examples():
    facet = triangle_facets_cut33()[0]
    x = solve_relaxation(facet.Q, FeasibleSet(Kind.ELLIPTOPE, 3, 3)).X
    found = separate(x, ["triangle-facet"], 3)
    assert found[0].amount == pytest.approx(0.706, abs=1e-3)
    assert found[0].cut.name == "facet-1"
    rng = np.random.default_rng(0)
    inside = random_cut_point(3, 3, rng)
    assert separate(inside, ["triangle-facet", "polygon", "clique"], 3) == []
    xh = solve_relaxation(h_matrix(), FeasibleSet(Kind.ELLIPTOPE_INF, 4)).X
    found = separate(xh, ["h"], INF)
    assert found[0].amount == pytest.approx(4 * SQ3 - 6, abs=1e-5)
    with pytest.raises(ValueError):
        separate(2 * np.eye(3), ["clique"], 3)
