import itertools
import json

import numpy as np
import pytest
from scipy.optimize import linprog

from projvol.polytope import (
    DegenerateBodyError,
    Polytope,
    add_halfspace,
    bounding_box,
    chebyshev_center,
    chord,
    exact_polygon,
    initial_body,
    lp_solve,
    mc_volume,
    simplex_body,
    support,
    width,
)
from projvol.rng import RngState

SQ2 = np.sqrt(2.0)


def brute_force_vertices(A, b, tol=1e-8):
    """Independent d=2 oracle: feasible intersections of all constraint pairs."""
    pts = []
    for i, j in itertools.combinations(range(A.shape[0]), 2):
        M = np.array([A[i], A[j]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, np.array([b[i], b[j]]))
        if np.all(A @ v <= b + tol):
            pts.append(v)
    return pts


def random_polytope(rng, d, m_extra=None):
    m = m_extra if m_extra is not None else int(rng.integers(d + 1, 3 * d + 6))
    A = rng.standard_normal((m, d))
    center = rng.standard_normal(d) * 0.3
    b = A @ center + (rng.random(m) * 1.5 + 0.05) * np.linalg.norm(A, axis=1)
    A = np.vstack([A, np.eye(d), -np.eye(d)])
    b = np.concatenate([b, center + 2.0, 2.0 - center])
    return Polytope(A, b)


class TestInitialBody:
    def test_d1_interval(self):
        P = initial_body("inscribed_cube", 1)
        assert P.width(np.array([1.0])) == pytest.approx(2.0)
        assert P.contains(np.array([0.99])) and not P.contains(np.array([1.01]))

    def test_d4_cube_side_one_inside_ball(self):
        P = initial_body("inscribed_cube", 4)
        eye = np.eye(4)
        for i in range(4):
            assert P.width(eye[i]) == pytest.approx(1.0)  # 2/sqrt(4)
        # vertices at +-1/2 coordinates, on the unit sphere
        vert = np.full(4, 0.5)
        assert P.contains(vert) and np.linalg.norm(vert) == pytest.approx(1.0)

    def test_unit_box_scaled(self):
        P = initial_body("unit_box_scaled", 4)
        assert P.contains(np.array([0.0, 0.0, 0.0, 0.0]))
        assert P.contains(np.full(4, 0.5)) and not P.contains(np.full(4, 0.51))

    def test_custom_validation(self):
        with pytest.raises(ValueError):
            initial_body("custom", 2, A=np.array([[1.0, 0.0]]), b=np.array([1.0]))  # unbounded
        with pytest.raises(ValueError):
            initial_body("custom", 1, A=np.array([[1.0], [-1.0]]), b=np.array([-2.0, 1.0]))  # empty


class TestLpSolve:
    def test_cube_max_x1(self):
        P = Polytope(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4), normalize=False)
        res = lp_solve(np.array([1.0, 0.0]), P, "max")
        assert res.status == "optimal"
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_simplex_face(self):
        res = lp_solve(np.array([1.0, 1.0]), simplex_body([1.0, 1.0]), "max")
        assert res.value == pytest.approx(1.0, abs=1e-8)

    def test_derived_vertex(self):
        # oracle: brute-force vertex enumeration of the 2-D feasible set
        A = np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0], [1.0, 0.0]])
        b = np.array([0.0, 0.0, 4.0, 3.0])
        c = np.array([3.0, 2.0])
        best = max(c @ v for v in brute_force_vertices(A, b))
        assert best == pytest.approx(11.0)
        res = lp_solve(c, Polytope(A, b), "max")
        assert res.value == pytest.approx(11.0, abs=1e-7)
        assert np.allclose(res.x, [3.0, 1.0], atol=1e-7)

    def test_empty_infeasible(self):
        P = Polytope(np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))
        assert lp_solve(np.array([1.0]), P).status == "infeasible"

    def test_min_sense(self):
        P = initial_body("inscribed_cube", 3)
        res = lp_solve(np.ones(3) / np.sqrt(3), P, "min")
        assert res.value == pytest.approx(-1.0, abs=1e-8)

    def test_against_scipy_random(self, gen):
        for trial in range(250):
            d = int(gen.integers(1, 7))
            P = random_polytope(gen, d)
            c = gen.standard_normal(d)
            res = lp_solve(c, P, "max")
            ref = linprog(-c, A_ub=np.asarray(P.A), b_ub=np.asarray(P.b),
                          bounds=[(None, None)] * d, method="highs")
            assert ref.status == 0
            assert res.status == "optimal"
            assert abs(res.value + ref.fun) <= 1e-7 * (1.0 + abs(ref.fun))
            assert np.max(P.A @ res.x - P.b) <= 1e-8

    def test_lp_matches_polygon_vertices(self, gen):
        # spec invariant: LP optimum equals the max over exact polygon vertices
        for _ in range(60):
            P = random_polytope(gen, 2, m_extra=int(gen.integers(3, 9)))
            poly = exact_polygon(P)
            c = gen.standard_normal(2)
            res = lp_solve(c, P, "max")
            best = max(c @ v for v in poly.vertices)
            assert abs(res.value - best) <= 1e-7 * (1 + abs(best))


class TestSupportWidth:
    def test_cube_widths(self):
        P = Polytope(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4), normalize=False)
        assert width(P, np.array([1.0, 0.0])) == pytest.approx(2.0)
        assert width(P, np.array([1.0, 1.0]) / SQ2) == pytest.approx(2 * SQ2)

    def test_simplex_width(self):
        assert width(simplex_body([3.0, 6.0]), np.array([0.0, 1.0])) == pytest.approx(6.0)

    def test_support_equals_lp(self):
        P = simplex_body([2.0, 5.0])
        u = np.array([0.3, -0.8])
        assert support(P, u) == pytest.approx(lp_solve(u, P, "max").value)

    def test_width_requires_unit(self):
        with pytest.raises(ValueError):
            width(initial_body("inscribed_cube", 2), np.array([2.0, 0.0]))

    def test_width_monotone_under_cuts(self, gen):
        for _ in range(20):
            P = random_polytope(gen, 3)
            u = gen.standard_normal(3)
            u /= np.linalg.norm(u)
            c = float(u @ P.interior_point())
            Q = P.add_halfspace(u, c, "le")
            for _ in range(10):
                v = gen.standard_normal(3)
                v /= np.linalg.norm(v)
                assert Q.width(v) <= P.width(v) + 1e-9


class TestAddHalfspace:
    def test_box_cut(self):
        P = Polytope(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4), normalize=False)
        Q = P.add_halfspace(np.array([1.0, 0.0]), 0.0, "le")
        assert Q.support(np.array([1.0, 0.0])) == pytest.approx(0.0, abs=1e-9)
        assert Q.support(np.array([-1.0, 0.0])) == pytest.approx(1.0, abs=1e-9)

    def test_non_binding_cut_keeps_set(self):
        P = simplex_body([1.0, 2.0])
        u = np.array([0.6, 0.8])
        Q = P.add_halfspace(u, P.support(u) + 1.0, "le")
        for v in (np.array([1.0, 0.0]), np.array([0.0, 1.0]), u):
            assert Q.width(v) == pytest.approx(P.width(v), abs=1e-9)

    def test_derived_ge_cut_on_simplex(self):
        # oracle: 2-D vertex enumeration of Delta((1,1)) cut by x1 >= 1/3
        P = simplex_body([1.0, 1.0])
        Q = P.add_halfspace(np.array([1.0, 0.0]), 1.0 / 3.0, "ge")
        verts = brute_force_vertices(np.asarray(Q.A), np.asarray(Q.b))
        expect = [np.array([1.0 / 3.0, 0.0]), np.array([1.0, 0.0]), np.array([1.0 / 3.0, 2.0 / 3.0])]
        for e in expect:
            assert any(np.linalg.norm(e - v) < 1e-9 for v in verts)
        assert exact_polygon(Q).area == pytest.approx(2.0 / 9.0, abs=1e-12)

    def test_degenerate_cut_raises(self):
        P = initial_body("inscribed_cube", 2)
        h = P.support(np.array([1.0, 0.0]))
        with pytest.raises(DegenerateBodyError):
            P.add_halfspace(np.array([1.0, 0.0]), h + 1e-13, "ge")

    def test_pruning_preserves_set(self, gen):
        P = random_polytope(gen, 2)
        for _ in range(6):
            u = gen.standard_normal(2)
            u /= np.linalg.norm(u)
            P = P.add_halfspace(u, P.support(u) + 0.5, "le")  # redundant cuts
        Q = P.pruned()
        assert Q.m < P.m
        assert exact_polygon(Q).area == pytest.approx(exact_polygon(P).area, rel=1e-10)


class TestChebyshev:
    def test_cube(self):
        c, r = chebyshev_center(Polytope(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4), normalize=False))
        assert np.allclose(c, 0.0, atol=1e-9)
        assert r == pytest.approx(1.0, abs=1e-9)

    def test_slab_ties(self):
        A = np.vstack([np.eye(2), -np.eye(2)])
        b = np.array([2.0, 1.0, 0.0, 0.0])  # [0,2] x [0,1]
        c, r = chebyshev_center(Polytope(A, b, normalize=False))
        assert r == pytest.approx(0.5, abs=1e-9)
        assert c[1] == pytest.approx(0.5, abs=1e-9)
        assert 0.5 - 1e-9 <= c[0] <= 1.5 + 1e-9

    def test_simplex_incircle(self):
        # oracle: analytic incircle radius of the right triangle Delta((1,1))
        expect = (2.0 - SQ2) / 2.0
        _, r = chebyshev_center(simplex_body([1.0, 1.0]))
        assert r == pytest.approx(expect, abs=1e-9)


class TestChord:
    def test_cube_center(self):
        P = Polytope(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4), normalize=False)
        assert chord(P, np.zeros(2), np.array([1.0, 0.0])) == pytest.approx((-1.0, 1.0))

    def test_cube_offset(self):
        P = Polytope(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4), normalize=False)
        t_lo, t_hi = chord(P, np.array([0.5, 0.0]), np.array([1.0, 0.0]))
        assert (t_lo, t_hi) == pytest.approx((-1.5, 0.5))

    def test_simplex_diagonal(self):
        # oracle: substitute x = (0.25, 0.25) + t*(1,1)/sqrt(2) into x1+x2 <= 1
        t_lo, t_hi = chord(simplex_body([1.0, 1.0]), np.array([0.25, 0.25]), np.array([1.0, 1.0]) / SQ2)
        assert t_hi == pytest.approx(0.25 * SQ2, abs=1e-9)

    def test_outside_point_rejected(self):
        with pytest.raises(ValueError):
            chord(simplex_body([1.0, 1.0]), np.array([2.0, 2.0]), np.array([1.0, 0.0]))

    def test_endpoints_on_boundary(self, gen):
        for _ in range(25):
            P = random_polytope(gen, 3)
            x = P.interior_point()
            u = gen.standard_normal(3)
            u /= np.linalg.norm(u)
            t_lo, t_hi = P.chord(x, u)
            assert t_lo <= 0.0 <= t_hi
            for t in (t_lo, t_hi):
                s = P.slack(x + t * u)
                assert np.min(s) >= -1e-9
                assert np.min(np.abs(s)) <= 1e-9  # some constraint binds


class TestExactPolygon:
    def test_unit_square(self):
        A = np.vstack([np.eye(2), -np.eye(2)])
        b = np.array([1.0, 1.0, 0.0, 0.0])
        poly = exact_polygon(Polytope(A, b, normalize=False))
        assert poly.area == pytest.approx(1.0)
        assert np.allclose(poly.centroid, [0.5, 0.5])

    def test_simplex_centroid_formula(self):
        poly = exact_polygon(simplex_body([3.0, 6.0]))
        assert poly.area == pytest.approx(9.0)
        assert np.allclose(poly.centroid, [1.0, 2.0], atol=1e-12)

    def test_cut_square(self):
        A = np.vstack([np.eye(2), -np.eye(2), np.array([[1.0, 1.0]]) / SQ2])
        b = np.array([1.0, 1.0, 0.0, 0.0, 1.0 / SQ2])
        poly = exact_polygon(Polytope(A, b, normalize=False))
        assert poly.area == pytest.approx(0.5)
        assert np.allclose(poly.centroid, [1.0 / 3.0, 1.0 / 3.0], atol=1e-12)

    def test_ccw_ordering(self, gen):
        P = random_polytope(gen, 2)
        V = exact_polygon(P).vertices
        e1 = np.roll(V, -1, axis=0) - V
        e2 = np.roll(V, -2, axis=0) - np.roll(V, -1, axis=0)
        cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        assert np.all(cross > -1e-12)

    def test_vertices_feasible(self, gen):
        P = random_polytope(gen, 2)
        for v in exact_polygon(P).vertices:
            assert P.contains(v, tol=1e-8)


class TestMcVolume:
    def test_full_box_exact(self):
        A = np.vstack([np.eye(2), -np.eye(2)])
        P = Polytope(A, np.array([1.0, 1.0, 0.0, 0.0]), normalize=False)
        res = mc_volume(P, (np.zeros(2), np.ones(2)), 2000, RngState(1).generator())
        assert res.estimate == pytest.approx(1.0)
        assert res.stderr == 0.0

    def test_triangle(self):
        res = mc_volume(simplex_body([1.0, 1.0]), (np.zeros(2), np.ones(2)), 100_000,
                        RngState(2).generator())
        assert abs(res.estimate - 0.5) <= 3 * res.stderr

    def test_ball_3d(self):
        # analytic: vol = 4*pi/3
        n = 24
        dirs = RngState(3).generator().standard_normal((400, 3))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        ball = Polytope(dirs, np.ones(400), normalize=False)  # circumscribing approx
        res = mc_volume(ball, (np.full(3, -1.0), np.full(3, 1.0)), 100_000, RngState(4).generator())
        # polytope with 400 tangent planes overestimates the ball slightly
        assert abs(res.estimate - 4 * np.pi / 3) <= 3 * res.stderr + 0.05

    def test_determinism(self):
        a = mc_volume(simplex_body([1.0, 1.0]), (np.zeros(2), np.ones(2)), 5000, RngState(9).generator())
        b = mc_volume(simplex_body([1.0, 1.0]), (np.zeros(2), np.ones(2)), 5000, RngState(9).generator())
        assert a.estimate == b.estimate and a.stderr == b.stderr

    def test_zero_hits_flag(self):
        tiny = Polytope(np.vstack([np.eye(2), -np.eye(2)]),
                        np.array([1e-9, 1e-9, 1e-9, 1e-9]), normalize=False)
        res = mc_volume(tiny, (np.full(2, -1.0), np.full(2, 1.0)), 1000, RngState(5).generator())
        assert res.zero_hits and res.estimate == 0.0 and res.stderr > 0.0


class TestSerialization:
    def test_roundtrip(self, gen):
        P = random_polytope(gen, 3)
        Q = Polytope.from_json(P.to_json())
        assert np.allclose(np.asarray(P.A), np.asarray(Q.A))
        assert np.allclose(np.asarray(P.b), np.asarray(Q.b))

    def test_schema(self):
        payload = json.loads(initial_body("inscribed_cube", 2).to_json())
        assert payload["d"] == 2
        assert all(len(row) == 3 for row in payload["rows"])

    def test_immutability(self):
        P = initial_body("inscribed_cube", 2)
        with pytest.raises(Exception):
            P.A[0, 0] = 5.0
        with pytest.raises(AttributeError):
            P.b = np.zeros(4)


class TestBoundingBox:
    def test_simplex(self):
        lo, hi = bounding_box(simplex_body([2.0, 3.0]))
        assert np.allclose(lo, [0.0, 0.0], atol=1e-8)
        assert np.allclose(hi, [2.0, 3.0], atol=1e-8)
