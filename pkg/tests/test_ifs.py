import numpy as np
import pytest

from fractri.bfif import assemble_model, build_model
from fractri.errors import DomainError
from fractri.geometry import plane_through
from fractri.ifs import (AffineMapCoefficients, MapTable, ScalingPolicy, barycentric_grid,
                         endpoint_residuals, hyperbolicity_theta, scaling_bound, scaling_centroid,
                         scaling_least_squares, solve_all, solve_coefficients)


def oracle_map(base, sub, alpha7):
    """Coefficients from plain linear solves, independent of the closed forms."""
    A = np.column_stack([base[:, 0], base[:, 1], np.ones(3)])
    a1, a2, b1 = np.linalg.solve(A, sub[:, 0])
    a3, a4, b2 = np.linalg.solve(A, sub[:, 1])
    a5, a6, b3 = np.linalg.solve(A, sub[:, 2] - alpha7 * base[:, 2])
    return dict(alpha1=a1, alpha2=a2, alpha3=a3, alpha4=a4, alpha5=a5, alpha6=a6,
                beta1=b1, beta2=b2, beta3=b3, delta=abs(a1 * a4 - a2 * a3))


class TestClosedForms:
    def test_match_linear_solve(self, rng):
        for _ in range(25):
            base = rng.uniform(-10, 10, size=(3, 3))
            sub = rng.uniform(-10, 10, size=(3, 3))
            alpha = rng.uniform(-0.9, 0.9)
            got = solve_coefficients(base, sub, alpha)
            for name, value in oracle_map(base, sub, alpha).items():
                assert getattr(got, name) == pytest.approx(value, rel=1e-8, abs=1e-8), name
            assert got.alpha7 == alpha

    def test_alpha7_must_contract(self):
        base = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
        with pytest.raises(DomainError):
            solve_all(base, base[None], np.array([1.0]))

    def test_endpoint_conditions(self, matyas_d4):
        res = endpoint_residuals(matyas_d4.maps, matyas_d4.base_data, matyas_d4.sub_data)
        assert res.max() < 1e-12

    def test_delta_is_area_ratio(self, matyas_d4):
        part = matyas_d4.partition
        np.testing.assert_allclose(matyas_d4.maps.delta, part.areas() / abs(part.base.area),
                                   rtol=1e-12)
        assert matyas_d4.maps.delta.sum() == pytest.approx(1.0, rel=1e-13)

    def test_orientation_reversing_maps_exist(self, matyas_d4):
        m = matyas_d4.maps
        det = m.alpha1 * m.alpha4 - m.alpha2 * m.alpha3
        assert (det < 0).any() and (det > 0).any()

    def test_composition_identity(self, matyas_d4, rng):
        """Q_n(L_n^-1 p) = h_n(p) - alpha_n7 b(L_n^-1 p) on each subtriangle."""
        model = matyas_d4
        w = rng.dirichlet(np.ones(3), size=(model.N, 40))
        p = np.einsum("nsk,nkd->nsd", w, model.partition.vertices_xy())
        n = np.arange(model.N)[:, None]
        ux, uy = model.maps.L_inv(n, p[..., 0], p[..., 1])
        lhs = model.maps.Q(n, ux, uy)
        rhs = model.h(n, p[..., 0], p[..., 1]) - model.maps.alpha7[:, None] * model.base_plane(ux, uy)
        assert np.abs(lhs - rhs).max() < 1e-9

    def test_single_map_helpers(self):
        m = AffineMapCoefficients(0.5, 0, 0, 0.5, 1, 2, 0.3, 1, -1, 4, 0.25)
        x, y = m.L(2.0, 4.0)
        assert (x, y) == (2.0, 1.0)
        assert m.L_inv(x, y) == pytest.approx((2.0, 4.0))
        assert m.F(1.0, 1.0, 10.0) == pytest.approx(1 + 2 + 4 + 3)
        assert m.w(0.0, 0.0, 0.0) == (1.0, -1.0, 4.0)

    def test_map_table_roundtrip(self, matyas_d4):
        maps = matyas_d4.maps
        again = MapTable(**{k: v for k, v in zip(
            ("alpha1", "alpha2", "alpha3", "alpha4", "alpha5", "alpha6", "alpha7",
             "beta1", "beta2", "beta3", "delta"), maps.as_array().T)})
        np.testing.assert_array_equal(again.as_array(), maps.as_array())
        assert list(maps)[3] == maps[3]


class TestColorPermutation:
    def test_invariants(self, matyas):
        base = build_model(matyas.base, 4, function=matyas)
        part = base.partition.recolored([2, 3, 1])
        other = assemble_model(part, ScalingPolicy(), function=matyas)
        # a consistent relabelling keeps every vertex pairing, so L_n itself is unchanged
        np.testing.assert_allclose(other.maps.as_array(), base.maps.as_array(), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(other.maps.delta, base.maps.delta, rtol=1e-12)
        np.testing.assert_allclose(other.maps.alpha7, base.maps.alpha7, rtol=1e-12, atol=1e-15)
        # Q_n o L_n^-1 as a function on D_n
        rng = np.random.default_rng(7)
        w = rng.dirichlet(np.ones(3), size=(base.N, 10))
        p = np.einsum("nsk,nkd->nsd", w, base.partition.vertices_xy())
        n = np.arange(base.N)[:, None]
        q1 = base.maps.Q(n, *base.maps.L_inv(n, p[..., 0], p[..., 1]))
        q2 = other.maps.Q(n, *other.maps.L_inv(n, p[..., 0], p[..., 1]))
        np.testing.assert_allclose(q1, q2, rtol=1e-9, atol=1e-9)


class TestScalingFactors:
    def test_centroid_hand_value(self):
        # (5 - mean(1,2,3)) / (10 - mean(4,4,4)) = 3 / 6
        assert scaling_centroid(5.0, 1, 2, 3, 10.0, 4, 4, 4) == 0.5

    def test_centroid_clamped(self):
        assert scaling_centroid(32.0, 1, 2, 3, 10.0, 4, 4, 4) == 0.9
        assert scaling_centroid(-28.0, 1, 2, 3, 10.0, 4, 4, 4) == -0.9

    def test_centroid_affine_denominator_gives_zero(self):
        assert scaling_centroid(5.0, 1, 2, 3, 4.0 + 1e-15, 4, 4, 4) == 0.0

    def test_centroid_vectorised(self):
        out = scaling_centroid(np.array([5.0, 2.0]), np.array([1, 2]), 2, 3, 10.0, 4, 4, 4)
        np.testing.assert_allclose(out, [0.5, -1 / 18])

    def test_barycentric_grid(self):
        grid = barycentric_grid(np.array([[0, 0], [1, 0], [0, 1]]), 4)
        assert grid.shape == (15, 2)
        assert len({tuple(p) for p in np.round(grid, 12)}) == 15

    @pytest.fixture
    def ls_setup(self, matyas_d4, matyas):
        model = matyas_d4
        n = 5
        samples = barycentric_grid(model.partition.vertices_xy()[n], 4)
        z = matyas(samples[:, 0], samples[:, 1])
        h = plane_through(*model.sub_data[n])
        return samples, z, h, model.base_plane, model.maps[n]

    def test_least_squares_matches_lstsq(self, ls_setup):
        samples, z, h, b, L = ls_setup
        ux, uy = L.L_inv(samples[:, 0], samples[:, 1])
        u = h(ux, uy) - b(ux, uy)
        oracle = np.linalg.lstsq(u[:, None], z - h(samples[:, 0], samples[:, 1]), rcond=None)[0][0]
        got = scaling_least_squares(samples, z, h, b, L, clip=False)
        assert got == pytest.approx(oracle, rel=1e-10)

    def test_bound_dominates(self, ls_setup):
        value = scaling_least_squares(*ls_setup, clip=False)
        assert abs(value) <= scaling_bound(*ls_setup) * (1 + 1e-12)

    def test_least_squares_zero_when_h_equals_b(self, ls_setup):
        samples, z, _, b, L = ls_setup
        assert scaling_least_squares(samples, z, b, b, L) == 0.0
        with pytest.raises(DomainError):
            scaling_bound(samples, z + 1.0, b, b, L)


class TestScalingPolicy:
    def test_defaults(self):
        p = ScalingPolicy()
        assert (p.mode, p.clamp, p.dprime) == ("centroid", 0.9, 4)

    @pytest.mark.parametrize("kwargs,exc", [
        (dict(mode="magic"), ValueError),
        (dict(mode="fixed", value=0.95), DomainError),
        (dict(mode="fixed", value=(0.1, -1.0)), DomainError),
        (dict(clamp=1.0), ValueError),
        (dict(dprime=0), ValueError),
    ])
    def test_validation(self, kwargs, exc):
        with pytest.raises(exc):
            ScalingPolicy(**kwargs)

    def test_sequence_value_stored_as_tuple(self):
        assert ScalingPolicy("fixed", [0.1, 0.2]).value == (0.1, 0.2)


class TestHyperbolicity:
    @pytest.mark.parametrize("d,theta", [(7, 0.0761594575714334), (10, 0.14128208460364552),
                                         (13, 0.2037925018319372)])
    def test_matyas_certified(self, matyas, d, theta):
        rep = build_model(matyas.base, d, function=matyas).hyperbolicity
        assert rep.theta == pytest.approx(theta, rel=1e-9)
        assert rep.certified and rep.contraction == 0.5

    def test_matyas_d4_not_certified(self, matyas_d4):
        # one map has |alpha1| + |alpha3| = 1/2 exactly, leaving no slack for the z-coupling
        assert matyas_d4.hyperbolicity.theta == 0.0
        assert not matyas_d4.hyperbolicity.certified

    def test_pure_planar_contraction(self):
        m = AffineMapCoefficients(0.25, 0, 0, 0.25, 0, 0, 0.5, 0, 0, 0, 1 / 16)
        rep = hyperbolicity_theta([m])
        assert rep.theta == float("inf") and rep.certified

    def test_identity_not_certified(self):
        m = AffineMapCoefficients(1, 0, 0, 1, 0, 0, 0.5, 0, 0, 0, 1)
        assert not hyperbolicity_theta([m]).certified
