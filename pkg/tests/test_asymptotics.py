import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfplane_fpp.asymptotics import (
    DirectionalCurve, Estimate, alpha_choice, boundary_decay_check, busemann, busemann_box,
    busemann_profile, convexity_fraction, direction_box, estimate_mu, estimate_mu_alpha,
    estimate_mu_strip, estimate_shape, estimate_theta, joint_stderr, lipschitz_check,
    reflection_asymmetry, sample_point_times, shape_from_points, theta_raw,
)
from halfplane_fpp.errors import BoxTooSmallError, ParameterError
from halfplane_fpp.fpp import passage_time
from halfplane_fpp.lattice import Axis, Domain, DomainKind, Edge, RegionSpec, Site, axis_site
from halfplane_fpp.weights import WeightOracle, edge_weight, materialize

GRID19 = np.linspace(0, math.pi / 2, 19)  # 5 degree steps


def circle(n=3600, r=1.0):
    a = np.linspace(0, 2 * math.pi, n, endpoint=False)
    return np.c_[r * np.cos(a), r * np.sin(a)]


def diamond(n=400):
    t = np.linspace(0, 1, n, endpoint=False)
    corners = np.array([[1, 0], [0, 1], [-1, 0], [0, -1], [1, 0]], float)
    return np.vstack([corners[i] + t[:, None] * (corners[i + 1] - corners[i]) for i in range(4)])


class TestEstimate:
    def test_ci(self):
        e = Estimate(1.0, 0.1, 10)
        assert e.ci95 == pytest.approx((1.0 - 0.196, 1.0 + 0.196))

    def test_single_sample(self):
        e = Estimate.from_samples([2.5])
        assert e.value == 2.5 and math.isnan(e.stderr) and e.n_samples == 1

    def test_roundtrip(self):
        e = Estimate.from_samples([1.0, 2.0, 4.0], params={"seed": 3})
        assert Estimate.from_dict(e.to_dict()) == e

    def test_joint(self):
        assert joint_stderr(Estimate(0, 3, 2), Estimate(0, 4, 2)) == 5

    def test_no_samples(self):
        with pytest.raises(ParameterError):
            Estimate.from_samples([])


class TestTimeConstants:
    def test_single_replica_n1(self):
        est = estimate_mu([1], 1, seed=5)
        dom = Domain.from_dict(est.params["domain"])
        t, _ = passage_time(dom, WeightOracle(5, 0), [(0, 0)], [(1, 0)])
        assert est.value == t

    def test_box_too_small(self):
        with pytest.raises(BoxTooSmallError):
            estimate_mu([4, 40], 2, seed=1, domain=Domain.half_plane(-5, 10, 5))

    def test_bad_n_list(self):
        with pytest.raises(ParameterError):
            estimate_mu([8, 4], 2, seed=1)

    def test_diagnostic_table(self):
        est = estimate_mu([4, 8, 16, 32], 20, seed=2)
        table = est.diagnostics["table"]
        assert [row["n"] for row in table] == [4, 8, 16, 32]
        assert table[-1]["mean"] == est.value
        assert est.diagnostics["steps"] == 3

    def test_alpha_zero_matches_axis(self):
        a = estimate_mu_alpha(0.0, [16, 32], 40, seed=3)
        b = estimate_mu([16, 32], 40, seed=3, kind=DomainKind.FULL_PLANE)
        assert abs(a.value - b.value) <= 2 * joint_stderr(a, b)

    def test_alpha_symmetry(self):
        a = estimate_mu_alpha(0.3, [32], 40, seed=4)
        b = estimate_mu_alpha(math.pi / 2 - 0.3, [32], 40, seed=4)
        assert abs(a.value - b.value) <= 2 * joint_stderr(a, b)

    def test_alpha_range(self):
        with pytest.raises(ParameterError):
            estimate_mu_alpha(2.0, [4], 2, seed=1)

    def test_axis_strip_is_a_sum(self):
        est = estimate_mu_strip(0, [10], 3, seed=9)
        for r in range(3):
            o = WeightOracle(9, r)
            total = sum(edge_weight(o, Edge(Site(x, 0), Axis.H)) for x in range(10))
            t = sample_point_times(9, Domain.from_dict(est.params["domain"]), [(10, 0)], 1, r)
            assert t[0, 0] == pytest.approx(total, rel=1e-12)

    def test_axis_strip_mean_is_one(self):
        est = estimate_mu_strip(0, [64], 100, seed=10)
        assert abs(est.value - 1.0) <= 3 * est.stderr

    def test_strip_kind_checked(self):
        with pytest.raises(ParameterError):
            estimate_mu_strip(2, [4], 2, seed=1, domain=Domain.strip(3, -10, 10))

    @settings(max_examples=5, deadline=None)
    @given(st.integers(0, 1000))
    def test_per_sample_domain_order(self, first):
        targets = [axis_site(n) for n in (8, 24, 48)]
        doms = [Domain.full_plane(-40, 90, -40, 40), Domain.half_plane(-40, 90, 40)]
        doms += [Domain.strip(k, -40, 90) for k in (16, 4, 1, 0)]
        rows = [sample_point_times(7, d, targets, 3, first) for d in doms]
        for a, b in zip(rows, rows[1:]):
            assert np.all(a <= b)

    def test_stderr_scaling(self):
        a = estimate_mu_strip(2, [32], 25, seed=11)
        b = estimate_mu_strip(2, [32], 100, seed=11)
        assert 1.0 <= a.stderr / b.stderr <= 4.0

    def test_workers_do_not_change_results(self):
        dom = direction_box(DomainKind.HALF_PLANE, [axis_site(20)], 10)
        a = sample_point_times(3, dom, [axis_site(20)], 6, workers=1)
        b = sample_point_times(3, dom, [axis_site(20)], 6, workers=2)
        assert np.array_equal(a, b)


class TestCurve:
    def test_validation(self):
        with pytest.raises(ParameterError):
            DirectionalCurve.from_values([0.0, 0.5, 0.4], [1, 1, 1])
        with pytest.raises(ParameterError):
            DirectionalCurve.from_values([0.0, 0.5, 0.9], [1, 0, 1])

    def test_alpha_choice_needs_lambda_above_one(self):
        assert alpha_choice(1.0, DirectionalCurve.from_values(GRID19, np.ones(19))) is None

    def test_alpha_choice_constant(self):
        got = alpha_choice(2.0, DirectionalCurve.from_values(GRID19, np.ones(19)))
        assert got == pytest.approx(math.radians(25))
        fine = np.linspace(0, math.pi / 2, 91)
        got = alpha_choice(2.0, DirectionalCurve.from_values(fine, np.ones(91)))
        assert got == pytest.approx(math.radians(29))

    def test_alpha_choice_strict_is_conservative(self):
        curve = DirectionalCurve.from_values(GRID19, np.ones(19), stderr=0.02)
        assert alpha_choice(2.0, curve, strict=True) <= alpha_choice(2.0, curve)

    def test_alpha_choice_needs_full_quarter(self):
        with pytest.raises(ParameterError):
            alpha_choice(2.0, DirectionalCurve.from_values([0.1, 0.5, 1.0], [1, 1, 1]))

    def test_lipschitz(self):
        assert lipschitz_check(DirectionalCurve.from_values(GRID19, np.ones(19))) == 0
        a = np.linspace(0, 0.5, 11)
        assert lipschitz_check(DirectionalCurve.from_values(a, 1 + a)) == pytest.approx(1.0)


class TestShape:
    def test_theta_diamond(self):
        assert estimate_theta(shape_from_points(diamond())).value == math.pi / 4

    def test_theta_circle(self):
        assert estimate_theta(shape_from_points(circle())).value == 0.0
        assert theta_raw(circle()) < 2 * math.pi / 720

    def test_theta_degenerate(self):
        with pytest.raises(ParameterError):
            theta_raw([[0, 0], [1, 1], [2, 2]])
        with pytest.raises(ParameterError):
            theta_raw([[0, 0], [1, 1]])

    def test_symmetric_cloud(self):
        # one point at the centre of each angular bin
        a = (np.arange(720) + 0.5) * 2 * math.pi / 720
        pts = np.c_[np.cos(a), np.sin(a)]
        shp = shape_from_points(pts)
        assert reflection_asymmetry(shp) < 1e-12
        assert convexity_fraction(shp, 1e-9) == 1.0

    def test_box_too_small(self):
        with pytest.raises(BoxTooSmallError):
            estimate_shape(10.0, 1, seed=1, radius=5)

    def test_small_run(self):
        shp = estimate_shape(12.0, 4, seed=2)
        assert shp.boundary.shape == (720, 2) and shp.per_replica.shape == (4, 720, 2)
        # every pooled point is inside the box scaled by 1/t
        r = shp.params["radius"] / shp.t
        assert np.nanmax(np.abs(shp.boundary)) < r


class TestBusemann:
    def test_trivial_identities(self):
        dom = busemann_box(20, 6)
        grid = materialize(WeightOracle(3, 1), dom)
        u, v = Site(2, 1), Site(5, 0)
        assert busemann(20, u, u, grid, dom).value == 0
        assert busemann(20, u, v, grid, dom).value == -busemann(20, v, u, grid, dom).value
        t_uv, _ = passage_time(dom, grid, [u], [v])
        assert abs(busemann(20, u, v, grid, dom).value) <= t_uv + 1e-12

    def test_additivity(self):
        dom = busemann_box(30, 8)
        grid = materialize(WeightOracle(4, 2), dom)
        whole = busemann(30, (0, 0), (8, 0), grid, dom).value
        parts = sum(busemann(30, (j, 0), (j + 1, 0), grid, dom).value for j in range(8))
        assert abs(whole - parts) <= 1e-9

    def test_profile_matches_direct_searches(self):
        prof = busemann_profile(5, [4, 8, 16], 3, seed=6)
        dom = Domain.from_dict(prof["domain"])
        for r in range(3):
            grid = materialize(WeightOracle(6, r), dom)
            for j, n in enumerate([4, 8, 16]):
                direct = busemann(n, (0, 0), (5, 0), grid, dom).value
                assert abs(prof["B"][r, j] - direct) <= 1e-9

    def test_profile_diagnostics(self):
        mu = Estimate(1.0, 0.01, 10)
        prof = busemann_profile(4, [2, 4, 8, 16, 32], 10, seed=7, mu_hat=mu)
        assert prof["monotonicity_violations"] == 0
        assert prof["bound_violations"] == 0
        assert "z" in prof

    def test_bad_n(self):
        dom = busemann_box(4, 4)
        with pytest.raises(ParameterError):
            busemann(0, (0, 0), (1, 0), WeightOracle(1), dom)

    def test_box_checked(self):
        with pytest.raises(BoxTooSmallError):
            busemann(50, (0, 0), (1, 0), WeightOracle(1), busemann_box(4, 4))

    def test_boundary_decay(self):
        spec = RegionSpec.from_tan(0.5)
        out = boundary_decay_check(spec, [32, 64], 12, 6, seed=8, mu_hat=Estimate(0.98, 0.01, 9))
        assert [0, 0] not in out["sites"]
        assert len(out["m_sweep"]) == 3
        assert 0.0 <= out["violation_fraction"] <= 1.0
        assert out["buckets"][0]["norm_lo"] == 0.0

    def test_boundary_decay_needs_two_halves(self):
        with pytest.raises(ParameterError):
            boundary_decay_check(RegionSpec.from_tan(0.5), [8], 4, 1, 1, Estimate(1, 0, 1))
