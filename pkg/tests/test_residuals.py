import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinnweld.errors import ConfigError, DataError
from pinnweld.residuals import (TERMS, BoundaryConstants, CharScales, LossWeights, bc_losses,
                                displacement_residual, goal_loss_displacement, goal_loss_nugget,
                                heat_residual_1d, heat_residual_2d, heat_residual_partials_2d,
                                ic_losses, negative_temp_penalty, nondimensionalize, nugget_radii,
                                redimensionalize, robin_loss, symmetry_losses, total_loss)

SC = CharScales()


def fd_grad(fn, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp.flat[i] += h
        xm.flat[i] -= h
        g.flat[i] = (fn(xp) - fn(xm)) / (2 * h)
    return g


class TestScales:
    def test_time_scale(self):
        # 1000 * rho*c_p * z_c^2 / lambda_c in ms
        assert SC.t_c == pytest.approx(1000 * 2.7e-6 * 890 * 9 / 0.16, rel=1e-3)
        assert SC.t_c == pytest.approx(135.17, abs=0.05)

    def test_displacement_scale(self):
        assert SC.u_c == pytest.approx(660 * 23e-6 * 3)

    def test_aspect(self):
        assert SC.aspect == pytest.approx(0.36)

    def test_schedule_end_in_scaled_time(self):
        assert 760.0 / SC.t_c == pytest.approx(5.6226, abs=1e-3)

    def test_rejects_nonpositive(self):
        with pytest.raises(ConfigError):
            CharScales(z_c=0.0)

    @settings(max_examples=100, deadline=None)
    @given(r=st.floats(0, 10), z=st.floats(0, 3), t=st.floats(0, 760), T=st.floats(-50, 2000),
           u=st.floats(-1, 1), T0=st.floats(-30, 30))
    def test_round_trip(self, r, z, t, T, u, T0):
        sc = CharScales(T_0=T0)
        vals = {"r": r, "z": z, "t": t, "T": T, "u": u}
        back = redimensionalize(nondimensionalize(vals, sc), sc)
        for k, v in vals.items():
            assert back[k] == pytest.approx(v, rel=1e-12, abs=1e-12)

    def test_unknown_quantity(self):
        with pytest.raises(ConfigError):
            nondimensionalize({"p": 1.0}, SC)


class TestHeatResidual:
    def test_manufactured_1d(self):
        # T = exp(-t) sin(pi z) solves T_t = T_zz + Q with Q = (pi^2 - 1) T
        z, t = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 2, 5))
        T = np.exp(-t) * np.sin(np.pi * z)
        res = heat_residual_1d(-T, np.pi * np.exp(-t) * np.cos(np.pi * z), -np.pi ** 2 * T,
                               (np.pi ** 2 - 1) * T)
        assert np.abs(res).max() <= 1e-12

    def test_variable_conductivity_1d(self):
        # lam = 1 + T, steady profile T = sqrt(1 + 2z) - 1 has flux (1+T)T_z = 1
        z = np.linspace(0.1, 1, 9)
        T = np.sqrt(1 + 2 * z) - 1
        T_z = 1 / np.sqrt(1 + 2 * z)
        T_zz = -(1 + 2 * z) ** -1.5
        res = heat_residual_1d(0.0, T_z, T_zz, 0.0, lam=1 + T, dlam=1.0)
        assert np.abs(res).max() <= 1e-14

    def test_radial_steady_log(self):
        # ln r is harmonic in the axisymmetric Laplacian
        r = np.linspace(0.1, 1, 10)
        res = heat_residual_2d(0.0, 1 / r, -1 / r ** 2, 0.0, 0.0, r, 0.0, aspect=0.36)
        assert np.abs(res).max() <= 1e-13

    def test_axis_rejected(self):
        with pytest.raises(DataError):
            heat_residual_2d(0.0, 0.0, 0.0, 0.0, 0.0, np.array([0.0, 0.5]), 0.0)

    @settings(max_examples=50, deadline=None)
    @given(vals=st.lists(st.floats(-3, 3), min_size=6, max_size=6), r=st.floats(0.05, 1),
           lam=st.floats(0.1, 2), dlam=st.floats(-1, 1))
    def test_partials_match_finite_differences(self, vals, r, lam, dlam):
        T_t, T_r, T_rr, T_z, T_zz, Q = vals
        x = np.array([T_t, T_r, T_rr, T_z, T_zz])
        f = lambda v: heat_residual_2d(v[0], v[1], v[2], v[3], v[4], r, Q, lam, dlam, 0.36)
        expected = fd_grad(f, x, 1e-5)
        got = np.array(heat_residual_partials_2d(T_r, T_z, r, lam, dlam, 0.36), dtype=float)
        np.testing.assert_allclose(got, expected, atol=1e-6 * (1 + 1 / r))

    def test_displacement_residual_linear_profile(self):
        # u = beta * (T integrated): with T_z = 2 and u_zz = 2 the residual vanishes
        assert displacement_residual(2.0, 2.0) == 0.0
        assert displacement_residual(0.0, 1.0, beta_ratio=1.2) == pytest.approx(-1.2)


class TestLossTerms:
    def test_ic_exact(self):
        lt, lu = ic_losses(np.full(5, 0.03), np.zeros(5), 0.03)
        assert lt == 0.0 and lu == 0.0

    def test_ic_value(self):
        lt, lu = ic_losses(np.array([1.0, 3.0]), np.array([2.0, 0.0]), 1.0)
        assert lt == pytest.approx(2.0) and lu == pytest.approx(2.0)

    def test_robin_satisfied_profile(self):
        T = np.array([0.5, 0.9])
        coeff = np.array([0.4, 0.7])
        grad = -coeff * (T - 0.1)
        assert robin_loss(grad, T, coeff, 0.1) == pytest.approx(0.0, abs=1e-30)

    def test_robin_gradients(self):
        rng = np.random.default_rng(0)
        g, T = rng.normal(size=(2, 6))
        val, (dg, dT) = robin_loss(g, T, 0.3, 0.05, return_grad=True)
        np.testing.assert_allclose(dg, fd_grad(lambda v: robin_loss(v, T, 0.3, 0.05), g), atol=1e-8)
        np.testing.assert_allclose(dT, fd_grad(lambda v: robin_loss(g, v, 0.3, 0.05), T), atol=1e-8)

    def test_radial_coefficient(self):
        assert BoundaryConstants().radial_coeff(SC) == pytest.approx(1 / np.log(4))

    def test_biot(self):
        assert BoundaryConstants().biot(0.16, SC) == pytest.approx(0.025 * 3 / 0.16)

    def test_bc_losses_zero_for_exact_boundary(self):
        consts = BoundaryConstants()
        T = np.array([0.2, 0.4])
        lam = np.array([0.16, 0.15])
        T_z = -consts.biot(lam, SC) * (T - 19 / 660)
        axial = {"T": T, "T_z": T_z, "lam": lam}
        T_r = -consts.radial_coeff(SC) * (T - 20 / 660)
        strain = {"u_z": T - 23 / 660, "T": T}
        lT, lu = bc_losses(axial, {"T": T, "T_r": T_r}, np.zeros(3), consts, SC, strain=strain)
        assert lT == pytest.approx(0.0, abs=1e-28) and lu == pytest.approx(0.0, abs=1e-28)

    def test_bc_gradients(self):
        rng = np.random.default_rng(1)
        consts = BoundaryConstants()
        T, T_z, T_r, Tr, ub, uz, Ts = rng.normal(size=(7, 4))
        lam = np.full(4, 0.16)

        def f(T_, T_z_, Tr_, T_r_, ub_, uz_, Ts_):
            lT, lu = bc_losses({"T": T_, "T_z": T_z_, "lam": lam}, {"T": Tr_, "T_r": T_r_}, ub_, consts, SC,
                               strain={"u_z": uz_, "T": Ts_})
            return lT + lu
        _, _, grads = bc_losses({"T": T, "T_z": T_z, "lam": lam}, {"T": Tr, "T_r": T_r}, ub, consts, SC,
                                strain={"u_z": uz, "T": Ts}, return_grad=True)
        args = [T, T_z, Tr, T_r, ub, uz, Ts]
        expected = [grads["axial"][1], grads["axial"][0], grads["radial"][1], grads["radial"][0],
                    grads["u_base"], grads["strain"][0], grads["strain"][1]]
        for i, exp in enumerate(expected):
            def fi(v, i=i):
                a = list(args)
                a[i] = v
                return f(*a)
            np.testing.assert_allclose(exp, fd_grad(fi, args[i]), atol=1e-7)

    def test_goal_displacement(self):
        assert goal_loss_displacement([1.0, 2.0], [0.5, 0.5], [0.5, 1.5]) == 0.0
        assert goal_loss_displacement([1.0], [0.0], [0.0]) == 1.0
        with pytest.raises(DataError):
            goal_loss_displacement([1.0, 2.0], [0.0], [0.0])

    def test_nugget_radii(self):
        r = nugget_radii(5.0, SC, 11)
        np.testing.assert_allclose(r, np.linspace(0, 0.5, 6))
        assert nugget_radii(0.0, SC).size == 0
        assert nugget_radii(10.0, SC).size == 11
        with pytest.raises(DataError):
            nugget_radii(10.5, SC)

    def test_nugget_goal(self):
        assert goal_loss_nugget([]) == 0.0
        assert goal_loss_nugget([1.2, 1.0]) == 0.0
        assert goal_loss_nugget([0.5, 1.5]) == pytest.approx(0.125)

    def test_negative_penalty(self):
        assert negative_temp_penalty([0.1, 0.0]) == 0.0
        assert negative_temp_penalty([-0.2, 0.3]) == pytest.approx(0.02)

    def test_symmetry(self):
        a, b = symmetry_losses([0.0, 0.0], [1.0, -1.0])
        assert a == 0.0 and b == 1.0

    @settings(max_examples=50, deadline=None)
    @given(x=st.lists(st.floats(-5, 5), min_size=1, max_size=20))
    def test_losses_nonnegative(self, x):
        x = np.array(x)
        assert negative_temp_penalty(x) >= 0 and goal_loss_nugget(x) >= 0
        assert all(v >= 0 for v in ic_losses(x, x, 0.1))


class TestTotalLoss:
    def test_gate_closed_excludes_experimental_terms(self):
        terms = {k: 1.0 for k in TERMS}
        total, report = total_loss(terms, LossWeights(), gate=False)
        assert total == pytest.approx(len(TERMS) - 2)
        assert report["d"] == 1.0

    def test_fade_scales_experimental_terms(self):
        terms = {"pde_T": 2.0, "d": 1.0, "dp": 1.0}
        total, _ = total_loss(terms, LossWeights(), fade=0.5, gate=True)
        assert total == pytest.approx(2.0 + 0.5 * (0.7 + 10.0))

    def test_weights_apply(self):
        total, _ = total_loss({"pde_T": 1.0, "ic_T": 1.0, "bc_T": 1.0}, LossWeights(pde=2, ic=3, bc=4))
        assert total == pytest.approx(9.0)

    def test_unknown_term(self):
        with pytest.raises(ConfigError):
            total_loss({"foo": 1.0}, LossWeights())

    def test_negative_weight(self):
        with pytest.raises(ConfigError):
            LossWeights(d=-1.0)
