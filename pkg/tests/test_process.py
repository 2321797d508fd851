import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pinnweld import material
from pinnweld.errors import ConfigError, DataError, DomainError, SingularFitError
from pinnweld.process import (MACHINE_PID, ContactConfig, PIDParams, WeldSchedule, closed_loop_displacement,
                              contact_heat, contact_resistance_A, contact_resistance_B, controller_travel,
                              current_density, fit_pid, measured_displacement, pid_excitation, pid_response,
                              radial_weight, real_contact_area, synthetic_torque)

RHO_EL = 3.66e-5
RHO_F = 1e5
L_F = 1e-5
N0 = 120000
H20 = 430.0


class TestSchedule:
    def test_preheat_density(self):
        assert current_density(200.0, WeldSchedule()) == pytest.approx(12000.0 / 79.0)

    def test_upslope_midpoint(self):
        s = WeldSchedule(I_max=40000.0)
        assert current_density(435.0, s) == pytest.approx(0.5 * (12000.0 + 40000.0) / 79.0)

    def test_zero_after_pulse(self):
        assert current_density(600.0, WeldSchedule()) == 0.0

    def test_continuity_and_cooling(self):
        s = WeldSchedule(I_max=33000.0)
        for tb in (400.0, 470.0):
            assert abs(current_density(tb - 1e-12, s) - current_density(tb + 1e-12, s)) <= 1e-6
            assert abs(current_density(tb, s) - current_density(np.nextafter(tb, 1e9), s)) <= 1e-12
        t = np.linspace(560.0 + 1e-9, 760.0, 500)
        assert np.all(current_density(t, s) == 0.0)

    def test_outside_schedule(self):
        with pytest.raises(DomainError):
            current_density(800.0, WeldSchedule())
        with pytest.raises(DomainError):
            current_density(-1.0, WeldSchedule())

    def test_invalid_breakpoints(self):
        with pytest.raises(ConfigError):
            WeldSchedule(breakpoints=(0, 470, 400, 560, 760))


class TestPID:
    def test_zero_errors(self):
        assert np.all(pid_response(np.zeros(20), MACHINE_PID) == 0)

    def test_two_step_arithmetic(self):
        # 5.3*1 + 0.2*(0+1)*0.001 + 0.003*(1-0)/0.001
        out = pid_response([0.0, 1.0], MACHINE_PID)
        assert out[0] == 0.0
        assert out[1] == pytest.approx(5.3 + 0.2 * 0.001 + 3.0, rel=1e-14)

    def test_constant_error_derivative_vanishes(self):
        K = PIDParams(0.0, 0.0, 0.003)
        out = pid_response(np.full(10, 2.0), K)
        assert out[0] == pytest.approx(2.0 * 3.0) and np.all(out[1:] == 0)

    def test_integral_window(self):
        K = PIDParams(0.0, 1.0, 0.0, dt=1.0, window=3)
        out = pid_response(np.ones(6), K)
        np.testing.assert_array_equal(out, [1, 2, 3, 3, 3, 3])

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_linear_in_errors(self, seed, a, b):
        rng = np.random.default_rng(seed)
        e1, e2 = rng.normal(size=(2, 80))
        lhs = pid_response(a * e1 + b * e2, MACHINE_PID)
        rhs = a * pid_response(e1, MACHINE_PID) + b * pid_response(e2, MACHINE_PID)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


class TestFitPID:
    def test_noiseless_round_trip(self):
        x = pid_excitation(2000, seed=0)
        torque = synthetic_torque(x, MACHINE_PID)
        K, mse = fit_pid(torque, x, 4000.0, 6666.0)
        np.testing.assert_allclose(K.as_tuple(), MACHINE_PID.as_tuple(), rtol=1e-6)
        assert mse < 1e-12

    def test_all_zero_tie_break(self):
        K, mse = fit_pid(np.zeros(20), np.zeros(20), 0.0, 6666.0)
        assert K.as_tuple() == (0.0, 0.0, 0.0) and mse == 0.0

    def test_constant_signals_singular(self):
        with pytest.raises(SingularFitError):
            fit_pid(np.full(30, 5.0), np.full(30, 0.2), 4000.0, 6666.0)

    def test_short_series(self):
        with pytest.raises(DataError):
            fit_pid(np.ones(5), np.ones(5), 1.0, 1.0)

    def test_excitation_centred_on_equilibrium(self):
        x = pid_excitation(1000, F0=4000.0, k_spring=6666.0, amplitude=0.1, seed=3)
        assert np.all(np.abs(x - 4000.0 / 6666.0) <= 0.1)
        assert np.array_equal(x, pid_excitation(1000, seed=3))

    def test_noise_recovery(self):
        """Least squares is unbiased under torque noise. The proportional and
        derivative gains are recovered per draw; the integral gain carries
        about 0.2% of the torque, so only the mean over draws is tight."""
        x = pid_excitation(100000, seed=1)
        rng = np.random.default_rng(7)
        fits = np.array([fit_pid(synthetic_torque(x, MACHINE_PID, noise=0.01, rng=rng), x, 4000.0, 6666.0)[0].as_tuple()
                         for _ in range(40)])
        rel = fits / np.array(MACHINE_PID.as_tuple()) - 1
        assert np.all(np.abs(rel[:, [0, 2]]) <= 0.02)
        assert abs(rel[:, 1].mean()) <= 0.05


class TestDisplacement:
    def test_full_compensation(self):
        u = np.array([0.0, 0.3, 0.5])
        assert np.all(measured_displacement(u, u) == 0)

    def test_no_controller(self):
        u = np.array([0.0, 0.3, 0.5])
        np.testing.assert_array_equal(measured_displacement(u, np.zeros(3)), u)

    def test_elementwise(self):
        np.testing.assert_allclose(measured_displacement([0, 1, 2], [0, 0.5, 1]), [0, 0.5, 1])

    def test_travel_exceeding_expansion_rejected(self):
        with pytest.raises(DataError):
            measured_displacement([0.0, 0.1], [0.0, 0.2])

    def test_closed_loop_consistency(self):
        t = np.arange(761.0)
        u_th = 0.2 * (1 - np.exp(-t / 150.0))
        d, x_s = closed_loop_displacement(u_th, MACHINE_PID, 0.1)
        np.testing.assert_allclose(d + x_s, u_th, atol=1e-15)
        np.testing.assert_allclose(controller_travel(d, MACHINE_PID, 0.1), x_s, atol=1e-12)
        assert np.all(measured_displacement(u_th, x_s, tol=1e-12) >= -1e-12)


class TestContact:
    def test_real_area(self):
        assert real_contact_area(5000.0, 430.0) == pytest.approx(11.6279, rel=1e-4)
        assert real_contact_area(10000.0, 430.0) == pytest.approx(2 * real_contact_area(5000.0, 430.0))
        assert real_contact_area(5000.0, 1e12) < 1e-8

    def test_model_a_constriction_value(self):
        constr = (3.66e-5 / 2) * math.sqrt(120000 * math.pi * 430 / 5000)
        film = RHO_F * N0 * L_F * H20 / 5000.0
        assert contact_resistance_A(RHO_EL, RHO_F, L_F, N0, H20, 5000.0) == pytest.approx(constr + film, rel=1e-14)
        assert constr == pytest.approx(3.30e-3, rel=0.01)

    def test_model_b_constriction_value(self):
        constr = (1.05 * 3.66e-5 / 4) * math.sqrt(math.pi * 430 / 5000)
        assert constr == pytest.approx(5.00e-6, rel=0.01)
        film = RHO_F * L_F * H20 / 5000.0
        assert contact_resistance_B(RHO_EL, RHO_F, L_F, H20, 5000.0) == pytest.approx(constr + film, rel=1e-14)

    def test_film_linear_in_thickness(self):
        base = contact_resistance_B(RHO_EL, RHO_F, L_F, H20, 5000.0) - contact_resistance_B(RHO_EL, RHO_F, 0.0, H20, 5000.0)
        double = contact_resistance_B(RHO_EL, RHO_F, 2 * L_F, H20, 5000.0) - contact_resistance_B(RHO_EL, RHO_F, 0.0, H20, 5000.0)
        assert double == pytest.approx(2 * base)

    @pytest.mark.parametrize("rho_f", [1e5, 1.0])
    def test_strictly_decreasing_in_force(self, rho_f):
        F = np.linspace(5000.0, 8000.0, 61)
        ra = contact_resistance_A(RHO_EL, rho_f, L_F, N0, H20, F)
        rb = contact_resistance_B(RHO_EL, rho_f, L_F, H20, F)
        assert np.all(np.diff(ra) < 0) and np.all(np.diff(rb) < 0)
        assert contact_resistance_B(RHO_EL, rho_f, L_F, H20, 1e12) < 1e-9

    def test_increasing_in_film_thickness(self):
        l = np.linspace(1e-6, 1e-4, 20)
        assert np.all(np.diff(contact_resistance_A(RHO_EL, RHO_F, l, N0, H20, 5000.0)) > 0)
        assert np.all(np.diff(contact_resistance_B(RHO_EL, RHO_F, l, H20, 5000.0)) > 0)

    def test_resistance_falls_with_temperature(self):
        T = np.linspace(20.0, 650.0, 50)
        H = material.hardness(T)
        rb = contact_resistance_B(RHO_EL, RHO_F, L_F, H, 5000.0)
        assert np.all(np.diff(rb) < 0)

    def test_zero_current_no_heat(self):
        assert contact_heat("A_inverse", 0.0, 20.0, ContactConfig(model="A_inverse")) == 0.0

    def test_bulk_only_off_surface(self):
        table = material.default_table()
        rho = material.electrical_resistivity(table, 20.0)
        q = contact_heat("B_forward", 151.9, 20.0, ContactConfig(), on_surface=False)
        assert q == pytest.approx(rho * 151.9 ** 2)

    def test_model_a_heat_arithmetic(self):
        # independent arithmetic with the room-temperature resistivity of the table
        rho = 1.523e-5 * 1000 * 2.7e-6 * 890
        J = 151.9
        constr = rho / 2 * math.sqrt(N0 * math.pi * 430 / 5000)
        film = 1e5 * N0 * 1e-5 * 430 / 5000
        expected = rho * J ** 2 + (79 / 1e-5) * ((constr + film) / N0) * J ** 2
        q = contact_heat("A_inverse", J, 20.0, ContactConfig(model="A_inverse"))
        assert q == pytest.approx(expected, rel=1e-3)

    @settings(max_examples=50, deadline=None)
    @given(J=st.floats(0, 700), T=st.floats(-50, 900), model=st.sampled_from(["A_inverse", "B_forward"]))
    def test_contact_heat_at_least_bulk(self, J, T, model):
        cfg = ContactConfig(model=model, rho_f=1.0)
        bulk = contact_heat(model, J, T, cfg, on_surface=False)
        assert contact_heat(model, J, T, cfg) >= bulk

    def test_model_a_rejects_fractional_spots(self):
        with pytest.raises(ConfigError):
            ContactConfig(model="A_inverse", n=0.5)

    def test_radial_weights_normalised(self):
        r = np.linspace(0, 1, 200001)
        for kind in ("uniform", "hertz"):
            w = radial_weight(r, kind)
            assert np.trapezoid(w * 2 * r, r) == pytest.approx(1.0, abs=1e-4)
