import numpy as np
import pytest

from pinnweld.errors import ConfigError
from pinnweld.oracle import (GridSolution, SynthOptions, analytic_benchmark, default_grid, export_binary,
                             export_csv, fd_solve_1d, fd_solve_2d, load_binary, nugget_diameter,
                             nugget_growth, synth_experiment)
from pinnweld.physics import WeldConfig, face_profile, heat_source, normalize_process, denormalize_process
from pinnweld.process import WeldSchedule


def short_cfg(**kw):
    """Weld with a compressed schedule so the solvers run in milliseconds."""
    return WeldConfig(schedule=WeldSchedule(I_max=30000.0, breakpoints=(0, 20, 30, 40, 60)), **kw)


class TestAnalyticBenchmark:
    def test_satisfies_pde(self):
        z, t, a = 0.3, 0.7, 0.06
        h = 1e-4
        T_t = (analytic_benchmark(z, t + h, a) - analytic_benchmark(z, t - h, a)) / (2 * h)
        T_zz = (analytic_benchmark(z + h, t, a) - 2 * analytic_benchmark(z, t, a)
                + analytic_benchmark(z - h, t, a)) / h ** 2
        assert T_t - a * T_zz - np.sin(np.pi * z) == pytest.approx(0.0, abs=1e-6)

    def test_boundary_and_initial(self):
        assert analytic_benchmark(0.0, 1.0) == 0.0
        assert abs(analytic_benchmark(1.0, 1.0)) < 1e-15
        assert np.all(analytic_benchmark(np.linspace(0, 1, 5), 0.0) == 0.0)


class TestBenchmarkSolver:
    def test_matches_analytic(self):
        sol = fd_solve_1d(mode="benchmark", nz=100, nt=200, theta=0.5)
        ref = analytic_benchmark(sol.z[None, :], sol.t_ms[:, None])
        assert np.abs(sol.T - ref).max() <= 1e-4

    def test_second_order_convergence(self):
        errs = []
        for nz in (20, 40, 80):
            sol = fd_solve_1d(mode="benchmark", nz=nz, nt=nz, theta=0.5)
            errs.append(np.abs(sol.T[-1] - analytic_benchmark(sol.z, 1.0)).max())
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates > 1.8)

    def test_backward_euler_first_order_in_time(self):
        e1 = np.abs(fd_solve_1d(mode="benchmark", nz=200, nt=20, theta=1.0).T[-1]
                    - analytic_benchmark(np.linspace(0, 1, 201), 1.0)).max()
        e2 = np.abs(fd_solve_1d(mode="benchmark", nz=200, nt=40, theta=1.0).T[-1]
                    - analytic_benchmark(np.linspace(0, 1, 201), 1.0)).max()
        assert 1.7 < e1 / e2 < 2.3

    def test_bad_arguments(self):
        with pytest.raises(ConfigError):
            fd_solve_1d(mode="benchmark", nz=2)
        with pytest.raises(ConfigError):
            fd_solve_1d(mode="benchmark", theta=0.2)
        with pytest.raises(ConfigError):
            fd_solve_1d(mode="other")


class TestWeldSolver1D:
    def test_zero_current_relaxes_to_coolant(self):
        sol = fd_solve_1d(short_cfg(), nz=20, zero_current=True)
        assert sol.T.max() <= 23.0 + 1e-12 and sol.T.min() >= 19.0 - 1e-12
        assert np.all(np.diff(sol.T.mean(axis=1)) <= 1e-12)

    def test_heated_weld_warms_faying_surface(self):
        sol = fd_solve_1d(short_cfg(), nz=40)
        j = sol.face_index()
        assert sol.T[:, j].max() > 100.0
        assert np.argmax(sol.T[sol.T[:, j].argmax()]) == j

    def test_symmetric_about_faying_surface(self):
        sol = fd_solve_1d(short_cfg(), nz=40)
        np.testing.assert_allclose(sol.T, sol.T[:, ::-1], rtol=1e-10, atol=1e-9)

    def test_expansion_integral(self):
        sol = fd_solve_1d(short_cfg(), nz=40)
        cfg = short_cfg()
        dT = (sol.T[-1] - 23.0) / cfg.scales.T_c
        expected = cfg.scales.u_c * np.trapezoid(dT, sol.z)
        assert sol.top_displacement()[-1] == pytest.approx(expected, rel=1e-12)
        assert sol.u[0, -1] == 0.0

    def test_energy_balance(self):
        # stored + lost heat equals the integrated source
        cfg = short_cfg()
        nz = 40
        sol = fd_solve_1d(cfg, nz=nz)
        sc = cfg.scales
        h = 1.0 / nz
        V = np.full(nz + 1, h)
        V[[0, -1]] *= 0.5
        Tn = (sol.T - sc.T_0) / sc.T_c
        H = cfg.bc.h_th * sc.z_c / sc.lambda_c
        Tc = (cfg.bc.T_cool - sc.T_0) / sc.T_c
        dt = 1.0 / sc.t_c
        gain = src = 0.0
        for n in range(1, sol.t_ms.size):
            Q = heat_source(cfg, sol.z, sol.t_ms[n], sol.T[n - 1])
            src += dt * np.sum(V * Q)
            gain += dt * H * ((Tn[n, 0] - Tc) + (Tn[n, -1] - Tc))
        stored = np.sum(V * (Tn[-1] - Tn[0]))
        assert stored + gain == pytest.approx(src, rel=1e-9)


class TestWeldSolver2D:
    def test_insulated_uniform_matches_1d(self):
        """With no rim loss and a radially uniform source every column is the 1D solution."""
        cfg = short_cfg()
        s1 = fd_solve_1d(cfg, nz=20)
        s2 = fd_solve_2d(cfg, nr=4, nz=20, radial_bc="insulated")
        for i in range(5):
            np.testing.assert_allclose(s2.T[:, i, :], s1.T, rtol=1e-9, atol=1e-9)

    def test_energy_audit(self):
        sol = fd_solve_2d(short_cfg(), nr=6, nz=12, audit=True)
        assert sol.meta["energy_imbalance"].max() <= 1e-10

    def test_rim_cools(self):
        cfg = short_cfg(radial_weighting="hertz")
        sol = fd_solve_2d(cfg, nr=8, nz=12)
        j = sol.face_index()
        k = int(np.argmax(sol.T[:, 0, j]))
        assert sol.T[k, 0, j] > sol.T[k, -1, j]

    def test_bad_grid(self):
        with pytest.raises(ConfigError):
            fd_solve_2d(nr=1)
        with pytest.raises(ConfigError):
            fd_solve_2d(radial_bc="open")


class TestNugget:
    def test_diameter_from_profile(self):
        r = np.linspace(0, 1, 11)
        T = 800 - 300 * r
        # molten up to r = 0.4 (680 degC), 0.5 gives 650 < 660
        assert nugget_diameter(T, r) == pytest.approx(4.0)

    def test_no_melt(self):
        assert nugget_diameter(np.full(5, 500.0), np.linspace(0, 1, 5)) == 0.0

    def test_full_width(self):
        assert nugget_diameter(np.full(5, 900.0), np.linspace(0, 1, 5)) == pytest.approx(10.0)

    def test_growth_monotone_for_rising_face(self):
        r = np.linspace(0, 1, 11)
        z = np.linspace(0, 1, 5)
        t = np.arange(4.0)
        T = np.zeros((4, 11, 5))
        for k in range(4):
            T[k] = (500 + 100 * k - 200 * r)[:, None]
        sol = GridSolution(z, t, T, np.zeros_like(T), r=r)
        g = nugget_growth(sol)
        assert g[0] == 0.0 and np.all(np.diff(g) >= 0) and g[-1] > 0

    def test_1d_growth_is_binary(self):
        z = np.linspace(0, 1, 5)
        T = np.array([[20.0] * 5, [20, 20, 700, 20, 20]])
        g = nugget_growth(GridSolution(z, np.arange(2.0), T, np.zeros_like(T)))
        np.testing.assert_array_equal(g, [0.0, 10.0])


class TestSynth:
    def test_grid(self):
        I, F = default_grid()
        assert I.size == 22 and F.size == 4 and I[0] == 26000 and F[-1] == 8000

    def test_deterministic_and_worker_independent(self):
        cfg = WeldConfig(schedule=WeldSchedule(breakpoints=(0, 20, 30, 40, 60)))
        opts = SynthOptions(nz=12, seed=5)
        a = synth_experiment(cfg, [26000.0, 30000.0], [5000.0], opts, workers=1)
        b = synth_experiment(cfg, [26000.0, 30000.0], [5000.0], opts, workers=2)
        for x, y in zip(a, b):
            assert np.array_equal(x.y_d, y.y_d) and x.d_p == y.d_p
        assert not np.array_equal(a[0].y_d - a[1].y_d, 0)

    def test_noiseless_record_is_closed_loop_displacement(self):
        cfg = WeldConfig(schedule=WeldSchedule(breakpoints=(0, 20, 30, 40, 60)))
        rec = synth_experiment(cfg, [30000.0], [6000.0], SynthOptions(nz=12, noise=0.0))[0]
        assert rec.std is None and rec.I_kA == 30.0 and rec.F_kN == 6.0
        assert rec.y_d.size == 61


class TestExport:
    def make(self, dim):
        z = np.linspace(0, 1, 3)
        t = np.array([0.0, 1.0])
        if dim == 1:
            T = np.arange(6.0).reshape(2, 3)
            return GridSolution(z, t, T, T / 10, meta={"mode": "rsw"})
        r = np.linspace(0, 1, 2)
        T = np.arange(12.0).reshape(2, 2, 3)
        return GridSolution(z, t, T, T / 10, r=r, meta={"mode": "rsw2d"})

    @pytest.mark.parametrize("dim", [1, 2])
    def test_binary_round_trip(self, tmp_path, dim):
        sol = self.make(dim)
        export_binary(sol, tmp_path / "g.bin")
        back = load_binary(tmp_path / "g.bin")
        assert back.dim == dim and np.array_equal(back.T, sol.T) and np.array_equal(back.u, sol.u)
        assert back.meta["mode"] == sol.meta["mode"]

    def test_csv_rows(self, tmp_path):
        sol = self.make(2)
        export_csv(sol, tmp_path / "g.csv")
        rows = (tmp_path / "g.csv").read_text().splitlines()
        assert rows[0] == "r,z,t,T,u" and len(rows) == 1 + 12
        assert rows[-1].split(",")[3] == "11"


class TestPhysics:
    def test_face_profile_integrates_to_one(self):
        z = np.linspace(0, 1, 20001)
        assert np.trapezoid(face_profile(z, WeldConfig()), z) == pytest.approx(1.0, abs=1e-9)

    def test_process_normalisation_round_trip(self):
        i, f = normalize_process(36500.0, 6500.0)
        assert (i, f) == (pytest.approx(0.5), pytest.approx(0.5))
        I, F = denormalize_process(i, f)
        assert I == pytest.approx(36500.0) and F == pytest.approx(6500.0)

    def test_source_zero_after_pulse(self):
        assert np.all(heat_source(WeldConfig(), np.linspace(0, 1, 5), 600.0, 20.0) == 0)

    def test_model_a_log_n_gradient(self):
        cfg = WeldConfig(contact=WeldConfig().contact.__class__(model="A_inverse", rho_f=1.0))
        z = np.linspace(0.4, 0.6, 5)
        n = 5000.0
        Q, dQ = heat_source(cfg, z, 500.0, 20.0, n=n, with_grad_n=True)
        h = 1e-6
        fd = (heat_source(cfg, z, 500.0, 20.0, n=n * np.exp(h))
              - heat_source(cfg, z, 500.0, 20.0, n=n * np.exp(-h))) / (2 * h)
        np.testing.assert_allclose(dQ, fd, rtol=1e-5)
