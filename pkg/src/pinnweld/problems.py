"""Loss assembly for the supported training modes.

A problem owns the collocation data, maps scaled coordinates to network
inputs (affine onto [-1, 1]) and network outputs to scaled fields, and returns
the total loss together with its gradient for the optimizer.
"""

from __future__ import annotations

import numpy as np

from . import material
from .adnet import NetworkParams, jet_backward, jet_forward
from .errors import ConfigError
from .physics import WeldConfig, denormalize_process, heat_source
from .residuals import (LossWeights, goal_loss_nugget, heat_residual_1d, heat_residual_2d,
                        heat_residual_partials_2d, loss_coefficients, negative_temp_penalty)

MODES = ("benchmark_1d", "rsw_1d_inverse", "rsw_1d_forward", "rsw_2d")


class _Batch:
    """Network evaluation on one point set with adjoint buffers in field units."""

    def __init__(self, prob, params: NetworkParams, X, coords=()):
        self.prob = prob
        self.X = X
        self.names = tuple(coords)
        idx = tuple(prob.coord_index[c] for c in coords)
        self.X_in = prob.to_input(X)
        self.jets = jet_forward(params, self.X_in, idx, keep_cache=True)
        a = prob.in_scale[list(idx)] if idx else np.zeros(0)
        self.a = a
        s = prob.out_scale
        self.val = prob.out_shift + self.jets.value * s
        self.d1 = self.jets.d1 * a[:, None, None] * s
        self.d2 = self.jets.d2 * (a * a)[:, None, None] * s
        self.gv = np.zeros_like(self.val)
        self.g1 = np.zeros_like(self.d1)
        self.g2 = np.zeros_like(self.d2)

    def v(self, out):
        return self.val[:, out]

    def d(self, out, name):
        return self.d1[self.names.index(name), :, out]

    def dd(self, out, name):
        return self.d2[self.names.index(name), :, out]

    def add_v(self, out, g):
        self.gv[:, out] += g

    def add_d(self, out, name, g):
        self.g1[self.names.index(name), :, out] += g

    def add_dd(self, out, name, g):
        self.g2[self.names.index(name), :, out] += g

    def backward(self, params):
        s = self.prob.out_scale
        a = self.a
        return jet_backward(params, self.jets, self.gv * s, self.g1 * a[:, None, None] * s,
                            self.g2 * (a * a)[:, None, None] * s, X=self.X_in)


def _msq(x):
    n = max(x.size, 1)
    return float(np.sum(x * x) / n), 2.0 * x / n


class Problem:
    coords: tuple = ()
    n_outputs = 1
    n_scalars = 0

    def __init__(self, bounds):
        bounds = np.asarray(bounds, dtype=float)
        self.lo = bounds[:, 0]
        self.hi = bounds[:, 1]
        self.in_scale = 2.0 / (self.hi - self.lo)
        self.coord_index = {c: i for i, c in enumerate(self.coords)}
        self.out_shift = np.zeros(self.n_outputs)
        self.out_scale = np.ones(self.n_outputs)

    def to_input(self, X):
        return (np.asarray(X, dtype=float) - self.lo) * self.in_scale - 1.0

    def batch(self, params, X, coords=()):
        return _Batch(self, params, X, coords)

    def evaluate(self, params, X):
        """Scaled field values (N, n_outputs) at scaled coordinates X."""
        return self.batch(params, X).val

    def initial_scalars(self) -> np.ndarray:
        return np.zeros(self.n_scalars)


class BenchmarkProblem(Problem):
    """T_t = alpha T_zz + sin(pi z) on the unit square with zero boundary and initial values."""

    coords = ("z", "t")

    def __init__(self, n_pde=1000, n_ic=100, n_bc=100, alpha=0.06, seed=0, t_max=1.0):
        from .sampler import lhs_sample

        super().__init__([[0.0, 1.0], [0.0, t_max]])
        self.alpha = alpha
        rng = np.random.default_rng(seed)
        self.X_pde = lhs_sample([[0.0, 1.0], [0.0, t_max]], n_pde, seed)
        self.X_ic = np.column_stack([np.linspace(0.0, 1.0, n_ic), np.zeros(n_ic)])
        tb = np.sort(rng.random(n_bc)) * t_max
        self.X_bc = np.column_stack([(np.arange(n_bc) % 2).astype(float), tb])

    def loss_and_grad(self, params, scalars, ctx):
        terms = {}
        grad = np.zeros(params.flat.size)
        b = self.batch(params, self.X_pde, ("z", "t"))
        res = heat_residual_1d(b.d(0, "t"), 0.0, b.dd(0, "z"), np.sin(np.pi * b.X[:, 0]), lam=self.alpha)
        terms["pde_T"], g = _msq(res)
        b.add_d(0, "t", g)
        b.add_dd(0, "z", -self.alpha * g)
        grad += b.backward(params)
        for key, X in (("ic_T", self.X_ic), ("bc_T", self.X_bc)):
            b = self.batch(params, X)
            terms[key], g = _msq(b.v(0))
            b.add_v(0, g)
            grad += b.backward(params)
        total = terms["pde_T"] + terms["ic_T"] + terms["bc_T"]
        return total, terms, grad, np.zeros(0)


class RSWProblem(Problem):
    """Coupled temperature/displacement losses for the 1D stack or the axisymmetric weld."""

    n_outputs = 2

    def __init__(self, mode: str, cfg: WeldConfig, data: dict, weights: LossWeights | None = None,
                 t_max: float | None = None, T_scale: float = 2.0, u_scale: float = 2.0,
                 r_min: float = 0.0):
        if mode not in MODES[1:]:
            raise ConfigError(f"unknown RSW mode {mode!r}")
        self.mode = mode
        self.dim = 2 if mode == "rsw_2d" else 1
        self.coords = ("z", "t", "I", "F") if self.dim == 1 else ("r", "z", "t", "I", "F")
        self.cfg = cfg
        sc = cfg.scales
        t_max = t_max or cfg.schedule.t_end / sc.t_c
        b = [[0.0, 1.0], [0.0, t_max], [0.0, 1.0], [0.0, 1.0]]
        if self.dim == 2:
            b = [[0.0, 1.0]] + b
        super().__init__(b)
        self.data = data
        self.weights = weights or LossWeights()
        self.T_ic = (cfg.bc.T_ic - sc.T_0) / sc.T_c
        self.T_cool = (cfg.bc.T_cool - sc.T_0) / sc.T_c
        self.T_far = (cfg.bc.T_far - sc.T_0) / sc.T_c
        self.T_liq = (cfg.table.pb.T_liq - sc.T_0) / sc.T_c
        self.out_shift = np.array([self.T_ic, 0.0])
        self.out_scale = np.array([T_scale, u_scale])
        self.learn_n = mode == "rsw_1d_inverse"
        if self.learn_n and cfg.contact.model != "A_inverse":
            raise ConfigError("inverse mode needs contact model A_inverse")
        self.n_scalars = 1 if self.learn_n else 0
        self.room = material.room_properties(cfg.table)
        self._pde_proc = self._process(data["pde"])

    def _col(self, X, name):
        return X[:, self.coord_index[name]]

    def _process(self, X):
        return denormalize_process(self._col(X, "I"), self._col(X, "F"))

    def initial_scalars(self):
        return np.array([np.log(self.cfg.contact.n)]) if self.learn_n else np.zeros(0)

    def n_value(self, scalars):
        return float(np.exp(scalars[0])) if self.learn_n else self.cfg.contact.n

    def _props(self, T_nd, gate):
        T_C = T_nd * self.cfg.scales.T_c + self.cfg.scales.T_0
        if gate:
            lam, dlam = material.lookup(self.cfg.table, "lambda_th", T_C)
            return T_C, lam / self.cfg.scales.lambda_c, dlam * self.cfg.scales.T_c / self.cfg.scales.lambda_c
        n = np.shape(T_nd)
        return (np.full(n, material.T_ROOM), np.full(n, self.room["lambda_th"] / self.cfg.scales.lambda_c),
                np.zeros(n))

    def loss_and_grad(self, params, scalars, ctx):
        """Total loss, per-term values, network gradient and scalar gradient.

        ``ctx`` carries ``gate`` (material updates and experimental terms) and
        ``fade`` (multiplier of the experimental terms).
        """
        gate = bool(ctx.get("gate", False))
        fade = float(ctx.get("fade", 1.0))
        coeff = loss_coefficients(self.weights, fade, gate)
        cfg, sc = self.cfg, self.cfg.scales
        D = self.data
        terms = {}
        grad = np.zeros(params.flat.size)
        g_scalar = np.zeros(self.n_scalars)
        n_spots = self.n_value(scalars) if self.learn_n else None
        pd = ("z", "t") if self.dim == 1 else ("r", "z", "t")

        # interior residuals and the negative-temperature penalty
        b = self.batch(params, D["pde"], pd)
        T = b.v(0)
        T_C, lam, dlam = self._props(T, gate)
        I_max, F = self._pde_proc
        t_ms = self._col(D["pde"], "t") * sc.t_c
        z = self._col(D["pde"], "z")
        r = self._col(D["pde"], "r") if self.dim == 2 else None
        need_n = self.learn_n and gate
        src = heat_source(cfg, z, t_ms, T_C, r=r, n=n_spots, with_grad_n=need_n, I_max=I_max, F=F)
        Q, dQ = src if need_n else (src, None)
        Tz, Tzz, Tt = b.d(0, "z"), b.dd(0, "z"), b.d(0, "t")
        if self.dim == 1:
            res = heat_residual_1d(Tt, Tz, Tzz, Q, lam, dlam)
            terms["pde_T"], g = _msq(res)
            g = coeff["pde_T"] * g
            b.add_d(0, "t", g)
            b.add_d(0, "z", -2.0 * dlam * Tz * g)
            b.add_dd(0, "z", -lam * g)
        else:
            Tr, Trr = b.d(0, "r"), b.dd(0, "r")
            res = heat_residual_2d(Tt, Tr, Trr, Tz, Tzz, r, Q, lam, dlam, sc.aspect)
            terms["pde_T"], g = _msq(res)
            g = coeff["pde_T"] * g
            p = heat_residual_partials_2d(Tr, Tz, r, lam, dlam, sc.aspect)
            b.add_d(0, "t", p[0] * g)
            b.add_d(0, "r", p[1] * g)
            b.add_dd(0, "r", p[2] * g)
            b.add_d(0, "z", p[3] * g)
            b.add_dd(0, "z", p[4] * g)
        if need_n:
            g_scalar[0] += np.sum(g * -dQ)
        res_u = b.dd(1, "z") - Tz
        terms["pde_u"], g = _msq(res_u)
        g = coeff["pde_u"] * g
        b.add_dd(1, "z", g)
        b.add_d(0, "z", -g)
        terms["neg"], g = negative_temp_penalty(T, return_grad=True)
        b.add_v(0, coeff["neg"] * g)
        grad += b.backward(params)

        # initial state
        b = self.batch(params, D["ic"])
        terms["ic_T"], g = _msq(b.v(0) - self.T_ic)
        b.add_v(0, coeff["ic_T"] * g)
        terms["ic_u"], g = _msq(b.v(1))
        b.add_v(1, coeff["ic_u"] * g)
        grad += b.backward(params)

        # electrode faces: Robin cooling
        b = self.batch(params, D["bc_axial"], ("z",))
        T = b.v(0)
        _, lam, _ = self._props(T, gate)
        bi = cfg.bc.h_th * sc.z_c / (lam * sc.lambda_c)
        Tz = b.d(0, "z")
        res = np.abs(Tz) - bi * (T - self.T_cool)
        terms["bc_T"], g = _msq(res)
        g = coeff["bc_T"] * g
        b.add_d(0, "z", g * np.sign(Tz))
        b.add_v(0, -g * bi)
        grad += b.backward(params)
        if self.dim == 2:
            b = self.batch(params, D["bc_radial"], ("r",))
            Tr = b.d(0, "r")
            k = cfg.bc.radial_coeff(sc)
            res = np.abs(Tr) - k * (b.v(0) - self.T_far)
            val, g = _msq(res)
            terms["bc_T"] += val
            g = coeff["bc_T"] * g
            b.add_d(0, "r", g * np.sign(Tr))
            b.add_v(0, -g * k)
            grad += b.backward(params)

        # base of the stack: clamped displacement and stress-free strain
        b = self.batch(params, D["base"], ("z",))
        terms["bc_u"], g = _msq(b.v(1))
        b.add_v(1, coeff["bc_u"] * g)
        if cfg.strain_bc:
            res = b.d(1, "z") - (b.v(0) - self.T_ic)
            val, g = _msq(res)
            terms["bc_u"] += val
            g = coeff["bc_u"] * g
            b.add_d(1, "z", g)
            b.add_v(0, -g)
        grad += b.backward(params)

        # symmetry planes
        b = self.batch(params, D["sym_z"], ("z",))
        terms["sym_z"], g = _msq(b.d(0, "z"))
        b.add_d(0, "z", coeff["sym_z"] * g)
        grad += b.backward(params)
        if self.dim == 2:
            b = self.batch(params, D["sym_r"], ("r",))
            terms["sym_r"], g = _msq(b.d(0, "r"))
            b.add_d(0, "r", coeff["sym_r"] * g)
            grad += b.backward(params)

        # experimental goal terms
        if "d" in D and D["d"]["x"].size:
            dd = D["d"]
            if coeff["d"] > 0:
                b = self.batch(params, dd["x"])
                terms["d"], g = _msq(b.v(1) - dd["xs"] - dd["y"])
                b.add_v(1, coeff["d"] * g)
                grad += b.backward(params)
            else:
                terms["d"] = _msq(self.evaluate(params, dd["x"])[:, 1] - dd["xs"] - dd["y"])[0]
        if self.dim == 2 and D.get("dp") is not None and len(D["dp"]):
            b = self.batch(params, D["dp"])
            terms["dp"], g = goal_loss_nugget(b.v(0), self.T_liq, return_grad=True)
            if coeff["dp"] > 0:
                b.add_v(0, coeff["dp"] * g)
                grad += b.backward(params)
        total = sum(coeff[k] * v for k, v in terms.items())
        return total, terms, grad, g_scalar


def make_problem(mode: str, cfg: WeldConfig | None = None, data: dict | None = None, **kw) -> Problem:
    if mode == "benchmark_1d":
        return BenchmarkProblem(**kw)
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    if data is None:
        raise ConfigError("RSW modes need datasets")
    return RSWProblem(mode, cfg or WeldConfig(), data, **kw)
