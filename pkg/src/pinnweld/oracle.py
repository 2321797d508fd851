"""Finite-volume reference solvers, the analytic benchmark and synthetic weld data.

The solvers work in the same scaled variables as the network: z and r in
[0, 1], time in units of ``t_c``, temperature in units of ``T_c``.  Nodes sit
on a uniform vertex grid including the boundaries; each node owns a control
volume (half volumes at the boundaries, an r-weighted volume in 2D), so the
discrete energy balance holds exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from . import material, process
from .errors import ConfigError, SolverError
from .physics import WeldConfig, heat_source
from .sampler import WeldRecord


def analytic_benchmark(z, t, alpha=0.06):
    """Solution of T_t = alpha*T_zz + sin(pi z) with T = 0 on the boundary and at t = 0."""
    z = np.asarray(z, dtype=float)
    t = np.asarray(t, dtype=float)
    k = alpha * np.pi ** 2
    return (1.0 - np.exp(-k * t)) / k * np.sin(np.pi * z)


@dataclass
class GridSolution:
    z: np.ndarray                 # scaled node heights
    t_ms: np.ndarray              # output times
    T: np.ndarray                 # degC, shape (nt, nz) or (nt, nr, nz)
    u: np.ndarray                 # mm, same shape as T
    r: np.ndarray | None = None   # scaled node radii (2D)
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return 1 if self.r is None else 2

    def face_index(self, z_face: float = 0.5) -> int:
        return int(np.argmin(np.abs(self.z - z_face)))

    def top_displacement(self) -> np.ndarray:
        """Displacement of the top face (on the axis in 2D) in mm."""
        return self.u[:, -1] if self.dim == 1 else self.u[:, 0, -1]


def _config_hash(cfg: WeldConfig) -> str:
    return hashlib.sha256(repr(cfg).encode()).hexdigest()[:16]


def _expansion(T_C, z, cfg: WeldConfig):
    """u(z) = u_c * integral_0^z (T - T_ic) dz in mm (constant expansion coefficient)."""
    sc = cfg.scales
    dT = (T_C - cfg.bc.T_ic) / sc.T_c
    dz = np.diff(z)
    inc = 0.5 * (dT[..., 1:] + dT[..., :-1]) * dz
    u = np.concatenate([np.zeros(dT.shape[:-1] + (1,)), np.cumsum(inc, axis=-1)], axis=-1)
    return sc.u_c * u


def _z_volumes(nz: int) -> np.ndarray:
    h = 1.0 / nz
    v = np.full(nz + 1, h)
    v[0] = v[-1] = 0.5 * h
    return v


def _r_volumes(nr: int) -> np.ndarray:
    """Integral of r dr over each node's radial control interval."""
    h = 1.0 / nr
    edges = np.clip(np.concatenate([[0.0], (np.arange(nr) + 0.5) * h, [1.0]]), 0.0, 1.0)
    return 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2)


def _benchmark_1d(nz: int, nt: int, alpha: float, t_end: float, theta: float) -> GridSolution:
    z = np.linspace(0.0, 1.0, nz + 1)
    h = 1.0 / nz
    dt = t_end / nt
    T = np.zeros(nz + 1)
    out = np.zeros((nt + 1, nz + 1))
    src = np.sin(np.pi * z[1:-1])
    m = nz - 1
    a = alpha / h ** 2
    ab = np.zeros((3, m))
    ab[0, 1:] = -theta * dt * a
    ab[1, :] = 1.0 + 2.0 * theta * dt * a
    ab[2, :-1] = -theta * dt * a
    for n in range(nt):
        Ti = T[1:-1]
        lap = T[2:] - 2.0 * Ti + T[:-2]
        rhs = Ti + (1.0 - theta) * dt * a * lap + dt * src
        T[1:-1] = solve_banded((1, 1), ab, rhs)
        out[n + 1] = T
    t = np.linspace(0.0, t_end, nt + 1)
    return GridSolution(z, t, out, np.zeros_like(out), meta={"mode": "benchmark", "theta": theta,
                                                              "dz": h, "dt": dt, "alpha": alpha})


def fd_solve_1d(cfg: WeldConfig | None = None, nz: int = 200, dt_ms: float = 1.0,
                mode: str = "rsw", theta: float = 1.0, alpha: float = 0.06,
                nt: int | None = None, t_end: float = 1.0, zero_current: bool = False) -> GridSolution:
    """Implicit 1D solve through the sheet stack.

    ``mode='benchmark'`` solves the Dirichlet sine-source problem on scaled
    time [0, t_end] with ``nt`` steps (Crank-Nicolson for ``theta=0.5``).
    ``mode='rsw'`` integrates the weld schedule with lagged material
    coefficients, Robin cooling at both electrode faces and the contact heat
    spread around the faying surface.
    """
    if nz < 4:
        raise ConfigError("need at least 4 cells")
    if not 0.5 <= theta <= 1.0:
        raise ConfigError("theta must lie in [0.5, 1]")
    if mode == "benchmark":
        return _benchmark_1d(nz, nt or 1000, alpha, t_end, theta)
    if mode != "rsw":
        raise ConfigError(f"unknown mode {mode!r}")
    cfg = cfg or WeldConfig()
    sc, bc, table = cfg.scales, cfg.bc, cfg.table
    z = np.linspace(0.0, 1.0, nz + 1)
    h = 1.0 / nz
    V = _z_volumes(nz)
    t_ms = np.arange(0.0, cfg.schedule.t_end + 0.5 * dt_ms, dt_ms)
    dt = dt_ms / sc.t_c
    H_nd = bc.h_th * sc.z_c / sc.lambda_c
    T_cool = (bc.T_cool - sc.T_0) / sc.T_c
    T = np.full(nz + 1, (bc.T_ic - sc.T_0) / sc.T_c)
    out = np.zeros((t_ms.size, nz + 1))
    out[0] = T
    for n in range(1, t_ms.size):
        T_C = T * sc.T_c + sc.T_0
        lam = material.lookup(table, "lambda_th", T_C)[0] / sc.lambda_c
        G = 0.5 * (lam[1:] + lam[:-1]) / h
        if zero_current:
            Q = np.zeros_like(T)
        else:
            Q = heat_source(cfg, z, t_ms[n], T_C)
        diag = V / dt
        diag = diag.copy()
        diag[:-1] += theta * G
        diag[1:] += theta * G
        diag[0] += theta * H_nd
        diag[-1] += theta * H_nd
        flux = np.zeros_like(T)
        flux[:-1] += G * (T[1:] - T[:-1])
        flux[1:] -= G * (T[1:] - T[:-1])
        flux[0] -= H_nd * (T[0] - T_cool)
        flux[-1] -= H_nd * (T[-1] - T_cool)
        rhs = V / dt * T + (1.0 - theta) * flux + V * Q
        rhs[0] += theta * H_nd * T_cool
        rhs[-1] += theta * H_nd * T_cool
        ab = np.zeros((3, nz + 1))
        ab[0, 1:] = -theta * G
        ab[1] = diag
        ab[2, :-1] = -theta * G
        T = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(T)):
            raise SolverError("1D solve produced non-finite temperatures", step=n)
        out[n] = T
    T_C = out * sc.T_c + sc.T_0
    return GridSolution(z, t_ms, T_C, _expansion(T_C, z, cfg),
                        meta={"mode": "rsw", "theta": theta, "dz": h, "dt_ms": dt_ms,
                              "config_hash": _config_hash(cfg)})


class _Grid2D:
    def __init__(self, nr, nz, cfg, radial_bc):
        self.nr, self.nz = nr, nz
        self.r = np.linspace(0.0, 1.0, nr + 1)
        self.z = np.linspace(0.0, 1.0, nz + 1)
        self.hr, self.hz = 1.0 / nr, 1.0 / nz
        self.Vr = _r_volumes(nr)
        self.Vz = _z_volumes(nz)
        self.V = np.outer(self.Vr, self.Vz)
        self.rf = (np.arange(nr) + 0.5) * self.hr
        sc = cfg.scales
        self.aspect = sc.aspect
        self.H_nd = cfg.bc.h_th * sc.z_c / sc.lambda_c
        self.rim = cfg.bc.radial_coeff(sc) if radial_bc == "robin" else 0.0
        self.T_cool = (cfg.bc.T_cool - sc.T_0) / sc.T_c
        self.T_far = (cfg.bc.T_far - sc.T_0) / sc.T_c
        self.idx = np.arange((nr + 1) * (nz + 1)).reshape(nr + 1, nz + 1)

    def conductances(self, lam):
        Gr = self.aspect * self.rf[:, None] * 0.5 * (lam[1:, :] + lam[:-1, :]) / self.hr * self.Vz[None, :]
        Gz = self.Vr[:, None] * 0.5 * (lam[:, 1:] + lam[:, :-1]) / self.hz
        Ga = self.Vr * self.H_nd                          # electrode faces, per column
        Gw = self.aspect * 1.0 * lam[-1, :] * self.rim * self.Vz   # rim, per row
        return Gr, Gz, Ga, Gw

    def outflow(self, T, Ga, Gw):
        """Heat leaving through the boundaries."""
        return (np.sum(Ga * (T[:, 0] - self.T_cool)) + np.sum(Ga * (T[:, -1] - self.T_cool))
                + np.sum(Gw * (T[-1, :] - self.T_far)))


def fd_solve_2d(cfg: WeldConfig | None = None, nr: int = 40, nz: int = 60, dt_ms: float = 1.0,
                radial_bc: str = "robin", zero_current: bool = False,
                audit: bool = False) -> GridSolution:
    """Axisymmetric backward-Euler solve with lagged coefficients.

    Symmetry at r = 0 is built into the control volumes; the rim uses the
    far-field conduction condition (``radial_bc='robin'``) or no flux
    (``'insulated'``).  With ``audit=True`` the per-step relative energy
    imbalance is stored in ``meta['energy_imbalance']``.
    """
    if radial_bc not in ("robin", "insulated"):
        raise ConfigError("radial_bc must be 'robin' or 'insulated'")
    if nr < 2 or nz < 4:
        raise ConfigError("grid too coarse")
    cfg = cfg or WeldConfig()
    sc, table = cfg.scales, cfg.table
    g = _Grid2D(nr, nz, cfg, radial_bc)
    t_ms = np.arange(0.0, cfg.schedule.t_end + 0.5 * dt_ms, dt_ms)
    dt = dt_ms / sc.t_c
    shape = (nr + 1, nz + 1)
    T = np.full(shape, (cfg.bc.T_ic - sc.T_0) / sc.T_c)
    out = np.zeros((t_ms.size,) + shape)
    out[0] = T
    R, Z = np.meshgrid(g.r, g.z, indexing="ij")
    imbalance = []
    I = g.idx
    for n in range(1, t_ms.size):
        T_C = T * sc.T_c + sc.T_0
        lam = material.lookup(table, "lambda_th", T_C)[0] / sc.lambda_c
        Gr, Gz, Ga, Gw = g.conductances(lam)
        if zero_current:
            Q = np.zeros(shape)
        else:
            Q = heat_source(cfg, Z, t_ms[n], T_C, r=R)
        diag = g.V / dt
        diag = diag.copy()
        diag[:-1, :] += Gr
        diag[1:, :] += Gr
        diag[:, :-1] += Gz
        diag[:, 1:] += Gz
        diag[:, 0] += Ga
        diag[:, -1] += Ga
        diag[-1, :] += Gw
        rows = [I.ravel(), I[:-1, :].ravel(), I[1:, :].ravel(), I[:, :-1].ravel(), I[:, 1:].ravel()]
        cols = [I.ravel(), I[1:, :].ravel(), I[:-1, :].ravel(), I[:, 1:].ravel(), I[:, :-1].ravel()]
        vals = [diag.ravel(), -Gr.ravel(), -Gr.ravel(), -Gz.ravel(), -Gz.ravel()]
        A = sparse.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(T.size, T.size))
        rhs = g.V / dt * T + g.V * Q
        rhs[:, 0] += Ga * g.T_cool
        rhs[:, -1] += Ga * g.T_cool
        rhs[-1, :] += Gw * g.T_far
        T_new = spsolve(A, rhs.ravel()).reshape(shape)
        if not np.all(np.isfinite(T_new)):
            raise SolverError("2D solve produced non-finite temperatures", step=n)
        if audit:
            stored = np.sum(g.V * (T_new - T)) / dt
            source = np.sum(g.V * Q)
            lost = g.outflow(T_new, Ga, Gw)
            ref = max(abs(stored), abs(source), abs(lost), 1e-300)
            imbalance.append(abs(stored - (source - lost)) / ref)
        T = T_new
        out[n] = T
    T_C = out * sc.T_c + sc.T_0
    meta = {"mode": "rsw2d", "theta": 1.0, "dr": g.hr, "dz": g.hz, "dt_ms": dt_ms,
            "radial_bc": radial_bc, "config_hash": _config_hash(cfg)}
    if audit:
        meta["energy_imbalance"] = np.array(imbalance)
    return GridSolution(g.z, t_ms, T_C, _expansion(T_C, g.z, cfg), r=g.r, meta=meta)


def nugget_diameter(T_face, r, scales=None, T_liq: float = 660.0) -> float:
    """Diameter (mm) of the molten zone grown contiguously from the radial temperature peak.

    ``T_face`` holds faying-surface temperatures (degC) at scaled radii ``r``.
    """
    r_c = 5.0 if scales is None else scales.r_c
    T_face = np.asarray(T_face, dtype=float)
    r = np.asarray(r, dtype=float)
    peak = int(np.argmax(T_face))
    if T_face[peak] < T_liq:
        return 0.0
    hi = peak
    while hi + 1 < T_face.size and T_face[hi + 1] >= T_liq:
        hi += 1
    return float(2.0 * r_c * r[hi])


def nugget_growth(sol: GridSolution, scales=None, T_liq: float = 660.0, z_face: float = 0.5) -> np.ndarray:
    """Nugget diameter at every stored time of a 2D solution."""
    j = sol.face_index(z_face)
    if sol.dim == 1:
        face = sol.T[:, j][:, None]
        return np.array([2.0 * (5.0 if scales is None else scales.r_c) if v >= T_liq else 0.0
                         for v in face[:, 0]])
    return np.array([nugget_diameter(sol.T[k, :, j], sol.r, scales, T_liq) for k in range(sol.t_ms.size)])


@dataclass(frozen=True)
class SynthOptions:
    dim: int = 1
    nz: int = 120
    nr: int = 30
    dt_ms: float = 1.0
    noise: float = 0.01             # Gaussian sigma as a fraction of peak displacement
    hysteresis: bool = False
    hysteresis_force: float = 5.0   # N
    k_c: float = 0.1                # controller compliance (scaled)
    pid: process.PIDParams = process.MACHINE_PID
    seed: int = 0


def _solve_one(args):
    cfg, opts, I_max, F, child_seed, skip_failed = args
    cfg_i = cfg.with_process(I_max, F)
    try:
        if opts.dim == 2:
            sol = fd_solve_2d(cfg_i, nr=opts.nr, nz=opts.nz, dt_ms=opts.dt_ms)
        else:
            sol = fd_solve_1d(cfg_i, nz=opts.nz, dt_ms=opts.dt_ms)
    except SolverError:
        if skip_failed:
            return None
        raise
    u_th = sol.top_displacement()
    d, _ = process.closed_loop_displacement(u_th, opts.pid, opts.k_c)
    rng = np.random.default_rng(child_seed)
    y = d.copy()
    if opts.noise > 0:
        y = y + rng.normal(0.0, opts.noise * np.max(np.abs(d)), size=d.size)
    if opts.hysteresis:
        y = y + rng.uniform(-1.0, 1.0, size=d.size) * opts.hysteresis_force / cfg.contact.k_spring
    k560 = int(np.argmin(np.abs(sol.t_ms - cfg.schedule.weld_end)))
    d_p = float(nugget_growth(sol, cfg.scales)[k560])
    return WeldRecord(I_kA=I_max / 1000.0, F_kN=F / 1000.0, t_ms=sol.t_ms.copy(), y_d=y, d_p=d_p,
                      std=np.full(d.size, opts.noise * np.max(np.abs(d))) if opts.noise > 0 else None)


def default_grid(n_I: int = 22, n_F: int = 4):
    currents = np.linspace(26000.0, 47000.0, n_I)
    forces = np.linspace(5000.0, 8000.0, n_F)
    return currents, forces


def synth_experiment(cfg: WeldConfig, currents=None, forces=None, opts: SynthOptions | None = None,
                     workers: int | None = None, skip_failed: bool = False) -> list:
    """Simulate one weld per (current, force) pair and add measurement noise.

    Records are ordered current-major.  Each weld draws its noise from its own
    child seed, so the output does not depend on the worker count.  With
    ``skip_failed`` a weld whose solve fails yields ``None`` in its slot.
    """
    opts = opts or SynthOptions()
    if currents is None or forces is None:
        currents, forces = default_grid()
    pairs = [(float(I), float(F)) for I in currents for F in forces]
    seeds = np.random.SeedSequence(opts.seed).spawn(len(pairs))
    jobs = [(cfg, opts, I, F, s, skip_failed) for (I, F), s in zip(pairs, seeds)]
    if workers is None:
        workers = int(os.environ.get("PINNWELD_THREADS", "1") or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_solve_one, jobs))
    return [_solve_one(j) for j in jobs]


def export_csv(sol: GridSolution, path) -> None:
    """Long-format CSV with columns r,z,t,T,u (r is 0 for 1D solutions)."""
    with open(path, "w") as fh:
        fh.write("r,z,t,T,u\n")
        rs = [0.0] if sol.r is None else sol.r
        for k, t in enumerate(sol.t_ms):
            for i, r in enumerate(rs):
                Trow = sol.T[k] if sol.r is None else sol.T[k, i]
                urow = sol.u[k] if sol.r is None else sol.u[k, i]
                for j, z in enumerate(sol.z):
                    fh.write(f"{r:.10g},{z:.10g},{t:.10g},{Trow[j]:.10g},{urow[j]:.10g}\n")


def export_binary(sol: GridSolution, path) -> None:
    """One JSON header line followed by little-endian float64 arrays r, z, t, T, u."""
    arrays = {"r": np.zeros(0) if sol.r is None else sol.r, "z": sol.z, "t": sol.t_ms,
              "T": sol.T, "u": sol.u}
    header = {"format": "pinnweld-grid", "version": 1,
              "shapes": {k: list(v.shape) for k, v in arrays.items()},
              "meta": {k: v for k, v in sol.meta.items() if not isinstance(v, np.ndarray)}}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        for k in ("r", "z", "t", "T", "u"):
            fh.write(np.ascontiguousarray(arrays[k], dtype="<f8").tobytes())


def load_binary(path) -> GridSolution:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        data = {}
        for k in ("r", "z", "t", "T", "u"):
            shape = tuple(header["shapes"][k])
            count = int(np.prod(shape)) if shape else 1
            data[k] = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape).copy()
    r = data["r"] if data["r"].size else None
    return GridSolution(data["z"], data["t"], data["T"], data["u"], r=r, meta=header["meta"])
