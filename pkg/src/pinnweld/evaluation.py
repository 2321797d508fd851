"""Predictions of a trained network in physical units and the accuracy metrics."""

from __future__ import annotations

import numpy as np

from . import process
from .errors import DataError
from .oracle import GridSolution, fd_solve_1d, fd_solve_2d
from .physics import normalize_process


def r_squared(y, y_hat) -> float:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.size < 2:
        raise DataError("R^2 needs two aligned series with at least two samples")
    ss_tot = np.sum((y - y.mean()) ** 2)
    if ss_tot == 0:
        raise DataError("R^2 undefined for a constant target")
    return float(1.0 - np.sum((y - y_hat) ** 2) / ss_tot)


def query_points(prob, z, t_ms, I_max, F, r=None) -> np.ndarray:
    """Scaled network inputs on the tensor grid (t, [r,] z) for one process point."""
    sc = prob.cfg.scales
    i, f = normalize_process(I_max, F)
    if prob.dim == 1:
        T, Z = np.meshgrid(t_ms, z, indexing="ij")
        cols = [Z.ravel(), T.ravel() / sc.t_c]
    else:
        T, R, Z = np.meshgrid(t_ms, r, z, indexing="ij")
        cols = [R.ravel(), Z.ravel(), T.ravel() / sc.t_c]
    n = cols[0].size
    return np.column_stack(cols + [np.full(n, i), np.full(n, f)])


def predict_field(prob, params, z, t_ms, I_max, F, r=None) -> GridSolution:
    """Temperature (degC) and displacement (mm) of the network on a grid."""
    z = np.asarray(z, dtype=float)
    t_ms = np.asarray(t_ms, dtype=float)
    if prob.dim == 2 and r is None:
        raise DataError("a 2D model needs radial grid points")
    sc = prob.cfg.scales
    out = prob.evaluate(params, query_points(prob, z, t_ms, I_max, F, r))
    shape = (t_ms.size, z.size) if prob.dim == 1 else (t_ms.size, len(r), z.size)
    T = (out[:, 0] * sc.T_c + sc.T_0).reshape(shape)
    u = (out[:, 1] * sc.u_c).reshape(shape)
    return GridSolution(z, t_ms, T, u, r=None if r is None else np.asarray(r, dtype=float),
                        meta={"source": "network"})


def predict_displacement(prob, params, record, pid=process.MACHINE_PID, k_c: float = 0.1) -> np.ndarray:
    """Measured electrode displacement implied by the network for one weld.

    The top-face expansion minus the controller travel recovered from the
    measured series, i.e. the quantity the displacement goal term fits.
    """
    z = np.array([1.0])
    r = np.array([0.0]) if prob.dim == 2 else None
    sol = predict_field(prob, params, z, record.t_ms, record.I_kA * 1e3, record.F_kN * 1e3, r)
    u_top = sol.u.reshape(record.t_ms.size)
    return u_top - process.controller_travel(record.y_d, pid, k_c)


def displacement_r2(prob, params, records, pid=process.MACHINE_PID, k_c: float = 0.1) -> float:
    """Pooled R^2 of predicted against measured displacement over a set of welds."""
    records = list(records)
    if not records:
        raise DataError("no welds to evaluate")
    y = np.concatenate([w.y_d for w in records])
    y_hat = np.concatenate([predict_displacement(prob, params, w, pid, k_c) for w in records])
    return r_squared(y, y_hat)


def temperature_error(prob, params, record, cfg, t_max: float = 560.0, nz: int = 100, nr: int = 20) -> float:
    """max|T_net - T_fd| / max|T_fd| over the weld interval for one weld."""
    cfg_w = cfg.with_process(record.I_kA * 1e3, record.F_kN * 1e3)
    if prob.dim == 1:
        ref = fd_solve_1d(cfg_w, nz=nz)
    else:
        ref = fd_solve_2d(cfg_w, nr=nr, nz=nz)
    keep = ref.t_ms <= t_max + 1e-9
    pred = predict_field(prob, params, ref.z, ref.t_ms[keep], record.I_kA * 1e3, record.F_kN * 1e3, ref.r)
    T_ref = ref.T[keep]
    return float(np.abs(pred.T - T_ref).max() / np.abs(T_ref).max())
