"""Welding schedule, force-control model and electric contact resistance.

Times are in ms, currents in A, current densities in A/mm^2, forces in N,
lengths in mm and resistances in Ohm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import material
from .errors import ConfigError, DataError, DomainError, SingularFitError

CONTACT_MODELS = ("A_inverse", "B_forward")


@dataclass(frozen=True)
class WeldSchedule:
    I_max: float = 40000.0
    I_pt: float = 12000.0
    breakpoints: tuple = (0.0, 400.0, 470.0, 560.0, 760.0)
    A_a: float = 79.0

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.shape != (5,) or np.any(np.diff(bp) <= 0):
            raise ConfigError("schedule needs five strictly increasing breakpoints")
        if self.I_max <= 0 or self.I_pt <= 0 or self.A_a <= 0:
            raise ConfigError("currents and contact area must be positive")

    @property
    def weld_end(self) -> float:
        return float(self.breakpoints[3])

    @property
    def t_end(self) -> float:
        return float(self.breakpoints[4])


def current(t, sched: WeldSchedule, I_max=None):
    """Electrode current in A: preheat plateau, linear upslope, main pulse, cool-down.

    ``I_max`` optionally overrides the schedule's peak current (may be an array
    broadcast against ``t``).
    """
    t0, t1, t2, t3, t4 = sched.breakpoints
    I_max = sched.I_max if I_max is None else np.asarray(I_max, dtype=float)
    scalar = np.ndim(t) == 0 and np.ndim(I_max) == 0
    t = np.asarray(t, dtype=float)
    if np.any(t < t0) or np.any(t > t4) or not np.all(np.isfinite(t)):
        raise DomainError(f"time outside schedule [{t0}, {t4}] ms")
    ramp = sched.I_pt + (I_max - sched.I_pt) * (t - t1) / (t2 - t1)
    I = np.where(t <= t1, sched.I_pt, np.where(t <= t2, ramp, np.where(t <= t3, I_max, 0.0)))
    return float(I) if scalar else I


def current_density(t, sched: WeldSchedule, I_max=None):
    return current(t, sched, I_max) / sched.A_a


@dataclass(frozen=True)
class PIDParams:
    K_p: float
    K_i: float
    K_d: float
    dt: float = 0.001       # s
    window: int = 50

    def __post_init__(self):
        if not all(np.isfinite([self.K_p, self.K_i, self.K_d, self.dt])):
            raise ConfigError("PID constants must be finite")
        if self.dt <= 0 or self.window < 1:
            raise ConfigError("PID step must be positive and window >= 1")

    def as_tuple(self):
        return (self.K_p, self.K_i, self.K_d)


MACHINE_PID = PIDParams(5.3, 0.2, 0.003)


def _window_sum(e: np.ndarray, window: int) -> np.ndarray:
    c = np.concatenate([[0.0], np.cumsum(e)])
    idx = np.arange(1, e.size + 1)
    return c[idx] - c[np.maximum(idx - window, 0)]


def pid_terms(e, dt: float, window: int) -> np.ndarray:
    """Columns (e, windowed integral, backward difference) so that response = terms @ K."""
    e = np.asarray(e, dtype=float)
    integ = _window_sum(e, window) * dt
    prev = np.concatenate([[0.0], e[:-1]])
    return np.stack([e, integ, (e - prev) / dt], axis=1)


def pid_response(errors, K: PIDParams) -> np.ndarray:
    return pid_terms(errors, K.dt, K.window) @ np.array(K.as_tuple())


def fit_pid(torque, displacement, F0: float, k_spring: float, dt: float = 0.001,
            window: int = 50) -> tuple[PIDParams, float]:
    """Least-squares PID constants mapping ``e = F0 - k_spring*x`` to the torque signal.

    The response is linear in (K_p, K_i, K_d), so the minimiser is unique and
    exact whenever the three regressors are independent.  Returns the constants
    and the mean squared residual.
    """
    torque = np.asarray(torque, dtype=float)
    x = np.asarray(displacement, dtype=float)
    if torque.shape != x.shape or torque.ndim != 1:
        raise DataError("torque and displacement must be 1-D series of equal length")
    if torque.size < 10:
        raise DataError("need at least 10 samples to fit PID constants")
    if not (np.all(np.isfinite(torque)) and np.all(np.isfinite(x))):
        raise DataError("non-finite samples in PID fit input")
    e = F0 - k_spring * x
    if not np.any(torque) and not np.any(e):
        return PIDParams(0.0, 0.0, 0.0, dt, window), 0.0
    if np.ptp(torque) == 0 and np.ptp(x) == 0:
        raise SingularFitError("singular fit: constant torque and displacement leave the PID constants unidentifiable")
    A = pid_terms(e, dt, window)
    scale = np.linalg.norm(A, axis=0)
    if np.any(scale == 0):
        raise SingularFitError("singular fit: a PID regressor is identically zero")
    coef, _, rank, sv = np.linalg.lstsq(A / scale, torque, rcond=None)
    if rank < 3 or sv[-1] < 1e-10 * sv[0]:
        raise SingularFitError("singular fit: PID regressors are linearly dependent")
    K = coef / scale
    mse = float(np.mean((A @ K - torque) ** 2))
    return PIDParams(float(K[0]), float(K[1]), float(K[2]), dt, window), mse


def measured_displacement(u_th, x_s, tol: float = 1e-9) -> np.ndarray:
    """Electrode displacement: thermal expansion minus the controller travel."""
    u_th = np.asarray(u_th, dtype=float)
    x_s = np.asarray(x_s, dtype=float)
    if u_th.shape != x_s.shape:
        raise DataError("u_th and x_s must have equal length")
    d = u_th - x_s
    if np.any(d < -tol):
        raise DataError("controller travel exceeds thermal expansion")
    return d


def closed_loop_displacement(u_th, K: PIDParams, k_c: float):
    """Simulate the force controller against a thermal expansion history.

    The controller acts on ``e = -d`` and retracts by ``x_s = -k_c * PID(e)``,
    with ``d = u_th - x_s``; each step is solved implicitly for ``d``.
    Returns ``(d, x_s)``.
    """
    u_th = np.asarray(u_th, dtype=float)
    n = u_th.size
    d = np.zeros(n)
    gain = 1.0 + k_c * (K.K_p + K.K_i * K.dt + K.K_d / K.dt)
    for i in range(n):
        lo = max(0, i - K.window + 1)
        past = d[lo:i].sum() * K.dt
        prev = d[i - 1] if i > 0 else 0.0
        d[i] = (u_th[i] - k_c * (K.K_i * past - K.K_d * prev / K.dt)) / gain
    return d, u_th - d


def controller_travel(d, K: PIDParams, k_c: float) -> np.ndarray:
    """Controller travel implied by a measured displacement series."""
    return -k_c * pid_response(-np.asarray(d, dtype=float), K)


def pid_excitation(n: int, F0: float = 4000.0, k_spring: float = 6666.0, hold: int = 25,
                   amplitude: float = 0.1, seed: int = 0) -> np.ndarray:
    """Test-bench electrode positions: random levels held for ``hold`` steps
    around the spring equilibrium ``F0/k_spring``."""
    if n < 1 or hold < 1:
        raise ConfigError("n and hold must be positive")
    rng = np.random.default_rng(seed)
    levels = rng.uniform(-amplitude, amplitude, size=n // hold + 1)
    return F0 / k_spring + np.repeat(levels, hold)[:n]


def synthetic_torque(x, K: PIDParams, F0: float = 4000.0, k_spring: float = 6666.0,
                     noise: float = 0.0, rng=None) -> np.ndarray:
    """Torque of a PID acting on the spring force error, with Gaussian noise
    of standard deviation ``noise * max|torque|``."""
    clean = pid_response(F0 - k_spring * np.asarray(x, dtype=float), K)
    if noise <= 0:
        return clean
    rng = np.random.default_rng(rng)
    return clean + rng.normal(0.0, noise * np.abs(clean).max(), clean.size)


@dataclass(frozen=True)
class ContactConfig:
    model: str = "B_forward"
    n: float = 120000.0
    rho_f: float = 1e5        # Ohm*mm
    l_f: float = 1e-5         # mm
    F: float = 5000.0         # N
    k_spring: float = 6666.0  # N/mm

    def __post_init__(self):
        if self.model not in CONTACT_MODELS:
            raise ConfigError(f"contact model must be one of {CONTACT_MODELS}")
        if self.n < 1:
            raise ConfigError("contact spot count n must be >= 1")
        if min(self.rho_f, self.l_f, self.F) <= 0:
            raise ConfigError("rho_f, l_f and F must be positive")


def real_contact_area(F, H):
    """Real contact area n*pi*a^2 = F/H in mm^2."""
    return np.divide(F, H)


def constriction_A(rho_el, n, H, F):
    return 0.5 * rho_el * np.sqrt(n * np.pi * H / F)


def constriction_B(rho_el, H, F):
    return 1.05 * rho_el / 4.0 * np.sqrt(np.pi * H / F)


def film_resistance(rho_f, l_f, H, F):
    """Film resistance of the whole contact (all spots in parallel)."""
    return rho_f * l_f * H / F


def contact_resistance_A(rho_el, rho_f, l_f, n, H, F):
    """Resistance of a single spot when n spots share the real contact area."""
    return constriction_A(rho_el, n, H, F) + rho_f * n * l_f * H / F


def contact_resistance_B(rho_el, rho_f, l_f, H, F):
    return constriction_B(rho_el, H, F) + film_resistance(rho_f, l_f, H, F)


def interface_resistance(T, cfg: ContactConfig, table=None, n=None):
    """Total faying-surface resistance at local temperature ``T`` (degC)."""
    table = table or material.default_table()
    rho_el = material.electrical_resistivity(table, T)
    H = material.hardness(T)
    if cfg.model == "A_inverse":
        n = cfg.n if n is None else n
        if np.any(np.asarray(n) < 1):
            raise ConfigError("contact spot count n must be >= 1")
        return contact_resistance_A(rho_el, cfg.rho_f, cfg.l_f, n, H, cfg.F) / n
    return contact_resistance_B(rho_el, cfg.rho_f, cfg.l_f, H, cfg.F)


def interface_flux(J, T, cfg: ContactConfig, A_a: float = 79.0, table=None, n=None):
    """Contact heat per unit faying area (W/mm^2): R * I^2 / A_a = A_a * R * J^2."""
    return A_a * interface_resistance(T, cfg, table, n) * np.asarray(J, dtype=float) ** 2


def contact_heat(model: str, J, T, cfg: ContactConfig, table=None, on_surface: bool = True,
                 A_a: float = 79.0, n=None):
    """Volumetric heat (W/mm^3): bulk Joule heat plus contact heat spread over the film."""
    if model != cfg.model:
        cfg = ContactConfig(model, cfg.n, cfg.rho_f, cfg.l_f, cfg.F, cfg.k_spring)
    table = table or material.default_table()
    J = np.asarray(J, dtype=float)
    bulk = material.electrical_resistivity(table, T) * J ** 2
    if not on_surface:
        return bulk
    return bulk + interface_flux(J, T, cfg, A_a, table, n) / cfg.l_f


def radial_weight(r, kind: str = "uniform"):
    """Radial distribution of contact heat over r in [0, 1], normalised so that
    the integral of weight * 2r dr equals one."""
    r = np.asarray(r, dtype=float)
    if kind == "uniform":
        return np.ones_like(r)
    if kind == "hertz":
        return 1.5 * np.sqrt(np.clip(1.0 - r * r, 0.0, None))
    raise ConfigError(f"unknown radial weighting {kind!r}")
