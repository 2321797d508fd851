"""Weld configuration and the scaled heat source shared by the network losses
and the finite-difference solvers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import material, process
from .errors import ConfigError
from .residuals import BoundaryConstants, CharScales

I_RANGE = (26000.0, 47000.0)   # A
F_RANGE = (5000.0, 8000.0)     # N


@dataclass(frozen=True)
class WeldConfig:
    schedule: process.WeldSchedule = field(default_factory=process.WeldSchedule)
    contact: process.ContactConfig = field(default_factory=process.ContactConfig)
    scales: CharScales = field(default_factory=CharScales)
    bc: BoundaryConstants = field(default_factory=BoundaryConstants)
    table_path: str | None = None
    # width (scaled z) of the Gaussian that spreads the faying-surface heat
    contact_width: float = 0.04
    radial_weighting: str = "uniform"
    z_face: float = 0.5
    strain_bc: bool = True

    def __post_init__(self):
        if self.contact_width <= 0:
            raise ConfigError("contact_width must be positive")
        if self.radial_weighting not in ("uniform", "hertz"):
            raise ConfigError("radial_weighting must be 'uniform' or 'hertz'")

    @property
    def table(self) -> material.MaterialTable:
        if self.table_path is None:
            return material.default_table()
        return _load_cached(self.table_path)

    def with_process(self, I_max: float, F: float) -> "WeldConfig":
        return replace(self, schedule=replace(self.schedule, I_max=float(I_max)),
                       contact=replace(self.contact, F=float(F)))

    def with_n(self, n: float) -> "WeldConfig":
        return replace(self, contact=replace(self.contact, n=float(n)))


_TABLES: dict = {}


def _load_cached(path):
    if path not in _TABLES:
        _TABLES[path] = material.load_table(path)
    return _TABLES[path]


def face_profile(z, cfg: WeldConfig):
    """Normalised Gaussian in scaled z centred on the faying surface."""
    w = cfg.contact_width
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * ((z - cfg.z_face) / w) ** 2) / (w * np.sqrt(2.0 * np.pi))


def heat_source(cfg: WeldConfig, z, t_ms, T_prop, r=None, n=None, with_grad_n: bool = False,
                I_max=None, F=None):
    """Scaled volumetric heat at scaled height ``z`` and time ``t_ms``.

    Material quantities (resistivity, hardness) are evaluated at ``T_prop`` in
    degC.  ``I_max`` and ``F`` override the configured process point and may
    vary per sample.  With ``with_grad_n`` the derivative with respect to
    ``log n`` is returned as well (contact model A only; zero otherwise).
    """
    table = cfg.table
    sc = cfg.scales
    J = process.current_density(t_ms, cfg.schedule, I_max)
    J2 = np.asarray(J, dtype=float) ** 2
    rho_el = material.electrical_resistivity(table, T_prop)
    H = material.hardness(T_prop)
    c = cfg.contact
    F = c.F if F is None else np.asarray(F, dtype=float)
    A_a = cfg.schedule.A_a
    shape = face_profile(z, cfg) / sc.z_c
    if r is not None:
        shape = shape * process.radial_weight(r, cfg.radial_weighting)
    if c.model == "A_inverse":
        n = c.n if n is None else n
        if np.any(np.asarray(n) < 1):
            raise ConfigError("contact spot count n must be >= 1")
        constr = process.constriction_A(rho_el, n, H, F) / n
        R = constr + process.film_resistance(c.rho_f, c.l_f, H, F)
        # d(constr)/d(log n) = -constr / 2
        dR = -0.5 * constr
    else:
        R = process.contact_resistance_B(rho_el, c.rho_f, c.l_f, H, F)
        dR = np.zeros_like(np.asarray(R, dtype=float))
    s = sc.source_scale()
    Q = s * (rho_el * J2 + A_a * R * J2 * shape)
    if with_grad_n:
        return Q, s * A_a * dR * J2 * shape
    return Q


def T_to_C(T_nd, cfg: WeldConfig):
    return np.asarray(T_nd, dtype=float) * cfg.scales.T_c + cfg.scales.T_0


def C_to_T(T_C, cfg: WeldConfig):
    return (np.asarray(T_C, dtype=float) - cfg.scales.T_0) / cfg.scales.T_c


def denormalize_process(i, f):
    """Inverse of :func:`normalize_process`: currents in A and forces in N."""
    I_max = I_RANGE[0] + np.asarray(i, dtype=float) * (I_RANGE[1] - I_RANGE[0])
    F = F_RANGE[0] + np.asarray(f, dtype=float) * (F_RANGE[1] - F_RANGE[0])
    return I_max, F


def normalize_process(I_max, F):
    """Map currents (A) and forces (N) to [0, 1] over the process window."""
    i = (np.asarray(I_max, dtype=float) - I_RANGE[0]) / (I_RANGE[1] - I_RANGE[0])
    f = (np.asarray(F, dtype=float) - F_RANGE[0]) / (F_RANGE[1] - F_RANGE[0])
    return i, f
