"""Non-dimensional scales, PDE residuals and the individual loss terms.

All loss helpers accept ``return_grad=True`` and then also return the
derivative of the loss with respect to each array argument, which the
training problems chain into the network adjoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .material import RHO_CP

TERMS = ("pde_T", "pde_u", "ic_T", "ic_u", "bc_T", "bc_u", "d", "dp", "sym_r", "sym_z", "neg")
EXPERIMENTAL_TERMS = ("d", "dp")


@dataclass(frozen=True)
class CharScales:
    r_c: float = 5.0          # mm
    z_c: float = 3.0          # mm
    T_c: float = 660.0        # K
    T_0: float = 0.0          # degC
    lambda_c: float = 0.16    # W/(mm*K)
    rho_cp: float = RHO_CP    # J/(mm^3*K)
    beta_c: float = 23e-6     # 1/K

    def __post_init__(self):
        if min(self.r_c, self.z_c, self.T_c, self.lambda_c, self.rho_cp, self.beta_c) <= 0:
            raise ConfigError("characteristic scales must be positive")

    @property
    def t_c(self) -> float:
        """Diffusion time across the sheet stack in ms."""
        return 1000.0 * self.rho_cp * self.z_c ** 2 / self.lambda_c

    @property
    def u_c(self) -> float:
        return self.T_c * self.beta_c * self.z_c

    @property
    def aspect(self) -> float:
        """(z_c / r_c)^2, the weight of radial conduction in scaled coordinates."""
        return (self.z_c / self.r_c) ** 2

    def source_scale(self) -> float:
        """Factor turning a volumetric heat rate in W/mm^3 into a scaled source."""
        return self.t_c / 1000.0 / (self.rho_cp * self.T_c)


_UNITS = {"r": ("r_c", 0), "z": ("z_c", 0), "t": ("t_c", 0), "T": ("T_c", 1), "u": ("u_c", 0)}


def nondimensionalize(values: dict, scales: CharScales) -> dict:
    """Scale any of r, z, t (ms), T (degC), u (mm) to dimensionless form."""
    out = {}
    for k, v in values.items():
        if k not in _UNITS:
            raise ConfigError(f"unknown quantity {k!r}")
        attr, shifted = _UNITS[k]
        v = np.asarray(v, dtype=float)
        out[k] = ((v - scales.T_0) if shifted else v) / getattr(scales, attr)
    return out


def redimensionalize(values: dict, scales: CharScales) -> dict:
    out = {}
    for k, v in values.items():
        if k not in _UNITS:
            raise ConfigError(f"unknown quantity {k!r}")
        attr, shifted = _UNITS[k]
        v = np.asarray(v, dtype=float) * getattr(scales, attr)
        out[k] = v + scales.T_0 if shifted else v
    return out


@dataclass(frozen=True)
class LossWeights:
    pde: float = 1.0
    ic: float = 1.0
    bc: float = 1.0
    d: float = 0.7
    dp: float = 10.0

    def __post_init__(self):
        if min(self.pde, self.ic, self.bc, self.d, self.dp) < 0:
            raise ConfigError("loss weights must be nonnegative")


@dataclass(frozen=True)
class BoundaryConstants:
    h_th: float = 0.025       # W/(mm^2*K)
    L: float = 20.0           # mm
    T_ic: float = 23.0        # degC
    T_cool: float = 19.0      # degC
    T_far: float = 20.0       # degC

    def __post_init__(self):
        if self.h_th <= 0:
            raise ConfigError("heat transfer coefficient must be positive")
        if self.L <= 1.0:
            raise ConfigError("radial reference distance must exceed 1 mm")

    def biot(self, lam, scales: CharScales):
        """Scaled Biot number h*z_c/lambda for the sheet-electrode faces."""
        return self.h_th * scales.z_c / np.asarray(lam, dtype=float)

    def radial_coeff(self, scales: CharScales) -> float:
        """Far-field conduction coefficient 1/ln(L/r_c) at the scaled rim r = 1."""
        return 1.0 / np.log(self.L / scales.r_c)


def _out(value, grads, return_grad):
    return (float(value), grads) if return_grad else float(value)


def _mean_sq(x, return_grad=False):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return _out(0.0, np.zeros_like(x), return_grad)
    return _out(np.mean(x * x), 2.0 * x / x.size, return_grad)


def heat_residual_1d(T_t, T_z, T_zz, Q, lam=1.0, dlam=0.0):
    """dT/dt - d/dz(lam dT/dz) - Q with lam(T) expanded by the chain rule.

    ``lam`` is the conductivity relative to ``lambda_c`` (or the diffusivity in
    the benchmark) and ``dlam`` its derivative with respect to scaled T.
    """
    return T_t - (dlam * T_z * T_z + lam * T_zz) - Q


def heat_residual_2d(T_t, T_r, T_rr, T_z, T_zz, r, Q, lam=1.0, dlam=0.0, aspect=0.36):
    """Axisymmetric heat residual in scaled coordinates; ``r`` must be positive."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DataError("axisymmetric residual needs r > 0; the axis is covered by symmetry")
    radial = lam * T_r / r + dlam * T_r * T_r + lam * T_rr
    return T_t - aspect * radial - (dlam * T_z * T_z + lam * T_zz) - Q


def heat_residual_partials_2d(T_r, T_z, r, lam=1.0, dlam=0.0, aspect=0.36):
    """Derivatives of the 2D residual w.r.t. (T_t, T_r, T_rr, T_z, T_zz) with lam frozen."""
    return (1.0, -aspect * (lam / r + 2.0 * dlam * T_r), -aspect * lam,
            -2.0 * dlam * T_z, -lam)


def displacement_residual(u_zz, T_z, beta_ratio=1.0):
    return u_zz - beta_ratio * T_z


def ic_losses(T_hat, u_hat, T_ic, return_grad=False):
    """Mean squared deviation from the initial temperature and from zero displacement."""
    lt = _mean_sq(np.asarray(T_hat) - T_ic, return_grad)
    lu = _mean_sq(u_hat, return_grad)
    return lt, lu


def robin_loss(grad_n, T_hat, coeff, T_ref, return_grad=False):
    """mean[(|dT/dn| - coeff*(T - T_ref))^2]; sign of the gradient is ignored."""
    grad_n = np.asarray(grad_n, dtype=float)
    res = np.abs(grad_n) - coeff * (np.asarray(T_hat, dtype=float) - T_ref)
    if not return_grad:
        return _mean_sq(res)
    val, g = _mean_sq(res, True)
    return val, (g * np.sign(grad_n), -g * coeff)


def bc_losses(axial: dict, radial: dict | None, u_base, consts: BoundaryConstants,
              scales: CharScales, strain=None, return_grad=False):
    """Boundary losses ``(L_BC^T, L_BC^u)``.

    ``axial`` holds ``T``, ``T_z`` and ``lam`` (W/(mm*K)) on the electrode faces;
    ``radial`` holds ``T`` and ``T_r`` on the rim (omitted in 1D).  ``u_base`` is
    the scaled displacement at z = 0.  ``strain`` optionally holds ``u_z`` and
    ``T`` at z = 0 for the stress-free base condition ``u_z = T - T_ic``.
    """
    T_cool = (consts.T_cool - scales.T_0) / scales.T_c
    bi = consts.biot(axial["lam"], scales)
    la = robin_loss(axial["T_z"], axial["T"], bi, T_cool, return_grad)
    grads = {}
    if return_grad:
        la, grads["axial"] = la
    total_T = la
    if radial is not None:
        T_far = (consts.T_far - scales.T_0) / scales.T_c
        lr = robin_loss(radial["T_r"], radial["T"], consts.radial_coeff(scales), T_far, return_grad)
        if return_grad:
            lr, grads["radial"] = lr
        total_T += lr
    lu = _mean_sq(u_base, return_grad)
    if return_grad:
        lu, grads["u_base"] = lu
    if strain is not None:
        T_ic = (consts.T_ic - scales.T_0) / scales.T_c
        ls = _mean_sq(np.asarray(strain["u_z"]) - (np.asarray(strain["T"]) - T_ic), return_grad)
        if return_grad:
            ls, g = ls
            grads["strain"] = (g, -g)
        lu += ls
    if return_grad:
        return total_T, lu, grads
    return total_T, lu


def goal_loss_displacement(u_hat, x_s, y_d, return_grad=False):
    """Mismatch of the top-face displacement against controller travel plus measured travel."""
    u_hat = np.asarray(u_hat, dtype=float)
    x_s = np.asarray(x_s, dtype=float)
    y_d = np.asarray(y_d, dtype=float)
    if not (u_hat.shape == x_s.shape == y_d.shape):
        raise DataError("displacement series have different lengths")
    return _mean_sq(u_hat - x_s - y_d, return_grad)


def nugget_radii(d_p: float, scales: CharScales, n_points: int = 11) -> np.ndarray:
    """Scaled radii of the evaluation grid lying inside the measured nugget."""
    if d_p < 0 or d_p > 2.0 * scales.r_c:
        raise DataError(f"nugget diameter {d_p} mm outside [0, {2 * scales.r_c}]")
    grid = np.linspace(0.0, 1.0, n_points)
    if d_p == 0:
        return grid[:0]
    return grid[grid <= d_p / (2.0 * scales.r_c) + 1e-12]


def goal_loss_nugget(T_hat, T_liq=1.0, return_grad=False):
    """Penalise sub-liquidus temperatures inside the measured nugget; empty set gives 0."""
    T_hat = np.asarray(T_hat, dtype=float)
    res = np.minimum(T_hat, T_liq) - T_liq
    return _mean_sq(res, return_grad)


def negative_temp_penalty(T_hat, return_grad=False):
    return _mean_sq(np.minimum(np.asarray(T_hat, dtype=float), 0.0), return_grad)


def symmetry_losses(T_r_axis, T_z_plane, return_grad=False):
    """Mean squared radial slope on the axis and axial slope on the faying plane."""
    return _mean_sq(T_r_axis, return_grad), _mean_sq(T_z_plane, return_grad)


def loss_coefficients(weights: LossWeights, fade: float = 1.0, gate: bool = True) -> dict:
    """Multiplier of every term in the total loss."""
    exp = fade if gate else 0.0
    return {
        "pde_T": weights.pde, "pde_u": weights.pde,
        "ic_T": weights.ic, "ic_u": weights.ic,
        "bc_T": weights.bc, "bc_u": weights.bc,
        "d": exp * weights.d, "dp": exp * weights.dp,
        "sym_r": 1.0, "sym_z": 1.0, "neg": 1.0,
    }


def total_loss(terms: dict, weights: LossWeights, fade: float = 1.0, gate: bool = True):
    """Weighted sum of the available terms and a per-term report."""
    unknown = set(terms) - set(TERMS)
    if unknown:
        raise ConfigError(f"unknown loss terms {sorted(unknown)}")
    coeff = loss_coefficients(weights, fade, gate)
    total = 0.0
    for k in TERMS:
        if k in terms and coeff[k] != 0.0:
            total += coeff[k] * float(terms[k])
    report = {k: float(terms.get(k, 0.0)) for k in TERMS}
    report["total"] = total
    return total, report
