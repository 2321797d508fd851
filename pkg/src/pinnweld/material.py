"""Temperature-dependent material properties for the AlMgSi sheets.

Properties live in a CSV table with a solid and a liquid branch.  Between
solidus and liquidus the two branches are mixed by the liquid fraction
``chi(T)``.  Units: alpha in mm^2/ms, kappa in K*mm^4/(A^2*ms), beta in 1/K,
lambda_th in W/(mm*K).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

PROPERTIES = ("alpha", "kappa", "beta", "lambda_th")

# room-temperature reference values of the sheet material
T_ROOM = 20.0
DENSITY = 2.7e-6          # kg/mm^3
HEAT_CAPACITY = 890.0     # J/(kg*K)
RHO_CP = DENSITY * HEAT_CAPACITY   # J/(mm^3*K)
RHO_EL_ROOM = 3.66e-5     # Ohm*mm
YOUNGS_MODULUS = 70.0     # stored as listed; cancels from the displacement residual


@dataclass(frozen=True)
class PhaseBlend:
    T_sol: float = 630.0
    T_liq: float = 660.0

    def __post_init__(self):
        if not self.T_liq > self.T_sol:
            raise ConfigError("T_liq must exceed T_sol")

    def chi(self, T):
        """Liquid fraction, linear in T between solidus and liquidus."""
        return np.clip((np.asarray(T, dtype=float) - self.T_sol) / (self.T_liq - self.T_sol), 0.0, 1.0)

    def dchi(self, T):
        T = np.asarray(T, dtype=float)
        inside = (T > self.T_sol) & (T < self.T_liq)
        return np.where(inside, 1.0 / (self.T_liq - self.T_sol), 0.0)


def blend(f_sol, f_liq, T, pb: PhaseBlend | None = None):
    pb = pb or PhaseBlend()
    chi = pb.chi(T)
    out = (1.0 - chi) * np.asarray(f_sol, dtype=float) + chi * np.asarray(f_liq, dtype=float)
    return float(out) if np.ndim(out) == 0 else out


class MaterialTable:
    """Piecewise-linear property tables for the solid and liquid branches."""

    def __init__(self, branches: dict, pb: PhaseBlend | None = None):
        self.pb = pb or PhaseBlend()
        self.branches = {}
        for phase in ("sol", "liq"):
            if phase not in branches:
                raise ConfigError(f"material table lacks the {phase!r} branch")
            grid, values = branches[phase]
            grid = np.asarray(grid, dtype=float)
            if grid.size == 0:
                raise ConfigError("empty material table")
            if np.any(np.diff(grid) <= 0):
                raise ConfigError(f"temperature grid of {phase!r} branch is not strictly increasing")
            vals = {}
            for p in PROPERTIES:
                v = np.asarray(values[p], dtype=float)
                if v.shape != grid.shape:
                    raise ConfigError(f"property {p} does not match the grid")
                if not np.all(np.isfinite(v)) or np.any(v <= 0):
                    raise ConfigError(f"property {p} must be positive and finite")
                vals[p] = v
            self.branches[phase] = (grid, vals)
        lo = min(g[0] for g, _ in self.branches.values())
        hi = max(g[-1] for g, _ in self.branches.values())
        if lo > 0.0 or hi < 800.0:
            raise ConfigError("material table must cover 0..800 degC")

    @property
    def grid_min(self) -> float:
        return min(g[0] for g, _ in self.branches.values())

    @property
    def grid_max(self) -> float:
        return max(g[-1] for g, _ in self.branches.values())

    def branch(self, phase: str, prop: str, T):
        """Interpolated value and segment slope of one branch (clamped outside its grid)."""
        grid, vals = self.branches[phase]
        v = vals[prop]
        T = np.asarray(T, dtype=float)
        if grid.size == 1:
            return np.full_like(T, v[0]), np.zeros_like(T)
        value = np.interp(T, grid, v)
        idx = np.clip(np.searchsorted(grid, T, side="right") - 1, 0, grid.size - 2)
        slope = (v[idx + 1] - v[idx]) / (grid[idx + 1] - grid[idx])
        slope = np.where((T < grid[0]) | (T > grid[-1]), 0.0, slope)
        return value, slope


def load_table(path=None, pb: PhaseBlend | None = None) -> MaterialTable:
    """Read ``T_C,alpha,kappa,beta,lambda_th,phase`` rows; ``None`` loads the bundled table."""
    if path is None:
        text = resources.files("pinnweld").joinpath("data/almgsi_default.csv").read_text()
        name = "almgsi_default.csv"
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"material table file not found: {p}")
        text = p.read_text()
        name = str(p)
    rows = {"sol": [], "liq": []}
    reader = csv.DictReader(text.splitlines())
    need = {"T_C", "phase", *PROPERTIES}
    if reader.fieldnames is None or not need.issubset(reader.fieldnames):
        raise DataError(f"{name}: header must contain {sorted(need)}")
    for lineno, row in enumerate(reader, start=2):
        phase = row["phase"].strip()
        if phase not in rows:
            raise DataError(f"{name}:{lineno}: phase must be 'sol' or 'liq'")
        try:
            rows[phase].append([float(row["T_C"])] + [float(row[p]) for p in PROPERTIES])
        except ValueError as exc:
            raise DataError(f"{name}:{lineno}: {exc}") from None
    branches = {}
    for phase, r in rows.items():
        arr = np.array(r, dtype=float).reshape(-1, 1 + len(PROPERTIES))
        branches[phase] = (arr[:, 0], {p: arr[:, i + 1] for i, p in enumerate(PROPERTIES)})
    return MaterialTable(branches, pb)


_DEFAULT: MaterialTable | None = None


def default_table() -> MaterialTable:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_table()
    return _DEFAULT


def lookup(table: MaterialTable, prop: str, T):
    """Blended property value and its temperature derivative at ``T`` (degC)."""
    if prop not in PROPERTIES:
        raise ConfigError(f"unknown property {prop!r}")
    scalar = np.ndim(T) == 0
    T = np.asarray(T, dtype=float)
    fs, ds = table.branch("sol", prop, T)
    fl, dl = table.branch("liq", prop, T)
    chi = table.pb.chi(T)
    value = (1.0 - chi) * fs + chi * fl
    slope = (1.0 - chi) * ds + chi * dl + table.pb.dchi(T) * (fl - fs)
    if scalar:
        return float(value), float(slope)
    return value, slope


def room_properties(table: MaterialTable) -> dict:
    return {p: lookup(table, p, T_ROOM)[0] for p in PROPERTIES}


def update_parameters(table: MaterialTable, T_hat, gate: bool) -> dict:
    """Per-point properties for predicted temperatures ``T_hat`` (degC).

    With the gate closed every point gets the room-temperature values and a zero
    conductivity slope.
    """
    T_hat = np.asarray(T_hat, dtype=float)
    out = {}
    if not gate:
        for p, v in room_properties(table).items():
            out[p] = np.full(T_hat.shape, v)
        out["dlambda_th"] = np.zeros(T_hat.shape)
        return out
    for p in PROPERTIES:
        v, d = lookup(table, p, T_hat)
        out[p] = v
        if p == "lambda_th":
            out["dlambda_th"] = d
    return out


def electrical_resistivity(table: MaterialTable, T):
    """Electrical resistivity in Ohm*mm recovered from kappa = rho_el / (rho*c_p)."""
    kappa, _ = lookup(table, "kappa", T)
    return kappa * 1000.0 * RHO_CP


@dataclass(frozen=True)
class HardnessModel:
    H_ref: float = 430.0
    T_ref: float = T_ROOM
    T_zero: float = 660.0

    def __call__(self, T):
        frac = (self.T_zero - np.asarray(T, dtype=float)) / (self.T_zero - self.T_ref)
        H = self.H_ref * np.clip(frac, 0.0, 1.0)
        return float(H) if np.ndim(H) == 0 else H


def hardness(T, model: HardnessModel | None = None):
    """Surface hardness in N/mm^2; linear from 430 at 20 degC to 0 at the liquidus."""
    return (model or HardnessModel())(T)
