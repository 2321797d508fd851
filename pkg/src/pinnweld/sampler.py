"""Collocation sampling, training-set assembly and weld-level splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError


@dataclass
class WeldRecord:
    I_kA: float
    F_kN: float
    t_ms: np.ndarray
    y_d: np.ndarray          # measured electrode displacement, mm
    d_p: float               # nugget diameter, mm
    std: np.ndarray | None = None
    weld_id: str = ""

    def __post_init__(self):
        self.t_ms = np.asarray(self.t_ms, dtype=float)
        self.y_d = np.asarray(self.y_d, dtype=float)
        if self.t_ms.shape != self.y_d.shape or self.y_d.ndim != 1:
            raise DataError("time and displacement series must be 1-D and aligned")
        if not (np.all(np.isfinite(self.y_d)) and np.all(np.isfinite(self.t_ms))):
            raise DataError("non-finite displacement series")
        if not np.isfinite(self.d_p) or self.d_p < 0:
            raise DataError("nugget diameter must be finite and >= 0")
        if self.std is not None:
            self.std = np.asarray(self.std, dtype=float)
            if self.std.shape != self.y_d.shape:
                raise DataError("std series does not match displacement series")


def lhs_sample(bounds, n: int, seed=0) -> np.ndarray:
    """Latin hypercube: every dimension gets exactly one point per equal-width stratum."""
    bounds = np.asarray(bounds, dtype=float)
    if n < 1:
        raise ConfigError("need n >= 1 samples")
    if bounds.ndim != 2 or bounds.shape[1] != 2 or np.any(bounds[:, 1] <= bounds[:, 0]):
        raise ConfigError("bounds must be (d, 2) with lower < upper")
    rng = np.random.default_rng(seed)
    d = bounds.shape[0]
    u = np.empty((n, d))
    for j in range(d):
        u[:, j] = (rng.permutation(n) + rng.random(n)) / n
    lo, hi = bounds[:, 0], bounds[:, 1]
    return np.minimum(lo + u * (hi - lo), hi)


@dataclass(frozen=True)
class Domain:
    """Scaled sampling domain; inputs are ordered (r, z, t, I, F) in 2D and (z, t, I, F) in 1D."""

    dim: int = 1
    t_max: float = 760.0 / 135.17
    r_min: float = 0.01          # keeps collocation points off the axis
    n_pde: int = 2000
    n_band: int = 500            # extra points around the faying surface
    band_halfwidth: float = 0.12
    n_ic: int = 300
    n_bc: int = 400
    n_sym: int = 300
    d_stride: int = 5
    nugget_points: int = 11

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        if self.t_max <= 0 or not 0 < self.r_min < 1:
            raise ConfigError("invalid domain bounds")
        if min(self.n_pde, self.n_ic, self.n_bc) < 1 or self.d_stride < 1:
            raise ConfigError("dataset counts must be positive")

    @property
    def input_dim(self) -> int:
        return 4 if self.dim == 1 else 5

    def bounds(self) -> np.ndarray:
        b = [[0.0, 1.0], [0.0, self.t_max], [0.0, 1.0], [0.0, 1.0]]
        if self.dim == 2:
            b = [[self.r_min, 1.0]] + b
        return np.array(b)


def _point(dom: Domain, r, z, t, i, f):
    cols = [z, t, i, f] if dom.dim == 1 else [r, z, t, i, f]
    n = max(np.size(c) for c in cols)
    return np.column_stack([np.broadcast_to(np.asarray(c, dtype=float), (n,)) for c in cols])


def build_datasets(dom: Domain, welds, cfg, seed: int = 0, pid=None, k_c: float = 0.1) -> dict:
    """Assemble every training set as arrays of scaled network inputs.

    Returns a dict with ``pde``, ``ic``, ``bc_axial`` (plus ``bc_radial``,
    ``sym_r`` in 2D), ``sym_z``, ``base`` (z = 0), and the experimental sets
    ``d`` (inputs, scaled targets ``y`` and controller travel ``xs``) and
    ``dp`` (inputs at the faying surface at the end of the weld pulse).
    """
    from . import process
    from .physics import normalize_process
    from .residuals import nugget_radii

    welds = list(welds)
    if not welds:
        raise DataError("no welds supplied for dataset assembly")
    ss = np.random.SeedSequence(seed).spawn(8)
    rng = [np.random.default_rng(s) for s in ss]
    sc = cfg.scales
    out = {}
    # domain interior
    pde = lhs_sample(dom.bounds(), dom.n_pde, ss[0])
    if dom.n_band:
        bb = dom.bounds().copy()
        zc = 0 if dom.dim == 1 else 1
        bb[zc] = [0.5 - dom.band_halfwidth, 0.5 + dom.band_halfwidth]
        pde = np.vstack([pde, lhs_sample(bb, dom.n_band, ss[1])])
    out["pde"] = pde

    def rand_proc(g, n):
        return g.random(n) * dom.t_max, g.random(n), g.random(n)

    g = rng[2]
    n = dom.n_ic
    out["ic"] = _point(dom, g.random(n), g.random(n), 0.0, g.random(n), g.random(n))
    g = rng[3]
    n = dom.n_bc
    t, i, f = rand_proc(g, n)
    zf = (np.arange(n) % 2).astype(float)
    out["bc_axial"] = _point(dom, g.random(n), zf, t, i, f)
    t, i, f = rand_proc(g, n // 2)
    out["base"] = _point(dom, g.random(n // 2), 0.0, t, i, f)
    g = rng[4]
    n = dom.n_sym
    t, i, f = rand_proc(g, n)
    out["sym_z"] = _point(dom, g.random(n), 0.5, t, i, f)
    if dom.dim == 2:
        t, i, f = rand_proc(g, n)
        out["sym_r"] = _point(dom, 0.0, g.random(n), t, i, f)
        t, i, f = rand_proc(g, dom.n_bc)
        out["bc_radial"] = _point(dom, 1.0, g.random(dom.n_bc), t, i, f)

    pid = pid or process.MACHINE_PID
    xs_list, y_list, pts = [], [], []
    dp_pts = []
    t_end = cfg.schedule.weld_end
    for w in welds:
        i_n, f_n = normalize_process(w.I_kA * 1000.0, w.F_kN * 1000.0)
        sel = slice(None, None, dom.d_stride)
        x_s = process.controller_travel(w.y_d, pid, k_c)
        pts.append(_point(dom, 0.0, 1.0, w.t_ms[sel] / sc.t_c, i_n, f_n))
        y_list.append(w.y_d[sel] / sc.u_c)
        xs_list.append(x_s[sel] / sc.u_c)
        radii = nugget_radii(w.d_p, sc, dom.nugget_points)
        if dom.dim == 2 and radii.size:
            dp_pts.append(_point(dom, radii, 0.5, t_end / sc.t_c, i_n, f_n))
    out["d"] = {"x": np.vstack(pts), "y": np.concatenate(y_list), "xs": np.concatenate(xs_list)}
    width = dom.input_dim
    out["dp"] = np.vstack(dp_pts) if dp_pts else np.zeros((0, width))
    return out


def split_by_weld(records, fractions=(0.6, 0.2, 0.2), seed: int = 0):
    """Shuffle welds and cut floor(f*N) for validation and test, the rest for training."""
    records = list(records)
    N = len(records)
    if N < 5:
        raise DataError("need at least 5 welds to split")
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise ConfigError("fractions must be three nonnegative numbers summing to one")
    n_val = int(np.floor(fractions[1] * N + 1e-9))
    n_test = int(np.floor(fractions[2] * N + 1e-9))
    order = np.random.default_rng(seed).permutation(N)
    val = [records[k] for k in order[:n_val]]
    test = [records[k] for k in order[n_val:n_val + n_test]]
    train = [records[k] for k in order[n_val + n_test:]]
    return train, val, test


def save_records(records, directory) -> Path:
    """Write one ``t_ms,disp_mm[,std_mm]`` CSV per weld plus ``manifest.csv``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "manifest.csv", "w", newline="") as mf:
        mw = csv.writer(mf, lineterminator="\n")
        mw.writerow(["weld_id", "I_kA", "F_kN", "d_p_mm", "file"])
        for k, w in enumerate(records):
            wid = w.weld_id or f"w{k:03d}"
            fname = f"{wid}.csv"
            mw.writerow([wid, f"{w.I_kA:.10g}", f"{w.F_kN:.10g}", f"{w.d_p:.10g}", fname])
            with open(d / fname, "w", newline="") as fh:
                cw = csv.writer(fh, lineterminator="\n")
                if w.std is None:
                    cw.writerow(["t_ms", "disp_mm"])
                    for t, y in zip(w.t_ms, w.y_d):
                        cw.writerow([f"{t:.10g}", f"{y:.17g}"])
                else:
                    cw.writerow(["t_ms", "disp_mm", "std_mm"])
                    for t, y, s in zip(w.t_ms, w.y_d, w.std):
                        cw.writerow([f"{t:.10g}", f"{y:.17g}", f"{s:.17g}"])
    return d / "manifest.csv"


def load_records(manifest, exclude=()) -> list[WeldRecord]:
    """Read welds listed in a manifest; ``exclude`` drops weld ids (e.g. a faulty first weld)."""
    mpath = Path(manifest)
    if mpath.is_dir():
        mpath = mpath / "manifest.csv"
    if not mpath.is_file():
        raise ConfigError(f"manifest not found: {mpath}")
    records = []
    with open(mpath, newline="") as mf:
        reader = csv.DictReader(mf)
        need = {"weld_id", "I_kA", "F_kN", "d_p_mm", "file"}
        if reader.fieldnames is None or not need.issubset(reader.fieldnames):
            raise DataError(f"{mpath}: manifest header must contain {sorted(need)}")
        for lineno, row in enumerate(reader, start=2):
            if row["weld_id"] in exclude:
                continue
            fpath = mpath.parent / row["file"]
            if not fpath.is_file():
                raise ConfigError(f"{mpath}:{lineno}: weld file not found: {fpath}")
            try:
                data = np.loadtxt(fpath, delimiter=",", skiprows=1, ndmin=2)
                records.append(WeldRecord(float(row["I_kA"]), float(row["F_kN"]), data[:, 0], data[:, 1],
                                          float(row["d_p_mm"]), data[:, 2] if data.shape[1] > 2 else None,
                                          row["weld_id"]))
            except ValueError as exc:
                raise DataError(f"{mpath}:{lineno}: {exc}") from None
    return records
