"""Command line entry point: benchmark, synth-data, train, predict, fit-pid, plot.

Settings come from built-in defaults, then an optional JSON config (top-level
keys plus a section named after the command), then explicit flags.  Outputs
go under ``--out``.  Exit codes: 0 success, 1 acceptance failure,
2 configuration or IO error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, evaluation, material, process
from .adnet import NetworkSpec, load_checkpoint
from .errors import ConfigError, DataError, NumericError
from .oracle import SynthOptions, analytic_benchmark, default_grid, nugget_growth, synth_experiment
from .physics import WeldConfig
from .problems import MODES, BenchmarkProblem, RSWProblem
from .residuals import LossWeights
from .sampler import Domain, build_datasets, load_records, save_records, split_by_weld
from .trainer import STRATEGIES, TrainConfig, train, write_manifest

log = logging.getLogger("pinnweld")

EXIT_OK, EXIT_ACCEPT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
BENCHMARK_REFERENCE = 3.01e-7
BENCHMARK_TARGET = 1e-5
BENCHMARK_MAX_ERROR = 1e-2
FIELD_TIMES = (400.0, 470.0, 560.0, 760.0)

DEFAULTS = {
    "benchmark": {"max_epochs": 100_000, "lr": 3e-3, "width": 20, "layers": 2, "activation": "tanh",
                  "n_pde": 500, "n_ic": 100, "n_bc": 100, "alpha": 0.06, "seed": 0, "k": 1000,
                  "stop_window": 1500, "table": None, "log_every": 10},
    "synth-data": {"grid": "22x4", "dim": 2, "nz": 40, "nr": 20, "noise": 0.01, "seed": 0,
                   "model": "B_forward", "rho_f": 1.0, "contact_width": 0.08, "hysteresis": False,
                   "table": None, "workers": None},
    "train": {"mode": "rsw_1d_forward", "data": "synthetic", "max_epochs": 12000, "lr": 3e-3,
              "lr_scalar": 0.05, "width": 32, "layers": 3, "activation": "tanh", "colloc": 1500,
              "band": None, "strategy": "immediate", "k": 1000, "stop_window": None, "L_thr": 1e-3,
              "s_t": 1500.0, "rho_f": None, "contact_width": None, "n0": 120000.0, "seed": 0,
              "exclude": [], "d_stride": 20, "table": None, "log_every": 10, "T_scale": 2.0,
              "u_scale": 3.0, "eval_nz": 100},
    "predict": {"checkpoint": "train/model_checkpoint.json", "I_kA": 36.0, "F_kN": 6.5, "nz": 21,
                "nr": 11, "t_ms": "0:760:10", "nugget": False},
    "fit-pid": {"torque": None, "displacement": None, "F0": 4000.0, "k_spring": 6666.0, "dt": 0.001,
                "window": 50, "noise_sweep": False, "samples": 100000, "seed": 0},
    "plot": {"loss": None, "displacement": None, "field": None, "nugget": None},
}


# ---------------------------------------------------------------- plumbing

def _settings(command: str, args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS[command])
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        section = doc.get(command, {})
        for src in ({k: v for k, v in doc.items() if not isinstance(v, dict)}, section):
            for k, v in src.items():
                key = k.replace("-", "_")
                if key not in opts:
                    raise ConfigError(f"{path}: unknown key {k!r} for command {command}")
                opts[key] = v
    for k, v in vars(args).items():
        if k in opts and v is not None:
            opts[k] = v
    return opts


def _check_table(path):
    """Validate an optional material table path early so errors map to exit 2."""
    if path is None:
        return None
    material.load_table(path)
    return str(path)


def _weld_config(model: str, rho_f: float, contact_width: float, table=None, n0: float = 120000.0) -> WeldConfig:
    return WeldConfig(contact=process.ContactConfig(model=model, rho_f=float(rho_f), n=float(n0)),
                      contact_width=float(contact_width), table_path=table)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _read_column(path, name: str) -> np.ndarray:
    """Last numeric column of a CSV with a header row; reports the offending line."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{name} file not found: {path}")
    values = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values.append(float(row[-1]))
            except ValueError:
                raise DataError(f"{path}:{lineno}: cannot parse {row[-1]!r} as a number") from None
    return np.array(values)


def _read_table(path, required) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in required if c not in fields]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        rows = list(reader)
    out = {}
    for c in fields:
        try:
            out[c] = np.array([float(r[c]) if r[c] != "" else np.nan for r in rows])
        except ValueError:
            out[c] = np.array([r[c] for r in rows])
    return out


# ---------------------------------------------------------------- commands

def cmd_benchmark(args) -> int:
    o = _settings("benchmark", args)
    _check_table(o["table"])
    out = _out(args)
    prob = BenchmarkProblem(n_pde=int(o["n_pde"]), n_ic=int(o["n_ic"]), n_bc=int(o["n_bc"]),
                            alpha=float(o["alpha"]), seed=int(o["seed"]))
    spec = NetworkSpec(2, 1, hidden_layers=int(o["layers"]), hidden_width=int(o["width"]),
                       activation=o["activation"], seed=int(o["seed"]))
    k = int(o["k"])
    cfg = TrainConfig(max_epochs=int(o["max_epochs"]), lr=float(o["lr"]), k=min(k, int(o["stop_window"])),
                      stop_window=int(o["stop_window"]), stop_loss=BENCHMARK_TARGET, fade=False, rolling=True,
                      log_every=int(o["log_every"]), seed=int(o["seed"]))
    write_manifest(out, {"command": "benchmark", **o}, {"network": int(o["seed"]), "collocation": int(o["seed"])})
    t0 = time.time()
    res = train(prob, spec, cfg, out_dir=out, tag="benchmark")
    z = np.linspace(0.0, 1.0, 101)
    t = np.linspace(0.0, 1.0, 101)
    Z, T = np.meshgrid(z, t)
    X = np.column_stack([Z.ravel(), T.ravel()])
    err = float(np.abs(prob.evaluate(res.params, X)[:, 0] - analytic_benchmark(X[:, 0], X[:, 1])).max())
    ok = res.best_loss <= BENCHMARK_TARGET and err <= BENCHMARK_MAX_ERROR
    report = {"final_loss": res.final_loss, "best_loss": res.best_loss, "epochs": res.state.epoch + 1,
              "reference_loss": BENCHMARK_REFERENCE, "max_error": err, "seconds": time.time() - t0,
              "stopped": res.stopped, "converged": ok}
    _write_json(out / "benchmark_metrics.json", report)
    print(f"benchmark: loss {res.final_loss:.3e} after {report['epochs']} epochs "
          f"(reference {BENCHMARK_REFERENCE:.2e}); max error {err:.2e}")
    if not ok:
        print(f"not converged: loss target {BENCHMARK_TARGET:.0e}, error target {BENCHMARK_MAX_ERROR:.0e}")
        return EXIT_ACCEPT
    return EXIT_OK


def _parse_grid(text: str):
    try:
        n_I, n_F = (int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"grid must look like 22x4, got {text!r}") from None
    if n_I < 1 or n_F < 1:
        raise ConfigError("grid sizes must be positive")
    if n_I == 1 or n_F == 1:
        I, F = default_grid()
        return (I[:1] if n_I == 1 else np.linspace(I[0], I[-1], n_I),
                F[:1] if n_F == 1 else np.linspace(F[0], F[-1], n_F))
    return default_grid(n_I, n_F)


def cmd_synth_data(args) -> int:
    o = _settings("synth-data", args)
    table = _check_table(o["table"])
    out = _out(args) / "synthetic"
    cfg = _weld_config(o["model"], o["rho_f"], o["contact_width"], table)
    currents, forces = _parse_grid(o["grid"])
    opts = SynthOptions(dim=int(o["dim"]), nz=int(o["nz"]), nr=int(o["nr"]), noise=float(o["noise"]),
                        hysteresis=bool(o["hysteresis"]), seed=int(o["seed"]))
    recs = synth_experiment(cfg, currents, forces, opts, workers=o["workers"], skip_failed=True)
    good, failed = [], []
    pairs = [(I, F) for I in currents for F in forces]
    for k, ((I, F), rec) in enumerate(zip(pairs, recs)):
        if rec is None:
            failed.append(f"I={I / 1e3:.3g} kA, F={F / 1e3:.3g} kN")
            continue
        rec.weld_id = f"w{k:03d}"
        good.append(rec)
    if not good:
        raise NumericError("every weld solve failed")
    save_records(good, out)
    _write_json(out / "synth_config.json", {"model": o["model"], "rho_f": o["rho_f"],
                                            "contact_width": o["contact_width"], "table": table,
                                            "options": asdict(opts) | {"pid": asdict(opts.pid)},
                                            "failed": failed, "partial": bool(failed)})
    print(f"synth-data: wrote {len(good)} welds to {out}")
    for f in failed:
        print(f"solver failure: {f}", file=sys.stderr)
    return EXIT_ACCEPT if failed else EXIT_OK


def _data_config(data_dir: Path) -> dict:
    p = data_dir / "synth_config.json"
    return json.loads(p.read_text()) if p.is_file() else {}


def build_rsw(o: dict, records, synth: dict | None = None):
    """Weld configuration, problem and network spec for an RSW training mode."""
    synth = synth or {}
    mode = o["mode"]
    if mode not in MODES[1:]:
        raise ConfigError(f"train mode must be one of {MODES[1:]}")
    model = "A_inverse" if mode == "rsw_1d_inverse" else "B_forward"
    rho_f = o["rho_f"] if o["rho_f"] is not None else synth.get("rho_f", 1.0)
    width = o["contact_width"] if o["contact_width"] is not None else synth.get("contact_width", 0.08)
    table = _check_table(o["table"] if o["table"] is not None else synth.get("table"))
    cfg = _weld_config(model, rho_f, width, table, o["n0"])
    dim = 2 if mode == "rsw_2d" else 1
    n_pde = int(o["colloc"])
    band = int(o["band"]) if o["band"] is not None else n_pde // 4
    n_small = max(20, n_pde // 8)
    dom = Domain(dim=dim, n_pde=n_pde, n_band=band, n_ic=n_small, n_bc=n_small, n_sym=max(10, n_pde // 16),
                 d_stride=int(o["d_stride"]))
    data = build_datasets(dom, records, cfg, seed=int(o["seed"]))
    prob = RSWProblem(mode, cfg, data, LossWeights(), T_scale=float(o["T_scale"]), u_scale=float(o["u_scale"]))
    spec = NetworkSpec(dom.input_dim, 2, hidden_layers=int(o["layers"]), hidden_width=int(o["width"]),
                       activation=o["activation"], seed=int(o["seed"]))
    return cfg, prob, spec


def train_config(o: dict) -> TrainConfig:
    k = int(o["k"])
    window = int(o["stop_window"]) if o["stop_window"] is not None else k + 500
    return TrainConfig.for_strategy(o["strategy"], max_epochs=int(o["max_epochs"]), lr=float(o["lr"]),
                                    lr_scalar=float(o["lr_scalar"]), k=k, stop_window=window,
                                    L_thr=float(o["L_thr"]), s_t=float(o["s_t"]), log_every=int(o["log_every"]),
                                    seed=int(o["seed"]))


def _load_run(checkpoint: Path):
    run_path = checkpoint.parent / "run.json"
    if not run_path.is_file():
        raise ConfigError(f"run description not found next to checkpoint: {run_path}")
    run = json.loads(run_path.read_text())
    params, scalars, _ = load_checkpoint(checkpoint)
    return run, params, scalars


def rebuild_problem(run: dict, scalars: dict | None = None):
    """Problem object for evaluating a stored network (no collocation data needed)."""
    o = run["settings"]
    n0 = float((scalars or {}).get("n", o["n0"]))
    model = "A_inverse" if o["mode"] == "rsw_1d_inverse" else "B_forward"
    cfg = _weld_config(model, run["rho_f"], run["contact_width"], run.get("table"), n0)
    width = 5 if o["mode"] == "rsw_2d" else 4
    data = {"pde": np.zeros((1, width))}
    return cfg, RSWProblem(o["mode"], cfg, data, T_scale=float(o["T_scale"]), u_scale=float(o["u_scale"]))


def cmd_train(args) -> int:
    o = _settings("train", args)
    out = _out(args) / "train"
    out.mkdir(parents=True, exist_ok=True)
    if o["strategy"] not in STRATEGIES:
        raise ConfigError(f"strategy must be one of {STRATEGIES}")
    data_dir = Path(o["data"])
    if not data_dir.is_absolute() and not data_dir.exists():
        data_dir = Path(args.out) / data_dir
    records = load_records(data_dir, exclude=tuple(o["exclude"]))
    synth = _data_config(data_dir if data_dir.is_dir() else data_dir.parent)
    tr, va, te = split_by_weld(records, seed=int(o["seed"]))
    cfg, prob, spec = build_rsw(o, tr, synth)
    tcfg = train_config(o)
    write_manifest(out, {"command": "train", **o}, {"network": int(o["seed"]), "split": int(o["seed"])})
    t0 = time.time()
    res = train(prob, spec, tcfg, out_dir=out, tag="model")
    _write_json(out / "run.json", {"settings": o, "rho_f": cfg.contact.rho_f,
                                   "contact_width": cfg.contact_width, "table": cfg.table_path,
                                   "splits": {"train": [w.weld_id for w in tr], "val": [w.weld_id for w in va],
                                              "test": [w.weld_id for w in te]}})
    metrics = {"final_loss": res.final_loss, "best_loss": res.best_loss, "epochs": res.state.epoch + 1,
               "stopped": res.stopped, "seconds": time.time() - t0, "lr_reductions": res.state.lr_reductions,
               "gate_epoch": res.state.s_ref}
    for name, split in (("train", tr), ("val", va), ("test", te)):
        if split:
            metrics[f"r2_{name}"] = evaluation.displacement_r2(prob, res.params, split)
    if prob.learn_n:
        metrics["n_initial"] = float(o["n0"])
        metrics["n_final"] = prob.n_value(res.scalars)
        metrics["n_min"] = min(res.n_history)
    if synth and cfg.contact.model == synth.get("model", cfg.contact.model) and te:
        errs = [evaluation.temperature_error(prob, res.params, w, cfg, nz=int(o["eval_nz"])) for w in te]
        metrics["temperature_error_max"] = max(errs)
        metrics["temperature_error_mean"] = float(np.mean(errs))
    _write_json(out / "metrics.json", metrics)
    with open(out / "displacement_test.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["weld_id", "t_ms", "measured", "std", "predicted"])
        for rec in te:
            pred = evaluation.predict_displacement(prob, res.params, rec)
            std = rec.std if rec.std is not None else np.full(rec.t_ms.size, np.nan)
            for row in zip(rec.t_ms, rec.y_d, std, pred):
                w.writerow([rec.weld_id] + [f"{v:.10g}" for v in row])
    print(f"train: {o['mode']} loss {res.final_loss:.3e} after {metrics['epochs']} epochs ({res.stopped}); "
          f"test R^2 {metrics.get('r2_test', float('nan')):.4f}")
    return EXIT_OK


def _time_grid(spec) -> np.ndarray:
    if isinstance(spec, (list, tuple)):
        return np.asarray(spec, dtype=float)
    try:
        a, b, step = (float(v) for v in str(spec).split(":"))
    except ValueError:
        raise ConfigError(f"time grid must be start:stop:step, got {spec!r}") from None
    if step <= 0 or b < a or a < 0 or b > 760.0:
        raise ConfigError("time grid must lie inside [0, 760] ms with a positive step")
    return np.arange(a, b + 0.5 * step, step)


def cmd_predict(args) -> int:
    o = _settings("predict", args)
    out = _out(args)
    ck = Path(o["checkpoint"])
    if not ck.is_file() and (Path(args.out) / ck).is_file():
        ck = Path(args.out) / ck
    if not ck.is_file():
        raise ConfigError(f"checkpoint not found: {ck}")
    run, params, scalars = _load_run(ck)
    cfg, prob = rebuild_problem(run, scalars)
    if params.spec.input_dim != len(prob.coords):
        raise ConfigError("checkpoint input dimension does not match its training mode")
    t = _time_grid(o["t_ms"])
    z = np.linspace(0.0, 1.0, int(o["nz"]))
    r = np.linspace(0.0, 1.0, int(o["nr"])) if prob.dim == 2 else None
    sol = evaluation.predict_field(prob, params, z, t, float(o["I_kA"]) * 1e3, float(o["F_kN"]) * 1e3, r)
    with open(out / "prediction.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "z", "t_ms", "T_C", "u_mm"])
        radii = [0.0] if r is None else r
        for k, tk in enumerate(t):
            for i, rv in enumerate(radii):
                Trow = sol.T[k] if r is None else sol.T[k, i]
                urow = sol.u[k] if r is None else sol.u[k, i]
                for j, zj in enumerate(z):
                    w.writerow([f"{rv:.10g}", f"{zj:.10g}", f"{tk:.10g}", f"{Trow[j]:.10g}", f"{urow[j]:.10g}"])
    if o["nugget"]:
        d_p = nugget_growth(sol, cfg.scales, cfg.table.pb.T_liq)
        with open(out / "nugget.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_ms", "d_p_mm"])
            for tk, dk in zip(t, d_p):
                w.writerow([f"{tk:.10g}", f"{dk:.10g}"])
    print(f"predict: {sol.T.size} grid points written to {out / 'prediction.csv'}")
    return EXIT_OK


def cmd_fit_pid(args) -> int:
    o = _settings("fit-pid", args)
    out = _out(args)
    F0, k_spring, dt, window = float(o["F0"]), float(o["k_spring"]), float(o["dt"]), int(o["window"])
    if o["noise_sweep"]:
        x = process.pid_excitation(int(o["samples"]), F0, k_spring, seed=int(o["seed"]))
        rng = np.random.default_rng(int(o["seed"]))
        K_true = process.PIDParams(*process.MACHINE_PID.as_tuple(), dt=dt, window=window)
        with open(out / "pid_noise_sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["noise", "K_p", "K_i", "K_d", "mse"])
            for noise in (0.0, 0.001, 0.005, 0.01, 0.02, 0.05):
                torque = process.synthetic_torque(x, K_true, F0, k_spring, noise, rng)
                K, mse = process.fit_pid(torque, x, F0, k_spring, dt, window)
                w.writerow([f"{noise:g}", f"{K.K_p:.10g}", f"{K.K_i:.10g}", f"{K.K_d:.10g}", f"{mse:.10g}"])
                print(f"noise {noise:5.3f}: K_p={K.K_p:.6g} K_i={K.K_i:.6g} K_d={K.K_d:.6g} mse={mse:.3g}")
        return EXIT_OK
    if o["torque"] is None or o["displacement"] is None:
        raise ConfigError("fit-pid needs --torque and --displacement (or --noise-sweep)")
    torque = _read_column(o["torque"], "torque")
    disp = _read_column(o["displacement"], "displacement")
    if torque.size != disp.size:
        raise DataError(f"torque has {torque.size} samples but displacement has {disp.size}")
    K, mse = process.fit_pid(torque, disp, F0, k_spring, dt, window)
    _write_json(out / "pid_fit.json", {"K_p": K.K_p, "K_i": K.K_i, "K_d": K.K_d, "mse": mse})
    print(f"fit-pid: K_p={K.K_p:.6g} K_i={K.K_i:.6g} K_d={K.K_d:.6g} mse={mse:.6g}")
    return EXIT_OK


def cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    o = _settings("plot", args)
    out = _out(args)
    made = []
    if o["loss"]:
        d = _read_table(o["loss"], ["epoch", "total"])
        fig, ax = plt.subplots(figsize=(7, 4))
        for name in ["total"] + [c for c in d if c.startswith(("pde", "ic", "bc", "sym")) or c in ("d", "dp", "neg")]:
            y = d[name]
            if np.issubdtype(y.dtype, np.number) and np.any(y > 0):
                ax.semilogy(d["epoch"], np.where(y > 0, y, np.nan), label=name, lw=1.5 if name == "total" else 0.8)
        ax.set_xlabel("epoch")
        ax.set_ylabel("loss")
        ax.legend(fontsize=7, ncol=2)
        fig.tight_layout()
        fig.savefig(out / "loss.svg")
        plt.close(fig)
        made.append("loss.svg")
    if o["displacement"]:
        d = _read_table(o["displacement"], ["t_ms", "measured", "predicted"])
        ids = d.get("weld_id", np.zeros(d["t_ms"].size))
        fig, ax = plt.subplots(figsize=(7, 4))
        for wid in list(dict.fromkeys(ids.tolist()))[:6]:
            sel = ids == wid
            t = d["t_ms"][sel]
            line, = ax.plot(t, d["measured"][sel], lw=1.0)
            if "std" in d and np.all(np.isfinite(d["std"][sel])):
                s = d["std"][sel]
                ax.fill_between(t, d["measured"][sel] - s, d["measured"][sel] + s, color=line.get_color(), alpha=0.2)
            ax.plot(t, d["predicted"][sel], "--", color=line.get_color(), lw=1.0)
        ax.set_xlabel("t [ms]")
        ax.set_ylabel("displacement [mm]")
        fig.tight_layout()
        fig.savefig(out / "displacement.svg")
        plt.close(fig)
        made.append("displacement.svg")
    if o["field"]:
        d = _read_table(o["field"], ["r", "z", "t_ms", "T_C"])
        times = [t for t in FIELD_TIMES if np.any(np.isclose(d["t_ms"], t))] or [float(d["t_ms"].max())]
        fig, axes = plt.subplots(1, len(times), figsize=(3.2 * len(times), 3), squeeze=False)
        for ax, t in zip(axes[0], times):
            sel = np.isclose(d["t_ms"], t)
            r, z, T = d["r"][sel], d["z"][sel], d["T_C"][sel]
            if np.unique(r).size > 1:
                im = ax.tricontourf(r, z, T, levels=20)
                ax.set_xlabel("r")
            else:
                order = np.argsort(z)
                ax.plot(T[order], z[order])
                im = None
                ax.set_xlabel("T [degC]")
            ax.set_title(f"t = {t:g} ms")
            ax.set_ylabel("z")
            if im is not None:
                fig.colorbar(im, ax=ax)
        fig.tight_layout()
        fig.savefig(out / "field.svg")
        plt.close(fig)
        made.append("field.svg")
    if o["nugget"]:
        d = _read_table(o["nugget"], ["t_ms", "d_p_mm"])
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(d["t_ms"], d["d_p_mm"])
        ax.set_xlabel("t [ms]")
        ax.set_ylabel("nugget diameter [mm]")
        fig.tight_layout()
        fig.savefig(out / "nugget.svg")
        plt.close(fig)
        made.append("nugget.svg")
    if not made:
        raise ConfigError("plot needs at least one of --loss, --displacement, --field, --nugget")
    print("plot: " + ", ".join(str(out / m) for m in made))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pinnweld", description="Physics-informed spot-weld models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("benchmark", help="train the Dirichlet heat benchmark")
    b.add_argument("--max-epochs", type=int)
    b.add_argument("--lr", type=float)
    b.add_argument("--width", type=int)
    b.add_argument("--layers", type=int)
    b.add_argument("--activation", choices=["tanh", "gelu", "elu"])
    b.add_argument("--n-pde", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--table", help="material table CSV (validated only)")

    s = sub.add_parser("synth-data", help="simulate the synthetic weld experiment")
    s.add_argument("--grid", help="currents x forces, e.g. 22x4")
    s.add_argument("--dim", type=int, choices=[1, 2])
    s.add_argument("--nz", type=int)
    s.add_argument("--nr", type=int)
    s.add_argument("--noise", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--model", choices=list(process.CONTACT_MODELS))
    s.add_argument("--rho-f", type=float)
    s.add_argument("--contact-width", type=float)
    s.add_argument("--hysteresis", action="store_true", default=None)
    s.add_argument("--table")
    s.add_argument("--workers", type=int)

    t = sub.add_parser("train", help="train an RSW model on weld records")
    t.add_argument("--mode", choices=list(MODES[1:]))
    t.add_argument("--data", help="directory with manifest.csv")
    t.add_argument("--max-epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--width", type=int)
    t.add_argument("--layers", type=int)
    t.add_argument("--colloc", type=int, help="interior collocation points")
    t.add_argument("--strategy", choices=list(STRATEGIES))
    t.add_argument("--k", type=int)
    t.add_argument("--stop-window", type=int, help="early-stop window (default k+500)")
    t.add_argument("--L-thr", dest="L_thr", type=float)
    t.add_argument("--s-t", dest="s_t", type=float, help="fade length in epochs")
    t.add_argument("--lr-scalar", type=float, help="learning rate of the spot count n")
    t.add_argument("--n0", type=float, help="initial spot count n")
    t.add_argument("--rho-f", type=float)
    t.add_argument("--contact-width", type=float)
    t.add_argument("--seed", type=int)
    t.add_argument("--exclude", nargs="*", help="weld ids to drop")
    t.add_argument("--table")

    q = sub.add_parser("predict", help="evaluate a trained model on a grid")
    q.add_argument("--checkpoint")
    q.add_argument("--I-kA", dest="I_kA", type=float)
    q.add_argument("--F-kN", dest="F_kN", type=float)
    q.add_argument("--nz", type=int)
    q.add_argument("--nr", type=int)
    q.add_argument("--t-ms", dest="t_ms", help="start:stop:step in ms")
    q.add_argument("--nugget", action="store_true", default=None)

    f = sub.add_parser("fit-pid", help="identify PID constants from torque and displacement")
    f.add_argument("--torque")
    f.add_argument("--displacement")
    f.add_argument("--F0", type=float)
    f.add_argument("--k-spring", type=float)
    f.add_argument("--window", type=int)
    f.add_argument("--noise-sweep", action="store_true", default=None)
    f.add_argument("--samples", type=int)
    f.add_argument("--seed", type=int)

    g = sub.add_parser("plot", help="render SVG figures from CSV artifacts")
    g.add_argument("--loss")
    g.add_argument("--displacement")
    g.add_argument("--field")
    g.add_argument("--nugget")
    return p


COMMANDS = {"benchmark": cmd_benchmark, "synth-data": cmd_synth_data, "train": cmd_train,
            "predict": cmd_predict, "fit-pid": cmd_fit_pid, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
