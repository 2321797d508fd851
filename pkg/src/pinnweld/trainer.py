"""Training loop with threshold gating, sigmoid fade-in and rolling-window scheduling."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .adnet import NetworkParams, NetworkSpec, init_network, save_checkpoint
from .errors import ConfigError, NumericError
from .residuals import TERMS

log = logging.getLogger(__name__)

STRATEGIES = ("both", "no_rolling", "no_smoothing", "immediate")


@dataclass
class TrainConfig:
    max_epochs: int = 100_000
    lr: float = 1e-3
    L_thr: float = 1e-3
    s_t: float = 1500.0
    steepness: float = 0.01
    k: int = 1000
    stop_window: int = 1500          # k + 500
    lr_factor: float = 0.1
    stop_loss: float = 3.01e-7
    fade: bool = True
    rolling: bool = True
    gate_at_start: bool = False
    lr_scalar: float | None = None   # separate step size for log n (defaults to lr)
    checkpoint_every: int = 1000
    log_every: int = 1
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.max_epochs < 1 or self.lr <= 0 or self.L_thr <= 0 or self.s_t <= 0:
            raise ConfigError("max_epochs, lr, L_thr and s_t must be positive")
        if self.k < 1 or self.stop_window < self.k:
            raise ConfigError("need 1 <= k <= stop_window")
        if not 0 < self.lr_factor < 1:
            raise ConfigError("lr_factor must lie in (0, 1)")

    @classmethod
    def for_strategy(cls, name: str, **kw) -> "TrainConfig":
        """Ablation variants: each drops one more of the training strategies."""
        if name not in STRATEGIES:
            raise ConfigError(f"unknown strategy {name!r}")
        flags = {"both": (True, True, False), "no_rolling": (True, False, False),
                 "no_smoothing": (False, False, False), "immediate": (False, False, True)}[name]
        return cls(fade=flags[0], rolling=flags[1], gate_at_start=flags[2], **kw)


FADE_SETTLED = 0.99


@dataclass
class TrainState:
    epoch: int = 0
    lr: float = 1e-3
    n_bad: int = 0
    history: deque = field(default_factory=lambda: deque(maxlen=4000))
    best: float = math.inf
    best_epoch: int = 0
    gate_material: bool = False
    gate_experimental: bool = False
    s_ref: int | None = None
    lr_reductions: int = 0
    scalars_active: bool = False
    ref_needed: int = 1     # losses required before the stop window to form a reference
    fade_pending: bool = False

    def to_dict(self):
        return {"epoch": self.epoch, "lr": self.lr, "n_bad": self.n_bad, "best": self.best,
                "gate_material": self.gate_material, "gate_experimental": self.gate_experimental,
                "s_ref": self.s_ref, "lr_reductions": self.lr_reductions,
                "scalars_active": self.scalars_active}


def new_state(cfg: TrainConfig) -> TrainState:
    return TrainState(lr=cfg.lr, history=deque(maxlen=cfg.stop_window + cfg.k + 1))


def fade_factor(s, s_ref, s_t=1500.0, steepness=0.01):
    """Sigmoid weight of the experimental terms, 0.5 at s = s_ref + s_t."""
    x = -steepness * (np.asarray(s, dtype=float) - s_ref - s_t)
    f = 1.0 / (1.0 + np.exp(x))
    return float(f) if np.ndim(f) == 0 else f


def gate_check(total_loss: float, L_thr: float, state: TrainState) -> TrainState:
    """Latch both gates at the first epoch whose loss reaches the threshold."""
    if not state.gate_material and total_loss <= L_thr:
        state.gate_material = True
        state.gate_experimental = True
        state.s_ref = state.epoch
        state.scalars_active = True
    return state


def update_bad_epochs(state: TrainState, loss: float, k: int, rolling: bool = True) -> TrainState:
    """Count epochs whose loss does not beat the reference.

    With ``rolling`` the reference is the minimum over the previous ``k``
    losses; otherwise it is the best loss seen so far.
    """
    if rolling:
        recent = list(state.history)[-k:]
        ref = min(recent) if recent else math.inf
    else:
        ref = state.best
    state.n_bad = state.n_bad + 1 if loss > ref else 0
    state.history.append(loss)
    if loss < state.best:
        state.best = loss
        state.best_epoch = state.epoch
    return state


def reset_monitor(state: TrainState, k: int) -> TrainState:
    """Forget the loss history once the objective gains new terms, so losses
    measured before the gate opened are not used as references afterwards.
    A plateau stop then waits for a full reference window of new losses."""
    state.history.clear()
    state.best = math.inf
    state.best_epoch = state.epoch
    state.n_bad = 0
    state.ref_needed = k
    return state


def maybe_reduce_lr(state: TrainState, k: int, factor: float = 0.1) -> TrainState:
    if state.n_bad >= k:
        state.lr *= factor
        state.lr_reductions += 1
        state.n_bad = 0
    return state


def early_stop_check(state: TrainState, k: int, window: int, stop_loss: float = 3.01e-7,
                     rolling: bool = True) -> bool:
    """Stop when the target loss is reached or the last ``window`` losses never
    improved on the reference preceding them."""
    h = state.history
    if h and h[-1] <= stop_loss:
        return True
    if len(h) < window + state.ref_needed:
        return False
    if not rolling:
        return state.epoch - state.best_epoch >= window
    hist = list(h)
    ref = min(hist[:-window][-k:])
    return min(hist[-window:]) >= ref


class Adam:
    """Bias-corrected Adam on a flat parameter vector."""

    def __init__(self, size: int, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = np.zeros(size, dtype=np.int64)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def step(self, params: np.ndarray, grads: np.ndarray, lr, active=None) -> np.ndarray:
        """Return updated parameters; ``lr`` may be per-entry, ``active`` masks frozen entries."""
        if not np.all(np.isfinite(grads)):
            raise NumericError("non-finite gradient passed to the optimizer")
        mask = np.ones(params.size, dtype=bool) if active is None else np.asarray(active, dtype=bool)
        self.t[mask] += 1
        g = grads[mask]
        self.m[mask] = self.beta1 * self.m[mask] + (1 - self.beta1) * g
        self.v[mask] = self.beta2 * self.v[mask] + (1 - self.beta2) * g * g
        t = self.t[mask]
        m_hat = self.m[mask] / (1 - self.beta1 ** t)
        v_hat = self.v[mask] / (1 - self.beta2 ** t)
        out = params.copy()
        step_lr = lr[mask] if np.ndim(lr) else lr
        out[mask] = params[mask] - step_lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return out


def adam_update(params, grads, m, v, t, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Functional Adam step; returns (params, m, v) after step number ``t`` (1-based)."""
    grads = np.asarray(grads, dtype=float)
    if not np.all(np.isfinite(grads)):
        raise NumericError("non-finite gradient passed to the optimizer")
    m = beta1 * m + (1 - beta1) * grads
    v = beta2 * v + (1 - beta2) * grads * grads
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


@dataclass
class TrainResult:
    params: NetworkParams
    scalars: np.ndarray
    state: TrainState
    log: list
    stopped: str
    final_loss: float
    best_loss: float

    @property
    def n_history(self):
        return [row.get("n") for row in self.log if "n" in row]


LOG_FIELDS = ["epoch", "lr", "f", "gate_material", "gate_experimental"] + list(TERMS) + ["total"]


def train(problem, spec: NetworkSpec, cfg: TrainConfig, out_dir=None, params: NetworkParams | None = None,
          tag: str = "run") -> TrainResult:
    """Optimise ``problem`` with the gated, faded and rolling-window schedule.

    Writes ``<tag>_loss.csv`` and checkpoints to ``out_dir`` when given.
    """
    if spec.input_dim != len(problem.coords) or spec.output_dim != problem.n_outputs:
        raise ConfigError("network shape does not match the problem")
    params = params.copy() if params is not None else init_network(spec)
    scalars = problem.initial_scalars().astype(float)
    n_net = params.flat.size
    opt = Adam(n_net + scalars.size, cfg.beta1, cfg.beta2, cfg.eps)
    state = new_state(cfg)
    if cfg.gate_at_start:
        state.gate_material = state.gate_experimental = True
        state.s_ref = 0
        state.scalars_active = True
    rows = []
    out = Path(out_dir) if out_dir is not None else None
    writer = None
    fh = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        fh = open(out / f"{tag}_loss.csv", "w", newline="")
        fields = LOG_FIELDS + (["n"] if scalars.size else [])
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
    stopped = "max_epochs"
    lr_scalar_ratio = (cfg.lr_scalar / cfg.lr) if cfg.lr_scalar else 1.0
    total = math.nan
    try:
        for epoch in range(cfg.max_epochs):
            state.epoch = epoch
            if state.gate_experimental:
                f = fade_factor(epoch, state.s_ref, cfg.s_t, cfg.steepness) if cfg.fade else 1.0
            else:
                f = 0.0
            ctx = {"gate": state.gate_material, "fade": f}
            total, terms, g_net, g_sc = problem.loss_and_grad(params, scalars, ctx)
            if not (np.isfinite(total) and np.all(np.isfinite(g_net)) and np.all(np.isfinite(g_sc))):
                stopped = "numeric"
                if out is not None:
                    save_checkpoint(out / f"{tag}_diagnostic.json", params,
                                    _scalar_dict(problem, scalars), state.to_dict())
                raise NumericError(f"non-finite loss or gradient at epoch {epoch}")
            row = {"epoch": epoch, "lr": state.lr, "f": f, "gate_material": int(state.gate_material),
                   "gate_experimental": int(state.gate_experimental), "total": total}
            row.update({k: terms.get(k, 0.0) for k in TERMS})
            if scalars.size:
                row["n"] = float(np.exp(scalars[0]))
            rows.append(row)
            if writer is not None and epoch % cfg.log_every == 0:
                writer.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})

            # scheduler bookkeeping; a fade in progress is a planned rise of the
            # objective, so it is neither counted as bad epochs nor as a plateau
            fading = cfg.fade and state.gate_experimental and f < FADE_SETTLED
            if fading:
                state.fade_pending = True
            else:
                if state.fade_pending and cfg.rolling:
                    reset_monitor(state, cfg.k)
                state.fade_pending = False
                update_bad_epochs(state, total, cfg.k, cfg.rolling)
                if early_stop_check(state, cfg.k, cfg.stop_window, cfg.stop_loss, cfg.rolling):
                    stopped = "target" if total <= cfg.stop_loss else "plateau"
                    break
                maybe_reduce_lr(state, cfg.k, cfg.lr_factor)
            was_open = state.gate_material
            gate_check(total, cfg.L_thr, state)
            if state.gate_material and not was_open:
                log.info("gates opened at epoch %d (loss %.3e)", epoch, total)
                if cfg.rolling:
                    reset_monitor(state, cfg.k)

            theta = np.concatenate([params.flat, scalars])
            grad = np.concatenate([g_net, g_sc])
            lr = np.full(theta.size, state.lr)
            lr[n_net:] *= lr_scalar_ratio
            active = np.ones(theta.size, dtype=bool)
            if scalars.size and not state.scalars_active:
                active[n_net:] = False
            theta = opt.step(theta, grad, lr, active)
            params = params.with_flat(theta[:n_net])
            if scalars.size:
                scalars = np.maximum(theta[n_net:], 0.0)   # keeps n >= 1
            if out is not None and cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(out / f"{tag}_checkpoint.json", params, _scalar_dict(problem, scalars),
                                state.to_dict())
    finally:
        if fh is not None:
            fh.close()
    if out is not None:
        save_checkpoint(out / f"{tag}_checkpoint.json", params, _scalar_dict(problem, scalars), state.to_dict())
    best = min(r["total"] for r in rows) if rows else math.nan
    return TrainResult(params, scalars, state, rows, stopped, float(total), float(best))


def _scalar_dict(problem, scalars):
    if getattr(problem, "learn_n", False):
        return {"n": float(np.exp(scalars[0]))}
    return {}


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def write_manifest(out_dir, config: dict, seeds: dict) -> None:
    doc = {"config_hash": config_hash(config), "version": __version__, "seeds": seeds, "config": config}
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    with open(Path(out_dir) / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)


def train_config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
