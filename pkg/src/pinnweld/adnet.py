"""Dense feed-forward network with exact input jets and reverse-mode parameter gradients.

The network maps ``x -> z^L`` with ``z^l = act(W^l z^{l-1} + b^l)`` for hidden
layers and an affine output layer.  Alongside the value, :func:`jet_forward`
propagates first and *pure* second derivatives with respect to a chosen subset
of input coordinates (no mixed terms).  :func:`jet_backward` is the adjoint of
that computation, so any loss built from values, gradients and pure second
derivatives of the outputs can be differentiated with respect to every weight.

Batches are stacked as ``(K, N, width)`` arrays where channel 0 holds values,
channels ``1..c`` first derivatives and ``c+1..2c`` second derivatives.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf

from .errors import ConfigError, NumericError

ACTIVATIONS = ("tanh", "gelu", "elu")
INITS = ("xavier_normal", "xavier_uniform", "kaiming_normal", "kaiming_uniform")
SCHEMA_VERSION = 1

_SQRT2 = np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    output_dim: int
    hidden_layers: int = 3
    hidden_width: int = 66
    activation: str = "tanh"
    init: str = "xavier_normal"
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ConfigError("input_dim and output_dim must be >= 1")
        if self.hidden_layers < 1 or self.hidden_width < 1:
            raise ConfigError("need at least one hidden layer of width >= 1")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.init not in INITS:
            raise ConfigError(f"unknown init {self.init!r}")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_dim] + [self.hidden_width] * self.hidden_layers + [self.output_dim]

    @property
    def n_params(self) -> int:
        s = self.layer_sizes
        return sum(s[i + 1] * s[i] + s[i + 1] for i in range(len(s) - 1))


class NetworkParams:
    """Weights and biases stored in one flat vector; ``weights``/``biases`` are views."""

    def __init__(self, spec: NetworkSpec, flat: np.ndarray | None = None):
        self.spec = spec
        if flat is None:
            flat = np.zeros(spec.n_params)
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (spec.n_params,):
            raise ConfigError(f"expected {spec.n_params} parameters, got {flat.shape}")
        self.flat = flat
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        sizes = spec.layer_sizes
        pos = 0
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            self.weights.append(flat[pos:pos + fan_out * fan_in].reshape(fan_out, fan_in))
            pos += fan_out * fan_in
            self.biases.append(flat[pos:pos + fan_out])
            pos += fan_out

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.spec, self.flat.copy())

    def with_flat(self, flat: np.ndarray) -> "NetworkParams":
        return NetworkParams(self.spec, flat)


@dataclass
class Jet2:
    """Value and pure first/second input derivatives of one network output at one point."""

    value: float
    d1: np.ndarray
    d2: np.ndarray


@dataclass
class Jets:
    """Batched jets: ``value`` (N, out), ``d1``/``d2`` (c, N, out) over ``coords``."""

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    coords: tuple[int, ...]
    cache: list | None = field(default=None, repr=False)

    def zeros_like(self):
        """Adjoint buffers matching this batch."""
        return np.zeros_like(self.value), np.zeros_like(self.d1), np.zeros_like(self.d2)

    def point(self, i: int) -> list[Jet2]:
        return [Jet2(float(self.value[i, o]), self.d1[:, i, o].copy(), self.d2[:, i, o].copy())
                for o in range(self.value.shape[1])]


def _activation(name: str, a: np.ndarray):
    """Return the activation and its first three derivatives at ``a``."""
    if name == "tanh":
        t = np.tanh(a)
        s1 = 1.0 - t * t
        s2 = -2.0 * t * s1
        s3 = s1 * (6.0 * t * t - 2.0)
        return t, s1, s2, s3
    if name == "gelu":
        cdf = 0.5 * (1.0 + erf(a / _SQRT2))
        pdf = _INV_SQRT2PI * np.exp(-0.5 * a * a)
        a2 = a * a
        return a * cdf, cdf + a * pdf, pdf * (2.0 - a2), pdf * a * (a2 - 4.0)
    # elu with alpha = 1
    pos = a > 0
    ex = np.exp(np.minimum(a, 0.0))
    s = np.where(pos, a, ex - 1.0)
    s1 = np.where(pos, 1.0, ex)
    s2 = np.where(pos, 0.0, ex)
    return s, s1, s2, s2


def init_network(spec: NetworkSpec) -> NetworkParams:
    """Draw weights with the configured scheme; biases start at zero."""
    rng = np.random.default_rng(spec.seed)
    params = NetworkParams(spec)
    for W in params.weights:
        fan_out, fan_in = W.shape
        if spec.init == "xavier_normal":
            W[...] = rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), W.shape)
        elif spec.init == "xavier_uniform":
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            W[...] = rng.uniform(-bound, bound, W.shape)
        elif spec.init == "kaiming_normal":
            W[...] = rng.normal(0.0, np.sqrt(2.0 / fan_in), W.shape)
        else:
            bound = np.sqrt(6.0 / fan_in)
            W[...] = rng.uniform(-bound, bound, W.shape)
    return params


def _check_input(params: NetworkParams, X) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != params.spec.input_dim:
        raise ConfigError(f"input must have {params.spec.input_dim} columns, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite network input")
    return X, single


def forward(params: NetworkParams, X) -> np.ndarray:
    """Network output for a point (1-D) or a batch (N, input_dim)."""
    X, single = _check_input(params, X)
    z = X
    act = params.spec.activation
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        a = z @ W.T + b
        if act == "tanh":
            z = np.tanh(a)
        else:
            z = _activation(act, a)[0]
    out = z @ params.weights[-1].T + params.biases[-1]
    return out[0] if single else out


def jet_forward(params: NetworkParams, X, coords: Sequence[int] | None = None,
                keep_cache: bool = False):
    """Values plus pure first/second derivatives along ``coords`` (default: all inputs).

    A 1-D ``X`` returns one :class:`Jet2` per output; a batch returns :class:`Jets`.
    """
    X, single = _check_input(params, X)
    if coords is None:
        coords = tuple(range(params.spec.input_dim))
    coords = tuple(int(c) for c in coords)
    c = len(coords)
    act = params.spec.activation
    N = X.shape[0]
    cache = []

    W0, b0 = params.weights[0], params.biases[0]
    width = W0.shape[0]
    A = np.empty((1 + 2 * c, N, width))
    A[0] = X @ W0.T + b0
    for i, ci in enumerate(coords):
        A[1 + i] = W0[:, ci]
    A[1 + c:] = 0.0
    Zprev = None  # first-layer input jets are implicit (identity / zero)

    for layer in range(len(params.weights) - 1):
        if layer > 0:
            W, b = params.weights[layer], params.biases[layer]
            A = Zprev @ W.T
            A[0] += b
        s0, s1, s2, s3 = _activation(act, A[0])
        Z = np.empty_like(A)
        Z[0] = s0
        if c:
            A1 = A[1:1 + c]
            Z[1:1 + c] = s1 * A1
            Z[1 + c:] = s2 * (A1 * A1) + s1 * A[1 + c:]
        if keep_cache:
            cache.append((Zprev, A, s1, s2, s3))
        Zprev = Z

    WL, bL = params.weights[-1], params.biases[-1]
    Y = Zprev @ WL.T
    Y[0] += bL
    if keep_cache:
        cache.append((Zprev, None, None, None, None))
    jets = Jets(Y[0], Y[1:1 + c], Y[1 + c:], coords, cache if keep_cache else None)
    if not np.all(np.isfinite(Y)):
        raise NumericError("non-finite network output")
    if single:
        return jets.point(0)
    return jets


def jet_backward(params: NetworkParams, jets: Jets, g_value: np.ndarray,
                 g_d1: np.ndarray | None = None, g_d2: np.ndarray | None = None,
                 X: np.ndarray | None = None) -> np.ndarray:
    """Gradient of a scalar loss w.r.t. all parameters given adjoints of the jets.

    ``jets`` must come from ``jet_forward(..., keep_cache=True)`` on the same ``X``.
    """
    if jets.cache is None:
        raise ConfigError("jet_backward needs jets computed with keep_cache=True")
    if X is None:
        raise ConfigError("jet_backward needs the input batch X")
    X = np.asarray(X, dtype=np.float64)
    c = len(jets.coords)
    N = jets.value.shape[0]
    grad = NetworkParams(params.spec)
    G = np.empty((1 + 2 * c,) + jets.value.shape)
    G[0] = g_value
    if c:
        G[1:1 + c] = 0.0 if g_d1 is None else g_d1
        G[1 + c:] = 0.0 if g_d2 is None else g_d2

    nl = len(params.weights)
    # output layer
    Zprev = jets.cache[-1][0]
    K, _, w = Zprev.shape
    grad.weights[-1][...] = G.reshape(K * N, -1).T @ Zprev.reshape(K * N, w)
    grad.biases[-1][...] = G[0].sum(axis=0)
    G = G @ params.weights[-1]

    for layer in range(nl - 2, -1, -1):
        Zp, A, s1, s2, s3 = jets.cache[layer]
        gA = np.empty_like(G)
        gA[0] = G[0] * s1
        if c:
            A1, A2 = A[1:1 + c], A[1 + c:]
            G1, G2 = G[1:1 + c], G[1 + c:]
            gA[0] += np.sum(G1 * A1 * s2 + G2 * (s3 * A1 * A1 + s2 * A2), axis=0)
            gA[1:1 + c] = G1 * s1 + 2.0 * s2 * G2 * A1
            gA[1 + c:] = G2 * s1
        grad.biases[layer][...] = gA[0].sum(axis=0)
        if layer > 0:
            Kp, _, wp = Zp.shape
            grad.weights[layer][...] = gA.reshape(Kp * N, -1).T @ Zp.reshape(Kp * N, wp)
            G = gA @ params.weights[layer]
        else:
            gW = gA[0].T @ X
            for i, ci in enumerate(jets.coords):
                gW[:, ci] += gA[1 + i].sum(axis=0)
            grad.weights[0][...] = gW
    if not np.all(np.isfinite(grad.flat)):
        raise NumericError("non-finite parameter gradient")
    return grad.flat


LossFn = Callable[[Jets], tuple]


def param_gradient(params: NetworkParams, X, loss_fn: LossFn,
                   coords: Sequence[int] | None = None) -> tuple[float, np.ndarray]:
    """Evaluate ``loss_fn`` on the jets of ``X`` and return ``(loss, flat gradient)``.

    ``loss_fn(jets)`` returns ``(loss, (g_value, g_d1, g_d2))`` and may append a
    third item: gradients for extra learnable scalars, concatenated after the
    network parameters in the returned vector.
    """
    X = np.asarray(X, dtype=np.float64)
    jets = jet_forward(params, X, coords, keep_cache=True)
    out = loss_fn(jets)
    loss, (gv, g1, g2) = out[0], out[1]
    grad = jet_backward(params, jets, gv, g1, g2, X=X)
    if len(out) > 2 and out[2] is not None:
        extra = np.atleast_1d(np.asarray(out[2], dtype=np.float64))
        grad = np.concatenate([grad, extra])
    if not np.all(np.isfinite(grad)) or not np.isfinite(loss):
        raise NumericError("non-finite loss or gradient")
    return float(loss), grad


def _fmt_array(arr) -> str:
    return "[" + ", ".join(f"{float(v):.17g}" for v in np.ravel(arr)) + "]"


def save_checkpoint(path, params: NetworkParams, scalars: dict | None = None,
                    trainer_state: dict | None = None) -> None:
    """Write the JSON checkpoint; floats carry 17 significant digits."""
    scalars = scalars or {}
    body = [
        f'"schema_version": {SCHEMA_VERSION}',
        f'"spec": {json.dumps(asdict(params.spec))}',
        f'"params": {_fmt_array(params.flat)}',
        '"scalars": {' + ", ".join(f"{json.dumps(k)}: {float(v):.17g}" for k, v in scalars.items()) + "}",
        f'"trainer_state": {json.dumps(trainer_state or {}, sort_keys=True)}',
    ]
    with open(path, "w") as fh:
        fh.write("{\n  " + ",\n  ".join(body) + "\n}\n")


def load_checkpoint(path) -> tuple[NetworkParams, dict, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported checkpoint schema {doc.get('schema_version')!r}")
    spec = NetworkSpec(**doc["spec"])
    params = NetworkParams(spec, np.array(doc["params"], dtype=np.float64))
    return params, dict(doc.get("scalars", {})), dict(doc.get("trainer_state", {}))
