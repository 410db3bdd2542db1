"""Structured positive-definite Lyapunov network and its level-set training.

The candidate is v(x) = ||phi(x)||^2 where phi is a feedforward net with no
bias terms and per-layer weights

    W_l = [ G_l' G_l + eps I ]      (square block, positive definite)
          [ H_l               ]     (extra rows when the layer widens)

Every W_l has a trivial nullspace by construction and the activation is
elementwise with a trivial nullspace and Lipschitz constant 1, so v is
positive definite with v(0) = 0 exactly.

Serialization format (see `net_to_bytes`): magic b"RFNN", then little-endian
u32 version (1), u32 layer count L+1, L+1 u32 layer dims, f64 epsilon,
u32 activation code (0 = leaky rectifier, 1 = linear), then all raw
parameters as f64 in layer order, G_l before H_l, each row-major.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .certificate import StateGrid, StepMap, certify_roa
from .errors import ConfigError
from .validation import check_state_batch

LEAKY_SLOPE = 0.1
_MAGIC = b"RFNN"
_ACTIVATIONS = ("leaky_relu", "linear")


@dataclass
class LyapunovNet:
    """Raw parameters of the structured candidate.  Mutated only by training."""

    layer_dims: tuple[int, ...]
    epsilon: float
    Gs: list[np.ndarray]
    Hs: list[np.ndarray]
    activation: str = "leaky_relu"

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2:
            raise ConfigError("need at least one layer")
        if any(dims[i + 1] < dims[i] for i in range(len(dims) - 1)):
            raise ConfigError("layer widths must be non-decreasing")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be > 0")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"activation must be one of {_ACTIVATIONS}")
        self.layer_dims = dims

    @property
    def num_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def state_dim(self) -> int:
        return self.layer_dims[0]

    def weights(self) -> list[np.ndarray]:
        """Effective per-layer weight matrices W_l."""
        out = []
        for G, H, d_in in zip(self.Gs, self.Hs, self.layer_dims[:-1]):
            top = G.T @ G + self.epsilon * np.eye(d_in)
            out.append(np.vstack([top, H]) if H.size else top)
        return out

    def copy(self) -> "LyapunovNet":
        return LyapunovNet(
            layer_dims=self.layer_dims,
            epsilon=self.epsilon,
            Gs=[G.copy() for G in self.Gs],
            Hs=[H.copy() for H in self.Hs],
            activation=self.activation,
        )


def net_init(layer_dims, epsilon: float = 1e-2, seed: int = 0, activation: str = "leaky_relu") -> LyapunovNet:
    """Seeded i.i.d. uniform init of the raw parameters in +-1/sqrt(fan_in)."""
    dims = tuple(int(d) for d in layer_dims)
    if any(dims[i + 1] < dims[i] for i in range(len(dims) - 1)):
        raise ConfigError("layer widths must be non-decreasing")
    rng = np.random.default_rng(seed)
    Gs, Hs = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        scale = 1.0 / np.sqrt(d_in)
        Gs.append(rng.uniform(-scale, scale, size=(d_in, d_in)))
        Hs.append(rng.uniform(-scale, scale, size=(d_out - d_in, d_in)))
    return LyapunovNet(layer_dims=dims, epsilon=float(epsilon), Gs=Gs, Hs=Hs, activation=activation)


def _act(net: LyapunovNet, a: np.ndarray) -> np.ndarray:
    if net.activation == "linear":
        return a
    return np.maximum(a, LEAKY_SLOPE * a)


def _act_grad(net: LyapunovNet, a: np.ndarray) -> np.ndarray:
    if net.activation == "linear":
        return np.ones_like(a)
    return np.where(a > 0.0, 1.0, LEAKY_SLOPE)


def _forward(net: LyapunovNet, X: np.ndarray):
    """Batch forward pass; returns v values and per-layer caches."""
    weights = net.weights()
    Z = X
    pre, post = [], [X]
    for W in weights:
        A = Z @ W.T
        Z = _act(net, A)
        pre.append(A)
        post.append(Z)
    return np.sum(Z * Z, axis=1), pre, post, weights


def net_eval(net: LyapunovNet, x: np.ndarray) -> np.ndarray:
    """v(x) for a single state or a batch of states."""
    X = check_state_batch(x, net.state_dim)
    values, _, _, _ = _forward(net, X)
    return values if np.ndim(x) > 1 else values[:1].reshape(())


def _backward(net: LyapunovNet, X: np.ndarray, coeffs: np.ndarray):
    """Gradients of sum_i coeffs[i] * v(x_i) w.r.t. raw parameters and states."""
    _, pre, post, weights = _forward(net, X)
    dGs = [np.zeros_like(G) for G in net.Gs]
    dHs = [np.zeros_like(H) for H in net.Hs]
    G_flow = 2.0 * post[-1] * coeffs[:, None]
    for layer in reversed(range(net.num_layers)):
        dA = G_flow * _act_grad(net, pre[layer])
        dW = dA.T @ post[layer]
        d_in = net.layer_dims[layer]
        M_top = dW[:d_in, :]
        dGs[layer] += net.Gs[layer] @ (M_top + M_top.T)
        dHs[layer] += dW[d_in:, :]
        G_flow = dA @ weights[layer]
    return dGs, dHs, G_flow


def net_gradient(net: LyapunovNet, x: np.ndarray):
    """Exact reverse-mode derivatives of v at one state.

    Returns ((dGs, dHs), dx): the gradients with respect to every raw
    parameter block and with respect to the state itself.
    """
    X = check_state_batch(x, net.state_dim)
    if X.shape[0] != 1:
        raise ValueError("net_gradient expects a single state")
    dGs, dHs, dX = _backward(net, X, np.ones(1))
    return (dGs, dHs), dX[0]


def operator_norms(net: LyapunovNet) -> list[float]:
    return [float(np.linalg.norm(W, 2)) for W in net.weights()]


def nn_local_lipschitz(net: LyapunovNet, centers: np.ndarray, radius: float, step_norm: float) -> np.ndarray:
    """Per-cell Lipschitz bound for the decrease of the network candidate.

    phi is (prod ||W_l||)-Lipschitz with a 1-Lipschitz activation, so the
    gradient of v = ||phi||^2 is bounded by 2 (prod ||W_l||)^2 ||x|| on a
    ball; applying that to both terms of v(A_cl x) - v(x) multiplies the
    state scale by (||A_cl|| + 1).
    """
    X = np.atleast_2d(np.asarray(centers, dtype=float))
    gain = float(np.prod(operator_norms(net)))
    factor = 2.0 * gain * gain * (step_norm + 1.0)
    return factor * (np.linalg.norm(X, axis=1) + radius)


def _lipschitz_grads(net: LyapunovNet, batch: np.ndarray, coeffs: np.ndarray, radius: float, step_norm: float):
    """Raw-parameter gradients of sum_i coeffs[i] * L(x_i) * radius.

    L is the product-of-operator-norms bound; its derivative with respect to
    each effective weight is the rank-one outer product of the top singular
    pair, chained onto the structured blocks.
    """
    weights = net.weights()
    svds = [np.linalg.svd(W) for W in weights]
    sigmas = [s[0] for _, s, _ in svds]
    gain = float(np.prod(sigmas))
    scale = (
        radius
        * 2.0
        * (step_norm + 1.0)
        * float(np.sum(coeffs * (np.linalg.norm(batch, axis=1) + radius)))
    )
    dGs, dHs = [], []
    for layer in range(net.num_layers):
        U, s, Vt = svds[layer]
        # d(gain^2)/dW = 2 gain^2 / sigma * u1 v1'
        dW = scale * (2.0 * gain * gain / s[0]) * np.outer(U[:, 0], Vt[0, :])
        d_in = net.layer_dims[layer]
        M_top = dW[:d_in, :]
        dGs.append(net.Gs[layer] @ (M_top + M_top.T))
        dHs.append(dW[d_in:, :])
    return dGs, dHs


@dataclass(frozen=True)
class NeuralCandidate:
    """LyapunovCandidate adapter around a network and a fixed step-map norm."""

    net: LyapunovNet
    step_norm: float

    def evaluate(self, states: np.ndarray) -> np.ndarray:
        X = check_state_batch(states, self.net.state_dim)
        values, _, _, _ = _forward(self.net, X)
        return values

    def local_lipschitz(self, centers: np.ndarray, radius: float) -> np.ndarray:
        return nn_local_lipschitz(self.net, centers, radius, self.step_norm)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 50
    batch_size: int = 256
    seed: int = 0
    level_multiplier: float = 1.5

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if not self.level_multiplier > 1:
            raise ConfigError("level_multiplier must be > 1")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class TrainResult:
    net: LyapunovNet
    size_history: tuple[int, ...]
    best_epoch: int


def train(
    net: LyapunovNet,
    step: StepMap,
    grid: StateGrid,
    cfg: TrainConfig,
    step_norm: float,
    exemption_radius: float | None = None,
) -> TrainResult:
    """Grow the certified level set by seeded SGD on the hinge of the margin.

    Each epoch certifies the current net, expands the target set to
    {v < level_multiplier * c}, and descends the mean hinge loss
    max(0, v(step(x)) - v(x) + L * mu) over mini-batches drawn from the
    target set.  The gradient flows through the Lipschitz bound as well
    (via the per-layer operator norms); without that term the active-set
    loss is unbounded below and the descent diverges.  Growth is not
    monotone, so the net returned is the one whose certified size was
    largest across the recorded history, not the last.
    """
    net = net.copy()
    rng = np.random.default_rng(cfg.seed)
    mu = grid.mu
    centers = grid.centers
    sizes: list[int] = []
    snapshots: list[LyapunovNet] = []

    def record():
        cand = NeuralCandidate(net=net, step_norm=step_norm)
        est = certify_roa(cand, step, grid, exemption_radius=exemption_radius)
        sizes.append(est.size_cells)
        snapshots.append(net.copy())
        return est

    for _ in range(cfg.epochs):
        est = record()
        values, _, _, _ = _forward(net, centers)
        pool = np.flatnonzero(values < cfg.level_multiplier * est.threshold_c)
        if pool.size == 0:
            # Certification collapsed to the exemption ball; train from it.
            pool = np.flatnonzero(grid.center_norms <= est.exemption_radius)
        order = rng.permutation(pool)
        for start in range(0, order.size, cfg.batch_size):
            batch = centers[order[start : start + cfg.batch_size]]
            stepped = step(batch)
            v_x, _, _, _ = _forward(net, batch)
            v_y, _, _, _ = _forward(net, stepped)
            L = nn_local_lipschitz(net, batch, mu, step_norm)
            active = (v_y - v_x + L * mu) > 0.0
            if not active.any():
                continue
            coeff = active.astype(float) / batch.shape[0]
            dGs_y, dHs_y, _ = _backward(net, stepped, coeff)
            dGs_x, dHs_x, _ = _backward(net, batch, coeff)
            dGs_L, dHs_L = _lipschitz_grads(net, batch, coeff, mu, step_norm)
            for layer in range(net.num_layers):
                net.Gs[layer] -= cfg.learning_rate * (dGs_y[layer] - dGs_x[layer] + dGs_L[layer])
                net.Hs[layer] -= cfg.learning_rate * (dHs_y[layer] - dHs_x[layer] + dHs_L[layer])
    record()

    best = int(np.argmax(sizes))
    return TrainResult(net=snapshots[best], size_history=tuple(sizes), best_epoch=best)


def net_to_bytes(net: LyapunovNet) -> bytes:
    """Flat binary serialization; layout documented in the module docstring."""
    dims = net.layer_dims
    header = _MAGIC + struct.pack("<II", 1, len(dims))
    header += struct.pack(f"<{len(dims)}I", *dims)
    header += struct.pack("<dI", net.epsilon, _ACTIVATIONS.index(net.activation))
    blocks = []
    for G, H in zip(net.Gs, net.Hs):
        blocks.append(G.astype("<f8").tobytes())
        blocks.append(H.astype("<f8").tobytes())
    return header + b"".join(blocks)


def net_from_bytes(data: bytes) -> LyapunovNet:
    if data[:4] != _MAGIC:
        raise ConfigError("not a serialized Lyapunov network")
    version, n_dims = struct.unpack_from("<II", data, 4)
    if version != 1:
        raise ConfigError(f"unsupported serialization version {version}")
    offset = 12
    dims = struct.unpack_from(f"<{n_dims}I", data, offset)
    offset += 4 * n_dims
    epsilon, act_code = struct.unpack_from("<dI", data, offset)
    offset += 12
    Gs, Hs = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        g_count = d_in * d_in
        Gs.append(np.frombuffer(data, dtype="<f8", count=g_count, offset=offset).reshape(d_in, d_in).copy())
        offset += 8 * g_count
        h_count = (d_out - d_in) * d_in
        Hs.append(np.frombuffer(data, dtype="<f8", count=h_count, offset=offset).reshape(d_out - d_in, d_in).copy())
        offset += 8 * h_count
    if offset != len(data):
        raise ConfigError("trailing bytes in serialized network")
    return LyapunovNet(layer_dims=dims, epsilon=epsilon, Gs=Gs, Hs=Hs, activation=_ACTIVATIONS[act_code])


def save_net(net: LyapunovNet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(net_to_bytes(net))


def load_net(path) -> LyapunovNet:
    with open(path, "rb") as fh:
        return net_from_bytes(fh.read())
