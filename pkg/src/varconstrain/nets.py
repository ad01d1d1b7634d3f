"""Function approximators: feed-forward and LSTM-style architectures.

Both map a spatial point x in R^{d_I} to R^{d_O}.  The LSTM variant feeds
the same input x to every block; block i mixes it with the previous hidden
state through four tanh gates and a cell accumulator.  The gate biases are
shared across blocks (one b per gate), which is what the architecture's
parameter-count formula requires.

Parameters live in one flat float64 vector with a fixed canonical layout
(see ``layout``) so checkpoints and optimizer state stay aligned:

* FF:    W0, b0, W1, b1, ..., W_{L-1}, b_{L-1}, W_out, b_out
* LSTM:  block 1: (W,U,b) for gates f,g,r,s; blocks 2..L: (W,U) for
         f,g,r,s (biases shared with block 1); then W_out, b_out.

Forward passes consume and produce :class:`~varconstrain.autodiff.Jet2`
jets whose coefficient blocks are (width, n_points) arrays; evaluating on
constant-lifted jets is a plain (non-differentiating) forward pass with
the identical arithmetic path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    AutodiffUsageError,
    Jet2,
    Tape,
    jet_add,
    jet_matmul,
    jet_mul,
    jet_tanh,
    lift_const,
    vadd,
    var,
)

__all__ = [
    "NetworkSpec",
    "Network",
    "param_count",
    "layout",
    "init",
    "bind_params",
    "forward_jets",
    "ff_forward",
    "lstm_forward",
]

_KINDS = ("ff", "lstm")


@dataclass(frozen=True)
class NetworkSpec:
    kind: str  # "ff" | "lstm"
    m: int  # layer width
    L: int  # hidden layers (ff) / blocks (lstm)
    d_in: int
    d_out: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}")
        if min(self.m, self.L, self.d_in, self.d_out) < 1:
            raise ValueError("network dimensions must be >= 1")


@dataclass
class Network:
    spec: NetworkSpec
    params: np.ndarray  # flat, canonical layout

    def __post_init__(self):
        if self.params.shape != (param_count(self.spec),):
            raise ValueError("parameter vector length does not match the spec")


def layout(spec: NetworkSpec) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical (name, shape) list; flat order is the concatenation order."""
    m, L, di, do = spec.m, spec.L, spec.d_in, spec.d_out
    out: list[tuple[str, tuple[int, ...]]] = []
    if spec.kind == "ff":
        out.append(("W0", (m, di)))
        out.append(("b0", (m, 1)))
        for i in range(1, L):
            out.append((f"W{i}", (m, m)))
            out.append((f"b{i}", (m, 1)))
    else:
        for i in range(1, L + 1):
            u_cols = di if i == 1 else m
            for gate in "fgrs":
                out.append((f"W_{gate}{i}", (m, di)))
                out.append((f"U_{gate}{i}", (m, u_cols)))
                if i == 1:
                    out.append((f"b_{gate}", (m, 1)))
    out.append(("W_out", (do, m)))
    out.append(("b_out", (do, 1)))
    return out


def param_count(spec: NetworkSpec) -> int:
    """Number of trainable parameters (every tensor in the layout)."""
    return sum(int(np.prod(shape)) for _, shape in layout(spec))


def init(spec: NetworkSpec, seed: int) -> Network:
    """Glorot-uniform weights, zero biases; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    chunks = []
    for name, shape in layout(spec):
        if name.startswith("b"):
            chunks.append(np.zeros(int(np.prod(shape))))
        else:
            fan_out, fan_in = shape
            lim = np.sqrt(6.0 / (fan_in + fan_out))
            chunks.append(rng.uniform(-lim, lim, int(np.prod(shape))))
    return Network(spec=spec, params=np.concatenate(chunks))


def split_params(spec: NetworkSpec, flat: np.ndarray) -> dict[str, np.ndarray]:
    """View the flat vector as named tensors (no copies)."""
    if flat.shape != (param_count(spec),):
        raise AutodiffUsageError("flat parameter vector has the wrong length")
    tensors = {}
    off = 0
    for name, shape in layout(spec):
        size = int(np.prod(shape))
        tensors[name] = flat[off : off + size].reshape(shape)
        off += size
    return tensors


def flatten_grads(spec: NetworkSpec, grads: dict[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([grads[name].ravel() for name, _ in layout(spec)])


class BoundNetwork:
    """A network whose tensors are leaves on a tape, ready for a forward pass."""

    def __init__(self, spec: NetworkSpec, leaves: dict):
        self.spec = spec
        self.leaves = leaves

    def grads(self, tape: Tape, loss) -> np.ndarray:
        from .autodiff import backward

        names = [name for name, _ in layout(self.spec)]
        gs = backward(tape, loss, [self.leaves[n] for n in names])
        return np.concatenate([g.ravel() for g in gs])


def bind_params(tape: Tape, spec: NetworkSpec, flat: np.ndarray) -> BoundNetwork:
    """Record each tensor as a tape leaf; gradients come back in flat layout order."""
    return BoundNetwork(spec, {name: var(tape, t) for name, t in split_params(spec, flat).items()})


def _constant_tensors(spec: NetworkSpec, flat: np.ndarray) -> BoundNetwork:
    """Tensors as plain arrays: forward evaluation without any tape recording."""
    return BoundNetwork(spec, dict(split_params(spec, flat)))


def ff_forward(net: BoundNetwork, x: Jet2) -> Jet2:
    """tanh layers f_0..f_{L-1} then the affine output map."""
    spec = net.spec
    if np.shape(x.v)[0] != spec.d_in:
        raise AutodiffUsageError("input jet has wrong spatial dimension")
    p = net.leaves
    h = x
    for i in range(spec.L):
        z = jet_matmul(p[f"W{i}"], h)
        z = Jet2(vadd(z.v, p[f"b{i}"]), z.g, z.h)
        h = jet_tanh(z)
    out = jet_matmul(p["W_out"], h)
    return Jet2(vadd(out.v, p["b_out"]), out.g, out.h)


def lstm_forward(net: BoundNetwork, x: Jet2) -> Jet2:
    """L gated blocks, each re-reading the spatial input, then the affine output."""
    spec = net.spec
    if np.shape(x.v)[0] != spec.d_in:
        raise AutodiffUsageError("input jet has wrong spatial dimension")
    p = net.leaves
    # c_0 = 0 as exact-zero coefficients so block 1 skips the dead c-term;
    # h_0 = 0_{d_I}, so U^(1) @ h_0 contributes nothing and is skipped too
    # (U^(1) still exists as trainable parameters; its gradient is zero).
    tri = (x.d * (x.d + 1)) // 2
    c = Jet2(0.0, [0.0] * x.d, [0.0] * tri if x.order == 2 else None)
    h = None
    for i in range(1, spec.L + 1):
        gates = {}
        for gate in "fgrs":
            z = jet_matmul(p[f"W_{gate}{i}"], x)
            if h is not None:
                z = jet_add(z, jet_matmul(p[f"U_{gate}{i}"], h))
            z = Jet2(vadd(z.v, p[f"b_{gate}"]), z.g, z.h)
            gates[gate] = jet_tanh(z)
        c = jet_add(jet_mul(gates["f"], c), jet_mul(gates["g"], gates["s"]))
        h = jet_mul(gates["r"], jet_tanh(c))
    out = jet_matmul(p["W_out"], h)
    return Jet2(vadd(out.v, p["b_out"]), out.g, out.h)


def forward_jets(net: BoundNetwork, x: Jet2) -> Jet2:
    if net.spec.kind == "ff":
        return ff_forward(net, x)
    return lstm_forward(net, x)


def eval_values(network: Network, points: np.ndarray) -> np.ndarray:
    """Plain forward pass at points (d_in, n) -> values (d_out, n); no tape."""
    bound = _constant_tensors(network.spec, network.params)
    x = lift_const(points, d=network.spec.d_in, order=1)
    out = forward_jets(bound, x)
    return np.asarray(out.v)
