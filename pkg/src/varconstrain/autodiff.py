"""Reverse-mode differentiation composed with second-order forward Taylor jets.

Two layers live here:

* ``Tape`` / ``Var``: a classic append-only tape of operations on float64
  numpy arrays.  A single reverse sweep (:func:`backward`) yields exact
  partial derivatives of a scalar output with respect to any recorded
  leaves.  Trainable network parameters enter the graph as leaf ``Var``s.

* ``Jet2``: a truncated Taylor expansion of a quantity with respect to the
  spatial input coordinates (value, gradient, symmetric Hessian).  Jet
  coefficients are themselves tape values, so spatial derivatives of a
  network output remain differentiable with respect to the parameters.
  This gives nested differentiation with one reverse sweep instead of a
  tape-of-tapes.

Values are float64 numpy arrays of any shape (scalars are 0-d arrays);
evaluating a network at a batch of quadrature nodes is a single graph with
node-dimension arrays rather than one graph per node.  Operands that carry
no derivative information (coordinates, quadrature weights, frozen
multiplier values) are passed as plain floats/arrays and fold into node
payloads without becoming tape nodes.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tape",
    "Var",
    "Jet2",
    "var",
    "backward",
    "check_gradient",
    "lift_coords",
    "lift_const",
    "AutodiffUsageError",
    "NumericsError",
]


class AutodiffUsageError(Exception):
    """Raised when the tape API is used inconsistently (wrong tape, dead node)."""


class NumericsError(Exception):
    """Raised on mathematically invalid operands (division by zero jet, sqrt of negative)."""


def _as_value(x):
    return np.asarray(x, dtype=np.float64)


class Tape:
    """Append-only record of operations.

    Node ``i`` stores ``(op, parents, value, payload)`` where ``parents``
    are indices of earlier nodes (topological order is by construction)
    and ``payload`` holds the constants needed to re-run the op forward or
    pull adjoints back (e.g. the constant operand of a var/const product).
    """

    def __init__(self):
        self.ops: list[str] = []
        self.parents: list[tuple[int, ...]] = []
        self.values: list[np.ndarray] = []
        self.payloads: list[tuple] = []

    def __len__(self):
        return len(self.ops)

    def _append(self, op, parents, value, payload=()) -> "Var":
        self.ops.append(op)
        self.parents.append(parents)
        self.values.append(value)
        self.payloads.append(payload)
        return Var(self, len(self.ops) - 1)

    def reset(self):
        """Drop all nodes. Vars created before the reset become invalid."""
        self.ops.clear()
        self.parents.clear()
        self.values.clear()
        self.payloads.clear()

    def replay(self) -> list[np.ndarray]:
        """Recompute every node's value from the leaves; used to check tape integrity."""
        out: list[np.ndarray] = []
        for op, parents, value, payload in zip(self.ops, self.parents, self.values, self.payloads):
            p = [out[i] for i in parents]
            out.append(_FORWARD[op](p, payload, value))
        return out


class Var:
    """Handle to one live node on one tape."""

    __slots__ = ("tape", "index")

    def __init__(self, tape: Tape, index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape.values[self.index]

    def __repr__(self):
        return f"Var(#{self.index}, value={self.value!r})"

    # Operator sugar; mixed Var/constant operands are handled by the v* functions.
    def __add__(self, other):
        return vadd(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return vsub(self, other)

    def __rsub__(self, other):
        return vsub(other, self)

    def __mul__(self, other):
        return vmul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return vdiv(self, other)

    def __rtruediv__(self, other):
        return vdiv(other, self)

    def __neg__(self):
        return vscale(self, -1.0)


def var(tape: Tape, value) -> Var:
    """Record a leaf (typically a trainable parameter tensor) and return its handle."""
    return tape._append("leaf", (), _as_value(value))


def _is_var(x) -> bool:
    return isinstance(x, Var)


def _val(x):
    return x.value if _is_var(x) else x


def _is_zero(x) -> bool:
    return isinstance(x, float) and x == 0.0


def _tape_of(*xs) -> Tape:
    for x in xs:
        if _is_var(x):
            return x.tape
    raise AutodiffUsageError("no Var operand")


# ---------------------------------------------------------------------------
# Forward recompute rules, used only by Tape.replay.
# ---------------------------------------------------------------------------

def _replay_binary(kind):
    def run(p, payload, value):
        if len(p) == 2:
            a, b = p
        elif payload and payload[0] == "lhs_const":
            a, b = payload[1], p[0]
        else:
            a, b = p[0], payload[1]
        return kind(a, b)

    return run


_FORWARD = {
    "leaf": lambda p, payload, value: value,
    "add": _replay_binary(lambda a, b: a + b),
    "sub": _replay_binary(lambda a, b: a - b),
    "mul": _replay_binary(lambda a, b: a * b),
    "div": _replay_binary(lambda a, b: a / b),
    "matmul": _replay_binary(lambda a, b: a @ b),
    "affine": lambda p, payload, value: payload[0] * p[0] + payload[1],
    "tanh": lambda p, payload, value: np.tanh(p[0]),
    "sin": lambda p, payload, value: np.sin(p[0]),
    "cos": lambda p, payload, value: np.cos(p[0]),
    "sqrt": lambda p, payload, value: np.sqrt(p[0]),
    "wsum": lambda p, payload, value: np.asarray(np.sum(payload[0] * p[0])),
    "sum": lambda p, payload, value: np.asarray(np.sum(p[0])),
    "row": lambda p, payload, value: p[0][payload[0]],
}


# ---------------------------------------------------------------------------
# Recording ops.  Each accepts Var or constant operands; all-constant calls
# return a plain numpy result so constant subexpressions never touch the tape.
# Exact-zero floats short-circuit: x+0 -> x, x*0 -> 0.  The zero shortcut is
# safe because a literal 0.0 carries no derivative.
# ---------------------------------------------------------------------------

def _record_binary(op, a, b):
    tape = _tape_of(a, b)
    if _is_var(a) and _is_var(b):
        if a.tape is not b.tape:
            raise AutodiffUsageError("operands on different tapes")
        value = _FORWARD[op]([a.value, b.value], (), None)
        return tape._append(op, (a.index, b.index), value)
    if _is_var(b):
        const = _as_value(a)
        value = _FORWARD[op]([b.value], ("lhs_const", const), None)
        return tape._append(op, (b.index,), value, ("lhs_const", const))
    const = _as_value(b)
    value = _FORWARD[op]([a.value], ("rhs_const", const), None)
    return tape._append(op, (a.index,), value, ("rhs_const", const))


def vadd(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    if not (_is_var(a) or _is_var(b)):
        return _val(a) + _val(b)
    return _record_binary("add", a, b)


def vsub(a, b):
    if _is_zero(b):
        return a
    if _is_zero(a):
        return vscale(b, -1.0) if _is_var(b) else -_val(b)
    if not (_is_var(a) or _is_var(b)):
        return _val(a) - _val(b)
    return _record_binary("sub", a, b)


def vmul(a, b):
    if _is_zero(a) or _is_zero(b):
        return 0.0
    if not (_is_var(a) or _is_var(b)):
        return _val(a) * _val(b)
    return _record_binary("mul", a, b)


def vdiv(a, b):
    if _is_zero(a):
        return 0.0
    if not (_is_var(a) or _is_var(b)):
        return _val(a) / _val(b)
    return _record_binary("div", a, b)


def vmatmul(a, b):
    if _is_zero(a) or _is_zero(b):
        return 0.0
    if not (_is_var(a) or _is_var(b)):
        return _val(a) @ _val(b)
    return _record_binary("matmul", a, b)


def vscale(x, alpha, beta=0.0):
    """alpha*x + beta with plain-float alpha, beta."""
    if not _is_var(x):
        return alpha * _val(x) + beta
    if alpha == 0.0:
        return float(beta)
    value = alpha * x.value + beta
    return x.tape._append("affine", (x.index,), value, (float(alpha), float(beta)))


def _record_unary(op, x):
    value = _FORWARD[op]([x.value], (), None)
    return x.tape._append(op, (x.index,), value)


def vtanh(x):
    return np.tanh(_val(x)) if not _is_var(x) else _record_unary("tanh", x)


def vsin(x):
    return np.sin(_val(x)) if not _is_var(x) else _record_unary("sin", x)


def vcos(x):
    return np.cos(_val(x)) if not _is_var(x) else _record_unary("cos", x)


def vsqrt(x):
    if np.any(_val(x) < 0.0):
        raise NumericsError("sqrt of negative value")
    return np.sqrt(_val(x)) if not _is_var(x) else _record_unary("sqrt", x)


def vsquare(x):
    return vmul(x, x)


def vwsum(weights, x):
    """Weighted reduction sum(weights * x) over all elements; scalar result."""
    w = _as_value(weights)
    if not _is_var(x):
        return np.sum(w * _val(x))
    value = np.asarray(np.sum(w * x.value))
    return x.tape._append("wsum", (x.index,), value, (w,))


def vsum(x):
    if not _is_var(x):
        return np.sum(_val(x))
    return x.tape._append("sum", (x.index,), np.asarray(np.sum(x.value)))


def vrow(x, i: int):
    """Extract row i of a 2-d Var; scalar constants pass through unchanged."""
    if not _is_var(x):
        if isinstance(x, float):
            return x
        return _val(x)[i]
    return x.tape._append("row", (x.index,), x.value[i], (i,))


def _unbroadcast(adj: np.ndarray, shape) -> np.ndarray:
    """Sum an adjoint down to the shape of the operand it belongs to."""
    if adj.shape == tuple(shape):
        return adj
    extra = adj.ndim - len(shape)
    if extra > 0:
        adj = adj.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and adj.shape[i] != 1)
    if axes:
        adj = adj.sum(axis=axes, keepdims=True)
    return adj


def backward(tape: Tape, output: Var, wrt: list[Var]) -> list[np.ndarray]:
    """Reverse-mode partials of a scalar output w.r.t. each Var in ``wrt``.

    Leaves that do not influence the output get zero partials.  Tape values
    are left untouched, so several backward passes over one tape agree.
    """
    if not _is_var(output) or output.tape is not tape:
        raise AutodiffUsageError("output is not a Var on this tape")
    for w in wrt:
        if w.tape is not tape:
            raise AutodiffUsageError("wrt Var is not on this tape")
    if output.value.size != 1:
        raise AutodiffUsageError("backward output must be scalar")

    adjoints: dict[int, np.ndarray] = {output.index: np.ones_like(output.value)}
    values = tape.values
    for i in range(output.index, -1, -1):
        adj = adjoints.pop(i, None)
        if adj is None:
            continue
        op = tape.ops[i]
        parents = tape.parents[i]
        if op == "leaf":
            adjoints[i] = adj  # keep leaf adjoints for collection below
            continue
        payload = tape.payloads[i]
        _PULLBACK[op](adj, parents, payload, values, adjoints, i)
    # leaf adjoints popped above were re-inserted; gather requested ones
    grads = []
    for w in wrt:
        g = adjoints.get(w.index)
        grads.append(np.zeros_like(w.value) if g is None else g)
    return grads


def _acc(adjoints, idx, contrib, shape):
    contrib = _unbroadcast(contrib, shape)
    cur = adjoints.get(idx)
    if cur is None:
        adjoints[idx] = contrib
    else:
        adjoints[idx] = cur + contrib


def _operands(parents, payload, values):
    """Return (a, b) operand values for a binary node, honoring const payloads."""
    if len(parents) == 2:
        return values[parents[0]], values[parents[1]], parents[0], parents[1]
    if payload[0] == "lhs_const":
        return payload[1], values[parents[0]], None, parents[0]
    return values[parents[0]], payload[1], parents[0], None


def _pb_add(adj, parents, payload, values, adjoints, i):
    a, b, ia, ib = _operands(parents, payload, values)
    if ia is not None:
        _acc(adjoints, ia, adj, np.shape(a))
    if ib is not None:
        _acc(adjoints, ib, adj, np.shape(b))


def _pb_sub(adj, parents, payload, values, adjoints, i):
    a, b, ia, ib = _operands(parents, payload, values)
    if ia is not None:
        _acc(adjoints, ia, adj, np.shape(a))
    if ib is not None:
        _acc(adjoints, ib, -adj, np.shape(b))


def _pb_mul(adj, parents, payload, values, adjoints, i):
    a, b, ia, ib = _operands(parents, payload, values)
    if ia is not None:
        _acc(adjoints, ia, adj * b, np.shape(a))
    if ib is not None:
        _acc(adjoints, ib, adj * a, np.shape(b))


def _pb_div(adj, parents, payload, values, adjoints, i):
    a, b, ia, ib = _operands(parents, payload, values)
    if ia is not None:
        _acc(adjoints, ia, adj / b, np.shape(a))
    if ib is not None:
        _acc(adjoints, ib, -adj * values[i] / b, np.shape(b))


def _pb_matmul(adj, parents, payload, values, adjoints, i):
    a, b, ia, ib = _operands(parents, payload, values)
    if ia is not None:
        _acc(adjoints, ia, adj @ np.asarray(b).T, np.shape(a))
    if ib is not None:
        _acc(adjoints, ib, np.asarray(a).T @ adj, np.shape(b))


def _pb_affine(adj, parents, payload, values, adjoints, i):
    _acc(adjoints, parents[0], payload[0] * adj, values[parents[0]].shape)


def _pb_tanh(adj, parents, payload, values, adjoints, i):
    t = values[i]
    _acc(adjoints, parents[0], adj * (1.0 - t * t), values[parents[0]].shape)


def _pb_sin(adj, parents, payload, values, adjoints, i):
    _acc(adjoints, parents[0], adj * np.cos(values[parents[0]]), values[parents[0]].shape)


def _pb_cos(adj, parents, payload, values, adjoints, i):
    _acc(adjoints, parents[0], -adj * np.sin(values[parents[0]]), values[parents[0]].shape)


def _pb_sqrt(adj, parents, payload, values, adjoints, i):
    _acc(adjoints, parents[0], adj * (0.5 / values[i]), values[parents[0]].shape)


def _pb_wsum(adj, parents, payload, values, adjoints, i):
    _acc(adjoints, parents[0], adj * payload[0], values[parents[0]].shape)


def _pb_sum(adj, parents, payload, values, adjoints, i):
    shape = values[parents[0]].shape
    _acc(adjoints, parents[0], np.broadcast_to(adj, shape), shape)


def _pb_row(adj, parents, payload, values, adjoints, i):
    full = np.zeros_like(values[parents[0]])
    full[payload[0]] = adj
    _acc(adjoints, parents[0], full, full.shape)


_PULLBACK = {
    "add": _pb_add,
    "sub": _pb_sub,
    "mul": _pb_mul,
    "div": _pb_div,
    "matmul": _pb_matmul,
    "affine": _pb_affine,
    "tanh": _pb_tanh,
    "sin": _pb_sin,
    "cos": _pb_cos,
    "sqrt": _pb_sqrt,
    "wsum": _pb_wsum,
    "sum": _pb_sum,
    "row": _pb_row,
}


# ---------------------------------------------------------------------------
# Order-2 Taylor jets over the spatial inputs.
#
# A Jet2 carries value v, gradient g (length d), and the upper triangle of a
# symmetric Hessian h (packed (i,j), i<=j).  Storing the triangle once makes
# H[i][j] == H[j][i] hold by construction.  Coefficients are Vars or plain
# constants; with order=1 the Hessian is absent and never propagated.
# ---------------------------------------------------------------------------

def _tri_index(d: int, i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return i * d - (i * (i - 1)) // 2 + (j - i)


def _tri_pairs(d: int):
    return [(i, j) for i in range(d) for j in range(i, d)]


class Jet2:
    """Value, spatial gradient and (optionally) spatial Hessian of a quantity."""

    __slots__ = ("v", "g", "h", "d")

    def __init__(self, v, g, h=None):
        self.v = v
        self.g = list(g)
        self.d = len(self.g)
        self.h = None if h is None else list(h)
        if self.h is not None and len(self.h) != (self.d * (self.d + 1)) // 2:
            raise AutodiffUsageError("packed Hessian has wrong length")

    @property
    def order(self) -> int:
        return 1 if self.h is None else 2

    def hess(self, i: int, j: int):
        """Entry (i, j) of the symmetric Hessian (shared storage)."""
        if self.h is None:
            raise AutodiffUsageError("jet carries no Hessian (order 1)")
        return self.h[_tri_index(self.d, i, j)]

    def __add__(self, other):
        return jet_add(self, other)

    def __sub__(self, other):
        return jet_sub(self, other)

    def __mul__(self, other):
        return jet_mul(self, other)

    def __truediv__(self, other):
        return jet_div(self, other)


def lift_coords(coords, order: int = 1) -> Jet2:
    """Lift spatial coordinates (d, N) into a jet with g = unit directions, H = 0.

    Row i of the value block is coordinate i; its gradient w.r.t. coordinate
    j is the constant indicator row pattern e_i.
    """
    c = _as_value(coords)
    if c.ndim != 2:
        raise AutodiffUsageError("lift_coords expects a (d, N) array")
    d, n = c.shape
    g = []
    for j in range(d):
        e = np.zeros((d, n))
        e[j] = 1.0
        g.append(e)
    h = [0.0] * ((d * (d + 1)) // 2) if order == 2 else None
    return Jet2(c, g, h)


def lift_const(values, d: int, order: int = 1) -> Jet2:
    """Lift spatially-constant values: zero gradient (and Hessian)."""
    h = [0.0] * ((d * (d + 1)) // 2) if order == 2 else None
    return Jet2(_as_value(values), [0.0] * d, h)


def _jets_compatible(a: Jet2, b: Jet2):
    if a.d != b.d or a.order != b.order:
        raise AutodiffUsageError("jet operands disagree in dimension or order")


def jet_add(a: Jet2, b: Jet2) -> Jet2:
    _jets_compatible(a, b)
    h = None if a.h is None else [vadd(x, y) for x, y in zip(a.h, b.h)]
    return Jet2(vadd(a.v, b.v), [vadd(x, y) for x, y in zip(a.g, b.g)], h)


def jet_sub(a: Jet2, b: Jet2) -> Jet2:
    _jets_compatible(a, b)
    h = None if a.h is None else [vsub(x, y) for x, y in zip(a.h, b.h)]
    return Jet2(vsub(a.v, b.v), [vsub(x, y) for x, y in zip(a.g, b.g)], h)


def jet_mul(a: Jet2, b: Jet2) -> Jet2:
    """(ab)' = a'b + ab'; (ab)'' = a''b + a'b' + b'a' + ab''."""
    _jets_compatible(a, b)
    v = vmul(a.v, b.v)
    g = [vadd(vmul(a.g[i], b.v), vmul(a.v, b.g[i])) for i in range(a.d)]
    h = None
    if a.h is not None:
        h = []
        for i, j in _tri_pairs(a.d):
            k = _tri_index(a.d, i, j)
            term = vadd(vmul(a.h[k], b.v), vmul(a.v, b.h[k]))
            term = vadd(term, vmul(a.g[i], b.g[j]))
            term = vadd(term, vmul(a.g[j], b.g[i]))
            h.append(term)
    return Jet2(v, g, h)


def jet_div(a: Jet2, b: Jet2) -> Jet2:
    """w = a/b via a = w*b: w' = (a' - w b')/b, w'' = (a'' - w'b' - w'b' - w b'')/b."""
    _jets_compatible(a, b)
    if np.any(np.abs(_val(b.v)) == 0.0):
        raise NumericsError("division by jet with zero value")
    v = vdiv(a.v, b.v)
    g = [vdiv(vsub(a.g[i], vmul(v, b.g[i])), b.v) for i in range(a.d)]
    h = None
    if a.h is not None:
        h = []
        for i, j in _tri_pairs(a.d):
            k = _tri_index(a.d, i, j)
            num = vsub(a.h[k], vmul(v, b.h[k]))
            num = vsub(num, vmul(g[i], b.g[j]))
            num = vsub(num, vmul(g[j], b.g[i]))
            h.append(vdiv(num, b.v))
    return Jet2(v, g, h)


def jet_scale(a: Jet2, alpha: float, beta: float = 0.0) -> Jet2:
    """alpha*a + beta (beta shifts only the value)."""
    v = vscale(a.v, alpha, beta)
    g = [vscale(x, alpha) for x in a.g]
    h = None if a.h is None else [vscale(x, alpha) for x in a.h]
    return Jet2(v, g, h)


def _jet_smooth(a: Jet2, f, df, d2f) -> Jet2:
    """Unary composition: (f∘a)' = f'(a) a', (f∘a)'' = f'(a) a'' + f''(a) a_i' a_j'."""
    fv = f(a.v)
    d1 = df(a.v, fv)
    g = [vmul(d1, x) for x in a.g]
    h = None
    if a.h is not None:
        d2 = d2f(a.v, fv)
        h = []
        for i, j in _tri_pairs(a.d):
            k = _tri_index(a.d, i, j)
            h.append(vadd(vmul(d1, a.h[k]), vmul(d2, vmul(a.g[i], a.g[j]))))
    return Jet2(fv, g, h)


def jet_tanh(a: Jet2) -> Jet2:
    def df(x, t):
        return vsub(1.0, vmul(t, t))

    def d2f(x, t):
        return vmul(vscale(t, -2.0), vsub(1.0, vmul(t, t)))

    return _jet_smooth(a, vtanh, df, d2f)


def jet_sin(a: Jet2) -> Jet2:
    return _jet_smooth(a, vsin, lambda x, s: vcos(x), lambda x, s: vscale(vsin(x), -1.0))


def jet_cos(a: Jet2) -> Jet2:
    return _jet_smooth(a, vcos, lambda x, c: vscale(vsin(x), -1.0), lambda x, c: vscale(vcos(x), -1.0))


def jet_sqrt(a: Jet2) -> Jet2:
    """s = sqrt(a): s' = a'/(2s), s'' = (a'' - 2 s_i' s_j')/(2s)."""
    if np.any(_val(a.v) < 0.0):
        raise NumericsError("sqrt of jet with negative value")
    s = vsqrt(a.v)
    inv2s = vdiv(0.5, s)
    g = [vmul(inv2s, x) for x in a.g]
    h = None
    if a.h is not None:
        h = []
        for i, j in _tri_pairs(a.d):
            k = _tri_index(a.d, i, j)
            h.append(vmul(inv2s, vsub(a.h[k], vscale(vmul(g[i], g[j]), 2.0))))
    return Jet2(s, g, h)


def jet_square(a: Jet2) -> Jet2:
    return jet_mul(a, a)


def jet_matmul(w, a: Jet2) -> Jet2:
    """Linear map applied to a jet: coefficients transform stream-by-stream."""
    v = vmatmul(w, a.v)
    g = [vmatmul(w, x) for x in a.g]
    h = None if a.h is None else [vmatmul(w, x) for x in a.h]
    return Jet2(v, g, h)


def jet_row(a: Jet2, i: int) -> Jet2:
    """Row i of a jet whose coefficient blocks are 2-d (component extraction)."""
    h = None if a.h is None else [vrow(x, i) for x in a.h]
    return Jet2(vrow(a.v, i), [vrow(x, i) for x in a.g], h)


def jet_arith(kind: str, *operands):
    """Dispatch by operation kind; mirrors the recording ops above on jets."""
    table = {
        "add": jet_add,
        "sub": jet_sub,
        "mul": jet_mul,
        "div": jet_div,
        "sqrt": jet_sqrt,
        "tanh": jet_tanh,
        "sin": jet_sin,
        "cos": jet_cos,
        "scalar-affine": jet_scale,
    }
    if kind not in table:
        raise AutodiffUsageError(f"unsupported jet op {kind!r}")
    return table[kind](*operands)


def check_gradient(f_and_grad, point, step: float, indices=None) -> float:
    """Max relative deviation between supplied gradient and central differences.

    ``f_and_grad(p)`` must return ``(value, gradient_array)`` at parameter
    vector ``p``.  Deviation at coordinate i is
    ``|grad_i - cd_i| / (|cd_i| + 1e-8)`` with ``cd_i`` the central
    difference of the value.  ``indices`` restricts the check to a subset
    of coordinates (all by default).
    """
    p = np.asarray(point, dtype=np.float64)
    _, grad = f_and_grad(p)
    grad = np.asarray(grad, dtype=np.float64).ravel()
    idx = range(p.size) if indices is None else indices
    worst = 0.0
    flat = p.ravel()
    for i in idx:
        bump = np.zeros_like(flat)
        bump[i] = step
        fp, _ = f_and_grad((flat + bump).reshape(p.shape))
        fm, _ = f_and_grad((flat - bump).reshape(p.shape))
        cd = (float(fp) - float(fm)) / (2.0 * step)
        dev = abs(grad[i] - cd) / (abs(cd) + 1e-8)
        worst = max(worst, dev)
    return worst
