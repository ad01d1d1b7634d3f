import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from varconstrain import autodiff as ad
from varconstrain.autodiff import (
    AutodiffUsageError,
    Jet2,
    NumericsError,
    Tape,
    backward,
    check_gradient,
    jet_arith,
    lift_const,
    lift_coords,
    var,
)


def test_var_identity():
    t = Tape()
    assert float(var(t, 3.0).value) == 3.0


def test_grad_of_var_wrt_itself_is_one():
    t = Tape()
    x = var(t, 3.0)
    (g,) = backward(t, x, [x])
    assert float(g) == 1.0


def test_independent_vars_have_zero_cross_partial():
    t = Tape()
    x = var(t, 1.0)
    y = var(t, 2.0)
    (g,) = backward(t, x, [y])
    assert float(g) == 0.0


def test_product_rule():
    t = Tape()
    x, y = var(t, 2.0), var(t, 5.0)
    f = x * y
    gx, gy = backward(t, f, [x, y])
    assert float(gx) == 5.0 and float(gy) == 2.0


def test_square_gradient():
    t = Tape()
    x = var(t, 3.0)
    (g,) = backward(t, x * x, [x])
    assert float(g) == 6.0


def test_tanh_gradient_at_zero():
    t = Tape()
    x = var(t, 0.0)
    (g,) = backward(t, ad.vtanh(x), [x])
    assert float(g) == 1.0


def test_backward_rejects_foreign_output():
    t1, t2 = Tape(), Tape()
    x = var(t1, 1.0)
    with pytest.raises(AutodiffUsageError):
        backward(t2, x, [x])


def test_backward_leaves_values_unchanged():
    t = Tape()
    x = var(t, 2.0)
    f = ad.vsqrt(x * x * x)
    before = [v.copy() for v in t.values]
    backward(t, f, [x])
    for a, b in zip(before, t.values):
        assert np.array_equal(a, b)


def test_replay_reproduces_values():
    t = Tape()
    x = var(t, np.array([0.3, -0.7]))
    y = var(t, np.array([[1.0, 2.0], [3.0, 4.0]]))
    z = ad.vmatmul(y, ad.vtanh(x).__mul__(2.0) + 1.0)
    w = ad.vwsum(np.array([0.5, 0.5]), ad.vsqrt(z * z + 1.0))
    replayed = t.replay()
    for got, want in zip(replayed, t.values):
        np.testing.assert_array_equal(got, want)
    assert w.value.shape == ()


def _fd_builder(build, n):
    """Wrap a graph builder into the (value, grad) callable check_gradient wants."""

    def f_and_grad(p):
        t = Tape()
        leaf = var(t, p)
        out = build(t, leaf)
        (g,) = backward(t, out, [leaf])
        return float(out.value), g

    return f_and_grad


def test_check_gradient_cubic():
    # central difference of x^3 is exact up to O(h^2); reverse mode gives 12 exactly
    f = _fd_builder(lambda t, x: x * x * x, 1)
    assert check_gradient(f, np.array(2.0), 1e-4) < 1e-6


def test_check_gradient_constant():
    f = _fd_builder(lambda t, x: x * 0.0 + ad.vsqrt(var(t, 4.0)), 1)
    assert check_gradient(f, np.array(1.3), 1e-4) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3))
def test_composite_matches_finite_differences(vals):
    # mixed graph of supported ops over inputs in [-1, 1]
    def build(t, x):
        a = ad.vrow(x, 0)
        b = ad.vrow(x, 1)
        c = ad.vrow(x, 2)
        e = ad.vtanh(a * b + c)
        f = ad.vsqrt(e * e + 1.5)
        g = ad.vsin(a) * ad.vcos(b) + f / (c + 3.0)
        return ad.vsum(g * g)

    f = _fd_builder(build, 3)
    assert check_gradient(f, np.array(vals), 1e-4) < 1e-5


@settings(max_examples=20, deadline=None)
@given(
    st.floats(0.1, 2.0),
    st.floats(-2.0, -0.1),
    st.floats(-1.0, 1.0),
)
def test_backward_linearity(a, b, x0):
    # backward(a*f + b*g) == a*backward(f) + b*backward(g)
    t = Tape()
    x = var(t, x0)
    f = ad.vtanh(x) * x
    g = ad.vsin(x) + x * x
    combined = ad.vscale(f, a) + ad.vscale(g, b)
    (dc,) = backward(t, combined, [x])
    (df,) = backward(t, f, [x])
    (dg,) = backward(t, g, [x])
    assert abs(float(dc) - (a * float(df) + b * float(dg))) < 1e-12


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------


def test_tanh_jet_at_zero():
    x = lift_coords(np.array([[0.0]]), order=2)
    y = jet_arith("tanh", x)
    assert float(ad._val(y.v)[0, 0]) == 0.0
    assert float(ad._val(y.g[0])[0, 0]) == 1.0
    assert float(np.asarray(ad._val(y.hess(0, 0))).ravel()[0]) == pytest.approx(0.0, abs=1e-15)


def test_mul_jet_product_rule():
    xy = lift_coords(np.array([[2.0], [3.0]]), order=2)
    x = ad.jet_row(xy, 0)
    y = ad.jet_row(xy, 1)
    p = jet_arith("mul", x, y)
    assert float(ad._val(p.v)[0]) == 6.0
    assert float(ad._val(p.g[0])[0]) == 3.0
    assert float(ad._val(p.g[1])[0]) == 2.0
    assert float(np.asarray(ad._val(p.hess(0, 1))).ravel()[0]) == 1.0
    assert float(np.asarray(ad._val(p.hess(0, 0))).ravel()[0]) == 0.0


def test_sqrt_of_constant_jet():
    c = lift_const(np.array([4.0]), d=1, order=2)
    s = jet_arith("sqrt", c)
    assert float(ad._val(s.v)[0]) == 2.0
    assert ad._val(s.g[0]) == 0.0
    assert ad._val(s.h[0]) == 0.0


def test_jet_div_by_zero_raises():
    a = lift_const(np.array([1.0]), d=1)
    b = lift_const(np.array([0.0]), d=1)
    with pytest.raises(NumericsError):
        jet_arith("div", a, b)


def test_jet_sqrt_negative_raises():
    a = lift_const(np.array([-1.0]), d=1)
    with pytest.raises(NumericsError):
        jet_arith("sqrt", a)


def _scalar_fn_jets(xs, order=2):
    """f(x, y) = tanh(x*y) + sqrt(x^2 + y^2 + 2) / (y + 3), evaluated on jets."""
    x = ad.jet_row(xs, 0)
    y = ad.jet_row(xs, 1)
    a = jet_arith("tanh", jet_arith("mul", x, y))
    r = jet_arith("sqrt", jet_arith("scalar-affine", jet_arith("add", ad.jet_square(x), ad.jet_square(y)), 1.0, 2.0))
    b = jet_arith("div", r, jet_arith("scalar-affine", y, 1.0, 3.0))
    return jet_arith("add", a, b)


def _scalar_fn_plain(p):
    x, y = p
    return np.tanh(x * y) + np.sqrt(x * x + y * y + 2.0) / (y + 3.0)


# inputs kept away from the stationary manifold at the origin, where the
# central-difference oracle itself has no significant digits
@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(-1.0, -0.05))
def test_jet_coefficients_match_finite_differences(x, y):
    out = _scalar_fn_jets(lift_coords(np.array([[x], [y]]), order=2))
    h = 1e-4
    p = np.array([x, y])
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        cd = (_scalar_fn_plain(p + e) - _scalar_fn_plain(p - e)) / (2 * h)
        got = float(np.asarray(ad._val(out.g[i]))[0])
        assert abs(got - cd) / (abs(cd) + 1e-8) < 1e-5
    # second derivatives against central differences of the value
    for i in range(2):
        for j in range(2):
            ei, ej = np.zeros(2), np.zeros(2)
            ei[i] = h
            ej[j] = h
            cd2 = (
                _scalar_fn_plain(p + ei + ej)
                - _scalar_fn_plain(p + ei - ej)
                - _scalar_fn_plain(p - ei + ej)
                + _scalar_fn_plain(p - ei - ej)
            ) / (4 * h * h)
            got = float(np.asarray(ad._val(out.hess(i, j)))[0])
            assert abs(got - cd2) / (abs(cd2) + 1e-4) < 1e-3


def test_jet_hessian_symmetry_is_shared_storage():
    xs = lift_coords(np.random.default_rng(0).uniform(-1, 1, (3, 4)), order=2)
    y = jet_arith("tanh", jet_arith("mul", ad.jet_row(xs, 0), jet_arith("add", ad.jet_row(xs, 1), ad.jet_row(xs, 2))))
    for i in range(3):
        for j in range(3):
            assert y.hess(i, j) is y.hess(j, i)


def test_parameter_gradients_of_jet_gradient_entries():
    # d/dw of (d/dx of w*tanh(x)) must match finite differences in w
    rng = np.random.default_rng(1)
    x0 = 0.37

    def f_and_grad(p):
        t = Tape()
        w = var(t, p)
        xj = lift_coords(np.array([[x0]]), order=1)
        y = jet_arith("tanh", xj)
        dydx = ad.vsum(ad.vmul(w, y.g[0]))  # w * tanh'(x), a Var
        (g,) = backward(t, dydx, [w])
        return float(dydx.value), g

    p0 = rng.uniform(-1, 1, ())
    assert check_gradient(f_and_grad, p0, 1e-4) < 1e-5
