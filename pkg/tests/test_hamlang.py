import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gfsphere import hamlang
from gfsphere.errors import ArityError, DomainError, HamSyntaxError, UnknownVariable
from gfsphere.hamlang import BinOp, parse, to_source


def test_parse_two_summands():
    ast = parse("x1*y1 + 0.1*sin(t)", 1)
    assert isinstance(ast.root, BinOp) and ast.root.op == "+"
    assert ast.n == 1


def test_unknown_variable_position():
    with pytest.raises(UnknownVariable) as exc:
        parse("x3", 2)
    assert exc.value.position == 0


def test_syntax_error_reports_position():
    with pytest.raises(HamSyntaxError) as exc:
        parse("x1 + * y1", 1)
    assert exc.value.position == 5


def test_implicit_multiplication_rejected():
    with pytest.raises(HamSyntaxError):
        parse("2 x1", 1)


def test_arity():
    with pytest.raises(ArityError):
        parse("sin(x1, y1)", 1)


def test_unit_circle_value():
    ast = parse("x1^2 + y1^2", 1)
    th = np.linspace(0, 2 * np.pi, 7)
    pts = np.column_stack([np.cos(th), np.sin(th)])
    assert np.allclose(hamlang.evaluate(ast, pts), 1.0, atol=1e-15)


def test_precedence_and_unary_minus():
    assert hamlang.evaluate(parse("-x1^2", 1), [3.0, 0.0]) == -9.0
    assert hamlang.evaluate(parse("2^3^2", 1), [0.0, 0.0]) == 512.0
    assert hamlang.evaluate(parse("1 - 2 - 3", 1), [0.0, 0.0]) == -4.0
    assert hamlang.evaluate(parse("8 / 2 / 2", 1), [0.0, 0.0]) == 2.0
    assert hamlang.evaluate(parse("1.5e1*x1", 1), [2.0, 0.0]) == 30.0


def test_gradient_examples():
    v, g, dt = hamlang.eval_with_gradient(parse("x1^2", 1), [1.0, 0.0])
    assert v == 1.0 and np.allclose(g, [2.0, 0.0]) and dt == 0.0
    v, g, dt = hamlang.eval_with_gradient(parse("sin(t)*x1", 1), [1.0, 0.0], 0.0)
    assert v == 0.0 and np.allclose(g, 0.0) and dt == 1.0


def test_gradient_closed_form():
    ast = parse("exp(x1*y2) + cos(t*y1)/(1 + x2^2)", 2)
    x1, x2, y1, y2, t = 0.3, -0.4, 0.7, 0.2, 0.9
    v, g, dt = hamlang.eval_with_gradient(ast, [x1, x2, y1, y2], t)
    d = 1 + x2**2
    assert math.isclose(v, math.exp(x1 * y2) + math.cos(t * y1) / d, rel_tol=1e-15)
    want = [
        y2 * math.exp(x1 * y2),
        -math.cos(t * y1) * 2 * x2 / d**2,
        -t * math.sin(t * y1) / d,
        x1 * math.exp(x1 * y2),
    ]
    assert np.allclose(g, want, rtol=1e-14)
    assert math.isclose(dt, -y1 * math.sin(t * y1) / d, rel_tol=1e-14)


def test_division_by_zero():
    with pytest.raises(DomainError):
        hamlang.eval_with_gradient(parse("1/x1", 1), [0.0, 1.0])


def test_batched_evaluation_matches_pointwise(rng):
    ast = parse("x1*y1 + sin(x2)*y2^3 - 0.5*t", 2)
    P = rng.standard_normal((5, 4))
    batch = hamlang.evaluate(ast, P, 0.3)
    assert np.allclose(batch, [hamlang.evaluate(ast, p, 0.3) for p in P], rtol=0, atol=0)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3))
def test_round_trip(seed, n):
    ast = hamlang.random_ast(np.random.default_rng(seed), n, 6)
    again = parse(to_source(ast.root), n)
    assert again.root == ast.root
    assert hamlang.depth(ast.root) <= 6


@given(seed=st.integers(0, 2**32 - 1))
def test_hessian_is_symmetric(seed):
    rng = np.random.default_rng(seed)
    ast = hamlang.random_ast(rng, 2, 4)
    d = 4
    eye = np.eye(d)
    coords = [hamlang.Jet(np.float64(v), eye[i], np.zeros((d, d))) for i, v in enumerate(rng.uniform(-1, 1, d))]
    try:
        with np.errstate(all="ignore"):
            out = hamlang.eval_jet(ast.root, coords, hamlang.Jet(np.float64(0.5)))
    except DomainError:
        return
    if out.hess is None or not np.all(np.isfinite(out.hess)):
        return
    H = np.broadcast_to(out.hess, (d, d))
    assert np.allclose(H, H.T, rtol=1e-12, atol=1e-12 * max(1.0, np.max(np.abs(H))))
