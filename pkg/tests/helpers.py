"""Generators shared by the test modules."""

import math

import numpy as np

from prak.exprfield import BinOp, Call, Const, Neg, Num, Var
from prak.linalg4 import ETA


def random_factor(rng, lo=0.1, hi=10.0, off=2.0):
    """Lower-triangular A with diagonal in [lo, hi] and off-diagonal in [-off, off]."""
    A = np.tril(rng.uniform(-off, off, size=(4, 4)), -1)
    A[np.diag_indices(4)] = rng.uniform(lo, hi, size=4)
    return A


def random_metric(rng, **kw):
    A = random_factor(rng, **kw)
    return A @ ETA @ A.T, A


def random_unit3(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


_FUNCS = ("sin", "cos", "tan", "cot", "exp", "ln", "sqrt")


def random_tree(rng, depth):
    """Random expression tree of depth <= ``depth`` (may be undefined somewhere)."""
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.5:
            return Var(int(rng.integers(4)))
        if r < 0.9:
            return Num(float(np.round(rng.uniform(0, 3), 2)))
        return Const("pi")
    kind = rng.random()
    if kind < 0.55:
        op = str(rng.choice(["+", "-", "*", "/"]))
        return BinOp(op, random_tree(rng, depth - 1), random_tree(rng, depth - 1))
    if kind < 0.7:
        return BinOp("^", random_tree(rng, depth - 1), Num(float(rng.choice([2, 3, -1, 0.5]))))
    if kind < 0.8:
        return Neg(random_tree(rng, depth - 1))
    return Call(str(rng.choice(_FUNCS)), random_tree(rng, depth - 1))


def central_difference(f, x, axis, h=1e-5):
    e = np.zeros(4)
    e[axis] = h
    return (f(x + e) - f(x - e)) / (2 * h)


def close(a, b, tol):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)
