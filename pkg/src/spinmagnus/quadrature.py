"""Scalar quadrature rules for the propagator step integrals.

Single integrals support four rules: initial point, midpoint, 3-node
Gauss-Legendre and an adaptive bisection reference.  The triangular double
integrals needed by the second propagator term reduce to single integrals
through running antiderivatives evaluated with the same rule.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import QuadratureError

RULE_NAMES = ("initial", "midpoint", "gl3", "exact")

# Relative node positions in [0, 1] and weights summing to 1.
_GL3_OFFSET = np.sqrt(3.0 / 5.0) / 2.0
_FIXED_RULES = {
    "initial": ((0.0,), (1.0,)),
    "midpoint": ((0.5,), (1.0,)),
    "gl3": ((0.5, 0.5 + _GL3_OFFSET, 0.5 - _GL3_OFFSET), (4.0 / 9.0, 5.0 / 18.0, 5.0 / 18.0)),
}


@dataclass(frozen=True)
class QuadratureRule:
    """Tagged quadrature rule choice.

    ``kind`` is one of "initial", "midpoint", "gl3", "exact"; the tolerance
    fields only apply to the adaptive "exact" rule.
    """

    kind: str
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in RULE_NAMES:
            raise ValueError(f"unknown quadrature rule {self.kind!r}: expected one of {RULE_NAMES}")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")


def as_rule(rule) -> QuadratureRule:
    if isinstance(rule, QuadratureRule):
        return rule
    return QuadratureRule(kind=str(rule))


def _fixed_nodes(kind: str):
    return _FIXED_RULES[kind]


def _gl3_panel(u: Callable[[float], float], a: float, b: float) -> float:
    nodes, weights = _FIXED_RULES["gl3"]
    h = b - a
    return h * sum(w * u(a + x * h) for x, w in zip(nodes, weights))


_ADAPTIVE_MAX_DEPTH = 50


def _adaptive(u, a, b, abs_tol, rel_tol, whole, depth):
    if depth > _ADAPTIVE_MAX_DEPTH:
        raise QuadratureError(
            f"adaptive quadrature exceeded depth {_ADAPTIVE_MAX_DEPTH} on [{a}, {b}]")
    mid = 0.5 * (a + b)
    left = _gl3_panel(u, a, mid)
    right = _gl3_panel(u, mid, b)
    halves = left + right
    if abs(halves - whole) < max(abs_tol, rel_tol * abs(halves)):
        return halves
    return (_adaptive(u, a, mid, 0.5 * abs_tol, rel_tol, left, depth + 1)
            + _adaptive(u, mid, b, 0.5 * abs_tol, rel_tol, right, depth + 1))


def integrate(u: Callable[[float], float], a: float, b: float, rule) -> float:
    """Approximate the integral of ``u`` over [a, b] under the given rule.

    initial point: (b-a) u(a); midpoint: (b-a) u((a+b)/2); gl3 maps the
    3-node Gauss-Legendre rule (weights 8/9, 5/9, 5/9 at 0, +-sqrt(3/5));
    exact bisects recursively until the GL3 whole/halves difference meets
    the rule tolerances.
    """
    rule = as_rule(rule)
    if a > b:
        raise ValueError(f"integration bounds reversed: a={a} > b={b}")
    if a == b:
        return 0.0
    if rule.kind == "exact":
        return _adaptive(u, a, b, rule.abs_tol, rule.rel_tol, _gl3_panel(u, a, b), 0)
    nodes, weights = _fixed_nodes(rule.kind)
    h = b - a
    return h * sum(w * u(a + x * h) for x, w in zip(nodes, weights))


class _RunningIntegral:
    """Prefix integrals of one function over an adaptively refined partition.

    The outer integrand of a triangular double integral queries the inner
    antiderivative at many points; sharing one converged partition makes
    each query cost a handful of evaluations instead of a full adaptive run.
    """

    def __init__(self, u, a, b, abs_tol, rel_tol):
        self.u = u
        self.edges = [a]
        self.prefix = [0.0]
        if b > a:
            self._refine(u, a, b, _gl3_panel(u, a, b), abs_tol, rel_tol, 0)

    def _refine(self, u, x0, x1, whole, abs_tol, rel_tol, depth):
        if depth > _ADAPTIVE_MAX_DEPTH:
            raise QuadratureError(
                f"adaptive partition exceeded depth {_ADAPTIVE_MAX_DEPTH} on [{x0}, {x1}]")
        mid = 0.5 * (x0 + x1)
        left = _gl3_panel(u, x0, mid)
        right = _gl3_panel(u, mid, x1)
        if abs(left + right - whole) < max(abs_tol, rel_tol * abs(left + right)):
            self.edges.append(mid)
            self.prefix.append(self.prefix[-1] + left)
            self.edges.append(x1)
            self.prefix.append(self.prefix[-1] + right)
            return
        self._refine(u, x0, mid, left, 0.5 * abs_tol, rel_tol, depth + 1)
        self._refine(u, mid, x1, right, 0.5 * abs_tol, rel_tol, depth + 1)

    def __call__(self, s: float) -> float:
        idx = bisect.bisect_right(self.edges, s) - 1
        idx = min(max(idx, 0), len(self.edges) - 2)
        if s <= self.edges[0]:
            return 0.0
        return self.prefix[idx] + _gl3_panel(self.u, self.edges[idx], s)


def double_antisym(u: Callable[[float], float], a: float, b: float, rule) -> float:
    """Triangular integral of u(r) - u(s) over a <= r <= s <= b.

    Reduces to D(u) = int_a^b [U(s) - U(a)] ds - int_a^b (s-a) u(s) ds with
    the running antiderivative U evaluated by the same rule on [a, s].
    Vanishes exactly for constant u.
    """
    rule = as_rule(rule)
    if a > b:
        raise ValueError(f"integration bounds reversed: a={a} > b={b}")
    if rule.kind == "exact":
        run = _RunningIntegral(u, a, b, rule.abs_tol, rule.rel_tol)
        outer = lambda s: run(s) - (s - a) * u(s)
    else:
        def outer(s):
            return integrate(u, a, s, rule) - (s - a) * u(s)
    return integrate(outer, a, b, rule)


def double_cross(f: Callable[[float], float], g: Callable[[float], float],
                 a: float, b: float, rule) -> float:
    """Triangular integral of f(r) g(s) - g(r) f(s) over a <= r <= s <= b.

    Antisymmetric under swapping f and g; vanishes exactly for f = g.
    """
    rule = as_rule(rule)
    if a > b:
        raise ValueError(f"integration bounds reversed: a={a} > b={b}")
    if rule.kind == "exact":
        run_f = _RunningIntegral(f, a, b, rule.abs_tol, rule.rel_tol)
        run_g = _RunningIntegral(g, a, b, rule.abs_tol, rule.rel_tol)
        outer = lambda s: run_f(s) * g(s) - run_g(s) * f(s)
    else:
        def outer(s):
            return integrate(f, a, s, rule) * g(s) - integrate(g, a, s, rule) * f(s)
    return integrate(outer, a, b, rule)
