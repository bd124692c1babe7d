"""Time-stepping engines for the vectorized evolution r'(t) = -i L{H(t)} r(t).

Baseline one-step methods (explicit/implicit Euler, trapezoidal in initial
and midpoint flavor, classical RK4) operate directly on the vectorized
system.  The propagator methods exponentiate one or two terms of the
exponential (Magnus) series per step; the generators are assembled from
scalar integrals of the per-spin coefficient functions, so no matrix-valued
quadrature is ever needed on the hot path.

Hamiltonians whose spins were built by the parametric constructors are
stepped by the compiled kernels in ``spinmagnus._kernels``; anything else
(custom callables, the adaptive "exact" rule, non-Pade exponential
backends) takes the generic per-step path below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import expm as expm_mod
from . import quadrature, spinalg
from .errors import StepFailureError
from .hamiltonian import SpinSystem, coefficient_integrals, validate_primitives

METHOD_NAMES = ("euler", "euler_implicit", "trapezoidal", "trapezoidal_mid",
                "rk4", "magnus1", "magnus2")
EXPM_BACKENDS = ("pade", "taylor", "krylov")


@dataclass(frozen=True)
class TimeGrid:
    """Dyadic time grid t_n = t0 + n h with h = 0.5^k."""

    t0: float
    tf: float
    k: int

    def __post_init__(self):
        if not self.t0 < self.tf:
            raise ValueError(f"need t0 < tf, got [{self.t0}, {self.tf}]")
        if not 0 <= self.k <= 30:
            raise ValueError(f"dyadic exponent k={self.k} out of range 0..30")

    @property
    def h(self) -> float:
        return 0.5 ** self.k

    @property
    def n_steps(self) -> int:
        return int(math.floor((self.tf - self.t0) / self.h + 0.5))

    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class MagnusStepTerms:
    """Per-step generators: first term and optional commutator correction."""

    omega1: np.ndarray
    omega2: Optional[np.ndarray] = None

    def generator(self) -> np.ndarray:
        if self.omega2 is None:
            return self.omega1
        return self.omega1 + self.omega2


@dataclass(frozen=True)
class Trajectory:
    """States along a grid: Hermitian density matrices at the stored times."""

    grid: TimeGrid
    times: np.ndarray
    states: np.ndarray          # (n_stored, 2^n, 2^n)
    store_every: int = 1

    def vectorized(self) -> np.ndarray:
        n = self.states.shape[1]
        return self.states.transpose(0, 2, 1).reshape(len(self.times), n * n)


# ---------------------------------------------------------------------------
# One-step baseline methods


def _solve_step(m: np.ndarray, rhs: np.ndarray, step=None, method=None) -> np.ndarray:
    try:
        out = np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise StepFailureError(f"singular linear system in {method} step",
                               step=step, method=method) from exc
    if not np.all(np.isfinite(out)):
        raise StepFailureError(f"non-finite solve result in {method} step",
                               step=step, method=method)
    return out


def step_euler_explicit(a_fn, x, t, h):
    """x + h A(t) x."""
    return x + h * (a_fn(t) @ x)


def step_euler_implicit(a_fn, x, t, h):
    """Solve (I - h A(t+h)) x_next = x by dense LU."""
    a = a_fn(t + h)
    m = np.eye(a.shape[0], dtype=np.complex128) - h * a
    return _solve_step(m, x, method="euler_implicit")


def step_trapezoidal(a_fn, x, t, h, variant="initial"):
    """Cayley step (I - h/2 A(tau))^-1 (I + h/2 A(tau)) x.

    tau is the interval start for the "initial" variant and the interval
    midpoint for "midpoint"; for skew-Hermitian A the step matrix is exactly
    unitary either way.
    """
    if variant not in ("initial", "midpoint"):
        raise ValueError(f"unknown trapezoidal variant {variant!r}")
    tau = t + 0.5 * h if variant == "midpoint" else t
    a = a_fn(tau)
    eye = np.eye(a.shape[0], dtype=np.complex128)
    rhs = x + 0.5 * h * (a @ x)
    return _solve_step(eye - 0.5 * h * a, rhs, method="trapezoidal")


def step_rk4(a_fn, x, t, h):
    """Classical four-stage Runge-Kutta update."""
    a1 = a_fn(t)
    a_mid = a_fn(t + 0.5 * h)
    a4 = a_fn(t + h)
    k1 = a1 @ x
    k2 = a_mid @ (x + 0.5 * h * k1)
    k3 = a_mid @ (x + 0.5 * h * k2)
    k4 = a4 @ (x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# ---------------------------------------------------------------------------
# Per-system operator tables


class _OperatorTables:
    """Constant Liouville-space matrices reused across steps.

    The commutator-correction stacks w1/w2/w3 are only needed by the
    two-term propagator and are built on first access (at five spins each
    stack is ~84 MB).
    """

    def __init__(self, system: SpinSystem):
        self._system = system
        n = system.n_spins
        sx, sy = spinalg.pauli("x"), spinalg.pauli("y")
        sz = spinalg.pauli("z")
        hj = system.coupling_matrix()
        self.dim = system.dim ** 2
        self.px = np.empty((n, self.dim, self.dim), dtype=np.complex128)
        self.py = np.empty_like(self.px)
        self._w = None
        a0 = -1j * spinalg.liouvillian(hj)
        for j, spin in enumerate(system.spins, start=1):
            self.px[j - 1] = -1j * spinalg.liouvillian(spinalg.embed_single(n, j, sx))
            self.py[j - 1] = -1j * spinalg.liouvillian(spinalg.embed_single(n, j, sy))
            a0 += spin.omega * (-1j) * spinalg.liouvillian(spinalg.embed_single(n, j, sz))
        self.a0 = a0

    def _corrections(self):
        if self._w is None:
            system = self._system
            n = system.n_spins
            sx, sy, sz = spinalg.pauli("x"), spinalg.pauli("y"), spinalg.pauli("z")
            hj = system.coupling_matrix()
            w1 = np.empty_like(self.px)
            w2 = np.empty_like(self.px)
            w3 = np.empty_like(self.px)
            for j, spin in enumerate(system.spins, start=1):
                xj = spinalg.embed_single(n, j, sx)
                yj = spinalg.embed_single(n, j, sy)
                zj = spinalg.embed_single(n, j, sz)
                w1[j - 1] = (1j * spin.omega * spinalg.liouvillian(xj)
                             + 0.5 * spinalg.liouvillian(spinalg.commutator(yj, hj)))
                w2[j - 1] = (1j * spin.omega * spinalg.liouvillian(yj)
                             + 0.5 * spinalg.liouvillian(spinalg.commutator(hj, xj)))
                w3[j - 1] = 1j * spinalg.liouvillian(zj)
            self._w = (w1, w2, w3)
        return self._w

    @property
    def w1(self):
        return self._corrections()[0]

    @property
    def w2(self):
        return self._corrections()[1]

    @property
    def w3(self):
        return self._corrections()[2]

    def a_at(self, system: SpinSystem, t: float) -> np.ndarray:
        out = self.a0.copy()
        for j, spin in enumerate(system.spins):
            out += float(spin.f(t)) * self.px[j] + float(spin.g(t)) * self.py[j]
        return out


# ---------------------------------------------------------------------------
# Magnus step generators


def magnus_omega1(system: SpinSystem, a: float, b: float, rule,
                  _tables: Optional[_OperatorTables] = None) -> np.ndarray:
    """First propagator term -i L{ sum_j K_j + H_J (b - a) }.

    K_j collects the coefficient integrals of spin j over [a, b]; the result
    is skew-Hermitian by construction.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    tables = _tables or _OperatorTables(system)
    out = (b - a) * tables.a0
    for j, spin in enumerate(system.spins):
        int_f, int_g = coefficient_integrals(spin, a, b, rule)
        out = out + int_f * tables.px[j] + int_g * tables.py[j]
    return out


def magnus_omega2(system: SpinSystem, a: float, b: float, rule,
                  _tables: Optional[_OperatorTables] = None) -> np.ndarray:
    """Commutator correction term of the step propagator over [a, b].

    Combines the triangular double integrals D(f_j), D(g_j) and the cross
    integral X(f_j, g_j) with constant coupling matrices; vanishes for
    time-independent coefficients.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    rule = quadrature.as_rule(rule)
    tables = _tables or _OperatorTables(system)
    out = np.zeros((tables.dim, tables.dim), dtype=np.complex128)
    for j, spin in enumerate(system.spins):
        f = lambda t, _s=spin: float(_s.f(t))
        g = lambda t, _s=spin: float(_s.g(t))
        d_f = quadrature.double_antisym(f, a, b, rule)
        d_g = quadrature.double_antisym(g, a, b, rule)
        x_fg = quadrature.double_cross(f, g, a, b, rule)
        out = out + d_g * tables.w1[j] - d_f * tables.w2[j] + x_fg * tables.w3[j]
    return out


def magnus_step_terms(system: SpinSystem, a: float, b: float, rule,
                      order: int = 2) -> MagnusStepTerms:
    tables = _OperatorTables(system)
    omega1 = magnus_omega1(system, a, b, rule, _tables=tables)
    omega2 = magnus_omega2(system, a, b, rule, _tables=tables) if order >= 2 else None
    return MagnusStepTerms(omega1=omega1, omega2=omega2)


# ---------------------------------------------------------------------------
# Propagation driver


def _apply_expm(omega: np.ndarray, r: np.ndarray, backend: str, eps: float,
                krylov_m: Optional[int], step: int) -> np.ndarray:
    if backend == "pade":
        return expm_mod.pade_expm_auto(omega, eps) @ r
    if backend == "taylor":
        norm = expm_mod.op_norm_inf(omega)
        terms = expm_mod.taylor_terms_for(norm, eps * max(1.0, norm))
        return expm_mod.taylor_expm(omega, terms) @ r
    if backend == "krylov":
        herm = 1j * omega
        m = krylov_m if krylov_m is not None else r.size
        return expm_mod.krylov_expm_action(herm, r, m, t=-1j)
    raise ValueError(f"unknown expm backend {backend!r}: expected one of {EXPM_BACKENDS}")


def _kernel_eligible(system: SpinSystem, method: str, rule_kind: str, backend: str) -> bool:
    if method in ("magnus1", "magnus2"):
        if backend != "pade" or rule_kind == "exact":
            return False
    return all(s.kind in ("hocp", "constant") for s in system.spins)


def propagate(system: SpinSystem, grid: TimeGrid, method: str = "magnus1",
              rule="midpoint", expm_backend: str = "pade", krylov_m: Optional[int] = None,
              store_every: int = 1, expm_eps: float = 1e-13) -> Trajectory:
    """Evolve vec(rho0) across the grid with the chosen method.

    ``store_every`` keeps only every S-th grid state (S must divide the step
    count), which keeps fine reference runs at k = 20 in a few megabytes.
    Propagator methods exponentiate the step generator through
    ``expm_backend``; baseline methods ignore the rule and backend.
    """
    if method not in METHOD_NAMES:
        raise ValueError(f"unknown method {method!r}: expected one of {METHOD_NAMES}")
    rule = quadrature.as_rule(rule)
    if expm_backend not in EXPM_BACKENDS:
        raise ValueError(f"unknown expm backend {expm_backend!r}: expected one of {EXPM_BACKENDS}")
    n_steps = grid.n_steps
    if store_every < 1 or n_steps % store_every != 0:
        raise ValueError(f"store_every={store_every} must divide the step count {n_steps}")
    for spin in system.spins:
        validate_primitives(spin, grid.t0, grid.tf)

    rho0 = system.rho0_matrix()
    r0 = spinalg.vectorize(rho0)

    if _kernel_eligible(system, method, rule.kind, expm_backend):
        from . import _kernels
        r_hist = _kernels.run_fixed(system, method, rule.kind, grid.t0, grid.h,
                                    n_steps, store_every, eps=expm_eps)
    else:
        r_hist = _propagate_generic(system, grid, method, rule, expm_backend,
                                    krylov_m, store_every, expm_eps, r0)

    n = system.dim
    times = grid.t0 + grid.h * store_every * np.arange(r_hist.shape[0])
    states = r_hist.reshape(-1, n, n).transpose(0, 2, 1)  # undo column-major vec
    return Trajectory(grid=grid, times=times, states=states, store_every=store_every)


def _propagate_generic(system, grid, method, rule, backend, krylov_m,
                       store_every, eps, r0) -> np.ndarray:
    tables = _OperatorTables(system)
    a_fn = lambda t: tables.a_at(system, t)
    h = grid.h
    n_steps = grid.n_steps
    out = np.empty((n_steps // store_every + 1, r0.size), dtype=np.complex128)
    out[0] = r0
    r = r0
    for i in range(n_steps):
        t = grid.t0 + i * h
        try:
            if method == "euler":
                r = step_euler_explicit(a_fn, r, t, h)
            elif method == "euler_implicit":
                r = step_euler_implicit(a_fn, r, t, h)
            elif method == "trapezoidal":
                r = step_trapezoidal(a_fn, r, t, h, variant="initial")
            elif method == "trapezoidal_mid":
                r = step_trapezoidal(a_fn, r, t, h, variant="midpoint")
            elif method == "rk4":
                r = step_rk4(a_fn, r, t, h)
            else:
                omega = magnus_omega1(system, t, t + h, rule, _tables=tables)
                if method == "magnus2":
                    omega = omega + magnus_omega2(system, t, t + h, rule, _tables=tables)
                r = _apply_expm(omega, r, backend, eps, krylov_m, i)
        except StepFailureError as exc:
            raise StepFailureError(f"{method} failed at step {i} (t={t:.6g}): {exc}",
                                   step=i, method=method) from exc
        if (i + 1) % store_every == 0:
            out[(i + 1) // store_every] = r
    return out
