"""Spin-system specification and Hamiltonian evaluation.

A system is a list of per-spin coefficient functions (f_j, g_j, Omega_j),
an optional constant coupling term given as a Pauli term list, and an
initial density matrix term list.  The per-spin Hamiltonian is
f(t) sx + g(t) sy + Omega sz; chirped pulses use a narrow high-power
envelope times a quadratic-phase oscillation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from . import quadrature, spinalg
from .spinalg import KroneckerTermList, PauliLabel

HOCP_CENTER = 10.0
_ENV_POWER = 8
_ENV_SCALE = 1.0e7


@dataclass(frozen=True)
class ChirpedPulseParams:
    """Chirped-pulse parameters: envelope amplitude beta, chirp rate gamma.

    ``center`` moves the pulse center; the default matches the usual t = 10
    placement with envelope exp(-(t - center)^8 / 1e7).
    """

    beta: float
    gamma: float
    center: float = HOCP_CENTER

    def __post_init__(self):
        for name in ("beta", "gamma", "center"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def hocp_envelope(t, params: ChirpedPulseParams):
    dt = np.asarray(t, dtype=float) - params.center
    return params.beta * np.exp(-(dt ** _ENV_POWER) / _ENV_SCALE)


def hocp_coefficients(params: ChirpedPulseParams) -> Tuple[Callable, Callable]:
    """Coefficient functions (f, g) of a chirped pulse.

    f(t) = e(t) cos(gamma (t-c)^2), g(t) = e(t) sin(gamma (t-c)^2) with the
    envelope e(t) = beta exp(-(t-c)^8 / 1e7).  Both accept scalars or arrays.
    """

    def f(t):
        dt = np.asarray(t, dtype=float) - params.center
        return params.beta * np.exp(-(dt ** _ENV_POWER) / _ENV_SCALE) * np.cos(params.gamma * dt * dt)

    def g(t):
        dt = np.asarray(t, dtype=float) - params.center
        return params.beta * np.exp(-(dt ** _ENV_POWER) / _ENV_SCALE) * np.sin(params.gamma * dt * dt)

    return f, g


@dataclass(frozen=True)
class SpinCoefficients:
    """Per-spin coefficient functions f, g and the constant z coefficient.

    ``f_prim``/``g_prim`` are optional analytic antiderivatives used by the
    adaptive quadrature rule.  ``kind``/``params`` tag spins built by the
    :func:`hocp_spin` / :func:`constant_spin` constructors so the compiled
    stepping kernels can evaluate them without Python callbacks; hand-built
    spins leave them None and propagate through the generic path.
    """

    f: Callable
    g: Callable
    omega: float
    f_prim: Optional[Callable] = None
    g_prim: Optional[Callable] = None
    kind: Optional[str] = field(default=None, compare=False)
    params: Optional[Tuple[float, ...]] = field(default=None, compare=False)


def hocp_spin(beta: float, gamma: float, omega: float,
              center: float = HOCP_CENTER) -> SpinCoefficients:
    """Spin with chirped-pulse f, g coefficients."""
    f, g = hocp_coefficients(ChirpedPulseParams(beta=beta, gamma=gamma, center=center))
    return SpinCoefficients(f=f, g=g, omega=float(omega), kind="hocp",
                            params=(float(beta), float(gamma), float(center)))


def constant_spin(fx: float, fy: float, omega: float) -> SpinCoefficients:
    """Spin with time-independent coefficients (f, g constant)."""
    fx = float(fx)
    fy = float(fy)

    def f(t):
        return fx * np.ones_like(np.asarray(t, dtype=float))

    def g(t):
        return fy * np.ones_like(np.asarray(t, dtype=float))

    return SpinCoefficients(
        f=f, g=g, omega=float(omega),
        f_prim=lambda t: fx * np.asarray(t, dtype=float),
        g_prim=lambda t: fy * np.asarray(t, dtype=float),
        kind="constant", params=(fx, fy, 0.0))


@dataclass(frozen=True)
class SpinSystem:
    """Full n-spin system: coefficients per spin, optional coupling, rho0."""

    n_spins: int
    spins: Tuple[SpinCoefficients, ...]
    rho0: KroneckerTermList
    coupling: Optional[KroneckerTermList] = None

    def __post_init__(self):
        object.__setattr__(self, "spins", tuple(self.spins))
        if len(self.spins) != self.n_spins:
            raise ValueError(
                f"system declares {self.n_spins} spins but lists {len(self.spins)} coefficient sets")
        if self.n_spins < 1:
            raise ValueError("n_spins must be >= 1")
        if self.rho0.n_spins != self.n_spins:
            raise ValueError("rho0 term list has mismatched n_spins")
        rho0 = spinalg.assemble_term_list(self.rho0)
        if spinalg.max_abs(rho0 - rho0.conj().T) >= 1e-12:
            raise ValueError("assembled rho0 is not Hermitian")
        if self.coupling is not None:
            if self.coupling.n_spins != self.n_spins:
                raise ValueError("coupling term list has mismatched n_spins")
            hj = spinalg.assemble_term_list(self.coupling)
            if spinalg.max_abs(hj - hj.conj().T) >= 1e-12:
                raise ValueError("assembled coupling matrix is not Hermitian")

    @property
    def dim(self) -> int:
        return 2 ** self.n_spins

    def rho0_matrix(self) -> np.ndarray:
        return spinalg.assemble_term_list(self.rho0)

    def coupling_matrix(self) -> np.ndarray:
        if self.coupling is None:
            return np.zeros((self.dim, self.dim), dtype=np.complex128)
        return spinalg.assemble_term_list(self.coupling)


def single_spin_system(spin: SpinCoefficients, rho0_factors=("x",)) -> SpinSystem:
    rho0 = KroneckerTermList.single(1, 1.0, rho0_factors)
    return SpinSystem(n_spins=1, spins=(spin,), rho0=rho0)


def hamiltonian_at(system: SpinSystem, t: float) -> np.ndarray:
    """Assemble H(t) = sum_j (f_j X_j + g_j Y_j + Omega_j Z_j) + H_J."""
    dim = system.dim
    out = np.zeros((dim, dim), dtype=np.complex128)
    for j, spin in enumerate(system.spins, start=1):
        out += float(spin.f(t)) * spinalg.embed_single(system.n_spins, j, spinalg.pauli(PauliLabel.X))
        out += float(spin.g(t)) * spinalg.embed_single(system.n_spins, j, spinalg.pauli(PauliLabel.Y))
        out += spin.omega * spinalg.embed_single(system.n_spins, j, spinalg.pauli(PauliLabel.Z))
    if system.coupling is not None:
        out += system.coupling_matrix()
    return out


def coefficient_integrals(spin: SpinCoefficients, a: float, b: float, rule) -> Tuple[float, float]:
    """Integrals of f and g over [a, b] under the rule.

    When analytic antiderivatives are attached and the rule is the adaptive
    reference, the primitives are evaluated directly.
    """
    rule = quadrature.as_rule(rule)
    if a > b:
        raise ValueError(f"integration bounds reversed: a={a} > b={b}")
    if rule.kind == "exact" and spin.f_prim is not None and spin.g_prim is not None:
        return (float(spin.f_prim(b) - spin.f_prim(a)),
                float(spin.g_prim(b) - spin.g_prim(a)))
    return (quadrature.integrate(lambda t: float(spin.f(t)), a, b, rule),
            quadrature.integrate(lambda t: float(spin.g(t)), a, b, rule))


def spin_from_json(obj: dict, scale: float = 1.0) -> SpinCoefficients:
    """Parse a spin JSON fragment.

    ``{"type": "hocp", "beta": B, "gamma": G, "omega": W}`` or
    ``{"type": "constant", "fx": c1, "fy": c2, "omega": W}``; ``scale``
    multiplies the field-strength parameters (beta or fx/fy, and omega).
    """
    try:
        kind = obj["type"]
        omega = float(obj["omega"])
        if kind == "hocp":
            return hocp_spin(beta=scale * float(obj["beta"]), gamma=float(obj["gamma"]),
                             omega=scale * omega, center=float(obj.get("center", HOCP_CENTER)))
        if kind == "constant":
            return constant_spin(fx=scale * float(obj["fx"]), fy=scale * float(obj["fy"]),
                                 omega=scale * omega)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad spin entry {obj!r}: {exc}") from None
    raise ValueError(f"unknown spin type {kind!r}: expected 'hocp' or 'constant'")


def validate_primitives(spin: SpinCoefficients, t0: float, tf: float,
                        rel_tol: float = 1e-6, n_points: int = 10) -> None:
    """Spot-check a spin's coefficient functions over the simulation span.

    Samples a fixed-seed set of points inside [t0, tf]; f and g must be
    finite there, and any attached antiderivative must agree with its
    coefficient function under central differences to ``rel_tol``.
    """
    rng = np.random.default_rng(1234)
    span = tf - t0
    pts = t0 + span * rng.uniform(0.05, 0.95, size=n_points)
    for fun, name in ((spin.f, "f"), (spin.g, "g")):
        vals = [float(fun(t)) for t in pts]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"coefficient {name} is not finite on [{t0:g}, {tf:g}]")
    step = max(span, 1.0) * 1e-6
    for prim, fun, name in ((spin.f_prim, spin.f, "f"), (spin.g_prim, spin.g, "g")):
        if prim is None:
            continue
        for t in pts:
            deriv = (float(prim(t + step)) - float(prim(t - step))) / (2.0 * step)
            val = float(fun(t))
            if abs(deriv - val) > rel_tol * max(1.0, abs(val)):
                raise ValueError(
                    f"antiderivative of {name} disagrees with {name} at t={t:.6g}: "
                    f"d/dt primitive = {deriv:.6g}, function = {val:.6g}")
