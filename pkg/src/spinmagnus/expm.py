"""Matrix-exponential algorithms.

Three routes are provided:

* truncated Taylor series with the Everling remainder bound,
* diagonal Pade with scaling and squaring, including automatic (q, j)
  parameter selection against a backward-error bound,
* Lanczos-based Krylov approximation of exp(t A) b for Hermitian A, with
  the two-branch spectral error bound for negative semi-definite spectra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExpmError

TAYLOR_MAX_TERMS = 200


def op_norm_inf(a: np.ndarray) -> float:
    """Operator infinity norm (max row sum of entry magnitudes)."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(a), axis=1)))


# ---------------------------------------------------------------------------
# Taylor


def taylor_expm(a: np.ndarray, terms: int) -> np.ndarray:
    """Sum_{j=0}^{terms} A^j / j! evaluated Horner style."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"taylor_expm needs a square matrix, got {a.shape}")
    if terms < 0:
        raise ValueError("term count must be >= 0")
    eye = np.eye(a.shape[0], dtype=np.complex128)
    out = eye.copy()
    for j in range(terms, 0, -1):
        out = eye + (a @ out) / j
    return out


def taylor_remainder_bound(norm_ta: float, terms: int) -> float:
    """Everling's bound on the entries dropped after ``terms`` Taylor terms.

    Returns (|tA|^K / K!) * (|tA| / (K+1)) / (1 - eps) with
    eps = |tA| / (K+2); requires eps < 1.
    """
    if norm_ta < 0:
        raise ValueError("norm must be non-negative")
    if norm_ta == 0.0:
        return 0.0
    k = int(terms)
    eps = norm_ta / (k + 2)
    if eps >= 1.0:
        raise ValueError(
            f"remainder bound undefined: need norm/(K+2) < 1, got {eps:.3g} for K={k}")
    # norm^K / K! in log space to dodge overflow for large K
    log_head = k * math.log(norm_ta) - math.lgamma(k + 1)
    return math.exp(log_head) * (norm_ta / (k + 1)) / (1.0 - eps)


def taylor_terms_for(norm_ta: float, tol: float) -> int:
    """Smallest term count whose remainder bound meets ``tol`` (capped)."""
    for k in range(1, TAYLOR_MAX_TERMS + 1):
        if norm_ta / (k + 2) >= 1.0:
            continue
        if taylor_remainder_bound(norm_ta, k) <= tol:
            return k
    return TAYLOR_MAX_TERMS


# ---------------------------------------------------------------------------
# Diagonal Pade with scaling and squaring


@dataclass(frozen=True)
class PadeParams:
    """Diagonal Pade degree q and squaring count j."""

    q: int
    j: int

    def __post_init__(self):
        if self.q < 1 or self.j < 0:
            raise ValueError("need q >= 1 and j >= 0")


def _pade_error_coeff(q: int) -> float:
    return math.factorial(q) ** 2 / (math.factorial(2 * q) * math.factorial(2 * q + 1))


def pade_backward_bound(norm_a: float, q: int, j: int) -> float:
    """Backward-error estimate for the scaled-and-squared diagonal Pade."""
    alpha = norm_a / 2.0 ** j
    return 8.0 * alpha ** (2 * q + 1) * _pade_error_coeff(q)


_SELECT_MAX_TOTAL = 64


def pade_select_params(norm_a: float, eps: float) -> PadeParams:
    """Cheapest (q, j) meeting the backward-error tolerance.

    The squaring count must satisfy norm <= 2^(j-1) so the scaled matrix
    lands in the convergence region; among admissible pairs the total cost
    q + j is minimized, with ties broken toward fewer squarings.
    """
    if norm_a <= 0:
        raise ValueError("norm must be positive")
    if eps <= 0:
        raise ValueError("tolerance must be positive")
    j_min = 0
    while norm_a > 2.0 ** (j_min - 1):
        j_min += 1
    for total in range(j_min + 1, j_min + _SELECT_MAX_TOTAL):
        for j in range(j_min, total):
            q = total - j
            if pade_backward_bound(norm_a, q, j) <= eps:
                return PadeParams(q=q, j=j)
    raise ExpmError(
        f"no Pade parameters with q + j < {j_min + _SELECT_MAX_TOTAL} meet eps={eps:g}")


def _pade_coeffs(q: int) -> np.ndarray:
    # c_j = (2q - j)! q! / ((2q)! j! (q - j)!), c_0 = 1
    c = np.empty(q + 1)
    c[0] = 1.0
    for j in range(1, q + 1):
        c[j] = c[j - 1] * (q - j + 1) / ((2 * q - j + 1) * j)
    return c


def pade_expm(a: np.ndarray, params: PadeParams) -> np.ndarray:
    """Diagonal Pade approximant of exp(A) with 2^j scaling and squaring.

    The numerator/denominator split N = E + O, D = E - O into even and odd
    powers gives R = I + 2 D^-1 O, so the identity part of the result is
    exact and the solve only touches the O(|A|) correction.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"pade_expm needs a square matrix, got {a.shape}")
    q, j = params.q, params.j
    b = a / 2.0 ** j
    eye = np.eye(a.shape[0], dtype=np.complex128)
    den, odd = _pade_den_odd(b, q, eye)
    try:
        corr = np.linalg.solve(den, 2.0 * odd)
    except np.linalg.LinAlgError as exc:
        raise ExpmError(f"Pade denominator singular (q={q}, j={j}): scaling insufficient") from exc
    if not np.all(np.isfinite(corr)):
        raise ExpmError(f"Pade solve produced non-finite entries (q={q}, j={j})")
    out = eye + corr
    for _ in range(j):
        out = out @ out
    return out


def _pade_den_odd(b: np.ndarray, q: int, eye: np.ndarray):
    """Denominator E - O and odd part O of the degree-q diagonal Pade pair."""
    c = _pade_coeffs(q)
    b2 = b @ b
    evens = c[0::2]
    odds = c[1::2]
    even = evens[-1] * eye
    for idx in range(len(evens) - 2, -1, -1):
        even = evens[idx] * eye + b2 @ even
    odd_poly = odds[-1] * eye
    for idx in range(len(odds) - 2, -1, -1):
        odd_poly = odds[idx] * eye + b2 @ odd_poly
    odd = b @ odd_poly
    return even - odd, odd


def pade_expm_auto(a: np.ndarray, eps: float = 1e-13) -> np.ndarray:
    """exp(A) by diagonal Pade with automatically selected parameters."""
    norm = op_norm_inf(a)
    if norm == 0.0:
        return np.eye(np.asarray(a).shape[0], dtype=np.complex128)
    return pade_expm(a, pade_select_params(norm, eps))


# ---------------------------------------------------------------------------
# Lanczos / Krylov action


@dataclass(frozen=True)
class LanczosFactorization:
    """Orthonormal Krylov basis V, real tridiagonal T = V^dag A V, and |b|."""

    v: np.ndarray
    t: np.ndarray
    m: int
    beta0: float


_BREAKDOWN_REL = 1e-14


def lanczos(a: np.ndarray, b: np.ndarray, m: int) -> LanczosFactorization:
    """Lanczos recurrence for Hermitian ``a`` started from ``b``.

    Runs ``m`` iterations with full re-orthogonalization against all stored
    columns (desk-scale m makes the extra O(n m^2) cost irrelevant and kills
    the classic loss of orthogonality).  A vanishing recurrence norm means an
    invariant subspace was found; the factorization is returned early with a
    smaller effective m.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128).ravel()
    n = b.size
    if a.shape != (n, n):
        raise ValueError(f"matrix/vector shapes mismatch: {a.shape} vs {b.shape}")
    if not 1 <= m <= n:
        raise ValueError(f"iteration count {m} out of range 1..{n}")
    beta0 = float(np.linalg.norm(b))
    if beta0 == 0.0:
        raise ValueError("starting vector must be nonzero")
    breakdown_tol = _BREAKDOWN_REL * max(1.0, op_norm_inf(a))

    v = np.zeros((n, m), dtype=np.complex128)
    alpha = np.zeros(m)
    beta = np.zeros(m)  # beta[k] couples columns k-1 and k
    v[:, 0] = b / beta0
    w = a @ v[:, 0]
    alpha[0] = np.real(np.vdot(v[:, 0], w))
    w = w - alpha[0] * v[:, 0]
    k = 1
    while k < m:
        beta[k] = float(np.linalg.norm(w))
        if beta[k] <= breakdown_tol:
            break
        vk = w / beta[k]
        vk = vk - v[:, :k] @ (v[:, :k].conj().T @ vk)
        vk = vk / np.linalg.norm(vk)
        v[:, k] = vk
        w = a @ vk
        alpha[k] = np.real(np.vdot(vk, w))
        w = w - alpha[k] * vk - beta[k] * v[:, k - 1]
        k += 1
    t = np.diag(alpha[:k]) + np.diag(beta[1:k], 1) + np.diag(beta[1:k], -1)
    return LanczosFactorization(v=v[:, :k], t=t, m=k, beta0=beta0)


def krylov_expm_action(a: np.ndarray, b: np.ndarray, m: int, t=1.0) -> np.ndarray:
    """Approximate exp(t A) b as |b| V_m exp(t T_m) e_1 for Hermitian A.

    ``t`` may be complex (e.g. -1j turns a Hermitian generator into the
    unitary propagator).  exp(t T_m) is evaluated by the Pade route.
    """
    fact = lanczos(a, b, m)
    small = pade_expm_auto(t * fact.t.astype(np.complex128))
    return fact.beta0 * (fact.v @ small[:, 0])


def krylov_error_bound(rho: float, t: float, m: int) -> float:
    """Two-branch spectral error bound for eigenvalues in [-4 rho, 0].

    10 exp(-m^2 / (5 rho t)) for sqrt(4 rho t) <= m <= 2 rho t, and
    10 (rho t)^-1 exp(-rho t) (e rho t / m)^m for m >= 2 rho t; below
    sqrt(4 rho t) the bound does not apply.
    """
    if rho <= 0 or t <= 0:
        raise ValueError("need rho > 0 and t > 0")
    rt = rho * t
    if m >= 2.0 * rt:
        return 10.0 / rt * math.exp(-rt) * (math.e * rt / m) ** m
    if m >= math.sqrt(4.0 * rt):
        return 10.0 * math.exp(-m * m / (5.0 * rt))
    raise ValueError(
        f"m={m} below the bound's validity threshold sqrt(4 rho t)={math.sqrt(4 * rt):.3f}")
