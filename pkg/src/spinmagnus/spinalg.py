"""Dense complex matrix kernel for spin systems.

Pauli constants, Kronecker products, single-/pair-site embedding operators,
commutators, column-major vectorization and the Liouvillian superoperator
L{H} = I (x) H - H^T (x) I.  Everything here is a pure function on numpy
complex128 arrays; target scale is up to 5 spins (Liouvillian 1024 x 1024),
so dense storage is used throughout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np


class PauliLabel(enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"
    IDENTITY = "i"

    @classmethod
    def from_str(cls, s: str) -> "PauliLabel":
        key = s.strip().lower()
        if key in ("i", "id", "identity"):
            return cls.IDENTITY
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown Pauli label {s!r}: expected x, y, z or i") from None


_PAULI = {
    PauliLabel.X: np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    PauliLabel.Y: np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128),
    PauliLabel.Z: np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
    PauliLabel.IDENTITY: np.eye(2, dtype=np.complex128),
}


def pauli(label) -> np.ndarray:
    """Return a copy of the 2x2 Pauli matrix for ``label`` (str or PauliLabel)."""
    if not isinstance(label, PauliLabel):
        label = PauliLabel.from_str(label)
    return _PAULI[label].copy()


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product [a_ij * B], shape (m*p, n*q)."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def embed_single(n_spins: int, j: int, a: np.ndarray) -> np.ndarray:
    """Place the 2x2 matrix ``a`` at site ``j`` (1-based) of an n-spin product.

    Returns I (x) ... (x) a (x) ... (x) I with ``a`` in the j-th position,
    a 2^n x 2^n matrix.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.shape != (2, 2):
        raise ValueError(f"embedded factor must be 2x2, got {a.shape}")
    if not (1 <= j <= n_spins):
        raise ValueError(f"site index {j} out of range 1..{n_spins}")
    out = np.ones((1, 1), dtype=np.complex128)
    for site in range(1, n_spins + 1):
        out = np.kron(out, a if site == j else _PAULI[PauliLabel.IDENTITY])
    return out


def embed_pair(n_spins: int, i: int, j: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Place ``a`` at site i and ``b`` at site j; for i == j place the product ``ab``."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError("embedded factors must be 2x2")
    for idx in (i, j):
        if not (1 <= idx <= n_spins):
            raise ValueError(f"site index {idx} out of range 1..{n_spins}")
    if i == j:
        return embed_single(n_spins, j, a @ b)
    out = np.ones((1, 1), dtype=np.complex128)
    for site in range(1, n_spins + 1):
        if site == i:
            factor = a
        elif site == j:
            factor = b
        else:
            factor = _PAULI[PauliLabel.IDENTITY]
        out = np.kron(out, factor)
    return out


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """AB - BA for square matrices of equal size."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"commutator needs equal square matrices, got {a.shape} and {b.shape}")
    return a @ b - b @ a


def vectorize(x: np.ndarray) -> np.ndarray:
    """Column-major stacking of a square matrix into a vector."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"vectorize needs a square matrix, got shape {x.shape}")
    return x.flatten(order="F")


def devectorize(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`vectorize`; ``v`` must have length n*n."""
    v = np.asarray(v)
    if v.ndim != 1 or v.size != n * n:
        raise ValueError(f"devectorize needs a vector of length {n * n}, got {v.shape}")
    return v.reshape((n, n), order="F")


def liouvillian(h: np.ndarray) -> np.ndarray:
    """Superoperator I (x) H - H^T (x) I acting on column-major vectorizations.

    Maps the commutator ODE drho/dt = -i[H, rho] onto the linear system
    dr/dt = -i L{H} r with r = vec(rho).  Hermitian H gives Hermitian L{H}.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"liouvillian needs a square matrix, got shape {h.shape}")
    eye = np.eye(h.shape[0], dtype=np.complex128)
    return np.kron(eye, h) - np.kron(h.T, eye)


@dataclass(frozen=True)
class KroneckerTermList:
    """A sum of scaled n-fold Pauli Kronecker products.

    ``terms`` is a sequence of (coeff, factors) pairs where ``factors`` holds
    exactly ``n_spins`` PauliLabel entries.  Assembles to a 2^n x 2^n matrix.
    """

    n_spins: int
    terms: Tuple[Tuple[complex, Tuple[PauliLabel, ...]], ...]

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError("n_spins must be >= 1")
        terms = tuple(
            (complex(c), tuple(PauliLabel.from_str(f) if not isinstance(f, PauliLabel) else f
                               for f in factors))
            for c, factors in self.terms
        )
        if not terms:
            raise ValueError("term list must not be empty")
        for _, factors in terms:
            if len(factors) != self.n_spins:
                raise ValueError(
                    f"every term needs exactly {self.n_spins} factors, got {len(factors)}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def single(cls, n_spins: int, coeff: complex, factors: Sequence) -> "KroneckerTermList":
        return cls(n_spins, ((coeff, tuple(factors)),))


def assemble_term_list(spec: KroneckerTermList) -> np.ndarray:
    """Sum of coeff * (factor_1 (x) ... (x) factor_n) over the term list."""
    dim = 2 ** spec.n_spins
    out = np.zeros((dim, dim), dtype=np.complex128)
    for coeff, factors in spec.terms:
        term = np.ones((1, 1), dtype=np.complex128)
        for label in factors:
            term = np.kron(term, _PAULI[label])
        out += coeff * term
    return out


def term_list_from_json(obj: dict) -> KroneckerTermList:
    """Parse the term-list JSON fragment.

    Expected shape: ``{"n_spins": N, "terms": [{"coeff": [re, im],
    "factors": ["x"|"y"|"z"|"i", ...]}]}``.  A bare number is accepted for
    a real coefficient.
    """
    try:
        n_spins = int(obj["n_spins"])
        raw_terms = obj["terms"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed term list: {exc}") from None
    terms = []
    for entry in raw_terms:
        coeff = entry["coeff"]
        if isinstance(coeff, (list, tuple)):
            coeff = complex(float(coeff[0]), float(coeff[1]))
        else:
            coeff = complex(float(coeff))
        factors = tuple(PauliLabel.from_str(f) for f in entry["factors"])
        terms.append((coeff, factors))
    return KroneckerTermList(n_spins=n_spins, terms=tuple(terms))


def term_list_to_json(spec: KroneckerTermList) -> dict:
    return {
        "n_spins": spec.n_spins,
        "terms": [
            {"coeff": [c.real, c.imag], "factors": [f.value for f in factors]}
            for c, factors in spec.terms
        ],
    }


def max_abs(x: np.ndarray) -> float:
    """Largest entry magnitude; 0.0 for empty input."""
    return float(np.max(np.abs(x))) if np.asarray(x).size else 0.0


def is_hermitian(x: np.ndarray, tol: float = 1e-12) -> bool:
    x = np.asarray(x)
    return max_abs(x - x.conj().T) < tol
