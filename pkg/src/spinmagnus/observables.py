"""Expectation values and spin components via the Frobenius inner product."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from . import spinalg
from .spinalg import KroneckerTermList
from .solvers import Trajectory

_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class ObservableSpec:
    """A labelled Hermitian operator given as a Pauli term list."""

    operator: KroneckerTermList
    label: str

    def __post_init__(self):
        op = spinalg.assemble_term_list(self.operator)
        if spinalg.max_abs(op - op.conj().T) >= 1e-12:
            raise ValueError(f"observable {self.label!r} is not Hermitian")

    @classmethod
    def from_factors(cls, label: str, factors: Sequence) -> "ObservableSpec":
        return cls(operator=KroneckerTermList.single(len(tuple(factors)), 1.0, factors),
                   label=label)

    def matrix(self) -> np.ndarray:
        return spinalg.assemble_term_list(self.operator)


def frobenius_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Tr(A^dag B); real whenever both arguments are Hermitian."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"frobenius_inner needs equal square matrices, got {a.shape}, {b.shape}")
    return complex(np.sum(a.conj() * b))


def normalized_component(rho: np.ndarray, op, n_spins: int) -> float:
    """Component of rho along the operator, normalized by 2^n.

    The imaginary part is asserted small rather than silently dropped:
    for Hermitian inputs anything above 1e-10 indicates a broken state.
    """
    op_mat = op.matrix() if isinstance(op, ObservableSpec) else np.asarray(op)
    rho = np.asarray(rho)
    if rho.shape != op_mat.shape:
        raise ValueError(f"dimension mismatch: state {rho.shape} vs operator {op_mat.shape}")
    if rho.shape[0] != 2 ** n_spins:
        raise ValueError(f"state dimension {rho.shape[0]} does not match n_spins={n_spins}")
    val = frobenius_inner(rho, op_mat) / 2 ** n_spins
    if abs(val.imag) > _IMAG_TOL:
        raise ValueError(f"component has non-negligible imaginary part {val.imag:.3e}")
    return float(val.real)


def bloch_components(rho: np.ndarray) -> Tuple[float, float, float]:
    """Normalized (d_x, d_y, d_z) of a single-spin state."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise ValueError(f"bloch_components needs a 2x2 state, got {rho.shape}")
    return tuple(normalized_component(rho, spinalg.pauli(ax), 1) for ax in ("x", "y", "z"))


def observable_series(traj: Trajectory, ops: Sequence[ObservableSpec]) -> np.ndarray:
    """Table with one row per stored time: (t, value per op), fixed op order."""
    n_spins = int(round(np.log2(traj.states.shape[1])))
    out = np.empty((len(traj.times), 1 + len(ops)))
    out[:, 0] = traj.times
    for col, op in enumerate(ops, start=1):
        mat = op.matrix()
        if mat.shape != traj.states.shape[1:]:
            raise ValueError(f"observable {op.label!r} dimension {mat.shape} "
                             f"does not match state dimension {traj.states.shape[1:]}")
        vals = np.sum(traj.states.conj() * mat, axis=(1, 2)) / 2 ** n_spins
        if np.max(np.abs(vals.imag)) > _IMAG_TOL:
            raise ValueError(f"observable {op.label!r} series has non-negligible imaginary part")
        out[:, col] = vals.real
    return out


def bloch_series(traj: Trajectory) -> np.ndarray:
    """Rows (t, d_x, d_y, d_z) along a single-spin trajectory."""
    ops = [ObservableSpec.from_factors(ax, (ax,)) for ax in ("x", "y", "z")]
    return observable_series(traj, ops)
