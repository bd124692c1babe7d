"""Shared test helpers: random matrix factories and independent oracles."""

import numpy as np
import pytest

from spinmagnus import spinalg
from spinmagnus.hamiltonian import SpinSystem


def random_complex(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_hermitian(rng, n):
    a = random_complex(rng, n)
    return 0.5 * (a + a.conj().T)


def random_skew_hermitian(rng, n):
    return -1j * random_hermitian(rng, n)


def expm_eig_oracle(a):
    """exp(A) through an eigendecomposition; A must be Hermitian or skew-Hermitian."""
    a = np.asarray(a)
    if spinalg.max_abs(a - a.conj().T) < 1e-12 * max(1.0, spinalg.max_abs(a)):
        w, v = np.linalg.eigh(a)
        return (v * np.exp(w)) @ v.conj().T
    if spinalg.max_abs(a + a.conj().T) < 1e-12 * max(1.0, spinalg.max_abs(a)):
        w, v = np.linalg.eigh(1j * a)
        return (v * np.exp(-1j * w)) @ v.conj().T
    raise ValueError("oracle only handles Hermitian or skew-Hermitian input")


def system_generator_fn(system: SpinSystem):
    """A(t) = -i L{H(t)} assembled directly from embedding primitives."""
    n = system.n_spins
    lx = [spinalg.liouvillian(spinalg.embed_single(n, j, spinalg.pauli("x")))
          for j in range(1, n + 1)]
    ly = [spinalg.liouvillian(spinalg.embed_single(n, j, spinalg.pauli("y")))
          for j in range(1, n + 1)]
    lz = [spinalg.liouvillian(spinalg.embed_single(n, j, spinalg.pauli("z")))
          for j in range(1, n + 1)]
    lj = spinalg.liouvillian(system.coupling_matrix())

    def a_fn(t):
        out = lj.astype(np.complex128).copy()
        for j, spin in enumerate(system.spins):
            out += float(spin.f(t)) * lx[j] + float(spin.g(t)) * ly[j] + spin.omega * lz[j]
        return -1j * out

    return a_fn


_GL3_NODES = np.array([0.5, 0.5 + np.sqrt(0.6) / 2.0, 0.5 - np.sqrt(0.6) / 2.0])
_GL3_WEIGHTS = np.array([4.0 / 9.0, 5.0 / 18.0, 5.0 / 18.0])


def dense_step_generators(system: SpinSystem, a: float, b: float, n_panels: int = 256):
    """Matrix-valued quadrature of the one- and two-term step generators.

    Evaluates int_a^b A(s) ds and (1/2) int_a^b [A(s), B(s)] ds with
    B(s) = int_a^s A(r) dr by composite 3-node Gauss panels, entirely on the
    dense Liouville-space matrices (no scalar-integral reformulation).
    """
    a_fn = system_generator_fn(system)
    dim = system.dim ** 2
    edges = np.linspace(a, b, n_panels + 1)

    def gl3(x0, x1):
        w = x1 - x0
        out = np.zeros((dim, dim), dtype=np.complex128)
        for u, wt in zip(_GL3_NODES, _GL3_WEIGHTS):
            out += wt * a_fn(x0 + u * w)
        return w * out

    omega1 = np.zeros((dim, dim), dtype=np.complex128)
    omega2 = np.zeros((dim, dim), dtype=np.complex128)
    b_cum = np.zeros((dim, dim), dtype=np.complex128)
    for p in range(n_panels):
        x0, x1 = edges[p], edges[p + 1]
        w = x1 - x0
        for u, wt in zip(_GL3_NODES, _GL3_WEIGHTS):
            s = x0 + u * w
            a_s = a_fn(s)
            b_s = b_cum + gl3(x0, s)
            omega2 += w * wt * (a_s @ b_s - b_s @ a_s)
        panel = gl3(x0, x1)
        omega1 += panel
        b_cum += panel
    return omega1, 0.5 * omega2


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
