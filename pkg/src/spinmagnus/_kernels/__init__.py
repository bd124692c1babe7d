"""Kernel dispatch for the fixed-rule stepping hot path.

The compiled (numba) lane is used when available; setting the environment
variable ``SPINMAGNUS_DISABLE_NUMBA`` to a truthy value selects the
pure-numpy lane instead.  Both lanes implement the identical step
semantics and are compared against each other in the test suite and in
``benchmarks/kernel_bench.py``.
"""

from __future__ import annotations

import os

import numpy as np

from . import common

DISABLE_ENV = "SPINMAGNUS_DISABLE_NUMBA"

try:
    from . import numba_backend
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba_backend = None
    HAS_NUMBA = False

from . import numpy_backend


def numba_disabled() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip().lower() in ("1", "true", "yes", "on")


def active_backend() -> str:
    """Name of the lane that :func:`run_fixed` will use right now."""
    if HAS_NUMBA and not numba_disabled():
        return "numba"
    return "numpy"


def system_arrays(system):
    """Parametric spin tables plus constant Liouville-space operator stacks."""
    from ..solvers import _OperatorTables

    n = system.n_spins
    kinds = np.empty(n, dtype=np.int64)
    params = np.empty((n, 3), dtype=np.float64)
    for j, spin in enumerate(system.spins):
        if spin.kind == "constant":
            kinds[j] = common.KIND_CONSTANT
        elif spin.kind == "hocp":
            kinds[j] = common.KIND_HOCP
        else:
            raise ValueError(f"spin {j + 1} is not kernel-eligible (kind={spin.kind!r})")
        params[j] = spin.params
    tables = _OperatorTables(system)
    omegas = np.array([s.omega for s in system.spins], dtype=np.float64)
    return kinds, params, omegas, tables


def run_fixed(system, method: str, rule_kind: str, t0: float, h: float,
              n_steps: int, stride: int, eps: float = 1e-13,
              backend: str | None = None) -> np.ndarray:
    """Propagate vec(rho0) over ``n_steps`` steps, storing every ``stride``-th state."""
    kinds, params, omegas, tables = system_arrays(system)
    nodes, weights = common.RULE_NODES[rule_kind]
    method_code = common.METHOD_CODES[method]
    time_independent = bool(np.all(kinds == common.KIND_CONSTANT))
    r0 = np.asarray(system.rho0_matrix().flatten(order="F"), dtype=np.complex128)
    if method == "magnus2":
        w1, w2, w3 = tables.w1, tables.w2, tables.w3
    else:
        empty = np.zeros((0, tables.dim, tables.dim), dtype=np.complex128)
        w1 = w2 = w3 = empty
    lane = backend or active_backend()
    if lane == "numba":
        return numba_backend.run_fixed(
            method_code, kinds, params, nodes, weights, float(t0), float(h),
            n_steps, stride, tables.a0, tables.px, tables.py,
            w1, w2, w3, r0, eps, time_independent)
    return numpy_backend.run_fixed(
        method_code, rule_kind, kinds, params, omegas, float(t0), float(h),
        n_steps, stride, tables.a0, tables.px, tables.py,
        w1, w2, w3, r0, eps, time_independent)
