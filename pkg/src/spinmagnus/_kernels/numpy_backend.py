"""Pure-numpy twin of the compiled stepping kernel.

Per-step transfer matrices are built in vectorized chunks (coefficient
evaluation, generator assembly and the Pade exponential are all batched over
the chunk axis); states are then advanced by a plain sequential loop so the
step semantics match the compiled lane exactly.
"""

from __future__ import annotations

import numpy as np

from ..expm import pade_select_params
from . import common


def _coef_arrays(kinds, params, ts):
    """f_j and g_j evaluated at the times ``ts``; shape (len(ts), n_spins)."""
    ts = np.asarray(ts, dtype=float)
    n = kinds.size
    f = np.empty((ts.size, n))
    g = np.empty((ts.size, n))
    for j in range(n):
        if kinds[j] == common.KIND_CONSTANT:
            f[:, j] = params[j, 0]
            g[:, j] = params[j, 1]
        else:
            dt = ts - params[j, 2]
            env = params[j, 0] * np.exp(-(dt ** 8) / 1e7)
            phase = params[j, 1] * dt * dt
            f[:, j] = env * np.cos(phase)
            g[:, j] = env * np.sin(phase)
    return f, g


def _assemble(a0, px, py, fvals, gvals):
    """Stack of A0 + sum_j f_j PX_j + g_j PY_j, shape (c, d, d)."""
    out = np.broadcast_to(a0, (fvals.shape[0],) + a0.shape).astype(np.complex128)
    out = out + np.einsum("cj,jab->cab", fvals, px) + np.einsum("cj,jab->cab", gvals, py)
    return out


def _pade_den_odd_batch(b, q):
    """Denominator E - O and odd part O of the diagonal Pade pair, batched."""
    c = np.empty(q + 1)
    c[0] = 1.0
    for i in range(1, q + 1):
        c[i] = c[i - 1] * (q - i + 1) / ((2 * q - i + 1) * i)
    eye = np.eye(b.shape[1], dtype=np.complex128)
    b2 = b @ b
    evens = c[0::2]
    odds = c[1::2]
    even = evens[-1] * np.broadcast_to(eye, b.shape).copy()
    for idx in range(len(evens) - 2, -1, -1):
        even = evens[idx] * eye + b2 @ even
    odd_poly = odds[-1] * np.broadcast_to(eye, b.shape).copy()
    for idx in range(len(odds) - 2, -1, -1):
        odd_poly = odds[idx] * eye + b2 @ odd_poly
    odd = b @ odd_poly
    return even - odd, odd


def _expm_pade_batch(gen, eps):
    """Batched diagonal Pade with scaling and squaring; params from max norm."""
    norms = np.abs(gen).sum(axis=2).max(axis=1)
    norm = float(norms.max())
    if norm == 0.0:
        return np.broadcast_to(np.eye(gen.shape[1], dtype=np.complex128), gen.shape).copy()
    pp = pade_select_params(norm, eps)
    b = gen / 2.0 ** pp.j
    den, odd = _pade_den_odd_batch(b, pp.q)
    eye = np.eye(gen.shape[1], dtype=np.complex128)
    out = eye + np.linalg.solve(den, 2.0 * odd)
    for _ in range(pp.j):
        out = out @ out
    return out


def _magnus_generators(kinds, params, omegas, nodes, weights, ts, h, order,
                       a0, px, py, w1, w2, w3):
    c = ts.size
    gen = np.broadcast_to(h * a0, (c,) + a0.shape).astype(np.complex128)
    n = kinds.size
    int_f = np.zeros((c, n))
    int_g = np.zeros((c, n))
    for q in range(nodes.size):
        fq, gq = _coef_arrays(kinds, params, ts + nodes[q] * h)
        int_f += weights[q] * fq
        int_g += weights[q] * gq
    gen = gen + np.einsum("cj,jab->cab", h * int_f, px) + np.einsum("cj,jab->cab", h * int_g, py)
    if order == 2:
        d_f = np.zeros((c, n))
        d_g = np.zeros((c, n))
        x_fg = np.zeros((c, n))
        for i in range(nodes.size):
            ui, wi = nodes[i], weights[i]
            fs, gs = _coef_arrays(kinds, params, ts + ui * h)
            f_in = np.zeros((c, n))
            g_in = np.zeros((c, n))
            for kq in range(nodes.size):
                fk, gk = _coef_arrays(kinds, params, ts + nodes[kq] * ui * h)
                f_in += weights[kq] * fk
                g_in += weights[kq] * gk
            d_f += wi * ui * (f_in - fs)
            d_g += wi * ui * (g_in - gs)
            x_fg += wi * ui * (f_in * gs - g_in * fs)
        hh = h * h
        gen = (gen + np.einsum("cj,jab->cab", hh * d_g, w1)
               - np.einsum("cj,jab->cab", hh * d_f, w2)
               + np.einsum("cj,jab->cab", hh * x_fg, w3))
    return gen


def _step_matrices(method, kinds, params, omegas, nodes, weights, ts, h, eps,
                   a0, px, py, w1, w2, w3):
    d = a0.shape[0]
    eye = np.eye(d, dtype=np.complex128)
    if method in (common.MAGNUS1, common.MAGNUS2):
        order = 2 if method == common.MAGNUS2 else 1
        gen = _magnus_generators(kinds, params, omegas, nodes, weights, ts, h, order,
                                 a0, px, py, w1, w2, w3)
        return _expm_pade_batch(gen, eps)
    if method == common.EULER:
        a = _assemble(a0, px, py, *_coef_arrays(kinds, params, ts))
        return eye + h * a
    if method == common.EULER_IMPLICIT:
        a = _assemble(a0, px, py, *_coef_arrays(kinds, params, ts + h))
        return np.linalg.solve(eye - h * a, np.broadcast_to(eye, a.shape).copy())
    if method in (common.TRAPEZOIDAL, common.TRAPEZOIDAL_MID):
        tau = ts + 0.5 * h if method == common.TRAPEZOIDAL_MID else ts
        a = _assemble(a0, px, py, *_coef_arrays(kinds, params, tau))
        return np.linalg.solve(eye - 0.5 * h * a, eye + 0.5 * h * a)
    if method == common.RK4:
        a1 = _assemble(a0, px, py, *_coef_arrays(kinds, params, ts))
        a2 = _assemble(a0, px, py, *_coef_arrays(kinds, params, ts + 0.5 * h))
        a4 = _assemble(a0, px, py, *_coef_arrays(kinds, params, ts + h))
        k1 = a1
        k2 = a2 @ (eye + 0.5 * h * k1)
        k3 = a2 @ (eye + 0.5 * h * k2)
        k4 = a4 @ (eye + h * k3)
        return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    raise ValueError(f"unknown method code {method}")


def run_fixed(method, rule_kind, kinds, params, omegas, t0, h, n_steps, stride,
              a0, px, py, w1, w2, w3, r0, eps, time_independent):
    nodes, weights = common.RULE_NODES[rule_kind]
    d = a0.shape[0]
    out = np.empty((n_steps // stride + 1, d), dtype=np.complex128)
    out[0] = r0
    r = r0.copy()
    if time_independent:
        u = _step_matrices(method, kinds, params, omegas, nodes, weights,
                           np.array([t0]), h, eps, a0, px, py, w1, w2, w3)[0]
        for i in range(n_steps):
            r = u @ r
            if (i + 1) % stride == 0:
                out[(i + 1) // stride] = r
        return out
    is_magnus = method in (common.MAGNUS1, common.MAGNUS2)
    chunk = max(16, (1 << 22) // (d * d))
    i0 = 0
    while i0 < n_steps:
        c = min(chunk, n_steps - i0)
        ts = t0 + h * (i0 + np.arange(c))
        if is_magnus:
            order = 2 if method == common.MAGNUS2 else 1
            gen = _magnus_generators(kinds, params, omegas, nodes, weights, ts, h,
                                     order, a0, px, py, w1, w2, w3)
            norm = float(np.abs(gen).sum(axis=2).max())
            pp = pade_select_params(norm, eps) if norm > 0.0 else None
            if pp is not None and pp.j == 0:
                # incremental form: r + D^-1 (2 O r) never re-rounds the
                # identity part, so long runs keep unitarity to fp level
                den, odd = _pade_den_odd_batch(gen, pp.q)
                den_inv = np.linalg.solve(den, np.broadcast_to(
                    np.eye(d, dtype=np.complex128), den.shape).copy())
                for i in range(c):
                    r = r + den_inv[i] @ (2.0 * (odd[i] @ r))
                    if (i0 + i + 1) % stride == 0:
                        out[(i0 + i + 1) // stride] = r
                i0 += c
                continue
            mats = _expm_pade_batch(gen, eps)
        else:
            mats = _step_matrices(method, kinds, params, omegas, nodes, weights,
                                  ts, h, eps, a0, px, py, w1, w2, w3)
        for i in range(c):
            r = mats[i] @ r
            if (i0 + i + 1) % stride == 0:
                out[(i0 + i + 1) // stride] = r
        i0 += c
    return out
