"""Adaptive exponential Rosenbrock integrator (exprb32) for small stiff systems.

The scheme linearises the vector field at the start of every step and
propagates the linear part exactly through matrix phi-functions, so fast
oscillations and fast decays in the Jacobian do not limit the step size.
With ``J = f'(y)`` and ``g(u) = f(u) - f(y) - J (u - y)``::

    U      = y + h phi_1(hJ) f(y)
    y_new  = U + 2 h phi_3(hJ) g(U)

``U`` is second order and ``y_new`` third order; their difference is the
error estimate.  phi-functions are taken from the exponential of an
augmented matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm


class StepSizeUnderflow(RuntimeError):
    """The step size collapsed below the floating-point resolution of t."""

    def __init__(self, time, step):
        super().__init__(f"step size underflow at t={time!r} (h={step!r})")
        self.time = time
        self.step = step


def phi_vectors(hJ, w, p):
    """Return [phi_1(hJ) w, ..., phi_p(hJ) w] via one augmented exponential."""
    n = hJ.shape[0]
    m = np.zeros((n + p, n + p))
    m[:n, :n] = hJ
    m[:n, n] = w
    for k in range(p - 1):
        m[n + k, n + k + 1] = 1.0
    e = expm(m)
    return [e[:n, n + k] for k in range(p)]


def exprb32_step(f, J, y, fy, h):
    """One step; returns (third-order solution, embedded error vector)."""
    hJ = h * J
    (p1,) = phi_vectors(hJ, fy, 1)
    u = y + h * p1
    gu = f(u) - fy - J @ (u - y)
    corr = 2.0 * h * phi_vectors(hJ, gu, 3)[2]
    return u + corr, corr


@dataclass
class SolveStats:
    accepted: int = 0
    rejected: int = 0
    min_step: float = np.inf


def integrate(f, jac, y0, t_end, t_eval, *, rtol=1e-8, atol=1e-10, scale=None,
              h0=None, max_steps=10_000_000, check=None):
    """Integrate y' = f(y) from 0 to ``t_end`` and sample at ``t_eval``.

    Parameters
    ----------
    f, jac : callable
        Autonomous vector field and its Jacobian.
    y0 : array_like
    t_end : float
    t_eval : ndarray
        Increasing sample times in [0, t_end].  Samples are produced by
        re-taking a step of the exact sub-length from the enclosing accepted
        step's start (dense output); the step sequence is unaffected.
    rtol, atol : float
        Error control is ``|err_i| <= atol * scale_i + rtol * |y_i|``.
    scale : ndarray, optional
        Per-component multiplier of ``atol``.
    check : callable, optional
        Called as ``check(t, y)`` after every accepted step; may raise.

    Returns
    -------
    samples : ndarray, shape (len(t_eval), len(y0))
    stats : SolveStats
    """
    y = np.array(y0, dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    scale = np.ones_like(y) if scale is None else np.asarray(scale, dtype=float)
    out = np.empty((t_eval.size, y.size))
    stats = SolveStats()
    k = 0
    while k < t_eval.size and t_eval[k] <= 0.0:
        out[k] = y
        k += 1
    t = 0.0
    h = t_end * 1e-9 if h0 is None else h0
    near_end = t_end * (1 - 16 * np.finfo(float).eps)
    while t < t_end:
        if stats.accepted + stats.rejected >= max_steps:
            raise RuntimeError(f"exceeded {max_steps} steps at t={t!r}")
        if t + h >= near_end:
            h = t_end - t  # no sliver of a step left over at the end
        if h <= 4 * np.finfo(float).eps * max(t, 1e-300):
            raise StepSizeUnderflow(t, h)
        J = jac(y)
        fy = f(y)
        y_new, corr = exprb32_step(f, J, y, fy, h)
        tol = atol * scale + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(corr) / tol)) if np.all(np.isfinite(y_new)) else np.inf
        if err <= 1.0:
            t_new = t_end if t + h >= near_end else t + h
            while k < t_eval.size and t_eval[k] <= t_new:
                tau = t_eval[k] - t
                out[k] = y_new if tau == h else (exprb32_step(f, J, y, fy, tau)[0] if tau > 0 else y)
                k += 1
            t, y = t_new, y_new
            stats.accepted += 1
            stats.min_step = min(stats.min_step, h)
            if check is not None:
                check(t, y)
        else:
            stats.rejected += 1
        factor = 5.0 if err == 0 else 0.9 * err ** (-1.0 / 3.0)
        h *= min(5.0, max(0.2, factor)) if np.isfinite(err) else 0.2
    while k < t_eval.size:
        out[k] = y
        k += 1
    return out, stats
