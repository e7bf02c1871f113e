"""Limited-memory BFGS with a strong-Wolfe line search.

A self-contained minimizer for smooth unconstrained objectives. The
two-loop recursion keeps a bounded history of curvature pairs; the line
search brackets and then bisects until both the sufficient-decrease and
strong curvature conditions hold. Pure float arithmetic: identical inputs
give identical iterates.
"""

from dataclasses import dataclass, field

import numpy as np

from .validation import NumericError

_CURVATURE_SKIP = 1e-10


@dataclass
class OptimizeResult:
    """Outcome of :func:`minimize_lbfgs`.

    ``cost_trace`` holds the objective value after each accepted step, so
    its length equals ``iterations``. ``converged`` is True only when the
    gradient-norm tolerance was met.
    """

    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    cost_trace: list = field(default_factory=list)
    converged: bool = False
    message: str = ""


def _line_search_wolfe(fun, x, f0, g0, direction, c1, c2, max_steps=25, max_zoom=30):
    """Find a step satisfying the strong Wolfe conditions along ``direction``.

    Returns ``(alpha, f, g, status)`` with status one of ``"wolfe"``,
    ``"armijo"`` (decrease found but curvature condition unattainable) or
    ``"failed"``. Bracketing doubles the trial step; zooming bisects.
    """
    dphi0 = float(g0 @ direction)
    if dphi0 >= 0:
        return None, f0, g0, "failed"

    def evaluate(alpha):
        f, g = fun(x + alpha * direction)
        return float(f), g, float(g @ direction)

    def zoom(a_lo, phi_lo, g_lo, a_hi):
        for _ in range(max_zoom):
            alpha = 0.5 * (a_lo + a_hi)
            phi, g, dphi = evaluate(alpha)
            if not np.isfinite(phi) or phi > f0 + c1 * alpha * dphi0 or phi >= phi_lo:
                a_hi = alpha
            else:
                if abs(dphi) <= -c2 * dphi0:
                    return alpha, phi, g, "wolfe"
                if dphi * (a_hi - a_lo) >= 0:
                    a_hi = a_lo
                a_lo, phi_lo, g_lo = alpha, phi, g
        if phi_lo < f0:
            return a_lo, phi_lo, g_lo, "armijo"
        return None, f0, g0, "failed"

    alpha_prev, phi_prev, g_prev = 0.0, f0, g0
    alpha = 1.0
    for step in range(max_steps):
        phi, g, dphi = evaluate(alpha)
        if not np.isfinite(phi) or phi > f0 + c1 * alpha * dphi0 or (
            step > 0 and phi >= phi_prev
        ):
            return zoom(alpha_prev, phi_prev, g_prev, alpha)
        if abs(dphi) <= -c2 * dphi0:
            return alpha, phi, g, "wolfe"
        if dphi >= 0:
            return zoom(alpha, phi, g, alpha_prev)
        alpha_prev, phi_prev, g_prev = alpha, phi, g
        alpha *= 2.0
    # Bracketing ran out while still descending: the last trial point
    # satisfies the sufficient-decrease condition, accept it.
    return alpha_prev, phi_prev, g_prev, "armijo"


def minimize_lbfgs(
    fun,
    x0,
    max_iterations,
    memory=20,
    grad_tol=1e-7,
    c1=1e-4,
    c2=0.9,
):
    """Minimize ``fun`` starting from ``x0``.

    Parameters
    ----------
    fun : callable
        Maps a parameter vector to ``(value, gradient)``.
    x0 : ndarray
    max_iterations : int
        Maximum number of accepted steps.
    memory : int
        Number of curvature pairs retained for the two-loop recursion.
    grad_tol : float
        Stop when the gradient 2-norm falls to or below this value.
    c1, c2 : float
        Wolfe constants for sufficient decrease and strong curvature.

    Raises
    ------
    NumericError
        If the objective is non-finite at the starting point.
    """
    if max_iterations < 0:
        raise ValueError("max_iterations must be >= 0")
    if memory < 1:
        raise ValueError("memory must be >= 1")
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fun(x)
    f = float(f)
    g = np.asarray(g, dtype=np.float64)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NumericError("objective is non-finite at the starting point")

    s_hist, y_hist, rho_hist = [], [], []
    trace = []
    message = "maximum iterations reached"
    converged = False

    for _ in range(max_iterations):
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= grad_tol:
            converged = True
            message = "gradient norm below tolerance"
            break

        # Two-loop recursion for the search direction.
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            a = rho * (s @ q)
            q -= a * y
            alphas.append(a)
        if s_hist:
            gamma = (s_hist[-1] @ y_hist[-1]) / (y_hist[-1] @ y_hist[-1])
            q *= gamma
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            b = rho * (y @ q)
            q += s * (a - b)
        direction = -q
        if g @ direction >= 0:
            # History produced an ascent direction; fall back to steepest
            # descent and drop the stale pairs.
            s_hist, y_hist, rho_hist = [], [], []
            direction = -g

        alpha, f_new, g_new, status = _line_search_wolfe(
            fun, x, f, g, direction, c1, c2
        )
        if status == "failed":
            message = "line search failed to find a decrease"
            break
        if not np.isfinite(f_new) or not np.all(np.isfinite(g_new)):
            raise NumericError("objective became non-finite during optimization")

        s = alpha * direction
        y = g_new - g
        x = x + s
        sy = float(s @ y)
        if sy > _CURVATURE_SKIP * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)
        f, g = f_new, g_new
        trace.append(f)
    else:
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= grad_tol:
            converged = True
            message = "gradient norm below tolerance"

    return OptimizeResult(
        x=x,
        fun=f,
        grad_norm=float(np.linalg.norm(g)),
        iterations=len(trace),
        cost_trace=trace,
        converged=converged,
        message=message,
    )
