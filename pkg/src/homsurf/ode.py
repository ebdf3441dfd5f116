"""Fixed-step RK4 with Hermite dense output, and a safeguarded Newton solver."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline


class IntegrationError(RuntimeError):
    pass


class RootFindingError(RuntimeError):
    pass


@dataclass
class Trajectory:
    """Samples ``y[k]`` at ``r[k]`` with derivatives ``dy[k]``.

    ``stopped`` holds the reason when an event cut the run short; the
    samples then cover the maximal interval reached.
    """

    r: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    stopped: str | None = None

    def __post_init__(self):
        order = np.argsort(self.r)
        self._spline = None
        if len(self.r) >= 2:
            self._spline = CubicHermiteSpline(self.r[order], self.y[order], self.dy[order], axis=0)

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.r.min()), float(self.r.max())

    def __call__(self, r, nu: int = 0):
        """Dense output (or its ``nu``-th derivative) by cubic Hermite interpolation."""
        lo, hi = self.interval
        r = np.asarray(r, dtype=float)
        if np.any((r < lo - 1e-12) | (r > hi + 1e-12)):
            raise IntegrationError(f"requested r outside the integrated interval [{lo}, {hi}]")
        if self._spline is None:
            return np.broadcast_to(self.y[0], r.shape + self.y.shape[1:]).copy()
        return self._spline(r, nu)


def rk4_integrate(rhs, y0, r_range, step: float, event=None) -> Trajectory:
    """Classical RK4 from ``r_range[0]`` to ``r_range[1]`` (either direction).

    The step is shrunk uniformly so the end point is hit exactly.
    ``event(r, y)`` may return a string to stop integration early; the
    state that triggered it is discarded.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    r0, r1 = float(r_range[0]), float(r_range[1])
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"non-finite initial state {y}")
    n = max(1, int(math.ceil(abs(r1 - r0) / step - 1e-9))) if r1 != r0 else 0
    h = (r1 - r0) / n if n else 0.0
    rs, ys, dys = [r0], [y], [np.asarray(rhs(r0, y), dtype=float)]
    stopped = None
    for k in range(n):
        r = r0 + k * h
        k1 = dys[-1]
        k2 = np.asarray(rhs(r + h / 2, y + h / 2 * k1), dtype=float)
        k3 = np.asarray(rhs(r + h / 2, y + h / 2 * k2), dtype=float)
        k4 = np.asarray(rhs(r + h, y + h * k3), dtype=float)
        y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        r_new = r0 + (k + 1) * h
        if not np.all(np.isfinite(y_new)):
            stopped = f"non-finite state at r={r_new:.6g}"
            break
        if event is not None:
            reason = event(r_new, y_new)
            if reason:
                stopped = f"{reason} at r={r_new:.6g}"
                break
        dy_new = np.asarray(rhs(r_new, y_new), dtype=float)
        if not np.all(np.isfinite(dy_new)):
            stopped = f"non-finite derivative at r={r_new:.6g}"
            break
        y = y_new
        rs.append(r_new)
        ys.append(y)
        dys.append(dy_new)
    return Trajectory(np.array(rs), np.array(ys), np.array(dys), stopped)


def safeguarded_newton(F, dF, lo, hi, tol: float = 1e-12, max_iter: int = 100):
    """Vectorized Newton iteration that falls back to bisection.

    ``F`` must change sign on every bracket ``[lo, hi]``. Returns the roots
    as an array shaped like the broadcast brackets.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    lo, hi = lo.copy(), hi.copy()
    flo, fhi = F(lo), F(hi)
    if np.any(np.sign(flo) * np.sign(fhi) > 0):
        raise RootFindingError("no sign change on the bracket")
    x = np.where(flo == 0, lo, np.where(fhi == 0, hi, 0.5 * (lo + hi)))
    for _ in range(max_iter):
        fx = F(x)
        done = np.abs(fx) <= tol
        if np.all(done):
            return x
        same = np.sign(fx) == np.sign(flo)
        lo = np.where(same, x, lo)
        flo = np.where(same, fx, flo)
        hi = np.where(same, hi, x)
        d = dF(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - fx / d
        inside = np.isfinite(newton) & (newton > np.minimum(lo, hi)) & (newton < np.maximum(lo, hi))
        x = np.where(done, x, np.where(inside, newton, 0.5 * (lo + hi)))
        if np.all(done | (np.abs(hi - lo) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(x)))):
            fx = F(x)
            if np.all(np.abs(fx) <= max(tol, 1e3 * np.finfo(float).eps)):
                return x
    raise RootFindingError(f"no convergence in {max_iter} iterations")


def rk4_step(rhs, r: float, y: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step; ``y`` may have any shape ``rhs`` accepts."""
    k1 = rhs(r, y)
    k2 = rhs(r + h / 2, y + h / 2 * k1)
    k3 = rhs(r + h / 2, y + h / 2 * k2)
    k4 = rhs(r + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
