"""Generators for the exceptional non-CMC families and a CMC control.

* ``gen_example31``: rotational surfaces in S^2 x R and H^2 x R with
  constant P = (H + i tau) Q = -1/4 (closed forms).
* ``gen_example32``: rotational surfaces in H^2 x R with Q = 1, from the
  ODE alpha'' = alpha'^2 cot(alpha) - delta cos(alpha).
* ``gen_example33``: the tau != 0 family with Q = 1 built from
  H_t = f(H) H_s, an ODE for g and the implicit relation s + t f(H) = g(H).
* ``gen_cmc_control``: a vertical cylinder with constant data.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .fundamental import FundamentalField
from .grid import ConformalGrid
from .ode import IntegrationError, RootFindingError, Trajectory, rk4_integrate, safeguarded_newton
from .space import SpaceParams


class GenerationError(ValueError):
    """Parameters or the integrated solution leave the family's valid region."""


def gen_cmc_control(space: SpaceParams, c: float, grid: ConformalGrid) -> FundamentalField:
    """Constant data lambda=1, u=0, H=c, p=-(c - i tau)/2, A=1/2."""
    if space.tau == 0 and c == 0:
        raise GenerationError("c = 0 with tau = 0 is a minimal surface, which is excluded")
    one = np.ones(grid.shape)
    return FundamentalField(
        space, grid, one, 0 * one, c * one,
        -(c - 1j * space.tau) / 2 * one, 0.5 * one.astype(complex),
    )


# ---------------------------------------------------------------- ex31: rotational, closed form


@dataclass(frozen=True)
class Example31Params:
    a: float
    b: float
    kappa: int = 1
    margin: float = 1e-3

    def __post_init__(self):
        if self.a == 0:
            raise GenerationError("a must be nonzero")
        if self.kappa not in (-1, 1):
            raise GenerationError(f"kappa must be +1 or -1, got {self.kappa}")


def example31_closed_form(a: float, b: float, kappa: int, s) -> dict:
    """Closed-form data at parameter values ``s`` (no domain checks).

    ``s`` may be complex, which lets callers take complex-step derivatives.

    The sign of u follows the sign of h' so that the data are integrable
    for both values of kappa.
    """
    x = a * np.asarray(s) + b
    hp = -1 / np.sinh(x) if kappa == -1 else 1 / np.cosh(x)
    u = np.sign(np.real(hp)) * a / math.sqrt(1 + a * a)
    lam = (1 + a * a) * hp**2
    H = -np.sqrt(-kappa + 1 / hp**2) / (2 * math.sqrt(1 + a * a))
    return {"h_prime": hp, "u": u, "lam": lam, "H": H, "p": -lam * H / 2, "A": hp / 2}


def example31_h(a: float, b: float, kappa: int, s) -> np.ndarray:
    """An antiderivative of h' (additive constant left free)."""
    x = a * np.asarray(s, dtype=float) + b
    if kappa == 1:
        return np.arctan(np.sinh(x)) / a
    return -np.log(np.tanh(x / 2)) / a


def example31_ode_rhs(a: float, kappa: int):
    """Right-hand side of y' = -a y sqrt(1 - kappa y^2), solved by h'."""
    return lambda s, y: -a * y * np.sqrt(1 - kappa * y * y)


def gen_example31(params: Example31Params, grid: ConformalGrid) -> FundamentalField:
    a, b, kappa = params.a, params.b, params.kappa
    S, _ = grid.mesh()
    arg = a * S + b
    if arg.min() < params.margin:
        i, j = np.argwhere(arg < params.margin)[0]
        raise GenerationError(
            f"a s + b must stay >= {params.margin:g} on the grid; equals {arg[i, j]:.4g} at s={S[i, j]:.6g}"
        )
    d = example31_closed_form(a, b, kappa, S)
    h = example31_h(a, b, kappa, S)
    return FundamentalField(
        SpaceParams(kappa, 0.0), grid, d["lam"], d["u"] * np.ones(grid.shape), d["H"],
        d["p"].astype(complex), d["A"].astype(complex),
        extras={"h": h - h[0, 0]},
    )


# ---------------------------------------------------------------- ex32: rotational, ODE in alpha


@dataclass(frozen=True)
class Example32Params:
    delta: int = 1
    alpha0: float = math.pi / 2
    alpha_prime0: float = 1.0
    step: float = 1e-3

    def __post_init__(self):
        if self.delta not in (-1, 1):
            raise GenerationError(f"delta must be +1 or -1, got {self.delta}")
        if not 0 < self.alpha0 < math.pi:
            raise GenerationError(f"alpha(0) must lie in (0, pi), got {self.alpha0}")
        if self.alpha_prime0 == 0:
            raise GenerationError("alpha'(0) must be nonzero (lambda = 1/alpha'^2)")


def example32_rhs(delta: int):
    """State (alpha, alpha', h) with h' the derivative of the height function."""

    def rhs(r, y):
        al, ap = y[0], y[1]
        return np.array([ap, ap * ap / math.tan(al) - delta * math.cos(al), math.sin(al) / ap])

    return rhs


def _example32_guard(r, y):
    if not 0 < y[0] < math.pi:
        return "alpha left (0, pi)"
    if y[1] == 0 or abs(y[1]) < 1e-12:
        return "alpha' reached 0"
    return None


def integrate_example32(params: Example32Params, r_range) -> Trajectory:
    """Integrate from r = 0 out to both ends of ``r_range``; raise if a guard trips."""
    rhs = example32_rhs(params.delta)
    y0 = [params.alpha0, params.alpha_prime0, 0.0]
    lo, hi = min(r_range[0], 0.0), max(r_range[1], 0.0)
    parts = []
    for end in (lo, hi):
        tr = rk4_integrate(rhs, y0, (0.0, end), params.step, event=_example32_guard)
        if tr.stopped:
            raise GenerationError(f"ex32 integration stopped: {tr.stopped}")
        parts.append(tr)
    back, fwd = parts
    return Trajectory(
        np.concatenate([back.r[:0:-1], fwd.r]),
        np.concatenate([back.y[:0:-1], fwd.y]),
        np.concatenate([back.dy[:0:-1], fwd.dy]),
    )


def gen_example32(params: Example32Params, grid: ConformalGrid) -> FundamentalField:
    """Data on ``grid``; r is s when delta = 1 and t when delta = -1."""
    delta = params.delta
    r_nodes = grid.s if delta == 1 else grid.t
    traj = integrate_example32(params, (r_nodes.min(), r_nodes.max()))
    st = traj(r_nodes)
    al, ap, h = st[:, 0], st[:, 1], st[:, 2]
    sq = 1.0 if delta == 1 else 1j
    lam = 1 / ap**2
    H = np.sin(al) / 2
    u = np.cos(al)
    p = 0.5 - delta * np.sin(al) / (4 * ap**2)
    A = sq * np.sin(al) / (2 * ap)
    H_r = np.cos(al) * ap / 2

    def spread(v):
        v = np.asarray(v)
        return np.broadcast_to(v[:, None] if delta == 1 else v[None, :], grid.shape).copy()

    zeros = np.zeros(grid.shape)
    extras = {
        "h": spread(h),
        "H_s": spread(H_r) if delta == 1 else zeros,
        "H_t": zeros if delta == 1 else spread(H_r),
    }
    return FundamentalField(
        SpaceParams(-1.0, 0.0), grid, spread(lam), spread(u), spread(H),
        spread(p).astype(complex), spread(A).astype(complex), extras=extras,
    )


# ---------------------------------------------------------------- ex33: implicit characteristics


@dataclass(frozen=True)
class Example33Params:
    kappa: float = -1.0
    tau: float = -0.3
    branch: int = 1
    H0: float = -0.3
    g0: float = 0.0
    g_prime0: float = 1.0
    step: float = 1e-3
    root_tol: float = 1e-12
    max_iter: int = 100

    def __post_init__(self):
        if not self.kappa < 0:
            raise GenerationError(f"kappa must be negative, got {self.kappa}")
        if self.tau == 0:
            raise GenerationError("tau must be nonzero")
        if self.branch not in (-1, 1):
            raise GenerationError(f"branch must be +1 or -1, got {self.branch}")
        if not 4 * self.H0**2 + self.kappa < 0:
            raise GenerationError(f"H0 must satisfy 4 H0^2 + kappa < 0, got H0={self.H0}")
        if self.H0 == 0:
            raise GenerationError("H0 must be nonzero (A divides by H)")
        if self.g_prime0 == 0:
            raise GenerationError("g'(H0) must be nonzero")

    @property
    def space(self) -> SpaceParams:
        return SpaceParams(self.kappa, self.tau)

    def bracket(self) -> tuple[float, float]:
        """Side of the admissible H-range (|H| < sqrt(-kappa)/2, H != 0) containing H0."""
        edge = math.sqrt(-self.kappa) / 2
        return (-edge + 1e-6, -1e-6) if self.H0 < 0 else (1e-6, edge - 1e-6)


def characteristic_slope(x, tau: float, branch: int = 1):
    """f, f', f'' for f(x) = -x/tau + branch sqrt(1 + (x/tau)^2).

    f solves tau f^2 + 2 x f - tau = 0, which turns H_z^2 (H + i tau) in R
    into H_t = f(H) H_s.
    """
    x = np.asarray(x, dtype=float)
    w = np.sqrt(1 + (x / tau) ** 2)
    f = -x / tau + branch * w
    f1 = -1 / tau + branch * x / (tau * tau * w)
    f2 = branch / (tau * tau * w**3)
    return f, f1, f2


def reduced_coefficients(H, kappa: float, tau: float, branch: int = 1):
    """(a, b) with H_ss = a(H) H_s^2 + b(H) along solutions of H_t = f(H) H_s.

    Obtained by substituting H_t = f H_s, H_tt = 2 f f' H_s^2 + f^2 H_ss into
    the first equation of the overdetermined system for H.
    """
    H = np.asarray(H, dtype=float)
    f, f1, _ = characteristic_slope(H, tau, branch)
    q = H * H + tau * tau
    shape = 4 * H * H + kappa
    L1 = 2 * H / q
    L2 = 2 * (tau * tau - H * H) / q**2
    one_f2 = 1 + f * f
    a = (8 * H * H * one_f2 / (q * shape) - 2 * L1 * f * f1 - L2 * one_f2) / (L1 * one_f2)
    b = (2 * f * shape / (tau * one_f2)) / (L1 * one_f2)
    return a, b


def characteristic_obstruction(H, kappa: float, tau: float, branch: int = 1):
    """Coefficient of t^3 in the compatibility identity for a t-independent g.

    A t-independent g with s + t f(H) = g(H) would need
    g'' - t f'' + a D + b D^3 = 0 for all t, D = g' - t f'. The t^3
    coefficient is -b f'^3; where it is nonzero no such g exists.
    """
    _, f1, _ = characteristic_slope(H, tau, branch)
    _, b = reduced_coefficients(H, kappa, tau, branch)
    return -b * f1**3


def example33_g_rhs(params: Example33Params, t: float):
    """g'' = t f'' - a D - b D^3 with D = g' - t f', state (g, g')."""
    kappa, tau, br = params.kappa, params.tau, params.branch

    def rhs(H, y):
        _, f1, f2 = characteristic_slope(H, tau, br)
        a, b = reduced_coefficients(H, kappa, tau, br)
        D = y[1] - t * f1
        return np.array([y[1], t * f2 - a * D - b * D**3])

    return rhs


def integrate_g(params: Example33Params, t: float) -> Trajectory:
    """g(.; t) on the maximal sub-interval of the bracket where D stays nonzero."""
    lo, hi = params.bracket()
    rhs = example33_g_rhs(params, t)
    sign0 = np.sign(params.g_prime0 - t * characteristic_slope(params.H0, params.tau, params.branch)[1])
    if sign0 == 0:
        raise GenerationError(f"g'(H0) - t f'(H0) vanishes at t={t}; H_s is singular")

    def guard(H, y):
        D = y[1] - t * characteristic_slope(H, params.tau, params.branch)[1]
        return None if np.sign(D) == sign0 else "g' - t f' changed sign"

    y0 = [params.g0, params.g_prime0]
    back = rk4_integrate(rhs, y0, (params.H0, lo), params.step, event=guard)
    fwd = rk4_integrate(rhs, y0, (params.H0, hi), params.step, event=guard)
    stopped = "; ".join(x for x in (back.stopped, fwd.stopped) if x) or None
    return Trajectory(
        np.concatenate([back.r[:0:-1], fwd.r]),
        np.concatenate([back.y[:0:-1], fwd.y]),
        np.concatenate([back.dy[:0:-1], fwd.dy]),
        stopped,
    )


def solve_implicit_H(g, f, s, t, bracket, tol: float = 1e-12, max_iter: int = 100):
    """Solve s + t f(H) = g(H) for H inside ``bracket``.

    ``g`` and ``f`` are callables returning ``(value, derivative)``. ``s``
    and ``t`` may be arrays; ``bracket`` is a pair of (broadcastable) ends
    on which the residual changes sign.
    """
    def F(H):
        return s + t * f(H)[0] - g(H)[0]

    def dF(H):
        return t * f(H)[1] - g(H)[1]

    try:
        return safeguarded_newton(F, dF, bracket[0], bracket[1], tol=tol, max_iter=max_iter)
    except RootFindingError as exc:
        raise GenerationError(f"implicit H: {exc}") from exc


def gen_example33(params: Example33Params, grid: ConformalGrid) -> FundamentalField:
    """Data from the implicit-characteristics construction.

    For every grid row t the g-ODE is integrated in H, H(s, t) is recovered
    from s + t f(H) = g(H), and the fields follow from H with the closed
    form partials H_s = 1/(g' - t f'), H_t = f(H) H_s. The returned field
    carries these partials in ``extras`` together with the integrated
    H-interval of every row.
    """
    kappa, tau, br = params.kappa, params.tau, params.branch
    space = params.space
    d = space.bundle_defect
    S, T = grid.mesh()
    H = np.empty(grid.shape)
    Hs = np.empty(grid.shape)
    intervals = np.empty((grid.nt, 2))
    fpair = lambda x: characteristic_slope(x, tau, br)[:2]
    for j, t in enumerate(grid.t):
        traj = integrate_g(params, float(t))
        intervals[j] = traj.interval
        gpair = lambda x, tr=traj: (tr(x)[..., 0], tr(x)[..., 1])
        # phi = g - t f is monotone on the integrated interval, so a node lies
        # inside exactly when s is between phi at the two ends.
        nodes = traj.r
        phi = traj.y[:, 0] - t * characteristic_slope(nodes, tau, br)[0]
        s_row = grid.s
        lo_phi, hi_phi = min(phi[0], phi[-1]), max(phi[0], phi[-1])
        outside = (s_row < lo_phi) | (s_row > hi_phi)
        if outside.any():
            i = int(np.flatnonzero(outside)[0])
            raise GenerationError(
                f"no root of s + t f(H) = g(H) at (s, t) = ({s_row[i]:.6g}, {t:.6g}): "
                f"g reaches only [{lo_phi:.6g}, {hi_phi:.6g}] "
                f"on H in [{nodes[0]:.6g}, {nodes[-1]:.6g}]" + (f" ({traj.stopped})" if traj.stopped else "")
            )
        order = np.argsort(phi)
        k = np.clip(np.searchsorted(phi[order], s_row), 1, len(nodes) - 1)
        lo_b, hi_b = nodes[order][k - 1], nodes[order][k]
        H[:, j] = solve_implicit_H(gpair, fpair, s_row, float(t), (lo_b, hi_b), params.root_tol, params.max_iter)
        f1 = characteristic_slope(H[:, j], tau, br)[1]
        Hs[:, j] = 1 / (traj(H[:, j])[:, 1] - t * f1)
    f = characteristic_slope(H, tau, br)[0]
    Ht = f * Hs
    shape = 4 * H**2 + kappa
    if not (shape < 0).all():
        i, j = np.argwhere(shape >= 0)[0]
        raise GenerationError(f"4 H^2 + kappa >= 0 at node ({i}, {j})")
    Hz = (Hs - 1j * Ht) / 2
    if (np.abs(Hz) == 0).any() or (H == 0).any():
        raise GenerationError("H_z or H vanishes on the patch")
    u = np.sqrt(shape / d)
    A = u * (H**2 + tau**2) / (4 * H * Hz)
    p = 0.5 * (1 + d * A**2 / (H + 1j * tau))
    lam = -np.abs(A) ** 2 * d / (H**2 + tau**2)
    return FundamentalField(
        space, grid, lam, u, H, p, A,
        extras={"H_s": Hs, "H_t": Ht, "g_interval": intervals},
    )


def params_to_dict(params) -> dict:
    return asdict(params)


@dataclass(frozen=True)
class CMCParams:
    kappa: float
    tau: float
    c: float

    def __post_init__(self):
        SpaceParams(self.kappa, self.tau)
        if self.tau == 0 and self.c == 0:
            raise GenerationError("c = 0 with tau = 0 is a minimal surface, which is excluded")


FAMILY_PARAMS = {
    "cmc": CMCParams,
    "ex31": Example31Params,
    "ex32": Example32Params,
    "ex33": Example33Params,
}


def generate(family: str, params, grid: ConformalGrid) -> FundamentalField:
    """Dispatch on the family name used by the command line."""
    if family == "cmc":
        return gen_cmc_control(SpaceParams(params.kappa, params.tau), params.c, grid)
    gens = {"ex31": gen_example31, "ex32": gen_example32, "ex33": gen_example33}
    if family not in gens:
        raise GenerationError(f"unknown family {family!r}; expected one of {sorted(FAMILY_PARAMS)}")
    return gens[family](params, grid)
