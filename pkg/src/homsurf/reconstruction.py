"""Rebuild a surface in the ambient chart from its fundamental data.

The adapted frame (E1, E2, N) with psi_s = sqrt(lambda) E1 and
psi_t = sqrt(lambda) E2 is transported by the Gauss-Weingarten system.
With II the second fundamental form in the (s, t) basis,

    II_ss = lambda H + 2 Re p,  II_tt = lambda H - 2 Re p,  II_st = -2 Im p,

and, writing D for the ambient covariant derivative and l = sqrt(lambda),

    D_s E1 = -(lambda_t / 2 lambda) E2 + (II_ss / l) N
    D_s E2 =  (lambda_t / 2 lambda) E1 + (II_st / l) N
    D_s N  = -(II_ss / l) E1 - (II_st / l) E2
    D_t E1 =  (lambda_s / 2 lambda) E2 + (II_st / l) N
    D_t E2 = -(lambda_s / 2 lambda) E1 + (II_tt / l) N
    D_t N  = -(II_st / l) E1 - (II_tt / l) E2

Only lambda, H and p drive the integration; u and A are recovered from
the result and compared with the input (the round trip).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .fundamental import FundamentalField
from .grid import ConformalGrid
from .ode import rk4_step
from .space import AmbientChart, DomainError

log = logging.getLogger(__name__)

DRIFT_TOL = 1e-6
DRIFT_LIMIT = 1e-3


class ReconstructionError(RuntimeError):
    pass


@dataclass
class FrameState:
    """A chart point with an adapted frame; E1, E2 tangent and N normal."""

    point: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    N: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.stack([self.point, self.E1, self.E2, self.N]).astype(float)

    @classmethod
    def from_array(cls, a: np.ndarray) -> "FrameState":
        return cls(*(np.array(a[k], dtype=float) for k in range(4)))

    def to_dict(self) -> dict:
        return {k: [float(c) for c in getattr(self, k)] for k in ("point", "E1", "E2", "N")}

    @classmethod
    def from_dict(cls, d: dict) -> "FrameState":
        return cls(*(np.asarray(d[k], dtype=float) for k in ("point", "E1", "E2", "N")))


@dataclass
class SurfaceMesh:
    grid: ConformalGrid
    points: np.ndarray  # (ns, nt, 3)
    frames: np.ndarray  # (ns, nt, 3, 3): E1, E2, N along axis 2
    chart: AmbientChart
    events: list = field(default_factory=list)
    recovered: FundamentalField | None = None

    @property
    def normals(self) -> np.ndarray:
        return self.frames[:, :, 2]


class DataInterpolant:
    """Quintic spline interpolation of the data, with first partials of lambda."""

    def __init__(self, data: FundamentalField):
        g = data.grid
        self.grid = g
        mk = lambda v: RectBivariateSpline(g.s, g.t, v, kx=5, ky=5, s=0)
        self._lam = mk(data.lam)
        self._H = mk(data.H)
        self._pr = mk(data.p.real)
        self._pi = mk(data.p.imag)
        self._ur = mk(data.u)
        self._Ar = mk(data.A.real)
        self._Ai = mk(data.A.imag)

    def __call__(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        lam = self._lam.ev(s, t)
        return {
            "lam": lam,
            "lam_s": self._lam.ev(s, t, dx=1),
            "lam_t": self._lam.ev(s, t, dy=1),
            "H": self._H.ev(s, t),
            "p": self._pr.ev(s, t) + 1j * self._pi.ev(s, t),
        }

    def u_A(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        return self._ur.ev(s, t), self._Ar.ev(s, t) + 1j * self._Ai.ev(s, t)


def second_fundamental_form(lam, H, p):
    """Real components (II_ss, II_tt, II_st) from lambda, H and p.

    They invert the complex relations II(d_z, d_z) = p and
    II(d_z, d_zbar) = lambda H / 2 with d_z = (d_s - i d_t) / 2.
    """
    lam_H = lam * H
    return lam_H + 2 * np.real(p), lam_H - 2 * np.real(p), -2 * np.imag(p)


def shape_operator(lam, H, p) -> np.ndarray:
    """Shape operator as a 2x2 matrix acting on (d_s, d_t) coordinates."""
    II_ss, II_tt, II_st = second_fundamental_form(lam, H, p)
    return np.array([[II_ss, II_st], [II_st, II_tt]]) / lam


def _frame_rhs(chart: AmbientChart, interp: DataInterpolant, direction: str, fixed):
    """Right-hand side for states of shape (m, 4, 3) moving in ``direction``."""

    def rhs(r, Y):
        s, t = (r, fixed) if direction == "s" else (fixed, r)
        d = interp(s, t)
        lam = np.broadcast_to(d["lam"], Y.shape[:1])
        sq = np.sqrt(lam)
        II_ss, II_tt, II_st = second_fundamental_form(lam, d["H"], d["p"])
        x, E1, E2, N = Y[:, 0], Y[:, 1], Y[:, 2], Y[:, 3]
        dx = sq[:, None] * (E1 if direction == "s" else E2)
        gamma = chart.christoffel(x)
        conn = lambda V: np.einsum("mkij,mi,mj->mk", gamma, dx, V)
        c = lambda v: np.broadcast_to(v, Y.shape[:1])[:, None]
        if direction == "s":
            w = d["lam_t"] / (2 * lam)
            a, b = II_ss / sq, II_st / sq
            dE1 = -conn(E1) - c(w) * E2 + c(a) * N
            dE2 = -conn(E2) + c(w) * E1 + c(b) * N
            dN = -conn(N) - c(a) * E1 - c(b) * E2
        else:
            w = d["lam_s"] / (2 * lam)
            a, b = II_st / sq, II_tt / sq
            dE1 = -conn(E1) + c(w) * E2 + c(a) * N
            dE2 = -conn(E2) - c(w) * E1 + c(b) * N
            dN = -conn(N) - c(a) * E1 - c(b) * E2
        return np.stack([dx, dE1, dE2, dN], axis=1)

    return rhs


def orthonormality_drift(chart: AmbientChart, Y: np.ndarray) -> np.ndarray:
    """max |F^T G F - I| per state, F = [E1, E2, N]."""
    G = chart.metric_tensor(Y[:, 0])
    F = Y[:, 1:4]
    gram = np.einsum("mai,mij,mbj->mab", F, G, F)
    return np.abs(gram - np.eye(3)).max(axis=(1, 2))


def _reorthonormalize(chart: AmbientChart, Y: np.ndarray, rows: np.ndarray) -> np.ndarray:
    Y = Y.copy()
    G = chart.metric_tensor(Y[rows, 0])
    for k, m in enumerate(rows):
        basis = []
        for v in Y[m, 1:4]:
            for b in basis:
                v = v - (v @ G[k] @ b) * b
            basis.append(v / np.sqrt(v @ G[k] @ v))
        Y[m, 1:4] = basis
    return Y


class _Stepper:
    def __init__(self, chart, interp, events):
        self.chart, self.interp, self.events = chart, interp, events

    def advance(self, Y, direction, r0, h, fixed, where=""):
        try:
            Y = rk4_step(_frame_rhs(self.chart, self.interp, direction, fixed), r0, Y, h)
        except DomainError as exc:
            raise ReconstructionError(
                f"surface left the chart domain while integrating in {direction} {where}: {exc}"
            ) from exc
        if not np.all(self.chart.contains(Y[:, 0])):
            raise ReconstructionError(f"surface left the chart domain while integrating in {direction} {where}")
        drift = orthonormality_drift(self.chart, Y)
        worst = float(drift.max())
        if worst > DRIFT_LIMIT:
            raise ReconstructionError(
                f"frame drift {worst:.3e} exceeds {DRIFT_LIMIT:g} at {direction}={r0 + h:.6g} {where}; "
                "the data are probably not integrable"
            )
        if worst > DRIFT_TOL:
            rows = np.flatnonzero(drift > DRIFT_TOL)
            msg = f"re-orthonormalized {len(rows)} frame(s) at {direction}={r0 + h:.6g}, drift {worst:.3e}"
            log.warning(msg)
            self.events.append(msg)
            Y = _reorthonormalize(self.chart, Y, rows)
        return Y


def default_seed(data: FundamentalField, chart: AmbientChart, point=(0.0, 0.0, 0.0)) -> FrameState:
    """Frame at ``point`` matching u and A at the first grid node.

    The data fix the components of the vertical field in the frame,
    xi = a1 E1 + a2 E2 + u N with a1 - i a2 = 2 A / sqrt(lambda). The
    remaining rotation about xi is chosen so that E1 projects onto the
    horizontal lift of d/dx.
    """
    point = np.asarray(point, dtype=float)
    lam, u, A = data.lam[0, 0], data.u[0, 0], data.A[0, 0]
    v = np.array([2 * A.real / np.sqrt(lam), -2 * A.imag / np.sqrt(lam), u])
    v = v / np.linalg.norm(v)
    mu = chart.conformal_factor(point)
    x, y = point[0], point[1]
    tau = chart.tau
    F1 = np.array([1 / mu, 0.0, -tau * y])
    F2 = np.array([0.0, 1 / mu, tau * x])
    F3 = np.array([0.0, 0.0, 1.0])
    m0 = np.hypot(v[1], v[2])
    if m0 > 1e-12:
        M = np.array([
            [m0, -v[0] * v[1] / m0, -v[0] * v[2] / m0],
            [0.0, v[2] / m0, -v[1] / m0],
            v,
        ])
    else:
        # E1 is vertical; pick E2 along the horizontal lift of d/dx
        M = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, v[0]], [v[0], 0.0, 0.0]])
    basis = np.stack([F1, F2, F3], axis=1)
    E = basis @ M
    log.info("seed gauge: E1 projects onto the horizontal lift of d/dx at %s", point.tolist())
    return FrameState(point, E[:, 0], E[:, 1], E[:, 2])


def _mesh_grid(data: FundamentalField, step: float) -> ConformalGrid:
    g = data.grid
    span_s = (g.ns - 1) * g.ds
    span_t = (g.nt - 1) * g.dt
    ns = int(np.floor(span_s / step + 1e-9)) + 1
    nt = int(np.floor(span_t / step + 1e-9)) + 1
    return ConformalGrid(g.s0, g.t0, step, step, ns, nt)


def integrate_surface(
    data: FundamentalField,
    chart: AmbientChart,
    seed: FrameState | None = None,
    step: float = 1e-2,
) -> SurfaceMesh:
    """Integrate the frame over the data rectangle: first column in t, then every row in s."""
    if chart.params != data.space:
        raise ValueError("chart and data belong to different spaces")
    seed = default_seed(data, chart) if seed is None else seed
    mg = _mesh_grid(data, step)
    interp = DataInterpolant(data)
    events: list = []
    stepper = _Stepper(chart, interp, events)
    Y = seed.as_array()[None]
    column = [Y[0]]
    for j in range(mg.nt - 1):
        Y = stepper.advance(Y, "t", mg.t[j], step, mg.s0, where="(first column)")
        column.append(Y[0])
    rows = np.array(column)
    out = np.empty((mg.ns, mg.nt, 4, 3))
    out[0] = rows
    t_nodes = mg.t
    for i in range(mg.ns - 1):
        rows = stepper.advance(rows, "s", mg.s[i], step, t_nodes)
        out[i + 1] = rows
    return SurfaceMesh(mg, out[:, :, 0].copy(), out[:, :, 1:4].copy(), chart, events)


def _walk(stepper, Y, direction, start, stop, step, fixed):
    n = int(round((stop - start) / step))
    for k in range(n):
        Y = stepper.advance(Y, direction, start + k * step, step, fixed)
    return Y


def path_independence_check(
    data: FundamentalField, chart: AmbientChart, seed: FrameState | None = None, step: float = 1e-2
) -> dict:
    """Integrate to the far corner along both boundary paths and compare.

    Returns chart distance of the end points, Frobenius distance of the
    end frames, and their sum as ``"discrepancy"``.
    """
    seed = default_seed(data, chart) if seed is None else seed
    mg = _mesh_grid(data, step)
    s0, s1 = mg.s0, mg.s[-1]
    t0, t1 = mg.t0, mg.t[-1]
    stepper = _Stepper(chart, DataInterpolant(data), [])
    Y0 = seed.as_array()[None]
    a = _walk(stepper, _walk(stepper, Y0, "s", s0, s1, step, t0), "t", t0, t1, step, s1)
    b = _walk(stepper, _walk(stepper, Y0, "t", t0, t1, step, s0), "s", s0, s1, step, t1)
    dp = float(np.linalg.norm(a[0, 0] - b[0, 0]))
    dF = float(np.linalg.norm(a[0, 1:] - b[0, 1:]))
    return {"point": dp, "frame": dF, "discrepancy": dp + dF}


def _fd(arr: np.ndarray, h: float, axis: int) -> np.ndarray:
    return np.gradient(arr, h, axis=axis, edge_order=2)


def _interior(mask_shape):
    m = np.zeros(mask_shape, dtype=bool)
    m[1:-1, 1:-1] = True
    return m


def verify_reconstruction(mesh: SurfaceMesh, data: FundamentalField) -> dict:
    """Compare what the mesh encodes with the data it was built from.

    Tangent vectors come from central differences of the mesh points, so
    everything except u is judged on interior nodes. Reports the largest
    relative deviation of the induced metric from lambda |dz|^2, and the
    largest |<N, xi> - u| and |<xi, psi_z> - A|; for tau = 0 also
    |h_z - A| with h the height coordinate.
    """
    chart = mesh.chart
    g = mesh.grid
    S, T = g.mesh()
    u_ref, A_ref = DataInterpolant(data).u_A(S, T)
    lam_ref = DataInterpolant(data)(S, T)["lam"]
    P = mesh.points
    Ps, Pt = _fd(P, g.ds, 0), _fd(P, g.dt, 1)
    G = chart.metric_tensor(P)
    gss = np.einsum("...i,...ij,...j->...", Ps, G, Ps)
    gtt = np.einsum("...i,...ij,...j->...", Pt, G, Pt)
    gst = np.einsum("...i,...ij,...j->...", Ps, G, Pt)
    inner = _interior(g.shape)
    metric_dev = np.maximum.reduce([np.abs(gss - lam_ref), np.abs(gtt - lam_ref), np.abs(gst)]) / lam_ref
    xi_low = G[..., 2, :]  # <xi, v> = G[z, :] . v
    u_rec = np.einsum("...i,...i->...", xi_low, mesh.normals)
    A_rec = 0.5 * (np.einsum("...i,...i->...", xi_low, Ps) - 1j * np.einsum("...i,...i->...", xi_low, Pt))
    report = {
        "metric_rel": float(metric_dev[inner].max()),
        "u": float(np.abs(u_rec - u_ref).max()),
        "A": float(np.abs(A_rec - A_ref)[inner].max()),
        "drift": float(orthonormality_drift(chart, np.concatenate(
            [P.reshape(-1, 1, 3), mesh.frames.reshape(-1, 3, 3)], axis=1)).max()),
        "events": len(mesh.events),
    }
    if chart.tau == 0:
        hz = 0.5 * (_fd(P[..., 2], g.ds, 0) - 1j * _fd(P[..., 2], g.dt, 1))
        report["h_z"] = float(np.abs(hz - A_ref)[inner].max())
    return report


def extract_fundamental_data(mesh: SurfaceMesh) -> FundamentalField:
    """Fundamental data read back from the mesh by finite differences.

    lambda is the mean of g_ss and g_tt, u and A come from the frame and the
    tangent vectors, and the second fundamental form from the covariant
    derivative of N. Edge nodes use one-sided second-order differences.
    """
    chart = mesh.chart
    g = mesh.grid
    P, N = mesh.points, mesh.normals
    Ps, Pt = _fd(P, g.ds, 0), _fd(P, g.dt, 1)
    G = chart.metric_tensor(P)
    gamma = chart.christoffel(P)
    ip = lambda a, b: np.einsum("...i,...ij,...j->...", a, G, b)
    lam = 0.5 * (ip(Ps, Ps) + ip(Pt, Pt))
    DsN = _fd(N, g.ds, 0) + np.einsum("...kij,...i,...j->...k", gamma, Ps, N)
    DtN = _fd(N, g.dt, 1) + np.einsum("...kij,...i,...j->...k", gamma, Pt, N)
    II_ss = -ip(Ps, DsN)
    II_tt = -ip(Pt, DtN)
    II_st = -0.5 * (ip(Ps, DtN) + ip(Pt, DsN))
    H = (II_ss + II_tt) / (2 * lam)
    p = (II_ss - II_tt - 2j * II_st) / 4
    xi_low = G[..., 2, :]
    u = np.einsum("...i,...i->...", xi_low, N)
    A = 0.5 * (np.einsum("...i,...i->...", xi_low, Ps) - 1j * np.einsum("...i,...i->...", xi_low, Pt))
    rec = FundamentalField(chart.params, g, lam, np.clip(u, -1, 1), H, p, A, tol_alg=None)
    mesh.recovered = rec
    return rec
