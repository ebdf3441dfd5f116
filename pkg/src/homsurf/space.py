"""Homogeneous 3-manifolds E(kappa, tau) in the rotationally symmetric chart.

The chart has coordinates (x, y, z) and metric

    ds^2 = mu^2 (dx^2 + dy^2) + (tau mu (y dx - x dy) + dz)^2,
    mu(x, y) = 1 / (1 + kappa (x^2 + y^2) / 4).

The vertical Killing field is d/dz, and (d/dx, d/dy, d/dz) is positively
oriented. Every function here accepts points of shape ``(..., 3)`` and
broadcasts over the leading axes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

MU_MAX = 1e6


class DomainError(ValueError):
    """A point lies outside the chart domain."""


class SpaceFamily(enum.Enum):
    ProductH2xR = "ProductH2xR"
    ProductS2xR = "ProductS2xR"
    Heisenberg = "Heisenberg"
    BergerSphere = "BergerSphere"
    PSL2R_cover = "PSL2R_cover"


@dataclass(frozen=True)
class SpaceParams:
    """Base curvature ``kappa`` and bundle curvature ``tau``."""

    kappa: float
    tau: float

    def __post_init__(self):
        k, t = float(self.kappa), float(self.tau)
        if not (math.isfinite(k) and math.isfinite(t)):
            raise ValueError(f"kappa and tau must be finite, got ({k}, {t})")
        if k - 4.0 * t * t == 0.0:
            raise ValueError(f"kappa - 4 tau^2 must be nonzero, got kappa={k}, tau={t}")
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "tau", t)

    @property
    def bundle_defect(self) -> float:
        """kappa - 4 tau^2, the constant that couples u and A to the Codazzi equation."""
        return self.kappa - 4.0 * self.tau**2

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "tau": self.tau}

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceParams":
        return cls(float(d["kappa"]), float(d["tau"]))


def classify(params: SpaceParams) -> SpaceFamily:
    k, t = params.kappa, params.tau
    if t == 0.0:
        # kappa == 0 with tau == 0 is excluded by SpaceParams
        return SpaceFamily.ProductS2xR if k > 0 else SpaceFamily.ProductH2xR
    if k == 0.0:
        return SpaceFamily.Heisenberg
    return SpaceFamily.BergerSphere if k > 0 else SpaceFamily.PSL2R_cover


@dataclass(frozen=True)
class _RawParams:
    kappa: float
    tau: float


@dataclass(frozen=True)
class AmbientChart:
    params: SpaceParams

    @classmethod
    def raw(cls, kappa: float, tau: float) -> "AmbientChart":
        """Chart for any (kappa, tau), including flat R^3 at (0, 0).

        SpaceParams rejects kappa = 4 tau^2, but the chart formulas make
        sense there too; this constructor exists to test them in the flat
        case.
        """
        return cls(_RawParams(float(kappa), float(tau)))

    @property
    def kappa(self) -> float:
        return self.params.kappa

    @property
    def tau(self) -> float:
        return self.params.tau

    def contains(self, point) -> np.ndarray:
        """Boolean mask of points inside the usable domain."""
        p = np.asarray(point, dtype=float)
        r2 = p[..., 0] ** 2 + p[..., 1] ** 2
        denom = 1.0 + self.kappa * r2 / 4.0
        ok = np.all(np.isfinite(p), axis=-1) & (denom > 1.0 / MU_MAX)
        return ok

    def _check(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        if p.shape[-1] != 3:
            raise ValueError(f"points must have trailing dimension 3, got shape {p.shape}")
        inside = self.contains(p)
        if not np.all(inside):
            where = p.reshape(-1, 3)[np.flatnonzero(~np.ravel(inside))[0]]
            raise DomainError(
                f"point {tuple(float(c) for c in where)} is outside the chart domain "
                f"(kappa={self.kappa}, conformal factor must stay below {MU_MAX:g})"
            )
        return p

    def conformal_factor(self, point):
        p = np.asarray(point, dtype=float)
        return 1.0 / (1.0 + self.kappa * (p[..., 0] ** 2 + p[..., 1] ** 2) / 4.0)

    def _pieces(self, p):
        """mu, its gradient, the connection 1-form theta and its gradient."""
        x, y = p[..., 0], p[..., 1]
        k, tau = self.kappa, self.tau
        mu = 1.0 / (1.0 + k * (x * x + y * y) / 4.0)
        mu_x = -0.5 * k * x * mu * mu
        mu_y = -0.5 * k * y * mu * mu
        zero = np.zeros_like(x)
        one = np.ones_like(x)
        theta = np.stack([tau * mu * y, -tau * mu * x, one], axis=-1)
        # dtheta[..., m, j] = d theta_j / d coordinate m
        dtheta = np.stack(
            [
                np.stack([tau * mu_x * y, -tau * (mu_x * x + mu), zero], axis=-1),
                np.stack([tau * (mu_y * y + mu), -tau * mu_y * x, zero], axis=-1),
                np.stack([zero, zero, zero], axis=-1),
            ],
            axis=-2,
        )
        return mu, mu_x, mu_y, theta, dtheta

    def metric_tensor(self, point) -> np.ndarray:
        p = self._check(point)
        mu, _, _, theta, _ = self._pieces(p)
        g = theta[..., :, None] * theta[..., None, :]
        g[..., 0, 0] += mu * mu
        g[..., 1, 1] += mu * mu
        return g

    def inverse_metric(self, point) -> np.ndarray:
        p = self._check(point)
        x, y = p[..., 0], p[..., 1]
        mu = self.conformal_factor(p)
        tau = self.tau
        zero = np.zeros_like(x)
        # orthonormal frame e1 = (dx - tau mu y dz)/mu, e2 = (dy + tau mu x dz)/mu, e3 = dz
        e1 = np.stack([1.0 / mu, zero, -tau * y], axis=-1)
        e2 = np.stack([zero, 1.0 / mu, tau * x], axis=-1)
        e3 = np.stack([zero, zero, np.ones_like(x)], axis=-1)
        return sum(e[..., :, None] * e[..., None, :] for e in (e1, e2, e3))

    def metric_derivative(self, point) -> np.ndarray:
        """dg[..., m, i, j] = d g_ij / d coordinate m, in closed form."""
        p = self._check(point)
        mu, mu_x, mu_y, theta, dtheta = self._pieces(p)
        dg = dtheta[..., :, :, None] * theta[..., None, None, :] + theta[..., None, :, None] * dtheta[..., :, None, :]
        for m, dmu in ((0, mu_x), (1, mu_y)):
            dg[..., m, 0, 0] += 2.0 * mu * dmu
            dg[..., m, 1, 1] += 2.0 * mu * dmu
        return dg

    def christoffel(self, point) -> np.ndarray:
        """Gamma[..., k, i, j], symmetric in (i, j)."""
        dg = self.metric_derivative(point)
        ginv = self.inverse_metric(point)
        # first kind: Gamma_{l i j} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
        first = 0.5 * (
            np.einsum("...ijl->...lij", dg)
            + np.einsum("...jil->...lij", dg)
            - dg
        )
        return np.einsum("...kl,...lij->...kij", ginv, first)

    def vertical_field(self, point) -> np.ndarray:
        p = self._check(point)
        xi = np.zeros_like(p)
        xi[..., 2] = 1.0
        return xi

    def inner(self, point, v, w) -> np.ndarray:
        g = self.metric_tensor(point)
        return np.einsum("...i,...ij,...j->...", np.asarray(v, float), g, np.asarray(w, float))

    def cross_product(self, point, v, w) -> np.ndarray:
        """Riemannian cross product: <v x w, u> = vol(v, w, u)."""
        p = self._check(point)
        mu = self.conformal_factor(p)
        lower = (mu * mu)[..., None] * np.cross(np.asarray(v, float), np.asarray(w, float))
        return np.einsum("...ij,...j->...i", self.inverse_metric(p), lower)

    def covariant_derivative_xi(self, point, X) -> np.ndarray:
        """Ambient covariant derivative of the vertical field along X."""
        gamma = self.christoffel(point)
        return np.einsum("...ki,...i->...k", gamma[..., :, :, 2], np.asarray(X, float))

    def killing_residual(self, point, X) -> np.ndarray:
        """nabla_X xi - tau X x xi; vanishes identically for this chart."""
        xi = self.vertical_field(point)
        return self.covariant_derivative_xi(point, X) - self.tau * self.cross_product(point, X, xi)

    def sample_points(self, n: int, rng: np.random.Generator, radius: float = 1.5, zspan: float = 2.0) -> np.ndarray:
        """Uniform random interior points, kept clear of the disk boundary when kappa < 0."""
        if self.kappa < 0:
            radius = min(radius, 0.9 * 2.0 / math.sqrt(-self.kappa))
        r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
        phi = rng.uniform(0.0, 2 * math.pi, n)
        z = rng.uniform(-zspan, zspan, n)
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def chart_for(params: SpaceParams) -> AmbientChart:
    return AmbientChart(params)
