"""Hopf, Abresch-Rosenberg and P quadratic differentials and the audits built on them."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .fundamental import FundamentalField, ResidualReport, check_all
from .grid import ScalarField, d_s, d_t, d_z, d_zbar, residual_norm
from .space import SpaceParams

GUARD = 1e-9


class DifferentialKind(enum.Enum):
    Hopf = "Hopf"
    AR_Q = "AR_Q"
    AR_P = "AR_P"


@dataclass(frozen=True, eq=False)
class QuadraticDifferential:
    """Coefficient of a quadratic differential with respect to dz^2.

    ``guarded`` lists nodes dropped from the mask because |H + i tau| fell
    below the division guard.
    """

    kind: DifferentialKind
    coeff: ScalarField
    guarded: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=int))


def _guard_mask(data: FundamentalField) -> np.ndarray:
    return np.abs(data.H + 1j * data.space.tau) >= GUARD


def _q_values(data: FundamentalField, ok: np.ndarray) -> np.ndarray:
    denom = np.where(ok, data.H + 1j * data.space.tau, 1.0)
    return 2 * data.p - data.space.bundle_defect * data.A**2 / denom


def abresch_rosenberg(data: FundamentalField) -> QuadraticDifferential:
    """Q = 2p - (kappa - 4 tau^2) A^2 / (H + i tau), node by node."""
    ok = _guard_mask(data)
    coeff = ScalarField(data.grid, _q_values(data, ok), ok)
    return QuadraticDifferential(DifferentialKind.AR_Q, coeff, np.argwhere(~ok))


def p_differential(data: FundamentalField) -> QuadraticDifferential:
    return QuadraticDifferential(DifferentialKind.Hopf, data.field("p"))


def ar_P(data: FundamentalField) -> QuadraticDifferential:
    """P = (H + i tau) Q, the older normalization, constant -1/4 on the ex31 family."""
    ok = _guard_mask(data)
    vals = (data.H + 1j * data.space.tau) * _q_values(data, ok)
    return QuadraticDifferential(DifferentialKind.AR_P, ScalarField(data.grid, vals, ok), np.argwhere(~ok))


def holomorphy_residual(qd: QuadraticDifferential) -> dict:
    return residual_norm(d_zbar(qd.coeff))


def codazzi_Q_residual(data: FundamentalField) -> ScalarField:
    """Q_zbar - lambda H_z - (kappa - 4 tau^2) H_zbar A^2 / (H + i tau)^2."""
    q = abresch_rosenberg(data).coeff
    lam, u, H, p, A = data.fields
    ok = _guard_mask(data)
    shifted = ScalarField(data.grid, np.where(ok, data.H + 1j * data.space.tau, 1.0), ok)
    return d_zbar(q) - lam * d_z(H) - data.space.bundle_defect * d_zbar(H) * A**2 / shifted**2


def differential_norms(data: FundamentalField) -> dict:
    """Holomorphy norms of Q and P, as attached to residual reports."""
    return {
        "Q_holomorphy": holomorphy_residual(abresch_rosenberg(data)),
        "P_holomorphy": holomorphy_residual(ar_P(data)),
    }


class PreconditionError(ValueError):
    """Input data do not meet an audit's entry condition."""


@dataclass
class ZeroQAudit:
    passed: bool
    spread: float
    bound: float
    max_abs_Q: float
    report: ResidualReport


def zero_Q_cmc_audit(data: FundamentalField, tol) -> ZeroQAudit:
    """Corroborate that vanishing Q forces constant H on the given data.

    Requires max |Q| <= tol (PreconditionError otherwise). Passes when the
    data are integrable at ``tol`` and the spread max |H - mean H| stays
    below ten times the Q tolerance. A failure flags inconsistent input, it
    is not evidence against the statement.
    """
    qd = abresch_rosenberg(data)
    tol_q = tol if isinstance(tol, (int, float)) else tol.algebraic
    max_q = float(np.abs(qd.coeff.values[qd.coeff.valid]).max())
    if max_q > tol_q:
        raise PreconditionError(f"max |Q| = {max_q:.3e} exceeds {tol_q:g}; the audit needs Q close to 0")
    report = check_all(data, tol)
    spread = float(np.abs(data.H - data.H.mean()).max())
    bound = 10.0 * tol_q
    return ZeroQAudit(report.passed and spread <= bound, spread, bound, max_q, report)


class Feasibility(enum.Enum):
    CMCOnly = "CMCOnly"
    NonCMCExists = "NonCMCExists"
    Unknown = "Unknown"


@dataclass(frozen=True)
class FeasibilityVerdict:
    tag: Feasibility
    allowed_H_interval: tuple[float, float] | None
    citation: str

    def to_dict(self) -> dict:
        return {
            "tag": self.tag.value,
            "allowed_H_interval": list(self.allowed_H_interval) if self.allowed_H_interval else None,
            "citation": self.citation,
        }


def feasibility_audit(space: SpaceParams) -> FeasibilityVerdict:
    """Can a non-CMC surface with holomorphic Q live in this space?

    Any such surface needs 4 (H^2 + tau^2) <= |kappa - 4 tau^2|. The
    interval returned is the range of H allowed by that inequality.
    """
    k, t2 = space.kappa, space.tau**2
    d = k - 4 * t2
    if d < 0 and k >= 0:
        clause = "Heisenberg space" if k == 0 else "kappa >= 0 with kappa - 4 tau^2 < 0"
        return FeasibilityVerdict(Feasibility.CMCOnly, None, f"{clause}: the H-inequality has no solution")
    if d > 0 and k - 8 * t2 <= 0:
        return FeasibilityVerdict(
            Feasibility.CMCOnly, None, "Berger sphere with 0 < kappa/8 <= tau^2: every surface with holomorphic Q is CMC"
        )
    if d < 0:
        half = math.sqrt(-k) / 2
        clause = (
            "H^2 x R: CMC, or one of the rotational families with Q = 1 (ex31, ex32)"
            if t2 == 0
            else "universal cover of PSL(2,R): CMC, or the implicit family with Q = 1 (ex33)"
        )
        return FeasibilityVerdict(Feasibility.NonCMCExists, (-half, half), clause)
    half = math.sqrt(k - 8 * t2) / 2
    return FeasibilityVerdict(
        Feasibility.Unknown, (-half, half), "undecided: S^2 x R and Berger spheres with 0 < 8 tau^2 < kappa"
    )


STRUCTURE_IDENTITIES = ("main1", "main4", "main5", "main7", "main8", "main9")


def non_cmc_structure_residuals(data: FundamentalField, use_exact_derivatives: bool = True) -> dict:
    """Residuals of the identities forced on non-CMC data normalized to Q = 1.

    Returns ``{name: {"max", "l2"}}`` for main1, main4, main5, main7, main8
    and main9, plus ``"excluded"`` (nodes dropped because H_z, H or
    4H^2 + kappa vanish there). When ``data.extras`` holds closed-form
    partials ``H_s`` and ``H_t`` they replace finite differences in the
    node-local identities; main9 always differentiates log(H^2 + tau^2)
    numerically. main5 compares |u|, since u is fixed only up to orientation.
    """
    space = data.space
    d = space.bundle_defect
    if d >= 0:
        raise PreconditionError(f"needs kappa - 4 tau^2 < 0, got {d}")
    if np.ptp(data.H) == 0.0:
        raise PreconditionError("H is constant; the identities concern non-CMC data")
    tau, kappa = space.tau, space.kappa
    lam, u, H, p, A = data.fields
    if use_exact_derivatives and "H_s" in data.extras and "H_t" in data.extras:
        Hs = ScalarField(data.grid, data.extras["H_s"])
        Ht = ScalarField(data.grid, data.extras["H_t"])
    else:
        Hs, Ht = d_s(H), d_t(H)
    Hz = (Hs - 1j * Ht) / 2
    abs_Hz2 = Hz.abs() ** 2
    shape = 4 * H**2 + kappa
    ok = (np.abs(Hz.values) > 1e-12) & (np.abs(data.H) > GUARD) & (np.abs(shape.values) > GUARD)
    excluded = np.argwhere(~ok & Hz.valid)
    safe = lambda f: ScalarField(f.grid, np.where(ok, f.values, 1.0), f.valid & ok)

    Hz_s, abs_Hz2_s, shape_s = safe(Hz), safe(abs_Hz2), safe(shape)
    H_s_ = safe(H)
    out = {}
    out["main1"] = 2 * p - 1 - d * A**2 / (H + 1j * tau)
    out["main4"] = 1 - u**2 - 4 * (H**2 + tau**2) / abs(d)
    out["main5"] = u.abs() - (shape / d).map(lambda v: np.sqrt(np.clip(v, 0.0, None)))
    out["main7"] = A - u * (H**2 + tau**2) / (4 * H_s_ * Hz_s)
    out["main8"] = tau * (Hs**2 - Ht**2) - 2 * H * Hs * Ht
    lhs = d_zbar(d_z((H**2 + tau**2).map(np.log)))
    rhs = (
        8 * H**2 * abs_Hz2_s / ((H**2 + tau**2) * shape_s)
        + Hz_s**2 * (H + 1j * tau) * shape_s / (4 * abs_Hz2_s * (H**2 + tau**2))
    )
    out["main9"] = lhs - rhs
    result = {name: residual_norm(f) for name, f in out.items()}
    result["excluded"] = excluded
    return result
