"""Fundamental data (lambda, u, H, p, A) of a conformally parametrized surface.

Residual functions return ScalarFields whose mask marks where the finite
differences were taken; algebraic residuals are valid on every node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ConformalGrid, ScalarField, d_z, d_zbar, residual_norm
from .space import SpaceParams

H_THRESHOLD = 1e-9
SCHEMA_VERSION = 1

EQUATIONS = ("C0", "C1", "C2", "C3", "C4", "Gauss")
_ORDER = {"C0": 1, "C1": 1, "C2": 1, "C3": 1, "C4": 0, "Gauss": 2}


class InvalidDataError(ValueError):
    """Fundamental data violate one of their pointwise invariants."""


def _first_bad(mask: np.ndarray) -> tuple[int, int]:
    i, j = np.argwhere(mask)[0]
    return int(i), int(j)


@dataclass(frozen=True, eq=False)
class FundamentalField:
    """Grid samples of (lambda, u, H, p, A) for a surface in E(kappa, tau).

    ``lam`` holds the conformal factor (``lambda`` is reserved in Python).
    ``extras`` may carry generator-side exact quantities, e.g. the closed
    form partials ``"H_s"`` and ``"H_t"``; nothing in the residual engine
    depends on them.
    """

    space: SpaceParams
    grid: ConformalGrid
    lam: np.ndarray
    u: np.ndarray
    H: np.ndarray
    p: np.ndarray
    A: np.ndarray
    tol_alg: float | None = 1e-8
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = self.grid.shape
        for name in ("lam", "u", "H"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise InvalidDataError(f"{name} has shape {arr.shape}, grid is {shape}")
            object.__setattr__(self, name, arr)
        for name in ("p", "A"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != shape:
                raise InvalidDataError(f"{name} has shape {arr.shape}, grid is {shape}")
            object.__setattr__(self, name, arr)
        for name in ("lam", "u", "H", "p", "A"):
            bad = ~np.isfinite(getattr(self, name))
            if bad.any():
                raise InvalidDataError(f"{name} is not finite at node {_first_bad(bad)}")
        if (self.lam <= 0).any():
            raise InvalidDataError(f"lambda must be positive; fails at node {_first_bad(self.lam <= 0)}")
        if (np.abs(self.u) > 1.0 + 1e-12).any():
            raise InvalidDataError(f"u must lie in [-1, 1]; fails at node {_first_bad(np.abs(self.u) > 1 + 1e-12)}")
        if self.space.tau == 0.0:
            small = np.abs(self.H) < H_THRESHOLD
            if small.any():
                raise InvalidDataError(
                    f"tau = 0 requires |H| >= {H_THRESHOLD:g} (minimal surfaces excluded); "
                    f"fails at node {_first_bad(small)}"
                )
        if self.tol_alg is not None:
            c4 = np.abs(4.0 * np.abs(self.A) ** 2 / self.lam - (1.0 - self.u**2))
            if (c4 > self.tol_alg).any():
                i, j = _first_bad(c4 > self.tol_alg)
                raise InvalidDataError(
                    f"algebraic constraint 4|A|^2/lambda = 1 - u^2 violated by {c4[i, j]:.3e} "
                    f"> {self.tol_alg:g} at node ({i}, {j})"
                )

    # ScalarField views
    def field(self, name: str) -> ScalarField:
        return ScalarField(self.grid, getattr(self, name))

    @property
    def fields(self):
        return tuple(self.field(n) for n in ("lam", "u", "H", "p", "A"))

    def replace(self, **changes) -> "FundamentalField":
        kw = dict(space=self.space, grid=self.grid, lam=self.lam, u=self.u, H=self.H,
                  p=self.p, A=self.A, tol_alg=self.tol_alg, extras=dict(self.extras))
        kw.update(changes)
        return FundamentalField(**kw)

    def magnitude(self) -> float:
        """Largest modulus among the five data fields."""
        return float(max(np.abs(getattr(self, n)).max() for n in ("lam", "u", "H", "p", "A")))


def flip_orientation(data: FundamentalField) -> FundamentalField:
    """Same surface with the opposite orientation.

    Uses the conformal parameter conj(z) (the grid is mirrored in ``t``) and
    the opposite normal, so u -> -u, H -> -H, p -> -conj(p), A -> conj(A).
    """
    g = data.grid
    mirrored = ConformalGrid(g.s0, -(g.t0 + (g.nt - 1) * g.dt), g.ds, g.dt, g.ns, g.nt)
    rev = lambda a: np.ascontiguousarray(a[:, ::-1])
    extras = {}
    if "H_s" in data.extras and "H_t" in data.extras:
        extras = {"H_s": -rev(data.extras["H_s"]), "H_t": rev(data.extras["H_t"])}
    return FundamentalField(
        data.space, mirrored, rev(data.lam), -rev(data.u), -rev(data.H),
        -np.conj(rev(data.p)), np.conj(rev(data.A)), data.tol_alg, extras,
    )


def residual_C1(data: FundamentalField) -> ScalarField:
    lam, u, H, p, A = data.fields
    return d_zbar(p) - lam / 2 * (d_z(H) + u * A * data.space.bundle_defect)


def residual_C2(data: FundamentalField) -> ScalarField:
    lam, u, H, p, A = data.fields
    return d_zbar(A) - u * lam / 2 * (H + 1j * data.space.tau)


def residual_C3(data: FundamentalField) -> ScalarField:
    lam, u, H, p, A = data.fields
    return d_z(u) + (H - 1j * data.space.tau) * A + 2 * p * A.conj() / lam


def residual_C4(data: FundamentalField) -> ScalarField:
    lam, u, H, p, A = data.fields
    return 4 * A.abs() ** 2 / lam - (1 - u**2)


def residual_C0(data: FundamentalField) -> ScalarField:
    lam, u, H, p, A = data.fields
    return d_z(A) - d_z(lam) / lam * A - u * p


def log_lambda_zzbar(data: FundamentalField) -> ScalarField:
    return d_zbar(d_z(data.field("lam").map(np.log)))


def gauss_residual(data: FundamentalField) -> ScalarField:
    lam, u, H, p, A = data.fields
    tau = data.space.tau
    return (
        log_lambda_zzbar(data)
        - 2 * p.abs() ** 2 / lam
        + lam / 2 * u**2 * data.space.bundle_defect
        + lam / 2 * (H**2 + tau**2)
    )


RESIDUALS = {
    "C0": residual_C0,
    "C1": residual_C1,
    "C2": residual_C2,
    "C3": residual_C3,
    "C4": residual_C4,
    "Gauss": gauss_residual,
}


def derived_quantities(data: FundamentalField) -> dict:
    """Gauss curvature K, the coefficient 2 conj(A)/lambda of T, and det S."""
    lam, u, H, p, A = data.fields
    return {
        "K": -2 * log_lambda_zzbar(data) / lam,
        "T_coeff": 2 * A.conj() / lam,
        "detS": H**2 - 4 * p.abs() ** 2 / lam**2,
    }


def vanishing_A_nodes(data: FundamentalField, atol: float = 1e-10, u_margin: float = 1e-6) -> np.ndarray:
    """Interior nodes where A vanishes although u^2 < 1 - u_margin.

    With tau != 0 and consistent data this set is empty.
    """
    mask = (np.abs(data.A) <= atol) & (data.u**2 < 1 - u_margin)
    mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = False
    return np.argwhere(mask)


@dataclass(frozen=True)
class ToleranceProfile:
    """Per-equation tolerance rule.

    Algebraic identities get ``algebraic``. First-derivative residuals get
    ``first_factor * h^2 * M`` and the Gauss residual ``second_factor * h^2 * M``,
    with h the larger grid step and M the largest field modulus. Entries of
    ``absolute`` override the rule for named equations.
    """

    algebraic: float = 1e-8
    first_factor: float = 10.0
    second_factor: float = 100.0
    absolute: dict = field(default_factory=dict)

    @classmethod
    def uniform(cls, tol: float) -> "ToleranceProfile":
        return cls(absolute={eq: float(tol) for eq in EQUATIONS})

    def tolerance(self, equation: str, data: FundamentalField) -> float:
        if equation in self.absolute:
            return float(self.absolute[equation])
        order = _ORDER[equation]
        if order == 0:
            return self.algebraic
        factor = self.first_factor if order == 1 else self.second_factor
        return factor * data.grid.h**2 * data.magnitude()

    def to_dict(self) -> dict:
        return {"algebraic": self.algebraic, "first_factor": self.first_factor,
                "second_factor": self.second_factor, "absolute": dict(self.absolute)}

    @classmethod
    def from_dict(cls, d: dict) -> "ToleranceProfile":
        unknown = sorted(set(d) - {"algebraic", "first_factor", "second_factor", "absolute"})
        if unknown:
            raise ValueError(f"unknown tolerance profile key(s) {unknown}")
        return cls(
            algebraic=float(d.get("algebraic", 1e-8)),
            first_factor=float(d.get("first_factor", 10.0)),
            second_factor=float(d.get("second_factor", 100.0)),
            absolute={k: float(v) for k, v in d.get("absolute", {}).items()},
        )


@dataclass
class ResidualReport:
    norms: dict
    tolerances: dict
    ds: float
    dt: float
    extra: dict = field(default_factory=dict)

    @property
    def failing(self) -> list[str]:
        return [eq for eq, n in self.norms.items() if not n["max"] <= self.tolerances[eq]]

    @property
    def passed(self) -> bool:
        return not self.failing

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "residual_report",
            "grid_steps": {"ds": self.ds, "dt": self.dt},
            "norms": self.norms,
            "tolerances": self.tolerances,
            "passed": self.passed,
            "failing": self.failing,
            **({"differentials": self.extra} if self.extra else {}),
        }

    def summary(self) -> str:
        lines = []
        for eq, n in self.norms.items():
            mark = "ok  " if n["max"] <= self.tolerances[eq] else "FAIL"
            lines.append(f"{mark} {eq:5s} max={n['max']:.3e} l2={n['l2']:.3e} tol={self.tolerances[eq]:.3e}")
        return "\n".join(lines)


def check_all(data: FundamentalField, tolerances=None) -> ResidualReport:
    """Evaluate every integrability residual and compare with ``tolerances``.

    ``tolerances`` is a ToleranceProfile, a single float applied to every
    equation, or None for the default profile.
    """
    if tolerances is None:
        profile = ToleranceProfile()
    elif isinstance(tolerances, ToleranceProfile):
        profile = tolerances
    else:
        profile = ToleranceProfile.uniform(float(tolerances))
    norms = {eq: residual_norm(fn(data)) for eq, fn in RESIDUALS.items()}
    tols = {eq: profile.tolerance(eq, data) for eq in EQUATIONS}
    return ResidualReport(norms, tols, data.grid.ds, data.grid.dt)
