"""Uniform conformal grids and finite-difference Wirtinger derivatives.

Node ``(i, j)`` sits at ``z = (s0 + i ds) + 1j (t0 + j dt)``; arrays are
indexed ``values[i, j]``, so axis 0 runs along ``s`` and axis 1 along ``t``.
Derivatives are second-order central differences. Every derivative strips
one ring of nodes from the validity mask, and norms only look at valid nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_NODES = 5


@dataclass(frozen=True)
class ConformalGrid:
    s0: float
    t0: float
    ds: float
    dt: float
    ns: int
    nt: int

    def __post_init__(self):
        if not (self.ds > 0 and self.dt > 0):
            raise ValueError(f"grid steps must be positive, got ds={self.ds}, dt={self.dt}")
        if self.ns < MIN_NODES or self.nt < MIN_NODES:
            raise ValueError(f"grid needs at least {MIN_NODES} nodes per axis, got {self.ns}x{self.nt}")

    @classmethod
    def from_extent(cls, s_range, t_range, ds, dt=None) -> "ConformalGrid":
        """Grid covering ``[s_min, s_max] x [t_min, t_max]`` with the given steps."""
        dt = ds if dt is None else dt
        ns = int(round((s_range[1] - s_range[0]) / ds)) + 1
        nt = int(round((t_range[1] - t_range[0]) / dt)) + 1
        return cls(float(s_range[0]), float(t_range[0]), float(ds), float(dt), ns, nt)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ns, self.nt)

    @property
    def s(self) -> np.ndarray:
        return self.s0 + self.ds * np.arange(self.ns)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.s, self.t, indexing="ij")

    def z(self) -> np.ndarray:
        S, T = self.mesh()
        return S + 1j * T

    def refined(self, factor: int = 2) -> "ConformalGrid":
        """Same rectangle, steps divided by ``factor``."""
        return ConformalGrid(
            self.s0, self.t0, self.ds / factor, self.dt / factor,
            (self.ns - 1) * factor + 1, (self.nt - 1) * factor + 1,
        )

    @property
    def h(self) -> float:
        return max(self.ds, self.dt)

    def to_dict(self) -> dict:
        return {"s0": self.s0, "t0": self.t0, "ds": self.ds, "dt": self.dt, "ns": self.ns, "nt": self.nt}

    @classmethod
    def from_dict(cls, d: dict) -> "ConformalGrid":
        return cls(float(d["s0"]), float(d["t0"]), float(d["ds"]), float(d["dt"]), int(d["ns"]), int(d["nt"]))


def _erode(mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(mask)
    out[1:-1, 1:-1] = (
        mask[1:-1, 1:-1] & mask[2:, 1:-1] & mask[:-2, 1:-1] & mask[1:-1, 2:] & mask[1:-1, :-2]
    )
    return out


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Values on a ConformalGrid plus a mask of nodes where they are meaningful.

    Arithmetic between fields (and with scalars or same-shape arrays)
    intersects the masks, so a residual built from derivatives is only
    valid where every ingredient was.
    """

    grid: ConformalGrid
    values: np.ndarray
    valid: np.ndarray = field(default=None)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != self.grid.shape:
            raise ValueError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        object.__setattr__(self, "values", vals)
        valid = np.ones(self.grid.shape, dtype=bool) if self.valid is None else np.asarray(self.valid, dtype=bool)
        object.__setattr__(self, "valid", valid)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def _combine(self, other, op):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return ScalarField(self.grid, op(self.values, other.values), self.valid & other.valid)
        return ScalarField(self.grid, op(self.values, other), self.valid)

    def __add__(self, o):
        return self._combine(o, np.add)

    def __radd__(self, o):
        return self._combine(o, lambda a, b: b + a)

    def __sub__(self, o):
        return self._combine(o, np.subtract)

    def __rsub__(self, o):
        return self._combine(o, lambda a, b: b - a)

    def __mul__(self, o):
        return self._combine(o, np.multiply)

    def __rmul__(self, o):
        return self._combine(o, lambda a, b: b * a)

    def __truediv__(self, o):
        return self._combine(o, np.divide)

    def __rtruediv__(self, o):
        return self._combine(o, lambda a, b: b / a)

    def __pow__(self, k):
        return ScalarField(self.grid, self.values**k, self.valid)

    def __neg__(self):
        return ScalarField(self.grid, -self.values, self.valid)

    def map(self, fn) -> "ScalarField":
        return ScalarField(self.grid, fn(self.values), self.valid)

    def conj(self) -> "ScalarField":
        return self.map(np.conj)

    def abs(self) -> "ScalarField":
        return self.map(np.abs)

    @property
    def real(self) -> "ScalarField":
        return self.map(np.real)

    @property
    def imag(self) -> "ScalarField":
        return self.map(np.imag)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values, self.valid)


def _partials(f: ScalarField):
    g = f.grid
    v = f.values
    fs = np.zeros_like(v, dtype=complex if np.iscomplexobj(v) else float)
    ft = np.zeros_like(fs)
    fs[1:-1, 1:-1] = (v[2:, 1:-1] - v[:-2, 1:-1]) / (2.0 * g.ds)
    ft[1:-1, 1:-1] = (v[1:-1, 2:] - v[1:-1, :-2]) / (2.0 * g.dt)
    return fs, ft


def d_s(f: ScalarField) -> ScalarField:
    fs, _ = _partials(f)
    return ScalarField(f.grid, fs, _erode(f.valid))


def d_t(f: ScalarField) -> ScalarField:
    _, ft = _partials(f)
    return ScalarField(f.grid, ft, _erode(f.valid))


def d_z(f: ScalarField) -> ScalarField:
    """(d/ds - i d/dt) / 2 on interior nodes."""
    fs, ft = _partials(f)
    return ScalarField(f.grid, 0.5 * (fs - 1j * ft), _erode(f.valid))


def d_zbar(f: ScalarField) -> ScalarField:
    """(d/ds + i d/dt) / 2 on interior nodes."""
    fs, ft = _partials(f)
    return ScalarField(f.grid, 0.5 * (fs + 1j * ft), _erode(f.valid))


def residual_norm(f: ScalarField) -> dict:
    """Max modulus and root-mean-square over valid interior nodes.

    The outer ring is never counted, even for algebraic fields valid there.
    """
    mask = f.valid.copy()
    mask[0, :] = mask[-1, :] = False
    mask[:, 0] = mask[:, -1] = False
    vals = np.abs(f.values[mask])
    if vals.size == 0:
        return {"max": 0.0, "l2": 0.0}
    return {"max": float(vals.max()), "l2": float(np.sqrt(np.mean(vals**2)))}
