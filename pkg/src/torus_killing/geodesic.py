"""Geodesics of lambda(x, y)(dx^2 + dy^2) and their first integrals.

The geodesic equations for a conformal metric are

    x'' = -(lam_x (vx^2 - vy^2) + 2 lam_y vx vy) / (2 lam)
    y'' = -(lam_y (vy^2 - vx^2) + 2 lam_x vx vy) / (2 lam)

integrated with fixed-step classical RK4.  Energy lam |v|^2 is always
conserved; for lam = mu(x) so is the Clairaut integral lam * vy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import FourierField, spectrum_analysis


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class GeodesicState:
    x: float
    y: float
    vx: float
    vy: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.vx, self.vy)):
            raise ValueError("state components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy], dtype=float)


class _Conformal:
    """Fast pointwise lambda and gradient from the coefficient list."""

    def __init__(self, f: FourierField):
        idx = f.support(include_zero=False)
        pos = [(a, b) for a, b in idx if a > 0 or (a == 0 and b > 0)]
        self.c0 = f.zero_mode.real
        modes = f.dual.nodes(np.array(pos, dtype=int).reshape(-1, 2))
        vals = np.array([f[a, b] for a, b in pos], dtype=complex)
        # lam = c0 + sum A cos(m.p) + B sin(m.p)
        self.terms = [(float(m[0]), float(m[1]), 2 * v.real, -2 * v.imag) for m, v in zip(modes, vals)]

    def __call__(self, x, y):
        lam, lx, ly = self.c0, 0.0, 0.0
        for m1, m2, A, B in self.terms:
            th = m1 * x + m2 * y
            c, s = math.cos(th), math.sin(th)
            lam += A * c + B * s
            d = B * c - A * s
            lx += m1 * d
            ly += m2 * d
        return lam, lx, ly


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # (steps + 1, 4): x, y, vx, vy (unreduced)
    primal: np.ndarray  # period lattice basis, columns

    def reduced(self) -> np.ndarray:
        """States with positions moved into the fundamental cell."""
        P = self.primal
        s = np.linalg.solve(P, self.states[:, :2].T)
        s -= np.floor(s)
        out = self.states.copy()
        out[:, :2] = (P @ s).T
        return out


def _rhs(metric, state):
    x, y, vx, vy = state
    lam, lx, ly = metric(x, y)
    if lam <= 0:
        raise MetricError(f"conformal factor {lam:.3e} <= 0 at ({x:.6g}, {y:.6g})")
    ax = -(lx * (vx * vx - vy * vy) + 2 * ly * vx * vy) / (2 * lam)
    ay = -(ly * (vy * vy - vx * vx) + 2 * lx * vx * vy) / (2 * lam)
    return (vx, vy, ax, ay)


def check_positive(f: FourierField, n: int = 64):
    _, _, lam = f.sample_grid(n)
    if np.min(lam) <= 0:
        raise MetricError(f"conformal factor not positive on the sample grid (min {np.min(lam):.3e})")


def integrate(f: FourierField, init: GeodesicState, T: float, h: float) -> Trajectory:
    if not h > 0 or not T >= h:
        raise ValueError("need h > 0 and T >= h")
    check_positive(f)
    metric = _Conformal(f)
    steps = int(round(T / h))
    out = np.empty((steps + 1, 4))
    s = tuple(init.as_array())
    out[0] = s
    for i in range(steps):
        k1 = _rhs(metric, s)
        k2 = _rhs(metric, tuple(a + 0.5 * h * b for a, b in zip(s, k1)))
        k3 = _rhs(metric, tuple(a + 0.5 * h * b for a, b in zip(s, k2)))
        k4 = _rhs(metric, tuple(a + h * b for a, b in zip(s, k3)))
        s = tuple(a + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))
        out[i + 1] = s
    return Trajectory(h * np.arange(steps + 1), out, f.dual.primal().basis)


QUANTITIES = ("energy", "clairaut", "clairautCube")


def conserved_quantities(f: FourierField, traj: Trajectory, which=QUANTITIES, check: bool = True) -> dict:
    """Series and max relative drift of the requested first integrals.

    The Clairaut variants are integrals only when the spectrum lies on the
    x-axis; ``check=False`` computes them anyway (negative controls).
    """
    which = tuple(which)
    unknown = set(which) - set(QUANTITIES)
    if unknown:
        raise ValueError(f"unknown quantities {sorted(unknown)}")
    if check and any(w != "energy" for w in which):
        sp = spectrum_analysis(f)
        on_x = sp.size == 0 or (sp.one_dimensional is not None and abs(sp.one_dimensional[1]) <= 1e-12)
        if not on_x:
            raise ValueError("Clairaut integral requested but the spectrum is not on the x-axis")
    metric = _Conformal(f)
    st = traj.states
    lam = np.array([metric(x, y)[0] for x, y in st[:, :2]])
    series = {}
    if "energy" in which:
        series["energy"] = lam * (st[:, 2] ** 2 + st[:, 3] ** 2)
    if "clairaut" in which or "clairautCube" in which:
        cl = lam * st[:, 3]
        if "clairaut" in which:
            series["clairaut"] = cl
        if "clairautCube" in which:
            series["clairautCube"] = cl**3
    out = {}
    for k, q in series.items():
        ref = abs(q[0]) if q[0] != 0 else 1.0
        out[k] = {"series": q, "maxDrift": float(np.max(np.abs(q - q[0])) / ref)}
    return out
