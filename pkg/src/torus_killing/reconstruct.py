"""From a Killing solution back to the potential u.

Given lambda and constants (a, c), the functions v = u_x / lambda and
w = u_y / lambda solve a Cauchy-Riemann type system whose Fourier solution is
explicit.  Integrating (lambda v, lambda w) recovers u up to a constant, and u
must then solve the second-order system

    u_xx - u_yy - lam_x u_x / lam + lam_y u_y / lam = lam (-c2 lam_x + c1 lam_y)
    2 u_xy - lam_y u_x / lam - lam_x u_y / lam      = lam (c1 lam_x + c2 lam_y)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import FourierField, convolve, dx, dy
from .killing import KillingConstants


class ConsistencyError(ValueError):
    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class MetricDegeneracyError(ValueError):
    pass


@dataclass(frozen=True)
class VWPair:
    v: FourierField
    w: FourierField


@dataclass(frozen=True)
class Potential:
    """u(x, y) = p x + q y + periodic(x, y), periodic with zero mean."""

    linear: tuple[float, float]
    periodic: FourierField

    def __post_init__(self):
        if self.periodic.zero_mode != 0:
            raise ValueError("periodic part must have zero mode exactly 0")

    def gradient_fields(self) -> tuple[FourierField, FourierField]:
        """u_x and u_y as periodic fields."""
        return dx(self.periodic) + self.linear[0], dy(self.periodic) + self.linear[1]


def vw_multipliers(nodes: np.ndarray, c) -> tuple[np.ndarray, np.ndarray]:
    m1, m2 = nodes[..., 0], nodes[..., 1]
    sq = m1**2 + m2**2
    safe = np.where(sq == 0, 1.0, sq)
    mv = np.where(sq == 0, 0.0, (-c[1] * m1**2 + 2 * c[0] * m1 * m2 + c[1] * m2**2) / safe)
    mw = np.where(sq == 0, 0.0, (c[0] * m1**2 + 2 * c[1] * m1 * m2 - c[0] * m2**2) / safe)
    return mv, mw


def compute_vw(f: FourierField, k: KillingConstants) -> VWPair:
    mv, mw = vw_multipliers(f.node_grid(), k.c)
    v = f.coeffs * mv
    w = f.coeffs * mw
    N = f.N
    v[N, N] = -k.a[1]
    w[N, N] = k.a[0]
    return VWPair(FourierField(f.dual, v), FourierField(f.dual, w))


def _l2(field: FourierField) -> float:
    return float(np.linalg.norm(field.coeffs))


def consistency_field(f: FourierField, vw: VWPair) -> FourierField:
    """Coefficients of d(lam v)/dy - d(lam w)/dx."""
    return dy(convolve(f, vw.v)) - dx(convolve(f, vw.w))


def residual_checks(f: FourierField, k: KillingConstants, vw: VWPair) -> dict:
    c1, c2 = k.c
    cr1 = dx(vw.v) - dy(vw.w) - (-c2 * dx(f) + c1 * dy(f))
    cr2 = dy(vw.v) + dx(vw.w) - (c1 * dx(f) + c2 * dy(f))
    cr = float(np.hypot(_l2(cr1), _l2(cr2)))
    return {"crNorm": cr, "consistencyNorm": _l2(consistency_field(f, vw))}


def integrate_u(f: FourierField, vw: VWPair, tol: float = 1e-9) -> Potential:
    """Antidifferentiate (lam v, lam w) into linear-plus-periodic u.

    Each coefficient is solved from the gradient component with the larger
    node coordinate; the other component is then checked against ``tol``.
    """
    Pf, Qf = convolve(f, vw.v), convolve(f, vw.w)
    N = max(Pf.N, Qf.N)
    P, Q = Pf.padded(N).coeffs, Qf.padded(N).coeffs
    big = f.padded(N)
    m = big.node_grid()
    m1, m2 = m[..., 0], m[..., 1]
    use_x = np.abs(m1) >= np.abs(m2)
    denom = np.where(use_x, 1j * m1, 1j * m2)
    denom[N, N] = 1.0
    u = np.where(use_x, P, Q) / denom
    u[N, N] = 0.0
    mismatch = np.maximum(np.abs(1j * m1 * u - P), np.abs(1j * m2 * u - Q))
    mismatch[N, N] = 0.0
    worst = np.unravel_index(int(np.argmax(mismatch)), mismatch.shape)
    if mismatch[worst] > tol:
        node = (int(worst[0]) - N, int(worst[1]) - N)
        raise ConsistencyError(
            f"gradient is not curl-free: mismatch {mismatch[worst]:.3e} at node {node}", node, float(mismatch[worst])
        )
    u = 0.5 * (u + np.conj(u[::-1, ::-1]))
    linear = (float(P[N, N].real), float(Q[N, N].real))
    return Potential(linear, FourierField(f.dual, u))


HESSIAN_GRID = 32


def hessian_residual(f: FourierField, k: KillingConstants, u: Potential, n: int = HESSIAN_GRID) -> float:
    """Max residual of the second-order system on an n x n grid of the cell."""
    X, Y, lam = f.sample_grid(n)
    if np.min(lam) <= 0:
        raise MetricDegeneracyError(f"conformal factor not positive (min {np.min(lam):.3e})")
    lx = dx(f).evaluate(X, Y)
    ly = dy(f).evaluate(X, Y)
    ux_f, uy_f = u.gradient_fields()
    ux = ux_f.evaluate(X, Y)
    uy = uy_f.evaluate(X, Y)
    uxx = dx(ux_f).evaluate(X, Y)
    uyy = dy(uy_f).evaluate(X, Y)
    uxy = dy(ux_f).evaluate(X, Y)
    c1, c2 = k.c
    e1 = uxx - uyy - lx * ux / lam + ly * uy / lam - lam * (-c2 * lx + c1 * ly)
    e2 = 2 * uxy - ly * ux / lam - lx * uy / lam - lam * (c1 * lx + c2 * ly)
    return float(max(np.max(np.abs(e1)), np.max(np.abs(e2))))


def reconstruct(f: FourierField, k: KillingConstants, tol: float = 1e-9) -> dict:
    """The whole chain; returns the checks, the potential and the grid residual."""
    vw = compute_vw(f, k)
    checks = residual_checks(f, k, vw)
    u = integrate_u(f, vw, tol)
    return {"vw": vw, "checks": checks, "potential": u, "hessianResidual": hessian_residual(f, k, u)}
