"""The rank-3 Killing criterion for a conformally flat torus.

A torus ``lambda(x, y) (dx^2 + dy^2)`` carries a nonzero rank-3 Killing tensor
iff there are real constants ``a = (a1, a2)`` and ``c = (c1, c2) != 0`` with

    sum_{k != 0} w_c(n, k) lam_k lam_{n-k} = (a1 n1 + a2 n2) lam_n   for all n,

    w_c(n, k) = [c1 (-n1 k1^2 + 2 n2 k1 k2 + n1 k2^2)
                 + c2 (-n2 k1^2 - 2 n1 k1 k2 + n2 k2^2)] / (k1^2 + k2^2),

all nodes in physical coordinates.  This module evaluates that system, the
equivalent complex PDE, the integer-indexed form used for lattices in normal
form, and the cubic spectrum constraint.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .field import FourierField, diff_ops, convolve
from .lattice import DualLattice, ThreeLineConfig


class DegenerateFieldError(ValueError):
    pass


@dataclass(frozen=True)
class KillingConstants:
    a: tuple[float, float] = (0.0, 0.0)
    c: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))

    @property
    def nontrivial(self) -> bool:
        return self.c[0] ** 2 + self.c[1] ** 2 > 0

    @property
    def a_complex(self) -> complex:
        return complex(self.a[0], self.a[1]) / 4

    @property
    def c_complex(self) -> complex:
        return complex(self.c[0], self.c[1])

    def as_vector(self) -> np.ndarray:
        return np.array([self.c[0], self.c[1], self.a[0], self.a[1]])

    @classmethod
    def from_vector(cls, v) -> "KillingConstants":
        return cls(a=(v[2], v[3]), c=(v[0], v[1]))

    def to_json(self) -> dict:
        return {"a": list(self.a), "c": list(self.c)}

    @classmethod
    def from_json(cls, obj) -> "KillingConstants":
        return cls(a=tuple(obj["a"]), c=tuple(obj["c"]))


@dataclass(frozen=True)
class ResidualReport:
    per_equation: dict
    norm: float
    max_abs: float
    worst_node: tuple[int, int] | None
    equation_count: int

    def to_json(self, include_equations: bool = False) -> dict:
        out = {
            "norm": self.norm,
            "maxAbs": self.max_abs,
            "worstNode": list(self.worst_node) if self.worst_node is not None else None,
            "equationCount": self.equation_count,
        }
        if include_equations:
            out["perEquation"] = [
                {"n": list(n), "re": v.real, "im": v.imag} for n, v in sorted(self.per_equation.items())
            ]
        return out


def _report(grid: np.ndarray, mask: np.ndarray) -> ResidualReport:
    N = (grid.shape[0] - 1) // 2
    idx = np.argwhere(mask)
    vals = grid[mask]
    per = {(int(i) - N, int(j) - N): complex(v) for (i, j), v in zip(idx, vals)}
    if len(vals) == 0:
        return ResidualReport(per, 0.0, 0.0, None, 0)
    absval = np.abs(vals)
    w = int(np.argmax(absval))
    worst = (int(idx[w, 0]) - N, int(idx[w, 1]) - N)
    return ResidualReport(per, float(np.sqrt(np.sum(absval**2))), float(absval[w]), worst, len(vals))


# -- the quadratic form ------------------------------------------------------


def kernel_numerators(n: np.ndarray, k: np.ndarray):
    """The c1- and c2-numerators of the kernel, divided by |k|^2."""
    n1, n2 = n[..., 0], n[..., 1]
    k1, k2 = k[..., 0], k[..., 1]
    ksq = k1**2 + k2**2
    w1 = (-n1 * k1**2 + 2 * n2 * k1 * k2 + n1 * k2**2) / ksq
    w2 = (-n2 * k1**2 - 2 * n1 * k1 * k2 + n2 * k2**2) / ksq
    return w1, w2


def weighted_products(dual: DualLattice, u: np.ndarray, v: np.ndarray):
    """``(Q1, Q2)`` with ``Qi[n] = sum_{k != 0} wi(n, k) u_k v_{n-k}``.

    ``u`` and ``v`` are dense (2N+1, 2N+1) coefficient arrays; the outputs are
    (4N+1, 4N+1) arrays, plus the boolean mask of indices reached by a pair.
    """
    N = (u.shape[0] - 1) // 2
    M = 2 * N
    size = 2 * M + 1
    ku = np.argwhere(u != 0) - N
    ku = ku[np.any(ku != 0, axis=1)]
    jv = np.argwhere(v != 0) - N
    Q1 = np.zeros(size * size, dtype=complex)
    Q2 = np.zeros(size * size, dtype=complex)
    mask = np.zeros(size * size, dtype=bool)
    if len(ku) and len(jv):
        n_idx = ku[:, None, :] + jv[None, :, :]
        kphys = dual.nodes(ku)[:, None, :]
        nphys = dual.nodes(n_idx)
        w1, w2 = kernel_numerators(nphys, kphys)
        prod = u[ku[:, 0] + N, ku[:, 1] + N][:, None] * v[jv[:, 0] + N, jv[:, 1] + N][None, :]
        flat = ((n_idx[..., 0] + M) * size + (n_idx[..., 1] + M)).ravel()
        np.add.at(Q1, flat, (w1 * prod).ravel())
        np.add.at(Q2, flat, (w2 * prod).ravel())
        mask[flat] = True
    return Q1.reshape(size, size), Q2.reshape(size, size), mask.reshape(size, size)


@dataclass(frozen=True)
class SystemColumns:
    """The residual as a linear map of (c1, c2, a1, a2) for a fixed field.

    ``residual = c1*Q1 + c2*Q2 - a1*A1 - a2*A2`` on the equation set ``mask``.
    """

    Q1: np.ndarray
    Q2: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    mask: np.ndarray

    def residual_grid(self, k: KillingConstants) -> np.ndarray:
        c1, c2 = k.c
        a1, a2 = k.a
        return c1 * self.Q1 + c2 * self.Q2 - a1 * self.A1 - a2 * self.A2

    def matrix(self) -> np.ndarray:
        """Complex (equations x 4) matrix acting on (c1, c2, a1, a2)."""
        m = self.mask
        return np.stack([self.Q1[m], self.Q2[m], -self.A1[m], -self.A2[m]], axis=1)


def system_columns(f: FourierField) -> SystemColumns:
    coeffs = f.coeffs
    Q1, Q2, mask = weighted_products(f.dual, coeffs, coeffs)
    big = f.padded(2 * f.N)
    m = big.node_grid()
    lam = big.coeffs
    A1 = m[..., 0] * lam
    A2 = m[..., 1] * lam
    mask = mask | (lam != 0)
    return SystemColumns(Q1, Q2, A1, A2, mask)


def system_residual(f: FourierField, k: KillingConstants) -> ResidualReport:
    """Per-node residual of the quadratic system over its finite equation set."""
    cols = system_columns(f)
    return _report(cols.residual_grid(k), cols.mask)


def system_residual_grid(f: FourierField, k: KillingConstants):
    cols = system_columns(f)
    return cols.residual_grid(k), cols.mask


# -- the PDE form ------------------------------------------------------------


def pde_residual(f: FourierField, k: KillingConstants) -> FourierField:
    """Coefficients of d/dz(lam(c inv_lap lam_zz + a)) + d/dzbar(conjugate part)."""
    c = k.c_complex
    a = k.a_complex
    lam_zz = diff_ops(diff_ops(f, "dz"), "dz")
    inner = c * diff_ops(lam_zz, "inverse_laplacian") + a
    term = diff_ops(convolve(f, inner), "dz")
    lam_bb = diff_ops(diff_ops(f, "dzbar"), "dzbar")
    inner_b = np.conj(c) * diff_ops(lam_bb, "inverse_laplacian") + np.conj(a)
    term_b = diff_ops(convolve(f, inner_b), "dzbar")
    out = (term + term_b).coeffs
    out = 0.5 * (out + np.conj(out[::-1, ::-1]))
    return FourierField(f.dual, out)


@functools.lru_cache(maxsize=None)
def pde_calibration() -> complex:
    """Node-independent factor with pde_residual = factor * system_residual.

    Fixed once from the reference field 1 + cos x on the square dual lattice,
    constants c = (1, 0), a = 0, node (2, 0).
    """
    dual = DualLattice(np.eye(2))
    ref = FourierField.from_dict(dual, {(0, 0): 1.0, (1, 0): 0.5})
    k = KillingConstants(a=(0.0, 0.0), c=(1.0, 0.0))
    pde = pde_residual(ref, k)
    sys_r = system_residual(ref, k).per_equation[(2, 0)]
    return pde[2, 0] / sys_r


# -- integer-indexed form -----------------------------------------------------


def psi1(n, k, b, d):
    n1, n2 = n[..., 0], n[..., 1]
    k1, k2 = k[..., 0], k[..., 1]
    den = (k1 + b * k2) ** 2 + d**2 * k2**2
    num = n2 * k1**2 + 2 * (n1 + 2 * b * n2) * k1 * k2 + (2 * b * n1 + (3 * b**2 - d**2) * n2) * k2**2
    return d * num / den


def psi2(n, k, b, d):
    n1, n2 = n[..., 0], n[..., 1]
    k1, k2 = k[..., 0], k[..., 1]
    den = (k1 + b * k2) ** 2 + d**2 * k2**2
    num = (
        -(n1 + b * n2) * k1**2
        + 2 * (-b * n1 + (d**2 - b**2) * n2) * k1 * k2
        + ((d**2 - b**2) * n1 + b * (3 * d**2 - b**2) * n2) * k2**2
    )
    return num / den


def psi(n, k, c, b, d):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return c[0] * psi1(n, k, b, d) + c[1] * psi2(n, k, b, d)


def _bd(cfg) -> tuple[float, float]:
    if isinstance(cfg, ThreeLineConfig):
        return cfg.b, cfg.d
    if isinstance(cfg, DualLattice):
        if cfg.normalized is None:
            raise ValueError("integer form needs a normalized dual lattice")
        return cfg.normalized
    b, d = cfg
    return float(b), float(d)


def integer_system_residual(f: FourierField, cfg, k: KillingConstants) -> ResidualReport:
    """Residual of the integer-indexed system.

    ``f``'s coefficients are read as indexed by integer pairs with respect to
    the normal-form basis (1, 0), (b, d).  The constants follow the integer
    convention: ``psi = c1*psi1 + c2*psi2`` and right-hand side
    ``(a1 n1 + a2 n2) lam_n``.  In terms of the physical-node system this is
    ``c_phys = (c2, -c1)`` and ``a_phys = (a1, (a2 - b a1) / d)``; see
    :func:`integer_to_physical_constants`.
    """
    b, d = _bd(cfg)
    lam = f.coeffs
    N = f.N
    M = 2 * N
    size = 2 * M + 1
    kk = np.argwhere(lam != 0) - N
    kk = kk[np.any(kk != 0, axis=1)]
    jj = np.argwhere(lam != 0) - N
    out = np.zeros(size * size, dtype=complex)
    mask = np.zeros(size * size, dtype=bool)
    if len(kk) and len(jj):
        n_idx = kk[:, None, :] + jj[None, :, :]
        weights = psi(n_idx, np.broadcast_to(kk[:, None, :], n_idx.shape), k.c, b, d)
        prod = lam[kk[:, 0] + N, kk[:, 1] + N][:, None] * lam[jj[:, 0] + N, jj[:, 1] + N][None, :]
        flat = ((n_idx[..., 0] + M) * size + (n_idx[..., 1] + M)).ravel()
        np.add.at(out, flat, (weights * prod).ravel())
        mask[flat] = True
    out = out.reshape(size, size)
    mask = mask.reshape(size, size)
    big = np.pad(lam, N)
    r = np.arange(-M, M + 1)
    n1, n2 = np.meshgrid(r, r, indexing="ij")
    out = out - (k.a[0] * n1 + k.a[1] * n2) * big
    mask |= big != 0
    return _report(out, mask)


def integer_to_physical_constants(k: KillingConstants, b: float, d: float) -> KillingConstants:
    """Translate integer-form constants to the physical-node system."""
    a1, a2 = k.a
    c1, c2 = k.c
    return KillingConstants(a=(a1, (a2 - b * a1) / d), c=(c2, -c1))


def psi_line0_reduced(n, cfg: ThreeLineConfig, c):
    """Coefficient for k on line L0, constants in the reduced convention.

    Reduced constants ``(c1, c2)`` correspond to integer-form constants
    ``(c1 / d, 2 c2)``.
    """
    n1, n2 = n
    p1, p2 = cfg.p
    q1, q2 = cfg.q
    return -2 * c[1] * n1 + (c[0] + c[1] * (p1 / p2 + q1 / q2)) * n2


def phi_reduced(n, first, second, c):
    """Coefficient for k on the line through ``first``, reduced constants.

    ``phi_reduced(n, p, q, c)`` covers line L1 and ``phi_reduced(n, q, p, c)``
    covers L2 (the sign of the c1 term flips with the order, as
    ``first[0]*second[1] - first[1]*second[0]`` does).
    """
    n1, n2 = n
    f1, f2 = first
    s1, s2 = second
    det = f1 * s2 - f2 * s1
    ratio = s1 / s2
    lin = c[0] * s2 * (f2 * n1 - f1 * n2) / det
    num = f1**3 / f2 - 4 * ratio * f1**2 + 5 * ratio**2 * f1 * f2 - 2 * ratio**3 * f2**2
    quad = c[1] * (n1 + num / (f1 - ratio * f2) ** 2 * n2)
    return lin + quad


def phi(n, first, second):
    """Line coefficient once c = (1, 0): q2 (p2 n1 - p1 n2) / (p1 q2 - p2 q1)."""
    n1, n2 = n
    f1, f2 = first
    s1, s2 = second
    return s2 * (f2 * n1 - f1 * n2) / (f1 * s2 - f2 * s1)


# -- best constants ------------------------------------------------------------


def constants_from_matrix(A: np.ndarray) -> tuple[KillingConstants, float]:
    """Minimize ||A v|| over real v = (c1, c2, a1, a2) with c1^2 + c2^2 = 1."""
    G = np.real(A.conj().T @ A)
    if not np.any(np.abs(G) > 0):
        raise DegenerateFieldError("normal matrix vanishes (constant field?)")
    Gcc, Gca, Gaa = G[:2, :2], G[:2, 2:], G[2:, 2:]
    Gaa_pinv = np.linalg.pinv(Gaa, rcond=1e-13, hermitian=True)
    S = Gcc - Gca @ Gaa_pinv @ Gca.T
    S = 0.5 * (S + S.T)
    evals, evecs = np.linalg.eigh(S)
    c = evecs[:, 0]
    lead = c[np.argmax(np.abs(c) > 1e-14)]
    if lead < 0:
        c = -c
    a = -Gaa_pinv @ Gca.T @ c
    v = np.concatenate([c, a])
    norm = float(np.linalg.norm(A @ v))
    return KillingConstants.from_vector(v), norm


def best_constants(f: FourierField) -> tuple[KillingConstants, float]:
    """Constants minimizing the residual norm subject to ||c|| = 1."""
    if len(f.support(include_zero=False)) == 0:
        raise DegenerateFieldError("field is constant; every c solves the system")
    return constants_from_matrix(system_columns(f).matrix())


# -- cubic constraint ---------------------------------------------------------


def cubic_values(nodes: np.ndarray, c) -> np.ndarray:
    """``c1 (n1^2 - 3 n2^2) n1 + c2 (3 n1^2 - n2^2) n2`` per physical node."""
    nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
    n1, n2 = nodes[:, 0], nodes[:, 1]
    return c[0] * (n1**2 - 3 * n2**2) * n1 + c[1] * (3 * n1**2 - n2**2) * n2


@dataclass(frozen=True)
class CubicReport:
    admissible_directions: list  # unit vectors, sign fixed
    three_lines: tuple[float, float, float] | None  # line angles in [0, pi)
    satisfied: bool | None  # only when c was given
    max_relative: float | None


def _lines_for(c) -> tuple[float, float, float]:
    # c1 = -sin(3 alpha), c2 = cos(3 alpha)
    alpha = math.atan2(-c[0], c[1]) / 3.0
    return tuple(sorted((alpha + j * math.pi / 3) % math.pi for j in range(3)))


def cubic_analysis(nodes, c=None, tol: float = 1e-9) -> CubicReport:
    """Which c make every node satisfy the cubic constraint, and the line triple."""
    nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
    nodes = nodes[np.any(nodes != 0, axis=1)]
    if len(nodes) == 0:
        raise ValueError("empty spectrum")
    r3 = np.hypot(nodes[:, 0], nodes[:, 1]) ** 3
    if c is not None:
        cn = math.hypot(*c)
        rel = np.abs(cubic_values(nodes, c)) / (r3 * cn)
        ok = bool(np.all(rel <= tol))
        return CubicReport([np.array(c) / cn] if ok else [], _lines_for(c) if ok else None, ok, float(rel.max()))
    n1, n2 = nodes[:, 0], nodes[:, 1]
    rows = np.stack([(n1**2 - 3 * n2**2) * n1, (3 * n1**2 - n2**2) * n2], axis=1) / r3[:, None]
    _, s, vt = np.linalg.svd(rows, full_matrices=True)
    s_full = np.concatenate([s, np.zeros(2 - len(s))])
    dirs = []
    for sv, v in zip(s_full, vt):
        if sv <= tol * max(s_full[0], 1.0):
            lead = v[np.argmax(np.abs(v) > 1e-14)]
            dirs.append((v if lead > 0 else -v) + 0.0)
    lines = _lines_for(dirs[0]) if len(dirs) == 1 else None
    return CubicReport(dirs, lines, None, None)


def cubic_field_residual(f: FourierField, c) -> FourierField:
    """Coefficients of c lam_zzz + conj(c) lam_{zbar zbar zbar}."""
    cc = complex(c[0], c[1])
    zzz = diff_ops(diff_ops(diff_ops(f, "dz"), "dz"), "dz")
    bbb = diff_ops(diff_ops(diff_ops(f, "dzbar"), "dzbar"), "dzbar")
    out = (cc * zzz + np.conj(cc) * bbb).coeffs
    out = 0.5 * (out + np.conj(out[::-1, ::-1]))
    return FourierField(f.dual, out)


@dataclass(frozen=True)
class ShiftReport:
    base_norm: float
    shifted_norm: float
    cubic_norm: float


def shift_test(f: FourierField, lam0: float, k: KillingConstants) -> ShiftReport:
    """Residuals for f and f + lam0 and the cubic residual.

    If both residuals vanish the cubic residual must vanish too.
    """
    base = system_residual(f, k).norm
    shifted = system_residual(f.shift_zero_mode(lam0), k).norm
    cubic = float(np.linalg.norm(cubic_field_residual(f, k.c).coeffs))
    if base <= 1e-12 and shifted <= 1e-12 and lam0 != 0:
        scale = max(1.0, float(np.sum(np.abs(f.coeffs))))
        if cubic > 1e-9 * scale:
            raise AssertionError(f"shift-stable solution with cubic residual {cubic:.3e}")
    return ShiftReport(base, shifted, cubic)
