"""Planar lattices, their duals, and the three-line (p, q) configurations.

Bases are stored as 2x2 arrays whose *columns* are the generators.  The dual
lattice follows the ``k . n in 2*pi*Z`` convention, so for a primal basis
``B`` the dual basis is ``2*pi * inv(B).T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

TWO_PI = 2.0 * math.pi


class LatticeError(ValueError):
    """Raised for singular bases and invalid lattice parameters."""


def _as_basis(basis) -> np.ndarray:
    arr = np.array(basis, dtype=float)
    if arr.shape != (2, 2):
        raise LatticeError(f"basis must be 2x2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LatticeError("basis has non-finite entries")
    det = arr[0, 0] * arr[1, 1] - arr[0, 1] * arr[1, 0]
    if abs(det) <= 1e-12 * float(np.sum(arr**2)):
        raise LatticeError(f"singular basis (det={det!r})")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Lattice:
    """A lattice in the plane; ``basis[:, j]`` is the j-th generator."""

    basis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "basis", _as_basis(self.basis))

    @classmethod
    def from_generators(cls, e1, e2) -> "Lattice":
        return cls(np.column_stack([e1, e2]))

    def points(self, radius: int = 2) -> np.ndarray:
        """Integer combinations with coefficients in ``[-radius, radius]``."""
        r = np.arange(-radius, radius + 1)
        n1, n2 = np.meshgrid(r, r, indexing="ij")
        coeffs = np.stack([n1.ravel(), n2.ravel()])
        return (self.basis @ coeffs).T


@dataclass(frozen=True)
class DualLattice:
    """The dual lattice, optionally in the normal form e1=(1,0), e2=(b,d)."""

    basis: np.ndarray
    normalized: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "basis", _as_basis(self.basis))
        if self.normalized is not None:
            b, d = self.normalized
            if not (0.0 <= b < 1.0 and d > 0.0):
                raise LatticeError(f"normal form needs b in [0,1), d>0; got {(b, d)}")
            if np.max(np.abs(self.basis[:, 0] - [1.0, 0.0])) > 1e-12:
                raise LatticeError("normalized dual must have first generator (1, 0)")

    @classmethod
    def from_bd(cls, b: float, d: float) -> "DualLattice":
        return cls(np.array([[1.0, b], [0.0, d]]), normalized=(float(b), float(d)))

    def primal(self) -> Lattice:
        return Lattice(TWO_PI * np.linalg.inv(self.basis).T)

    def node(self, n1, n2) -> np.ndarray:
        """Physical coordinates of the node with integer index (n1, n2)."""
        return self.basis @ np.array([n1, n2], dtype=float)

    def nodes(self, idx: np.ndarray) -> np.ndarray:
        """Physical coordinates for an (..., 2) array of integer indices."""
        return np.asarray(idx, dtype=float) @ self.basis.T


def dual_basis(lat: Lattice) -> DualLattice:
    """Dual of ``lat`` under the 2*pi convention: ``B'.T @ B = 2*pi*I``."""
    dual = TWO_PI * np.linalg.inv(lat.basis).T
    return DualLattice(dual)


def dual_pairing_defect(lat: Lattice, dual: DualLattice) -> float:
    """Max distance of ``k . n / (2 pi)`` from an integer over generators."""
    prods = dual.basis.T @ lat.basis / TWO_PI
    return float(np.max(np.abs(prods - np.round(prods))))


@dataclass(frozen=True)
class Similarity:
    """Maps input generators to output generators.

    ``out = scale * R(angle) @ in_basis @ unimodular`` where ``R`` is the
    counter-clockwise rotation matrix and ``unimodular`` is an integer matrix
    with determinant +-1 (shears ``e2 += k e1`` and the sign flip of ``e2``).
    """

    angle: float
    scale: float
    unimodular: np.ndarray

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def apply(self, basis: np.ndarray) -> np.ndarray:
        return self.scale * self.rotation() @ np.asarray(basis) @ self.unimodular

    @property
    def is_identity(self) -> bool:
        return (
            abs(self.angle) < 1e-15
            and abs(self.scale - 1.0) < 1e-15
            and np.array_equal(self.unimodular, np.eye(2, dtype=int))
        )


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), (1 if a >= 0 else -1), 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def _shortest_vectors(basis: np.ndarray, rtol: float = 1e-12) -> list[tuple[int, int]]:
    """All integer index pairs achieving the minimal nonzero length."""
    # Lagrange-Gauss reduction bounds the search window.
    u, v = basis[:, 0].copy(), basis[:, 1].copy()
    for _ in range(10_000):
        if u @ u > v @ v:
            u, v = v, u
        mu = round((u @ v) / (u @ u))
        if mu == 0:
            break
        v = v - mu * u
    shortest = math.sqrt(u @ u)
    inv = np.linalg.inv(basis)
    # a vector of length L has index coordinates bounded by L * ||inv||
    bound = int(math.ceil(shortest * np.linalg.norm(inv, 2))) + 1
    best = []
    for n1 in range(-bound, bound + 1):
        for n2 in range(-bound, bound + 1):
            if n1 == 0 and n2 == 0:
                continue
            length = float(np.linalg.norm(basis @ [n1, n2]))
            if length <= shortest * (1 + rtol):
                best.append((n1, n2))
    return best


def normalize_basis(dual: DualLattice, anchor: str = "first") -> tuple[DualLattice, Similarity]:
    """Bring a dual lattice to the form e1=(1,0), e2=(b,d), b in [0,1), d>0.

    ``anchor="first"`` rotates and scales the first generator onto (1,0).
    ``anchor="shortest"`` uses a shortest nonzero vector instead; among several
    shortest vectors the one with the smallest angle in [0, 2*pi) wins.
    """
    basis = dual.basis
    if anchor == "first":
        idx = (1, 0)
    elif anchor == "shortest":
        cands = _shortest_vectors(basis)
        idx = min(cands, key=lambda c: math.atan2(*(basis @ c)[::-1]) % TWO_PI)
    else:
        raise ValueError(f"unknown anchor {anchor!r}")

    n1, n2 = idx
    g, s, t = _ext_gcd(n1, n2)
    if g != 1:
        raise LatticeError(f"anchor index {idx} is not primitive")
    # [[n1, -t], [n2, s]] has determinant n1*s + n2*t = 1
    unimod = np.array([[n1, -t], [n2, s]], dtype=int)

    e1 = basis @ unimod[:, 0]
    angle = -math.atan2(e1[1], e1[0]) + 0.0
    scale = 1.0 / math.hypot(e1[0], e1[1])
    out = Similarity(angle, scale, unimod).apply(basis)
    if out[1, 1] < 0:
        unimod = unimod @ np.array([[1, 0], [0, -1]])
        out = Similarity(angle, scale, unimod).apply(basis)
    k = math.floor(out[0, 1])
    if k:
        unimod = unimod @ np.array([[1, -k], [0, 1]])
    sim = Similarity(angle, scale, unimod)
    out = sim.apply(basis)

    b, d = float(out[0, 1]), float(out[1, 1])
    if b >= 1.0:  # rounding right below an integer
        b -= 1.0
    b = max(b, 0.0)
    clean = np.array([[1.0, b], [0.0, d]])
    return DualLattice(clean, normalized=(b, d)), sim


@dataclass(frozen=True)
class ThreeLineConfig:
    """Integer data fixing a dual lattice whose lines at 0, pi/3, 2pi/3 are rational.

    ``p`` and ``q`` are the integer indices of the nodes of the dual lattice
    closest to the origin on the lines at angle pi/3 and -pi/3.
    """

    p: tuple[int, int]
    q: tuple[int, int]
    d_gcd: int = field(init=False)
    p2_prime: int = field(init=False)
    q2_prime: int = field(init=False)
    delta: int = field(init=False)

    def __post_init__(self):
        p1, p2 = (int(v) for v in self.p)
        q1, q2 = (int(v) for v in self.q)
        object.__setattr__(self, "p", (p1, p2))
        object.__setattr__(self, "q", (q1, q2))
        if math.gcd(p1, p2) != 1:
            raise LatticeError(f"gcd(p1, p2) must be 1, got p={self.p}")
        if math.gcd(q1, q2) != 1:
            raise LatticeError(f"gcd(q1, q2) must be 1, got q={self.q}")
        if not p2 > 0:
            raise LatticeError("inequality p2 > 0 violated")
        if not q2 > 0:
            raise LatticeError("inequality q2 > 0 violated")
        if not q1 < 0:
            raise LatticeError("inequality q1 < 0 violated")
        r = Fraction(q1, q2)
        lower = max(r * p2, -(2 + r) * p2)
        if not lower < p1:
            raise LatticeError(
                f"inequality max(q1/q2*p2, -(2+q1/q2)*p2) < p1 violated ({lower} >= {p1})"
            )
        if not p1 <= -r * p2:
            raise LatticeError(f"inequality p1 <= -(q1/q2)*p2 violated ({p1} > {-r * p2})")
        g = math.gcd(p2, q2)
        object.__setattr__(self, "d_gcd", g)
        object.__setattr__(self, "p2_prime", p2 // g)
        object.__setattr__(self, "q2_prime", q2 // g)
        object.__setattr__(self, "delta", p1 * (q2 // g) - (p2 // g) * q1)

    @property
    def b_exact(self) -> Fraction:
        p1, p2 = self.p
        q1, q2 = self.q
        return -Fraction(1, 2) * (Fraction(p1, p2) + Fraction(q1, q2))

    @property
    def d_over_sqrt3(self) -> Fraction:
        p1, p2 = self.p
        q1, q2 = self.q
        return Fraction(1, 2) * (Fraction(p1, p2) - Fraction(q1, q2))

    @property
    def b(self) -> float:
        return float(self.b_exact)

    @property
    def d(self) -> float:
        return math.sqrt(3.0) * float(self.d_over_sqrt3)

    @property
    def determinant(self) -> int:
        """p1*q2 - p2*q1, positive by construction."""
        return self.p[0] * self.q[1] - self.p[1] * self.q[0]

    def dual(self) -> DualLattice:
        return DualLattice.from_bd(self.b, self.d)

    def generators(self) -> dict[str, np.ndarray]:
        """Nodes of the dual lattice closest to the origin on L0, L1, L2."""
        b, d = self.b, self.d
        return {
            "L0": np.array([1.0, 0.0]),
            "L1": np.array([self.p[0] + b * self.p[1], d * self.p[1]]),
            "L2": np.array([self.q[0] + b * self.q[1], d * self.q[1]]),
        }

    def line_index(self, line: int, n: int) -> tuple[int, int]:
        """Integer index of the n-th node on line 0, 1 or 2."""
        if line == 0:
            return (n, 0)
        if line == 1:
            return (n * self.p[0], n * self.p[1])
        if line == 2:
            return (n * self.q[0], n * self.q[1])
        raise ValueError(f"line must be 0, 1 or 2, got {line}")


def pq_config(p, q) -> ThreeLineConfig:
    return ThreeLineConfig(tuple(p), tuple(q))


HONEYCOMB = ThreeLineConfig((0, 1), (-1, 1))


def lattice_from_descriptor(desc: dict) -> DualLattice | ThreeLineConfig:
    """Parse a JSON lattice descriptor.

    ``{"basis": [[r, r], [r, r]]}`` gives the generators of the Fourier index
    lattice (the dual lattice) as matrix columns; ``{"primal": ...}`` gives the
    period lattice instead; ``{"pq": {"p": [i, i], "q": [i, i]}}`` gives a
    three-line configuration.
    """
    if "pq" in desc:
        return pq_config(desc["pq"]["p"], desc["pq"]["q"])
    if "basis" in desc:
        return DualLattice(np.array(desc["basis"], dtype=float))
    if "primal" in desc:
        return dual_basis(Lattice(np.array(desc["primal"], dtype=float)))
    raise LatticeError("lattice descriptor needs 'basis', 'primal' or 'pq'")


def lattice_to_descriptor(obj: DualLattice | ThreeLineConfig) -> dict:
    if isinstance(obj, ThreeLineConfig):
        return {"pq": {"p": list(obj.p), "q": list(obj.q)}}
    return {"basis": obj.basis.tolist()}
