"""Periodic fields stored as finitely supported Fourier coefficients.

A field lives on a dual lattice with basis ``(e1, e2)``; the coefficient with
integer index ``(n1, n2)`` multiplies ``exp(i m . (x, y))`` where the physical
node is ``m = n1 e1 + n2 e2``.  Coefficients are held in a dense
``(2N+1, 2N+1)`` array, entry ``[n1 + N, n2 + N]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .lattice import DualLattice


class ParityError(ValueError):
    """Coefficients of a real field must satisfy c[-n] == conj(c[n])."""


@dataclass(frozen=True, eq=False)
class FourierField:
    dual: DualLattice
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] % 2 != 1:
            raise ValueError(f"coefficient array must be (2N+1, 2N+1), got {c.shape}")
        if self.real and not np.array_equal(c, np.conj(c[::-1, ::-1])):
            raise ParityError("coefficients violate c[-n] == conj(c[n])")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, dual: DualLattice, N: int, real: bool = True) -> "FourierField":
        return cls(dual, np.zeros((2 * N + 1, 2 * N + 1), dtype=complex), real)

    @classmethod
    def constant(cls, dual: DualLattice, value: float) -> "FourierField":
        return cls(dual, np.array([[complex(value)]]))

    @classmethod
    def from_dict(cls, dual, mapping, real=True, mirror=True, N=None) -> "FourierField":
        """Build from ``{(n1, n2): value}``.

        With ``real`` and ``mirror`` the conjugate partner of every entry is
        filled in; entries given on both sides must already agree.
        """
        if N is None:
            N = max([max(abs(a), abs(b)) for a, b in mapping] + [0])
        c = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
        for (n1, n2), val in mapping.items():
            c[n1 + N, n2 + N] = val
        if real and mirror:
            for (n1, n2), val in mapping.items():
                partner = (-n1, -n2)
                if partner in mapping:
                    if mapping[partner] != np.conj(val):
                        raise ParityError(f"entries {(n1, n2)} and {partner} are not conjugate")
                elif (n1, n2) == (0, 0):
                    if complex(val).imag != 0:
                        raise ParityError("zero mode of a real field must be real")
                else:
                    c[-n1 + N, -n2 + N] = np.conj(val)
        return cls(dual, c, real)

    # -- basic access --------------------------------------------------------

    @property
    def N(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    def __getitem__(self, idx) -> complex:
        n1, n2 = idx
        N = self.N
        if max(abs(n1), abs(n2)) > N:
            return 0j
        return complex(self.coeffs[n1 + N, n2 + N])

    @property
    def zero_mode(self) -> complex:
        return self[0, 0]

    def index_grid(self) -> np.ndarray:
        """Integer indices, shape (2N+1, 2N+1, 2)."""
        r = np.arange(-self.N, self.N + 1)
        n1, n2 = np.meshgrid(r, r, indexing="ij")
        return np.stack([n1, n2], axis=-1)

    def node_grid(self) -> np.ndarray:
        """Physical node coordinates, shape (2N+1, 2N+1, 2)."""
        return self.dual.nodes(self.index_grid())

    def support(self, include_zero: bool = True) -> np.ndarray:
        """Integer indices with a nonzero stored coefficient (exact test)."""
        nz = np.argwhere(self.coeffs != 0) - self.N
        if not include_zero:
            nz = nz[np.any(nz != 0, axis=1)]
        return nz

    def items(self):
        for n1, n2 in self.support():
            yield (int(n1), int(n2)), self[n1, n2]

    def to_dict(self) -> dict:
        return dict(self.items())

    def padded(self, N: int) -> "FourierField":
        if N < self.N:
            if np.abs(self.support()).max(initial=0) > N:
                raise ValueError("cannot truncate a field below its support")
            s = self.N - N
            return FourierField(self.dual, self.coeffs[s : s + 2 * N + 1, s : s + 2 * N + 1], self.real)
        pad = N - self.N
        return FourierField(self.dual, np.pad(self.coeffs, pad), self.real)

    def with_coeffs(self, coeffs, real=None) -> "FourierField":
        return FourierField(self.dual, coeffs, self.real if real is None else real)

    # -- arithmetic ----------------------------------------------------------

    def _aligned(self, other: "FourierField"):
        if other.dual is not self.dual and not np.array_equal(other.dual.basis, self.dual.basis):
            raise ValueError("fields live on different lattices")
        N = max(self.N, other.N)
        return self.padded(N).coeffs, other.padded(N).coeffs

    def __add__(self, other):
        if isinstance(other, FourierField):
            a, b = self._aligned(other)
            return FourierField(self.dual, a + b, self.real and other.real)
        c = self.coeffs.copy()
        c[self.N, self.N] += other
        return FourierField(self.dual, c, self.real and np.isreal(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, scalar):
        if isinstance(scalar, FourierField):
            return convolve(self, scalar)
        return FourierField(self.dual, self.coeffs * scalar, self.real and np.isreal(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def conj_field(self) -> "FourierField":
        """Coefficients of the complex conjugate function."""
        return FourierField(self.dual, np.conj(self.coeffs[::-1, ::-1]), self.real)

    def shift_zero_mode(self, value: float) -> "FourierField":
        return self + float(value)

    # -- evaluation ----------------------------------------------------------

    def evaluate_complex(self, x, y):
        idx = self.support()
        if len(idx) == 0:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=complex)
        m = self.dual.nodes(idx)
        vals = self.coeffs[idx[:, 0] + self.N, idx[:, 1] + self.N]
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        phase = np.multiply.outer(x, m[:, 0]) + np.multiply.outer(y, m[:, 1])
        return np.exp(1j * phase) @ vals

    def evaluate(self, x, y):
        """Value of a real field; the imaginary residue is checked against 1e-10."""
        val = self.evaluate_complex(x, y)
        if not self.real:
            return val
        scale = float(np.sum(np.abs(self.coeffs)))
        if np.max(np.abs(np.imag(val)), initial=0.0) > 1e-10 * max(scale, 1e-300):
            raise ParityError("evaluation produced an imaginary part")
        return np.real(val)

    def sample_grid(self, n: int = 32):
        """Values on an n x n grid of the fundamental cell of the period lattice.

        Returns ``(X, Y, values)``.
        """
        P = self.dual.primal().basis
        s = np.arange(n) / n
        S, T = np.meshgrid(s, s, indexing="ij")
        X = P[0, 0] * S + P[0, 1] * T
        Y = P[1, 0] * S + P[1, 1] * T
        return X, Y, self.evaluate(X, Y)


def apply_multiplier(f: FourierField, mult: np.ndarray, real: bool) -> FourierField:
    return FourierField(f.dual, f.coeffs * mult, real)


def dx(f: FourierField) -> FourierField:
    m = f.node_grid()
    return apply_multiplier(f, 1j * m[..., 0], f.real)


def dy(f: FourierField) -> FourierField:
    m = f.node_grid()
    return apply_multiplier(f, 1j * m[..., 1], f.real)


def diff_ops(f: FourierField, which: str) -> FourierField:
    """Fourier multipliers for d/dz, d/dzbar, the Laplacian and its inverse.

    ``inverse_laplacian`` sends the zero mode to 0.  ``dz`` and ``dzbar``
    return parity-exempt fields since their outputs are complex functions.
    """
    m = f.node_grid()
    m1, m2 = m[..., 0], m[..., 1]
    sq = m1**2 + m2**2
    if which == "dz":
        return apply_multiplier(f, 0.5j * (m1 - 1j * m2), False)
    if which == "dzbar":
        return apply_multiplier(f, 0.5j * (m1 + 1j * m2), False)
    if which == "laplacian":
        return apply_multiplier(f, -sq, f.real)
    if which == "inverse_laplacian":
        mult = np.zeros_like(sq)
        nz = sq != 0
        mult[nz] = -1.0 / sq[nz]
        return apply_multiplier(f, mult, f.real)
    raise ValueError(f"unknown operator {which!r}")


def convolve(f: FourierField, g: FourierField) -> FourierField:
    """Coefficients of the pointwise product (exact, support bound N_f + N_g)."""
    if g.dual is not f.dual and not np.array_equal(g.dual.basis, f.dual.basis):
        raise ValueError("fields live on different lattices")
    out = convolve2d(f.coeffs, g.coeffs, mode="full")
    real = f.real and g.real
    if real:
        # summation order differs between n and -n; restore exact parity
        out = 0.5 * (out + np.conj(out[::-1, ::-1]))
    return FourierField(f.dual, out, real)


@dataclass(frozen=True)
class Spectrum:
    nodes: np.ndarray  # integer indices, origin excluded
    one_dimensional: np.ndarray | None  # unit direction with angle in [0, pi)
    zero_mode: complex
    decay_sum: float

    @property
    def size(self) -> int:
        return len(self.nodes)


def spectrum_analysis(f: FourierField) -> Spectrum:
    idx = f.support(include_zero=False)
    decay = float(np.sum(np.abs(f.coeffs))) - abs(f.zero_mode)
    direction = None
    if len(idx):
        m = f.dual.nodes(idx)
        ref = m[np.argmax(np.hypot(m[:, 0], m[:, 1]))]
        norms = np.hypot(m[:, 0], m[:, 1])
        cross = m[:, 0] * ref[1] - m[:, 1] * ref[0]
        if np.all(np.abs(cross) <= 1e-12 * norms * np.hypot(*ref)):
            u = ref / np.hypot(*ref)
            if u[1] < 0 or (u[1] == 0 and u[0] < 0):
                u = -u
            direction = u + 0.0
    return Spectrum(idx, direction, f.zero_mode, decay)


def random_real_field(dual: DualLattice, N: int, rng, scale: float = 1.0, zero_mode=None) -> FourierField:
    """Random parity-valid field with support in the box max(|n1|,|n2|) <= N."""
    c = scale * (rng.standard_normal((2 * N + 1, 2 * N + 1)) + 1j * rng.standard_normal((2 * N + 1, 2 * N + 1)))
    c = 0.5 * (c + np.conj(c[::-1, ::-1]))
    c[N, N] = c[N, N].real if zero_mode is None else zero_mode
    return FourierField(dual, c)
