"""The trilinear system for three complex sequences.

    x_{n1} y_{n2} - x_{n1+n2} z_{n2} + y_{n1+n2} z_{-n1} = 0,
    n1, n2, n1 + n2 != 0,   s_{-n} = conj(s_n).

Sequences are truncated to a band |n| <= N; equations touching an index
outside the band are skipped rather than zero-padded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .field import FourierField
from .lattice import ThreeLineConfig

ZERO_RTOL = 1e-12


class BandError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class GrowthError(ValueError):
    pass


def _as_band(values, N=None) -> np.ndarray:
    a = np.asarray(values, dtype=complex).ravel()
    if N is not None:
        a = np.concatenate([a, np.zeros(max(0, N - len(a)), dtype=complex)])[:N]
    a.setflags(write=False)
    return a


def full_sequence(pos: np.ndarray) -> np.ndarray:
    """Length 2N+1 array indexed by n + N; the n = 0 slot holds 0."""
    return np.concatenate([np.conj(pos[::-1]), [0.0], pos])


@dataclass(frozen=True, eq=False)
class TripleSequence:
    """Values for n = 1..N; negative indices follow from parity."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        N = max(len(np.ravel(self.x)), len(np.ravel(self.y)), len(np.ravel(self.z)))
        for name in "xyz":
            object.__setattr__(self, name, _as_band(getattr(self, name), N))

    @classmethod
    def from_values(cls, x, y, z) -> "TripleSequence":
        return cls(np.atleast_1d(x), np.atleast_1d(y), np.atleast_1d(z))

    @classmethod
    def constant(cls, xv, yv, zv, N: int) -> "TripleSequence":
        return cls(np.full(N, xv, dtype=complex), np.full(N, yv, dtype=complex), np.full(N, zv, dtype=complex))

    @classmethod
    def zeros(cls, N: int) -> "TripleSequence":
        return cls.constant(0, 0, 0, N)

    @property
    def band(self) -> int:
        return len(self.x)

    @property
    def decay_sum(self) -> float:
        return float(np.sum(np.abs(self.x)) + np.sum(np.abs(self.y)) + np.sum(np.abs(self.z)))

    def get(self, name: str, n: int) -> complex:
        if n == 0 or abs(n) > self.band:
            raise IndexError(n)
        v = getattr(self, name)[abs(n) - 1]
        return complex(v if n > 0 else np.conj(v))

    def full(self, name: str) -> np.ndarray:
        return full_sequence(getattr(self, name))

    def scaled(self, a: float) -> "TripleSequence":
        return TripleSequence(a * self.x, a * self.y, a * self.z)

    def truncated(self, N: int) -> "TripleSequence":
        return TripleSequence(self.x[:N], self.y[:N], self.z[:N])

    def appended(self, xn, yn, zn) -> "TripleSequence":
        return TripleSequence(np.append(self.x, xn), np.append(self.y, yn), np.append(self.z, zn))

    def zero_pattern(self, rtol: float = ZERO_RTOL) -> dict:
        scale = max(float(np.max(np.abs(np.concatenate([self.x, self.y, self.z])), initial=0.0)), 1e-300)
        return {name: bool(np.all(np.abs(getattr(self, name)) <= rtol * scale)) for name in "xyz"}

    def to_json(self) -> dict:
        def entries(a):
            return [{"n": i + 1, "re": v.real, "im": v.imag} for i, v in enumerate(a)]

        return {"band": self.band, "x": entries(self.x), "y": entries(self.y), "z": entries(self.z)}

    @classmethod
    def from_json(cls, obj) -> "TripleSequence":
        N = int(obj["band"])
        arrays = {}
        for name in "xyz":
            a = np.zeros(N, dtype=complex)
            for e in obj.get(name, []):
                n = int(e["n"])
                if not 1 <= n <= N:
                    raise BandError(f"{name} index {n} outside band 1..{N}")
                a[n - 1] = complex(e.get("re", 0.0), e.get("im", 0.0))
            arrays[name] = a
        return cls(arrays["x"], arrays["y"], arrays["z"])


# -- residual -----------------------------------------------------------------


def equation_indices(N: int) -> np.ndarray:
    """All (n1, n2) with n1, n2, n1 + n2 nonzero and inside the band."""
    r = np.arange(-N, N + 1)
    n1, n2 = np.meshgrid(r, r, indexing="ij")
    s = n1 + n2
    ok = (n1 != 0) & (n2 != 0) & (s != 0) & (np.abs(s) <= N)
    return np.stack([n1[ok], n2[ok]], axis=1)


def residual_values(s: TripleSequence) -> tuple[np.ndarray, np.ndarray]:
    N = s.band
    X, Y, Z = s.full("x"), s.full("y"), s.full("z")
    idx = equation_indices(N)
    n1, n2 = idx[:, 0], idx[:, 1]
    vals = X[n1 + N] * Y[n2 + N] - X[n1 + n2 + N] * Z[n2 + N] + Y[n1 + n2 + N] * Z[-n1 + N]
    return idx, vals


@dataclass(frozen=True)
class TrilinearResidual:
    max_abs: float
    l2: float
    worst_triple: tuple[int, int] | None

    def to_json(self) -> dict:
        return {"maxAbs": self.max_abs, "l2": self.l2, "worstTriple": self.worst_triple}


def residual(s: TripleSequence) -> TrilinearResidual:
    if s.band < 2:
        raise BandError("band must be at least 2")
    idx, vals = residual_values(s)
    a = np.abs(vals)
    w = int(np.argmax(a))
    return TrilinearResidual(float(a[w]), float(np.linalg.norm(vals)), (int(idx[w, 0]), int(idx[w, 1])))


# -- symmetries -----------------------------------------------------------------


def apply_symmetry(s: TripleSequence, which: int) -> TripleSequence:
    """The four index/sequence changes leaving the system invariant.

    1: s_n -> s_{-n};  2: (y, x, -z_{-n});  3: (z, y, x);  4: (-x_{-n}, z, y).
    """
    if which == 1:
        return TripleSequence(np.conj(s.x), np.conj(s.y), np.conj(s.z))
    if which == 2:
        return TripleSequence(s.y, s.x, -np.conj(s.z))
    if which == 3:
        return TripleSequence(s.z, s.y, s.x)
    if which == 4:
        return TripleSequence(-np.conj(s.x), s.z, s.y)
    raise ValueError(f"symmetry index must be 1..4, got {which}")


# -- moduli relations -----------------------------------------------------------------


def moduli_relations(s: TripleSequence, tol: float = 1e-10, precondition_tol: float = 1e-12) -> dict:
    """Check the three moduli identities for 1 <= m < n <= N.

    They only follow for solutions, so the residual is checked first.
    """
    res = residual(s)
    if res.max_abs > precondition_tol:
        raise PreconditionError(
            f"relations only derived for solutions (residual {res.max_abs:.3e} > {precondition_tol:.1e})"
        )
    ax, ay, az = (np.abs(getattr(s, k)) ** 2 for k in "xyz")
    pairs = {"x": (az, ay, s.x), "y": (ax, az, s.y), "z": (ax, ay, s.z)}
    violations = []
    worst = 0.0
    N = s.band
    for n in range(2, N + 1):
        for m in range(1, n):
            for name, (p, q, seq) in pairs.items():
                lhs = (p[m - 1] - q[m - 1]) * seq[n - 1]
                rhs = (p[n - m - 1] - q[n - m - 1]) * seq[n - 1]
                err = abs(lhs - rhs)
                worst = max(worst, err)
                if err > tol:
                    violations.append((m, n, name))
    return {"violations": violations, "maxAbs": worst}


# -- extension ----------------------------------------------------------------------


def subsystem_indices(n: int) -> dict:
    """Equation pairs (n1, n2) making up the three subsystems at level n."""
    ms = range(1, n)
    return {
        "sum": [(m, n - m) for m in ms],
        "negFirst": [(-m, n) for m in ms],
        "negSecond": [(n, -m) for m in ms],
    }


def _extension_system(s: TripleSequence, n: int):
    """Real least-squares form of the level-n subsystems.

    Unknowns (Re, Im) of (x_n, y_n, z_n); the third subsystem contains
    z_{-n} = conj(z_n), so the problem is only real-linear.
    """
    g = s.get
    A, B, r = [], [], []  # A u + B conj(u) = r, u = (x_n, y_n, z_n)
    for m in range(1, n):
        A.append([g("z", n - m), -g("z", -m), 0])
        B.append([0, 0, 0])
        r.append(g("x", m) * g("y", n - m))
        A.append([0, g("x", -m), -g("x", n - m)])
        B.append([0, 0, 0])
        r.append(-g("y", n - m) * g("z", m))
        A.append([g("y", -m), 0, 0])
        B.append([0, 0, g("y", n - m)])
        r.append(g("x", n - m) * g("z", -m))
    A = np.array(A, dtype=complex)
    B = np.array(B, dtype=complex)
    r = np.array(r, dtype=complex)
    M = np.block([[(A + B).real, (B - A).imag], [(A + B).imag, (A - B).real]])
    rhs = np.concatenate([r.real, r.imag])
    return M, rhs


@dataclass(frozen=True)
class Extension:
    candidate: tuple[complex, complex, complex] | None
    status: str  # "Consistent" | "Overdetermined-Inconsistent" | "Underdetermined"
    classification: str  # "OneDimensional" | "NonOneDimensional" | "ViolatesSystem"
    axis: str | None = None
    witness: tuple | None = None
    solve_residual: float = 0.0
    nullspace: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        cand = None if self.candidate is None else [{"re": v.real, "im": v.imag} for v in self.candidate]
        return {
            "candidate": cand,
            "status": self.status,
            "classification": self.classification,
            "axis": self.axis,
            "witness": self.witness,
            "solveResidual": self.solve_residual,
        }


def classify(s: TripleSequence, tol: float = 1e-10) -> tuple[str, str | None, tuple | None]:
    if s.band >= 2:
        res = residual(s)
        scale = max(1.0, float(np.max(np.abs(np.concatenate([s.x, s.y, s.z])))) ** 2)
        if res.max_abs > tol * scale:
            return "ViolatesSystem", None, res.worst_triple
    zeros = s.zero_pattern()
    nonzero = [k for k in "xyz" if not zeros[k]]
    if len(nonzero) <= 1:
        return "OneDimensional", (nonzero[0] if nonzero else "trivial"), None
    return "NonOneDimensional", None, None


def extend_and_classify(s: TripleSequence, n: int | None = None, tol: float = 1e-10,
                        prefix_tol: float = 1e-12) -> Extension:
    """Solve the level-n subsystems for (x_n, y_n, z_n) given the prefix."""
    if n is None:
        n = s.band + 1
    if n < 2:
        raise ValueError("extension needs n >= 2")
    if s.band < n - 1:
        raise BandError(f"prefix has band {s.band}, need {n - 1}")
    s = s.truncated(n - 1)
    if s.band >= 2 and residual(s).max_abs > prefix_tol:
        raise PreconditionError("prefix does not solve the system")
    M, rhs = _extension_system(s, n)
    u, _, rank, sv = np.linalg.lstsq(M, rhs, rcond=None)
    smax = sv[0] if len(sv) else 0.0
    rank = int(np.sum(sv > 1e-10 * smax)) if smax > 0 else 0
    res = float(np.linalg.norm(M @ u - rhs))
    scale = float(np.linalg.norm(rhs) + np.linalg.norm(M) * np.linalg.norm(u))
    cand = (complex(u[0], u[3]), complex(u[1], u[4]), complex(u[2], u[5]))
    if res > tol * scale:
        return Extension(None, "Overdetermined-Inconsistent", "ViolatesSystem", None, (n, res), res)
    null = None
    status = "Consistent"
    if rank < 6:
        status = "Underdetermined"
        _, _, vt = np.linalg.svd(M) if M.size else (None, None, np.eye(6))
        null = vt[rank:]
    ext = s.appended(*cand)
    cls, axis, witness = classify(ext, tol)
    return Extension(cand, status, cls, axis, witness, res, null)


# -- randomized search ----------------------------------------------------------------


@dataclass
class SearchStats:
    trials: int = 0
    completed: int = 0
    over_decay_limit: int = 0
    inconsistent: int = 0
    one_dimensional: int = 0
    non_one_dimensional: int = 0
    non_one_dim_examples: list = field(default_factory=list)
    equal_moduli_checked: int = 0
    equal_moduli_max_dev: float = 0.0
    modes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "completed": self.completed,
            "overDecayLimit": self.over_decay_limit,
            "inconsistent": self.inconsistent,
            "oneDimensional": self.one_dimensional,
            "nonOneDimensional": self.non_one_dimensional,
            "equalModuliChecked": self.equal_moduli_checked,
            "equalModuliMaxDeviation": self.equal_moduli_max_dev,
            "modes": self.modes,
            "observational": True,
        }


PREFIX_MODES = ("generic", "equal_moduli", "one_dimensional")


def random_prefix(rng, mode: str, scale: float = 0.05) -> TripleSequence:
    """A band-1 prefix (x1, y1, z1) with moduli within a factor 2 of each other."""
    phases = np.exp(2j * np.pi * rng.random(3))
    if mode == "generic":
        mod = scale * rng.uniform(0.5, 1.0, 3)
    elif mode == "equal_moduli":
        mod = np.full(3, scale * rng.uniform(0.5, 1.0))
    elif mode == "one_dimensional":
        mod = np.zeros(3)
        mod[rng.integers(3)] = scale * rng.uniform(0.5, 1.0)
    else:
        raise ValueError(mode)
    v = mod * phases
    return TripleSequence.from_values(v[0], v[1], v[2])


def random_extension_search(band: int = 4, trials: int = 1000, seed: int = 0, decay_limit: float = 0.5,
                            tol: float = 1e-10, modes=("generic", "equal_moduli"),
                            scale: float = 0.05) -> SearchStats:
    """Grow random small prefixes level by level through the subsystems.

    Underdetermined levels take a random combination from the solution
    space.  Completed sequences with decay sum above ``decay_limit`` are
    counted and dropped (no rescaling); the rest are classified.
    Observational only.
    """
    if band < 2:
        raise BandError("band must be at least 2")
    rng = np.random.default_rng(seed)
    st = SearchStats()
    for t in range(trials):
        mode = modes[t % len(modes)]
        tally = st.modes.setdefault(mode, {"trials": 0, "completed": 0, "nonOneDimensional": 0})
        tally["trials"] += 1
        st.trials += 1
        s = random_prefix(rng, mode, scale)
        ok = True
        for n in range(2, band + 1):
            ext = extend_and_classify(s, n, tol)
            if ext.candidate is None:
                ok = False
                break
            cand = np.array(ext.candidate)
            if ext.nullspace is not None and len(ext.nullspace):
                coef = rng.standard_normal(len(ext.nullspace))
                step = coef @ ext.nullspace
                step *= np.abs(cand).max(initial=0.0) or float(np.max(np.abs(s.x), initial=0.05))
                cand = cand + (step[:3] + 1j * step[3:])
            s = s.appended(*cand)
            if residual(s).max_abs > tol * max(1.0, np.max(np.abs(s.x)) ** 2):
                ok = False
                break
        if not ok:
            st.inconsistent += 1
            continue
        if s.decay_sum > decay_limit:
            st.over_decay_limit += 1
            continue
        st.completed += 1
        tally["completed"] += 1
        cls, axis, _ = classify(s, tol)
        if cls == "OneDimensional":
            st.one_dimensional += 1
        else:
            st.non_one_dimensional += 1
            tally["nonOneDimensional"] += 1
            if len(st.non_one_dim_examples) < 5:
                st.non_one_dim_examples.append(s)
        z = s.zero_pattern()
        allnz = np.all(np.abs(np.concatenate([s.x, s.y, s.z])) > 0) and not any(z.values())
        if allnz:
            mods = np.abs(np.stack([s.x, s.y, s.z]))
            dev = float(np.max(mods.max(axis=0) - mods.min(axis=0)))
            st.equal_moduli_checked += 1
            st.equal_moduli_max_dev = max(st.equal_moduli_max_dev, dev)
    return st


# -- growth recursion ------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthResult:
    r: np.ndarray
    ratio_bound_ok: bool
    lower_bound: float
    product_bound_ok: bool

    def to_json(self) -> dict:
        return {
            "r": self.r.tolist(),
            "ratioBoundOK": self.ratio_bound_ok,
            "lowerBound": self.lower_bound,
            "productBoundOK": self.product_bound_ok,
        }


def growth_recursion(r0: float, phases, steps: int) -> GrowthResult:
    """Iterate r_{n+1} = r_n / (1 - r_n^2) * sqrt(1 - 2 r_n cos(theta_n) + r_n^2).

    ``phases`` is a scalar or a sequence of at least ``steps`` angles.  The
    per-step bound r_{k}/r_{k-1} >= 1/(1 + r_{k-1}) multiplies out to
    r_n >= r_0 / prod_{k=0}^{n-1} (1 + r_k), which is checked at every n;
    ``lower_bound`` uses the product over the whole run.
    """
    if not 0 < r0 < 1:
        raise GrowthError("r0 must lie in (0, 1)")
    th = np.broadcast_to(np.asarray(phases, dtype=float), (steps,)) if np.ndim(phases) == 0 else np.asarray(phases, float)
    if len(th) < steps:
        raise ValueError("need one phase per step")
    r = np.empty(steps + 1)
    r[0] = r0
    ratio_ok = True
    prod_ok = True
    prod = 1.0
    for n in range(steps):
        rn = r[n]
        nxt = rn / (1 - rn * rn) * math.sqrt(1 - 2 * rn * math.cos(th[n]) + rn * rn)
        if nxt >= 1:
            raise GrowthError(f"r reached {nxt:.6g} >= 1 at step {n + 1}")
        r[n + 1] = nxt
        ratio_ok &= nxt * (1 + rn) >= rn * (1 - 1e-15)
        prod *= 1 + rn
        prod_ok &= nxt >= r0 / prod * (1 - 1e-13)
    lower = r0 / float(np.prod(1 + r))
    return GrowthResult(r, bool(ratio_ok), lower, bool(prod_ok and np.all(r >= lower)))


# -- reduction from three-line spectra -----------------------------------------------


@dataclass(frozen=True, eq=False)
class ThreeLineSpectrum:
    """Coefficients on the lines L0, L1, L2 for n = 1..N (parity gives n < 0)."""

    cfg: ThreeLineConfig
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    zero_mode: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, _as_band(getattr(self, name)))

    def value(self, name: str, n: int) -> complex:
        a = getattr(self, name)
        if n == 0:
            return complex(self.zero_mode)
        if abs(n) > len(a):
            return 0j
        v = a[abs(n) - 1]
        return complex(v if n > 0 else np.conj(v))

    def band(self, name: str) -> int:
        return len(getattr(self, name))

    def line_energies(self) -> tuple[float, float, float]:
        return tuple(float(2 * np.sum(np.abs(getattr(self, k)) ** 2)) for k in ("alpha", "beta", "gamma"))

    def to_field(self) -> FourierField:
        mapping = {(0, 0): self.zero_mode}
        for line, name in enumerate(("alpha", "beta", "gamma")):
            for i, v in enumerate(getattr(self, name)):
                if v != 0:
                    mapping[self.cfg.line_index(line, i + 1)] = v
        return FourierField.from_dict(self.cfg.dual(), mapping)

    @classmethod
    def from_field(cls, f: FourierField, cfg: ThreeLineConfig, N: int | None = None) -> "ThreeLineSpectrum":
        """Read the line coefficients; off-line spectrum is not allowed."""
        N = f.N if N is None else N
        arrays = []
        taken = {(0, 0)}
        for line in range(3):
            vals = []
            for n in range(1, N + 1):
                idx = cfg.line_index(line, n)
                vals.append(f[idx])
                taken.add(idx)
                taken.add((-idx[0], -idx[1]))
            arrays.append(np.array(vals))
        extra = [tuple(int(v) for v in n) for n in f.support() if tuple(int(v) for v in n) not in taken]
        if extra:
            raise ValueError(f"field has spectrum off the three lines, e.g. {extra[0]}")
        return cls(cfg, *arrays, zero_mode=float(f.zero_mode.real))


def reduce_from_lines(line_data: ThreeLineSpectrum) -> dict:
    """Strided reindexing of the line data into a triple sequence.

    x_n = i alpha_{delta n} / n, y_n = i beta_{q2' n} / n, z_n = i gamma_{p2' n} / n.
    Dividing by n turns conjugate symmetry into conjugate antisymmetry; the
    common factor i restores it and leaves the (quadratic) system unchanged.
    The checks are evaluated on the line data directly:
    offStride, max |beta_n1 gamma_n2| over indices off the q2', p2' strides;
    offDelta, the cross relation at alpha indices not divisible by delta
    (None when delta = 1, where there are no such indices);
    reduced, the max residual of the reindexed system.
    """
    cfg = line_data.cfg
    dl, qp, pp = cfg.delta, cfg.q2_prime, cfg.p2_prime
    N = min(line_data.band("alpha") // dl, line_data.band("beta") // qp, line_data.band("gamma") // pp)
    if N < 2:
        raise BandError(f"band too small for strides (delta={dl}, q2'={qp}, p2'={pp})")
    a, b, g = (lambda n, k=k: line_data.value(k, n) for k in ("alpha", "beta", "gamma"))
    ns = np.arange(1, N + 1)
    x = np.array([1j * a(dl * n) / n for n in ns])
    y = np.array([1j * b(qp * n) / n for n in ns])
    z = np.array([1j * g(pp * n) / n for n in ns])
    seq = TripleSequence(x, y, z)

    Nb, Ng, Na = line_data.band("beta"), line_data.band("gamma"), line_data.band("alpha")
    offStride = 0.0
    for n1 in range(-Nb, Nb + 1):
        if n1 == 0 or n1 % qp == 0:
            continue
        for n2 in range(-Ng, Ng + 1):
            if n2 == 0 or n2 % pp == 0:
                continue
            offStride = max(offStride, abs(b(n1) * g(n2)))

    offDelta = None
    if dl != 1:
        offDelta = 0.0
        for n1 in range(-Na, Na + 1):
            if n1 == 0 or n1 % dl == 0:
                continue
            for n2 in range(-N, N + 1):
                if n2 == 0 or abs(n1 + dl * n2) > Na:
                    continue
                v = a(n1) / n1 * b(qp * n2) / n2 - a(n1 + dl * n2) / (n1 + dl * n2) * g(pp * n2) / n2
                offDelta = max(offDelta, abs(v))

    reduced = 0.0
    for n1 in range(-N, N + 1):
        for n2 in range(-N, N + 1):
            s = n1 + n2
            if n1 == 0 or n2 == 0 or s == 0 or abs(s) > N:
                continue
            v = (a(dl * n1) / n1 * b(qp * n2) / n2 - a(dl * s) / s * g(pp * n2) / n2
                 - b(qp * s) / s * g(-pp * n1) / n1)
            reduced = max(reduced, abs(v))
    return {"seq": seq, "checks": {"offStride": offStride, "offDelta": offDelta, "reduced": reduced}}


def constant_family(x: float, y: float, N: int) -> TripleSequence:
    """The non-decaying constant solution with z = x y / (x - y)."""
    if x == y:
        raise ValueError("need x != y")
    return TripleSequence.constant(x, y, x * y / (x - y), N)
