"""Residual minimization over truncated coefficient spaces.

The unknowns are the coefficients on a fixed index set (the three lines of a
(p, q) configuration, or a box of the dual lattice), with the zero mode held
fixed.  Each iteration solves for the best constants exactly and then takes a
Levenberg-Marquardt step on the coefficients with the constants frozen
(variable projection).  An optional barrier term keeps the spectrum away from
a single line.  Results are observations, never proofs of nonexistence.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .field import FourierField, spectrum_analysis
from .killing import KillingConstants, constants_from_matrix, kernel_numerators, system_columns, system_residual
from .lattice import DualLattice, ThreeLineConfig

COLLAPSE_TOL = 1e-8


@dataclass(frozen=True)
class SearchProblem:
    lattice: DualLattice | ThreeLineConfig
    band: int = 3
    zero_mode: float = 1.0
    eta: float = 0.0
    seed: int = 0
    max_iters: int = 300
    init: str | FourierField = "three_line"  # "three_line" | "single_line" | "random" | field
    init_scale: float = 0.1

    def __post_init__(self):
        if int(self.band) < 1:
            raise ValueError("band must be at least 1")
        if self.eta < 0:
            raise ValueError("penalty weight must be non-negative")

    @property
    def three_line(self) -> bool:
        return isinstance(self.lattice, ThreeLineConfig)

    @property
    def dual(self) -> DualLattice:
        return self.lattice.dual() if self.three_line else self.lattice


@dataclass
class SearchResult:
    field: FourierField
    constants: KillingConstants
    residual_norm: float
    line_energies: tuple | None
    trace: list
    joint_shift: float | None = None
    converged: bool = False
    penalty: float = 0.0
    classification: str = ""

    def to_json(self) -> dict:
        from .io import field_to_json

        last = self.trace[-1] if self.trace else {}
        return {
            "field": field_to_json(self.field),
            "constants": self.constants.to_json(),
            "residualNorm": self.residual_norm,
            "lineEnergies": None if self.line_energies is None else list(self.line_energies),
            "jointShift": self.joint_shift,
            "penalty": self.penalty,
            "classification": self.classification,
            "converged": self.converged,
            "trace": {"iterations": len(self.trace) - 1, "first": self.trace[0] if self.trace else None, "last": last},
            "observational": True,
        }


# -- parameterization -----------------------------------------------------------


class _Params:
    """Maps a real vector (Re, Im per free index) to a parity-valid field."""

    def __init__(self, prob: SearchProblem):
        self.prob = prob
        self.N0 = prob.band
        if prob.three_line:
            cfg = prob.lattice
            idx, groups = [], []
            for line in range(3):
                for n in range(1, prob.band + 1):
                    idx.append(cfg.line_index(line, n))
                    groups.append(line)
            self.index = np.array(idx)
            self.groups = np.array(groups)
        else:
            r = range(-prob.band, prob.band + 1)
            idx = [(a, b) for a in r for b in r if a > 0 or (a == 0 and b > 0)]
            self.index = np.array(idx)
            # one group per line through the origin, keyed by primitive direction
            keys = {}
            groups = []
            for a, b in idx:
                g = np.gcd(a, b)
                groups.append(keys.setdefault((a // g, b // g), len(keys)))
            self.groups = np.array(groups)
        self.N = int(np.max(np.abs(self.index)))
        self.P = len(self.index)
        self.n_groups = int(self.groups.max()) + 1

    def field(self, theta: np.ndarray) -> FourierField:
        N = self.N
        c = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
        vals = theta[: self.P] + 1j * theta[self.P :]
        i, j = self.index[:, 0] + N, self.index[:, 1] + N
        c[i, j] = vals
        c[2 * N - i, 2 * N - j] = np.conj(vals)
        c[N, N] = self.prob.zero_mode
        return FourierField(self.prob.dual, c)

    def theta(self, f: FourierField) -> np.ndarray:
        vals = np.array([f[a, b] for a, b in self.index])
        return np.concatenate([vals.real, vals.imag])

    def group_energies(self, theta: np.ndarray) -> np.ndarray:
        sq = theta[: self.P] ** 2 + theta[self.P :] ** 2
        return 2 * np.bincount(self.groups, weights=sq, minlength=self.n_groups)


def initial_theta(prob: SearchProblem, params: _Params, rng) -> np.ndarray:
    if isinstance(prob.init, FourierField):
        return params.theta(prob.init)
    P = params.P
    norms = np.max(np.abs(params.index), axis=1)
    amp = prob.init_scale / norms
    theta = np.concatenate([amp * rng.standard_normal(P), amp * rng.standard_normal(P)])
    if prob.init == "single_line":
        keep = params.groups == 0
        theta *= np.concatenate([keep, keep])
    elif prob.init not in ("three_line", "random"):
        raise ValueError(f"unknown init {prob.init!r}")
    return theta


# -- residual and Jacobian ----------------------------------------------------------


class _Model:
    """Residual of the quadratic system and its derivative in the parameters."""

    def __init__(self, params: _Params, shifts):
        self.params = params
        self.shifts = shifts  # zero-mode offsets evaluated jointly
        N = params.N
        M = 2 * N
        self.M = M
        dual = params.prob.dual
        r = np.arange(-M, M + 1)
        n1, n2 = np.meshgrid(r, r, indexing="ij")
        self.out_idx = np.stack([n1.ravel(), n2.ravel()], axis=1)  # (G, 2)
        out_phys = dual.nodes(self.out_idx)
        # derivative wrt lam_p: (w(n, p) + w(n, n - p)) lam_{n - p} - l(n) delta_{np}
        self.blocks = []
        for sign in (1, -1):
            p = sign * params.index  # (P, 2)
            nmp = self.out_idx[:, None, :] - p[None, :, :]  # (G, P, 2)
            inside = np.all(np.abs(nmp) <= N, axis=2)
            pp = np.broadcast_to(dual.nodes(p)[None], nmp.shape)
            nn = np.broadcast_to(out_phys[:, None, :], nmp.shape)
            w1a, w2a = kernel_numerators(nn, pp)
            kq = dual.nodes(nmp)
            nz = np.any(nmp != 0, axis=2)
            safe = np.where(nz[..., None], kq, 1.0)
            w1b, w2b = kernel_numerators(nn, safe)
            w1b = np.where(nz, w1b, 0.0)
            w2b = np.where(nz, w2b, 0.0)
            eq = np.all(nmp == 0, axis=2)
            flat = np.where(inside, (nmp[..., 0] + N) * (2 * N + 1) + (nmp[..., 1] + N), 0)
            self.blocks.append(
                {"W1": w1a + w1b, "W2": w2a + w2b, "inside": inside, "flat": flat, "eq": eq}
            )
        self.out_phys = out_phys

    def columns(self, f: FourierField):
        return system_columns(f)

    def evaluate(self, theta: np.ndarray, jac: bool):
        params = self.params
        f = params.field(theta)
        fields = [f if s == 0 else f.shift_zero_mode(s) for s in self.shifts]
        cols = [system_columns(g) for g in fields]
        A = np.concatenate([c.matrix() for c in cols], axis=0)
        k, _ = constants_from_matrix(A)
        res = np.concatenate([c.residual_grid(k).ravel() for c in cols])
        if not jac:
            return f, k, res, None
        c1, c2 = k.c
        ell = k.a[0] * self.out_phys[:, 0] + k.a[1] * self.out_phys[:, 1]
        Js = []
        for g in fields:
            lam = g.coeffs.ravel()
            D = []
            for b in self.blocks:
                vals = np.where(b["inside"], lam[b["flat"]], 0.0)
                D.append((c1 * b["W1"] + c2 * b["W2"]) * vals - ell[:, None] * b["eq"])
            Js.append(np.concatenate([D[0] + D[1], 1j * (D[0] - D[1])], axis=1))
        J = np.concatenate(Js, axis=0)
        return f, k, res, J


def _stack(res: np.ndarray, J=None):
    r = np.concatenate([res.real, res.imag])
    if J is None:
        return r
    return r, np.concatenate([J.real, J.imag], axis=0)


def _penalty(params: _Params, theta: np.ndarray, eta: float, jac: bool):
    """Barrier terms sqrt(eta / E_g) per line group, squared in the objective."""
    if eta == 0:
        return np.zeros(0), (np.zeros((0, len(theta))) if jac else None)
    E = params.group_energies(theta)
    E = np.maximum(E, 1e-300)
    rho = np.sqrt(eta / E)
    if not jac:
        return rho, None
    P = params.P
    dE = np.zeros((params.n_groups, 2 * P))
    g2 = np.concatenate([params.groups, params.groups])
    dE[g2, np.arange(2 * P)] = 4 * theta
    J = (-0.5 * np.sqrt(eta) * E ** (-1.5))[:, None] * dE
    return rho, J


# -- driver ------------------------------------------------------------------------------


def _run(prob: SearchProblem, shifts) -> SearchResult:
    params = _Params(prob)
    model = _Model(params, shifts)
    rng = np.random.default_rng(prob.seed)
    theta = initial_theta(prob, params, rng)

    def objective(th):
        f, k, res, _ = model.evaluate(th, False)
        rho, _ = _penalty(params, th, prob.eta, False)
        return float(np.sum(np.abs(res) ** 2) + np.sum(rho**2))

    mu = 1e-3
    f, k, res, J = model.evaluate(theta, True)
    rho, Jp = _penalty(params, theta, prob.eta, True)
    r, Jr = _stack(res, J)
    r = np.concatenate([r, rho])
    Jr = np.concatenate([Jr, Jp], axis=0)
    obj = float(r @ r)
    trace = [{"iter": 0, "objective": obj, "residual": float(np.linalg.norm(res)), "damping": mu, "accepted": True}]
    converged = False
    for it in range(1, prob.max_iters + 1):
        grad = Jr.T @ r
        if np.linalg.norm(grad) <= 1e-12 or obj == 0.0:
            converged = True
            break
        H = Jr.T @ Jr
        diag = np.eye(len(theta))
        accepted = False
        while mu < 1e16:
            step = np.linalg.solve(H + mu * diag, -grad)
            cand = theta + step
            new = objective(cand)
            if new < obj:
                theta = cand
                mu = max(mu / 2, 1e-15)
                accepted = True
                break
            mu *= 2
        if not accepted:
            converged = True
            trace.append({"iter": it, "objective": obj, "residual": trace[-1]["residual"], "damping": mu,
                          "accepted": False})
            break
        f, k, res, J = model.evaluate(theta, True)
        rho, Jp = _penalty(params, theta, prob.eta, True)
        r, Jr = _stack(res, J)
        r = np.concatenate([r, rho])
        Jr = np.concatenate([Jr, Jp], axis=0)
        obj = float(r @ r)
        trace.append({"iter": it, "objective": obj, "residual": float(np.linalg.norm(res)), "damping": mu,
                      "accepted": True})

    f, k, res, _ = model.evaluate(theta, False)
    energies = tuple(float(e) for e in params.group_energies(theta)) if prob.three_line else None
    rho, _ = _penalty(params, theta, prob.eta, False)
    G = len(model.out_idx)
    base = float(np.linalg.norm(res[:G]))
    joint = float(np.linalg.norm(res)) if len(shifts) > 1 else None
    out = SearchResult(f, k, base, energies, trace, joint, converged, float(np.sum(rho**2)))
    out.classification = classify_result(out)
    return out


def classify_result(res: SearchResult, tol: float = COLLAPSE_TOL) -> str:
    if res.line_energies is not None:
        small = sum(e <= tol for e in res.line_energies)
        return "OneDimensional" if small >= 2 else "NonOneDimensional"
    sp = spectrum_analysis(res.field)
    return "OneDimensional" if sp.one_dimensional is not None or sp.size == 0 else "NonOneDimensional"


def minimize(p: SearchProblem) -> SearchResult:
    """Minimize the residual norm of the quadratic system (plus barrier)."""
    return _run(p, (0.0,))


def shift_experiment(p: SearchProblem, lam0: float) -> dict:
    """Jointly fit lambda and lambda + lam0 with shared constants."""
    if lam0 == 0:
        raise ValueError("shift must be nonzero")
    res = _run(p, (0.0, float(lam0)))
    return {
        "jointResidual": res.joint_shift,
        "classification": res.classification,
        "result": res,
        "observational": True,
    }


def verify(result: SearchResult) -> float:
    """Discrepancy between the reported norm and an independent evaluation."""
    return abs(system_residual(result.field, result.constants).norm - result.residual_norm)


def problem_from_json(obj: dict) -> SearchProblem:
    from .io import _check_schema, field_from_json
    from .lattice import lattice_from_descriptor

    _check_schema(obj)
    lat = lattice_from_descriptor(obj["lattice"])
    init = obj.get("init", "three_line" if isinstance(lat, ThreeLineConfig) else "random")
    if isinstance(init, dict):
        init = field_from_json(init)
    return SearchProblem(
        lattice=lat,
        band=int(obj.get("band", 3)),
        zero_mode=float(obj.get("zeroMode", 1.0)),
        eta=float(obj.get("eta", 0.0)),
        seed=int(obj.get("seed", 0)),
        max_iters=int(obj.get("maxIters", 300)),
        init=init,
        init_scale=float(obj.get("initScale", 0.1)),
    )
