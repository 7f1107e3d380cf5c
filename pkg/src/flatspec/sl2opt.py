"""SL(2,R) numerics: stretch factors, balancing and infimal length of a zonogon.

The length of a curve after acting by A is sum |A w_i| over its zonogon
generators, which depends only on Q = A^T A.  Positive definite Q with
det Q = 1 is parametrised as Q = [[e^u, v], [v, (1 + v^2) e^-u]], which turns
the minimisation into an unconstrained problem in (u, v).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import Degenerate, EccNotBalanced, NoConvergence, NotUnimodular
from .zonogon import Zonogon, apply_sl2

DET_TOL = 1e-12


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    return A


def svd_stretch(A) -> float:
    """Largest singular value of a determinant-one matrix."""
    A = _as_matrix(A)
    det = float(np.linalg.det(A))
    if abs(det - 1) > DET_TOL * max(1.0, float(np.abs(A).max()) ** 2):
        raise NotUnimodular(f"det = {det!r}")
    F = float((A * A).sum())
    return math.sqrt((F + math.sqrt(max(F * F - 4.0, 0.0))) / 2)


def _q_matrix(u, v):
    return np.array([[math.exp(u), v], [v, (1 + v * v) * math.exp(-u)]])


def sqrt_spd(Q) -> np.ndarray:
    """Symmetric positive square root of a 2x2 SPD matrix with det 1."""
    Q = np.asarray(Q, dtype=float)
    return (Q + np.eye(2)) / math.sqrt(np.trace(Q) + 2)


def _uv_from_q(Q):
    return math.log(Q[0, 0]), Q[0, 1]


def balance(Z: Zonogon) -> np.ndarray:
    """A determinant-one matrix A0 with ecc(A0 . Z) <= 2."""
    if Z.degenerate:
        raise Degenerate("all generators are parallel")
    g = Z._g
    M = g.T @ g
    evals, evecs = np.linalg.eigh(M)
    if evals[0] <= 0:
        raise Degenerate("second-moment matrix is singular")
    A0 = evecs @ np.diag(evals ** -0.5) @ evecs.T
    A0 /= math.sqrt(np.linalg.det(A0))
    ecc = apply_sl2(Z, A0).ecc
    if ecc <= 2 + 1e-9:
        return A0

    def obj(x):
        A = sqrt_spd(_q_matrix(*x)) @ A0
        return apply_sl2(Z, A).ecc

    res = minimize(obj, np.zeros(2), method="Nelder-Mead", options={"maxiter": 50})
    A1 = sqrt_spd(_q_matrix(*res.x)) @ A0
    ecc1 = apply_sl2(Z, A1).ecc
    best, best_ecc = (A1, ecc1) if ecc1 < ecc else (A0, ecc)
    if best_ecc > 2 + 1e-9:
        raise EccNotBalanced(f"best eccentricity {best_ecc!r} > 2", best=best, ecc=best_ecc)
    return best


@dataclass
class InfimalLengthResult:
    value: float
    minimizer: np.ndarray | None
    iterations: int
    certified_bounds: tuple
    Q: np.ndarray | None = None
    within_bounds: bool = True
    history: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "bounds": list(self.certified_bounds),
            "Q": None if self.Q is None else self.Q.tolist(),
            "iterations": self.iterations,
        }


def _objective(g, u, v, order=2):
    x, y = g[:, 0], g[:, 1]
    eu, emu = math.exp(u), math.exp(-u)
    G = eu * x * x + 2 * v * x * y + (1 + v * v) * emu * y * y
    s = np.sqrt(G)
    f = float(s.sum())
    if order == 0:
        return f, None, None
    gu = eu * x * x - (1 + v * v) * emu * y * y
    gv = 2 * x * y + 2 * v * emu * y * y
    grad = np.array([(gu / (2 * s)).sum(), (gv / (2 * s)).sum()])
    guu = eu * x * x + (1 + v * v) * emu * y * y
    guv = -2 * v * emu * y * y
    gvv = 2 * emu * y * y
    inv3 = 1 / (4 * s**3)
    H = np.array(
        [
            [(guu / (2 * s) - gu * gu * inv3).sum(), (guv / (2 * s) - gu * gv * inv3).sum()],
            [(guv / (2 * s) - gu * gv * inv3).sum(), (gvv / (2 * s) - gv * gv * inv3).sum()],
        ]
    )
    return f, grad, H


def infimal_length(Z: Zonogon, tol: float = 1e-12, max_iter: int = 10**5) -> InfimalLengthResult:
    """Minimum of sum |A w_i| over A in SL(2,R)."""
    area = Z.area
    bounds = (math.sqrt(math.pi * area), math.sqrt(8 * area))
    if Z.degenerate:
        return InfimalLengthResult(0.0, None, 0, bounds)
    scale = Z.r_plus
    g = Z._g / scale
    try:
        A0 = balance(Z)
    except EccNotBalanced as exc:
        A0 = exc.best
    Q0 = A0.T @ A0
    u, v = _uv_from_q(Q0)
    f, grad, H = _objective(g, u, v)
    history = [f]
    it = 0
    stall = 0
    while True:
        it += 1
        if it > max_iter:
            raise NoConvergence(
                f"no convergence after {max_iter} iterations", {"value": f * scale, "gradient": grad.tolist()}
            )
        try:
            evals = np.linalg.eigvalsh(H)
            step = -np.linalg.solve(H, grad) if evals[0] > 1e-14 * max(1.0, evals[1]) else -grad
        except np.linalg.LinAlgError:
            step = -grad
        if float(step @ grad) >= 0:
            step = -grad
        t = 1.0
        while True:
            f_new = _objective(g, u + t * step[0], v + t * step[1], order=0)[0]
            if f_new <= f + 1e-4 * t * float(step @ grad) or t < 1e-20:
                break
            t /= 2
        if f_new > f:
            f_new = f
            stall += 1
        else:
            u, v = u + t * step[0], v + t * step[1]
            stall = 0
        improvement = (f - f_new) / f
        f, grad, H = _objective(g, u, v)
        history.append(f)
        small_step = t * float(np.hypot(*step)) < 1e-10
        if (improvement < tol and small_step) or float(np.hypot(*grad)) < 1e-15 or stall > 2:
            break
    Q = _q_matrix(u, v)
    value = f * scale
    ok = bounds[0] * (1 - 1e-9) <= value <= bounds[1] * (1 + 1e-9)
    return InfimalLengthResult(value, sqrt_spd(Q), it, bounds, Q, ok, [h * scale for h in history])


def ecc_growth_check(Z: Zonogon, matrices=None) -> dict:
    """Ratios ecc(A . Z_min) / lambda(A)^2 over sample matrices, with the measured band constant."""
    if Z.degenerate:
        raise Degenerate("eccentricity growth needs a non-degenerate zonogon")
    res = infimal_length(Z)
    Zmin = apply_sl2(Z, res.minimizer)
    if matrices is None:
        matrices = [np.eye(2)]
        for t in (2.0, 4.0, 8.0):
            for phi in (0.0, math.pi / 5, math.pi / 3):
                c, s = math.cos(phi), math.sin(phi)
                R = np.array([[c, -s], [s, c]])
                matrices.append(np.diag([t, 1 / t]) @ R)
    rows = []
    for A in matrices:
        lam = svd_stretch(A)
        ratio = apply_sl2(Zmin, A).ecc / lam**2
        rows.append({"A": np.asarray(A).tolist(), "lambda": lam, "ratio": ratio})
    ratios = [r["ratio"] for r in rows]
    c = max(max(ratios), 1 / min(ratios))
    return {"ecc_at_minimizer": Zmin.ecc, "samples": rows, "c_measured": c}
