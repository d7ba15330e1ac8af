"""Everything derived from linearizing at the invaded disease-free state.

The infected equation linearized at (s_minus_inf, 0, 0) has the characteristic
function f(lambda) = -d2*lambda^2 + c*lambda - (beta-gamma-delta). Its smaller
positive root is the leading-edge decay rate of the front; minimizing the
growth-rate quotient over decay rates gives the minimal front speed
c* = 2*sqrt(d2*(beta-gamma-delta)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams


class ComplexRoots(ValueError):
    """Speed below the minimal one: the characteristic roots are complex."""


class SubThreshold(ValueError):
    """beta <= gamma + delta (R0 <= 1): no positive minimal speed exists."""


class NonPositiveLambda(ValueError):
    """The speed quotient is only defined for decay rates lambda > 0."""


@dataclass(frozen=True)
class CharRoots:
    """Positive roots of the characteristic function at a given speed."""

    c: float
    lambda0: float
    lambda0_plus: float
    degenerate: bool = False  # True exactly at c = c*, where the roots coincide


@dataclass(frozen=True)
class SpeedAnalysis:
    """Minimal speed and minimizer, with a full-quotient cross-check.

    c_star / lambda_star come from the closed form for the infected branch.
    full_min / full_argmin minimize the quotient over all three eigenvalue
    branches; they coincide with the closed form whenever the infected branch
    is the active maximum at the minimizer, and the discrepancy is reported
    (never hidden) when another branch dominates.
    """

    c_star: float
    lambda_star: float
    i_branch_min: float
    full_min: float
    full_argmin: float
    i_branch_active_at_minimizer: bool
    phi_samples: tuple | None = None


@dataclass(frozen=True)
class D3Report:
    """Outcome of the d3 < 2*d2 check and of the implied inequality c - d3*lambda0 > 0."""

    satisfied: bool
    implied_positive: bool
    lambda0: float
    c_minus_d3_lambda0: float


def characteristic_f(lam: float, c: float, p: ModelParams) -> float:
    """f(lambda) = -d2*lambda^2 + c*lambda - (beta - gamma - delta)."""
    return -p.d2 * lam * lam + c * lam - (p.beta - p.gamma - p.delta)


def lambda0(c: float, p: ModelParams) -> CharRoots:
    """Both positive roots of f at speed c; raises ComplexRoots below the minimal speed.

    The smaller root uses the conjugate form 2q/(c + sqrt(...)) to avoid
    cancellation for c much larger than the minimal speed.
    """
    q = p.beta - p.gamma - p.delta
    if q <= 0:
        raise SubThreshold("beta <= gamma + delta: no wave decay rate exists")
    disc = c * c - 4.0 * p.d2 * q
    if disc < 0:
        raise ComplexRoots(
            f"c = {c} is below the minimal speed {2.0 * np.sqrt(p.d2 * q)}: "
            "characteristic roots are complex"
        )
    s = np.sqrt(disc)
    lam_small = 2.0 * q / (c + s)
    lam_large = (c + s) / (2.0 * p.d2)
    degenerate = bool(s <= 1e-13 * max(1.0, c))
    return CharRoots(c=float(c), lambda0=float(lam_small), lambda0_plus=float(lam_large), degenerate=degenerate)


def jacobian_dfe(p: ModelParams) -> np.ndarray:
    """Jacobian of the reaction terms at the invaded disease-free state (S_-inf, 0, 0)."""
    return np.array(
        [
            [0.0, -p.beta, 0.0],
            [0.0, p.beta - p.gamma - p.delta, 0.0],
            [0.0, p.gamma, 0.0],
        ]
    )


def a_lambda_matrix(lam: float, p: ModelParams) -> np.ndarray:
    """diag(d_i lambda^2) plus the disease-free Jacobian."""
    return np.diag([p.d1 * lam * lam, p.d2 * lam * lam, p.d3 * lam * lam]) + jacobian_dfe(p)


def a_lambda_eigenvalues(lam: float, p: ModelParams, check: bool = False):
    """Eigenvalues of the parameterized matrix in equation order.

    The matrix is triangular up to its coupling column, so the eigenvalues are
    (d1*lam^2, d2*lam^2 + beta - gamma - delta, d3*lam^2). With check=True the
    closed form is verified against a generic dense eigensolver.
    """
    if lam < 0:
        raise NonPositiveLambda("lambda must be >= 0")
    q = p.beta - p.gamma - p.delta
    eigs = (p.d1 * lam * lam, p.d2 * lam * lam + q, p.d3 * lam * lam)
    if check:
        generic = np.sort(np.linalg.eigvals(a_lambda_matrix(lam, p)).real)
        closed = np.sort(np.array(eigs))
        scale = max(1.0, np.max(np.abs(closed)))
        if np.max(np.abs(generic - closed)) > 1e-10 * scale:
            raise AssertionError(
                f"closed-form eigenvalues {closed} disagree with eigensolver {generic}"
            )
    return eigs


def phi(lam: float, p: ModelParams) -> float:
    """Speed quotient: largest eigenvalue of the parameterized matrix divided by lambda."""
    if lam <= 0:
        raise NonPositiveLambda("phi is defined for lambda > 0 only")
    return max(a_lambda_eigenvalues(lam, p)) / lam


def golden_section(fn, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 400):
    """Minimize a unimodal scalar function on [lo, hi]; returns (argmin, min)."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
    xm = 0.5 * (a + b)
    return xm, fn(xm)


def minimal_speed(p: ModelParams, n_samples: int = 0, rel_tol: float = 1e-8) -> SpeedAnalysis:
    """Minimal front speed c* = 2*sqrt(d2*(beta-gamma-delta)) with numerical cross-checks.

    Golden-section minimization of the infected branch must agree with the
    closed form to rel_tol; the full three-branch quotient is minimized as well
    and reported separately, since a dominant d1 or d3 branch can push the full
    minimum above the infected-branch value.
    """
    q = p.beta - p.gamma - p.delta
    if q <= 0:
        raise SubThreshold(
            f"beta - gamma - delta = {q} <= 0 (R0 <= 1): no minimal wave speed"
        )
    c_star = 2.0 * np.sqrt(p.d2 * q)
    lam_star = np.sqrt(q / p.d2)

    lam_hi = 10.0 * max(1.0, lam_star)  # the quotient blows up at 0 and infinity
    i_branch = lambda lam: (p.d2 * lam * lam + q) / lam
    _, gs_min = golden_section(i_branch, 1e-6, lam_hi)
    if abs(gs_min - c_star) > rel_tol * c_star:
        raise AssertionError(
            f"golden-section minimum {gs_min} disagrees with closed form {c_star}"
        )

    full_argmin, full_min = golden_section(lambda lam: phi(lam, p), 1e-6, lam_hi)
    active = abs(phi(lam_star, p) - i_branch(lam_star)) <= 1e-12 * max(1.0, c_star)

    samples = None
    if n_samples > 0:
        lams = np.geomspace(1e-3, lam_hi, n_samples)
        samples = tuple((float(l), float(phi(l, p))) for l in lams)

    return SpeedAnalysis(
        c_star=c_star,
        lambda_star=lam_star,
        i_branch_min=gs_min,
        full_min=full_min,
        full_argmin=full_argmin,
        i_branch_active_at_minimizer=bool(active),
        phi_samples=samples,
    )


def check_d3_condition(p: ModelParams, c: float) -> D3Report:
    """Check d3 < 2*d2 and, independently, the implied inequality c - d3*lambda0 > 0."""
    roots = lambda0(c, p)
    prod = c - p.d3 * roots.lambda0
    return D3Report(
        satisfied=bool(p.d3 < 2.0 * p.d2),
        implied_positive=bool(prod > 0),
        lambda0=roots.lambda0,
        c_minus_d3_lambda0=float(prod),
    )
