"""The damped advection-diffusion operators and their integral inverses.

For each equation i the operator D_i h = -d_i h'' + c h' + a_i h (with a shift
constant a_i large enough that both kernel exponents straddle the wave decay
rate) has an inverse given by a two-sided exponential-kernel integral. Here
D_i is discretized with centered differences and D_i^{-1} as an exponentially
weighted quadrature whose kernel ratios are the roots of the difference
stencil's own characteristic polynomial. That choice makes the inversion
identity D_i^{-1}(D_i h) = h hold exactly at interior grid points, so fixed
points of the integral map solve the discretized differential equations to the
iteration tolerance rather than to discretization accuracy, and the result
cannot depend on the bookkeeping constants a_i.

The kernel ratios differ from exp(lambda_i^{+-} dx) by O(dx^2); both the
continuum exponents and the discrete ratios are kept on the spec so either
view can be checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .model import ZERO, Grid, GridFunction, ModelParams, Profile, Tail, exp_growth
from .linear_analysis import lambda0


class GridTooSmall(ValueError):
    """The one-sided boundary stencils need at least five points."""


class TailIncompatible(ValueError):
    """A declared tail growth rate falls outside the kernel's convergence strip."""


class ExponentOrdering(ValueError):
    """The sandwich lambda^- < lambda < lambda + eps < lambda^+ fails."""


@dataclass(frozen=True)
class ResolventSpec:
    """Constants defining one operator pair (D_i, D_i^{-1}).

    lambda_minus < 0 < -lambda_minus < lambda_plus are the roots of
    f_i(lambda) = -d_i lambda^2 + c lambda + alpha, and rho = d_i*(l+ - l-)
    = sqrt(c^2 + 4 d_i alpha) normalizes the kernel.
    """

    index: int
    d: float
    c: float
    alpha: float
    lambda_minus: float
    lambda_plus: float
    rho: float

    @classmethod
    def build(cls, index: int, d: float, c: float, alpha: float) -> "ResolventSpec":
        s = np.sqrt(c * c + 4.0 * d * alpha)
        lam_minus = (c - s) / (2.0 * d)
        lam_plus = (c + s) / (2.0 * d)
        rho_diff = d * (lam_plus - lam_minus)
        if abs(rho_diff - s) > 1e-12 * s:
            raise AssertionError("the two closed forms of rho disagree")
        if not (lam_minus < 0 < -lam_minus < lam_plus):
            raise AssertionError("kernel exponents lost their ordering")
        return cls(
            index=index, d=d, c=c, alpha=alpha,
            lambda_minus=lam_minus, lambda_plus=lam_plus, rho=s,
        )

    def f(self, lam: float) -> float:
        """f_i(lambda) = -d lambda^2 + c lambda + alpha; the kernel exponents are its roots."""
        return -self.d * lam * lam + self.c * lam + self.alpha


@dataclass(frozen=True)
class WeightedNormContext:
    """Weight exponent mu for the norm sup_x exp(-mu|x|)|u(x)|."""

    mu: float


@dataclass(frozen=True)
class DiscreteKernel:
    """Grid-level kernel data: stencil roots z_-, z_+ and the discrete normalizer.

    z_- in (0,1) and z_+ > 1 solve E z^2 + B z + A = 0 where (A, B, E) is the
    centered stencil of D_i; the per-cell ratios play the role of
    exp(lambda_i^{+-} dx) and rho_hat = sqrt(c^2 + 4 d alpha + (alpha dx)^2).
    """

    z_minus: float
    z_plus: float
    kappa_minus: float
    kappa_plus: float
    rho_hat: float
    dx: float


def choose_alphas(p: ModelParams, c: float, floor_scale: float = 1.0):
    """Pick the shift constants and build the three operator specs.

    a_i = 2*max(floor_i, d_i lambda0^2 + c lambda0) with floors (beta,
    gamma+delta, 1); doubling guarantees |lambda_i^-| > lambda0 strictly, and
    the floors keep the integrands of the fixed-point map monotone in each
    component. floor_scale inflates the floors for robustness experiments;
    results must not depend on it.
    """
    roots = lambda0(c, p)
    l0 = roots.lambda0
    floors = (p.beta * floor_scale, (p.gamma + p.delta) * floor_scale, 1.0 * floor_scale)
    ds = (p.d1, p.d2, p.d3)
    specs = []
    for idx, (floor, d) in enumerate(zip(floors, ds), start=1):
        alpha = 2.0 * max(floor, d * l0 * l0 + c * l0)
        spec = ResolventSpec.build(idx, d, c, alpha)
        if not (-spec.lambda_minus > l0):
            raise AssertionError(f"|lambda_{idx}^-| > lambda0 failed after doubling")
        specs.append(spec)
    if not (specs[0].alpha > p.beta and specs[1].alpha > p.gamma + p.delta):
        raise AssertionError("alpha floors lost")
    return tuple(specs)


def choose_mu(specs, lam0: float) -> WeightedNormContext:
    """Midpoint weight exponent: lambda0 < mu < min_i |lambda_i^-|."""
    bound = min(-s.lambda_minus for s in specs)
    if not bound > lam0:
        raise AssertionError("specs violate |lambda_i^-| > lambda0")
    mu = 0.5 * (lam0 + bound)
    for s in specs:
        if not (s.lambda_minus < -mu < mu < s.lambda_plus):
            raise AssertionError("mu sandwich failed")
    return WeightedNormContext(mu=mu)


def weighted_norm(u, ctx: WeightedNormContext) -> float:
    """sup over grid points and components of exp(-mu|x|)|u(x)|."""
    if isinstance(u, Profile):
        comps = (u.s, u.i, u.r)
    else:
        comps = (u,)
    out = 0.0
    for gf in comps:
        w = np.exp(-ctx.mu * np.abs(gf.grid.x))
        out = max(out, float(np.max(w * np.abs(gf.values))))
    return out


def discrete_kernel(spec: ResolventSpec, dx: float) -> DiscreteKernel:
    """Stencil-matched kernel ratios for spacing dx.

    Requires dx < 2*d/c so the off-diagonal stencil entries keep one sign and
    the two ratios stay positive.
    """
    d, c, alpha = spec.d, spec.c, spec.alpha
    if dx >= 2.0 * d / c:
        raise ValueError(
            f"dx = {dx} too coarse for operator {spec.index}: need dx < 2d/c = {2.0 * d / c}"
        )
    A = -d / dx**2 - c / (2.0 * dx)
    B = 2.0 * d / dx**2 + alpha
    E = -d / dx**2 + c / (2.0 * dx)
    s = np.sqrt(B * B - 4.0 * A * E)  # = rho_hat/dx with rho_hat below
    z_minus = -2.0 * A / (B + s)
    z_plus = (B + s) / (-2.0 * E)
    rho_hat = s * dx  # = sqrt(c^2 + 4 d alpha + (alpha dx)^2)
    return DiscreteKernel(
        z_minus=z_minus,
        z_plus=z_plus,
        kappa_minus=np.log(z_minus) / dx,
        kappa_plus=np.log(z_plus) / dx,
        rho_hat=rho_hat,
        dx=dx,
    )


def apply_delta(h: GridFunction, spec: ResolventSpec) -> GridFunction:
    """-d h'' + c h' + alpha h by centered differences, one-sided at the two edges."""
    n = h.grid.n
    if n < 5:
        raise GridTooSmall("apply_delta needs at least 5 points")
    dx = h.grid.dx
    v = h.values
    d1 = np.empty(n)
    d2 = np.empty(n)
    d1[1:-1] = (v[2:] - v[:-2]) / (2.0 * dx)
    d2[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dx**2
    d1[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    d1[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * dx)
    d2[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / dx**2
    d2[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / dx**2
    out = -spec.d * d2 + spec.c * d1 + spec.alpha * v
    # D maps each tail shape to itself (constants to constants, exponentials to
    # exponentials of the same rate), so the tags carry over.
    return GridFunction(h.grid, out, h.left_tail, h.right_tail)


def _check_tail(tail: Tail, spec: ResolventSpec, kern: DiscreteKernel, side: str):
    if tail.kind != "exp":
        return
    r = tail.rate
    q = np.exp(r * kern.dx)
    if not (spec.lambda_minus < r < spec.lambda_plus) or not (kern.z_minus < q < kern.z_plus):
        raise TailIncompatible(
            f"{side} tail rate {r} outside the kernel strip "
            f"({spec.lambda_minus}, {spec.lambda_plus}) of operator {spec.index}"
        )


def _tail_sums(g: np.ndarray, left: Tail, right: Tail, kern: DiscreteKernel):
    """Closed-form geometric sums of the off-window tail against each kernel."""
    dx, zm, zp = kern.dx, kern.z_minus, kern.z_plus
    if left.kind == "zero":
        t_left = 0.0
    elif left.kind == "constant":
        t_left = dx * g[0] / (1.0 - zm)
    else:
        q = np.exp(left.rate * dx)
        t_left = dx * g[0] / (q - zm)
    if right.kind == "zero":
        t_right = 0.0
    elif right.kind == "constant":
        t_right = dx * g[-1] / (zp - 1.0)
    else:
        q = np.exp(right.rate * dx)
        t_right = dx * g[-1] * q / (zp - q)
    return t_left, t_right


def _kernel_sums(g: np.ndarray, kern: DiscreteKernel, t_left: float, t_right: float):
    """One-sided geometric accumulations L_j (from the left) and R_j (from the right).

    L_j = dx * sum_{k<=j} z_-^(j-k) g_k and R_j = dx * sum_{k>j} z_+^(j-k) g_k,
    seeded with the analytic tail sums; evaluated by first-order recursions in
    O(n) instead of the O(n^2) direct double sum.
    """
    dx, zm, zp = kern.dx, kern.z_minus, kern.z_plus
    left = lfilter([dx], [1.0, -zm], g, zi=np.array([zm * t_left]))[0]
    w = 1.0 / zp
    right = lfilter([0.0, w * dx], [1.0, -w], g[::-1], zi=np.array([t_right]))[0][::-1]
    return left, right


def apply_delta_inverse(h: GridFunction, spec: ResolventSpec) -> GridFunction:
    """Two-sided exponential-kernel inverse of apply_delta.

    At every interior point, apply_delta(apply_delta_inverse(g)) == g and
    apply_delta_inverse(apply_delta(h)) == h hold to roundoff by construction
    of the kernel ratios; accuracy against the continuum operator is O(dx^2).
    """
    kern = discrete_kernel(spec, h.grid.dx)
    _check_tail(h.left_tail, spec, kern, "left")
    _check_tail(h.right_tail, spec, kern, "right")
    t_left, t_right = _tail_sums(h.values, h.left_tail, h.right_tail, kern)
    left, right = _kernel_sums(h.values, kern, t_left, t_right)
    out = (left + right) / kern.rho_hat
    return GridFunction(h.grid, out, h.left_tail, h.right_tail)


def delta_inverse_derivatives(h: GridFunction, spec: ResolventSpec):
    """First and second derivative of the inverse via kernel-differentiated sums.

    Differentiating the kernel multiplies the one-sided integrals by their
    exponents, and the second derivative picks up the local term -h/d from the
    kink of the kernel. The end cells get trapezoid half-weight corrections so
    both formulas stay second-order.
    """
    kern = discrete_kernel(spec, h.grid.dx)
    _check_tail(h.left_tail, spec, kern, "left")
    _check_tail(h.right_tail, spec, kern, "right")
    g = h.values
    t_left, t_right = _tail_sums(g, h.left_tail, h.right_tail, kern)
    left, right = _kernel_sums(g, kern, t_left, t_right)
    half = 0.5 * kern.dx * g
    km, kp = kern.kappa_minus, kern.kappa_plus
    d1 = (km * (left - half) + kp * (right + half)) / kern.rho_hat
    d2 = (km * km * (left - half) + kp * kp * (right + half)) / kern.rho_hat - g / spec.d

    def deriv_tail(tail: Tail) -> Tail:
        return tail if tail.kind == "exp" else ZERO

    gf1 = GridFunction(h.grid, d1, deriv_tail(h.left_tail), deriv_tail(h.right_tail))
    gf2 = GridFunction(h.grid, d2, deriv_tail(h.left_tail), deriv_tail(h.right_tail))
    return gf1, gf2


def delta_inverse_piecewise_g(
    spec: ResolventSpec, lam: float, eps: float, big_m: float, grid: Grid
):
    """Apply the inverse to the image of g(x) = max(e^{lam x}(1 - M e^{eps x}), 0).

    The image under D_i is the piecewise function f_i(lam) e^{lam x}
    - M f_i(lam+eps) e^{(lam+eps) x} left of the crossover x* = -ln(M)/eps and
    zero to the right; it is built analytically here, including its exact
    two-exponential left tail, and the result must dominate g pointwise.

    Returns (result, g_samples, margins) with margins = result - g.
    """
    if not (spec.lambda_minus < lam < lam + eps < spec.lambda_plus):
        raise ExponentOrdering(
            f"need lambda_-^({spec.index}) < {lam} < {lam + eps} < lambda_+^({spec.index})"
        )
    if big_m <= 0 or eps <= 0:
        raise ValueError("M and eps must be positive")
    x_star = -np.log(big_m) / eps
    x = grid.x
    fl = spec.f(lam)
    fle = spec.f(lam + eps)
    dg = np.where(x < x_star, fl * np.exp(lam * x) - big_m * fle * np.exp((lam + eps) * x), 0.0)
    # a node sitting on the crossover carries half the one-sided limit, the
    # trapezoid-consistent weight for a jump located exactly at a sample
    on_kink = np.abs(x - x_star) <= 1e-9 * max(1.0, abs(x_star))
    if np.any(on_kink):
        dg[on_kink] = 0.5 * (
            fl * np.exp(lam * x[on_kink]) - big_m * fle * np.exp((lam + eps) * x[on_kink])
        )

    kern = discrete_kernel(spec, grid.dx)
    dx, zm = kern.dx, kern.z_minus
    if x_star <= grid.x_min:
        t_left = 0.0
    else:
        # exact geometric sums of both exponential terms beyond the left edge
        q1 = np.exp(lam * dx)
        q2 = np.exp((lam + eps) * dx)
        t_left = dx * (
            fl * np.exp(lam * grid.x_min) / (q1 - zm)
            - big_m * fle * np.exp((lam + eps) * grid.x_min) / (q2 - zm)
        )
    left, right = _kernel_sums(dg, kern, t_left, 0.0)
    result = (left + right) / kern.rho_hat

    g_vals = np.maximum(np.exp(lam * x) * (1.0 - big_m * np.exp(eps * x)), 0.0)
    margins = result - g_vals
    out = GridFunction(grid, result, exp_growth(lam), ZERO)
    return out, g_vals, margins
