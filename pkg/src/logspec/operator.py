"""Pointwise evaluation of the operator family on test functions.

Two independent routes: the singular-integral kernels K_j combined with the
alpha coefficients, and the Fourier symbol against the function's transform.
Their agreement is the main self-check of the whole construction, so nothing
here shares quadrature code with the lattice tables.

Fourier convention throughout: hat(u)(xi) = int e^(-i xi.x) u(x) dx and
inversion carries (2 pi)^(-N).
"""

import math
from dataclasses import dataclass

import numpy as np

from .coeffs import MAX_TAYLOR_ORDER, alpha_coefficients

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadSettings:
    """Quadrature knobs shared by the kernel and Fourier routes.

    The kernel route grades geometrically toward the singularity with the
    given ratio down to inner_floor; both routes use per-panel Gauss rules
    and an equispaced angular trapezoid in two dimensions.
    """

    gauss_nodes: int = 16
    grading_ratio: float = 0.5
    inner_floor: float = 1e-8
    angular_nodes: int = 64
    freq_cutoff: float = 150.0
    freq_panel_width: float = 0.25
    outer_panel_width: float = 0.5
    rel_tol: float = 1e-6

    def __post_init__(self):
        if self.angular_nodes < 64:
            raise ValueError("angular rule needs at least 64 nodes")
        if not 0.0 < self.grading_ratio < 1.0:
            raise ValueError("grading ratio must sit in (0, 1)")


@dataclass(frozen=True)
class TestFunction:
    """A compactly supported function with optional analytic transform.

    evaluator acts on arrays of shape (..., N); fourier_evaluator, when
    present, acts on frequency arrays of the same shape and may return
    complex values. smoothness is either the string "C2" or a Hoelder
    exponent in (0, 1].
    """

    __test__ = False  # pytest should not collect this despite the name

    N: int
    evaluator: object
    support_radius: float
    smoothness: object = "C2"
    fourier_evaluator: object = None

    def __post_init__(self):
        if self.support_radius <= 0.0:
            raise ValueError("support radius must be positive")
        if self.smoothness != "C2":
            beta = float(self.smoothness)
            if not 0.0 < beta <= 1.0:
                raise ValueError("Hoelder exponent must lie in (0, 1]")

    def __call__(self, points):
        return self.evaluator(np.asarray(points, dtype=float))


def gaussian(N, sigma=1.0, center=None):
    """exp(-|x - c|^2 / (2 sigma^2)), truncated at ten standard deviations.

    The transform of the untruncated function is analytic; the truncation
    error is of order exp(-50) and invisible at working precision.
    """
    c = np.zeros(N) if center is None else np.asarray(center, dtype=float)
    radius = 10.0 * sigma

    def evaluator(points):
        pts = np.asarray(points, dtype=float)
        d2 = ((pts - c) ** 2).sum(axis=-1)
        return np.where(d2 <= radius * radius, np.exp(-0.5 * d2 / sigma ** 2), 0.0)

    amplitude = (_TWO_PI) ** (0.5 * N) * sigma ** N

    def fourier(freqs):
        xi = np.asarray(freqs, dtype=float)
        xi2 = (xi ** 2).sum(axis=-1)
        phase = np.exp(-1j * (xi * c).sum(axis=-1)) if np.any(c) else 1.0
        return amplitude * np.exp(-0.5 * sigma ** 2 * xi2) * phase

    return TestFunction(
        N=N,
        evaluator=evaluator,
        support_radius=radius + float(np.linalg.norm(c)),
        smoothness="C2",
        fourier_evaluator=fourier,
    )


def bump(N, radius=1.0, center=None):
    """The standard mollifier exp(-1/(1 - |z|^2)) on the unit z-ball.

    Its transform has no elementary form; a fixed high-order Gauss rule on
    the radial profile supplies it (the profile is smooth and the rule is
    spectrally accurate for the frequencies the multiplier integrals need).
    """
    c = np.zeros(N) if center is None else np.asarray(center, dtype=float)

    def profile(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
        return out

    def evaluator(points):
        pts = np.asarray(points, dtype=float)
        d = np.sqrt(((pts - c) ** 2).sum(axis=-1)) / radius
        return profile(d)

    nodes, weights = np.polynomial.legendre.leggauss(128)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    prof = profile(nodes)

    if N == 1:

        def fourier(freqs):
            xi = np.asarray(freqs, dtype=float)[..., 0]
            arg = np.multiply.outer(xi * radius, nodes)
            transform = 2.0 * radius * (np.cos(arg) * (weights * prof)).sum(axis=-1)
            if np.any(c):
                return transform * np.exp(-1j * xi * c[0])
            return transform

    else:
        import scipy.special

        def fourier(freqs):
            xi = np.asarray(freqs, dtype=float)
            rho = np.sqrt((xi ** 2).sum(axis=-1))
            arg = np.multiply.outer(rho * radius, nodes)
            transform = (
                _TWO_PI
                * radius ** 2
                * (scipy.special.j0(arg) * (weights * prof * nodes)).sum(axis=-1)
            )
            if np.any(c):
                return transform * np.exp(-1j * (xi * c).sum(axis=-1))
            return transform

    return TestFunction(
        N=N,
        evaluator=evaluator,
        support_radius=radius + float(np.linalg.norm(c)),
        smoothness="C2",
        fourier_evaluator=fourier,
    )


# ---------------------------------------------------------------------------
# angular rules


def _sphere_nodes(N, count):
    """Unit directions and quadrature weights for the angular integral."""
    if N == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    theta = _TWO_PI * np.arange(count) / count
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    weights = np.full(count, _TWO_PI / count)
    return nodes, weights


def _gauss_panels(edges, nodes):
    """Gauss points and weights across a sequence of panel edges."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    points = []
    weights = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        points.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(points), np.concatenate(weights)


def _graded_edges(floor, top, ratio):
    """Geometric panel edges from top down to the floor, ascending."""
    edges = [top]
    while edges[-1] > floor:
        edges.append(max(edges[-1] * ratio, floor))
    return list(reversed(edges))


# ---------------------------------------------------------------------------
# kernel route


def _kernel_integral(zeta, x, j, quad, gauss_nodes):
    x = np.asarray(x, dtype=float)
    directions, ang_w = _sphere_nodes(zeta.N, quad.angular_nodes)
    zeta_x = float(zeta(x[None, :])[0])

    def angular_deficit(radii):
        # int over the sphere of zeta(x) - zeta(x + r w)
        pts = x[None, None, :] + radii[:, None, None] * directions[None, :, :]
        vals = zeta(pts)
        return (zeta_x - vals) @ ang_w

    def angular_mass(radii):
        pts = x[None, None, :] + radii[:, None, None] * directions[None, :, :]
        return zeta(pts) @ ang_w

    inner_edges = _graded_edges(quad.inner_floor, 1.0, quad.grading_ratio)
    r_in, w_in = _gauss_panels(inner_edges, gauss_nodes)
    log_pow = (-2.0 * np.log(r_in)) ** (j - 1)
    inner = float(np.sum(w_in * angular_deficit(r_in) * log_pow / r_in))

    r_max = zeta.support_radius + float(np.linalg.norm(x))
    outer = 0.0
    if r_max > 1.0:
        count = max(2, int(math.ceil((r_max - 1.0) / quad.outer_panel_width)))
        outer_edges = list(np.linspace(1.0, r_max, count + 1))
        r_out, w_out = _gauss_panels(outer_edges, gauss_nodes)
        log_pow = (-2.0 * np.log(r_out)) ** (j - 1)
        outer = -float(np.sum(w_out * angular_mass(r_out) * log_pow / r_out))
    return inner + outer


def eval_Kj(zeta, x, j, quad=None):
    """The j-th layer kernel applied to zeta at x.

    j = 0 is the identity. For j >= 1 the integral splits at radius 1: the
    difference quotient inside (graded panels toward the singularity) and
    minus the function itself outside. A doubled-order pass guards the
    result; disagreement beyond the tolerance is an estimation failure.
    """
    quad = quad or QuadSettings()
    if not isinstance(j, int) or j < 0:
        raise ValueError("kernel index must be a non-negative integer")
    if j > MAX_TAYLOR_ORDER:
        raise ValueError("kernel index capped at %d" % MAX_TAYLOR_ORDER)
    x = np.asarray(x, dtype=float).reshape(zeta.N)
    if j == 0:
        return float(zeta(x[None, :])[0])
    coarse = _kernel_integral(zeta, x, j, quad, quad.gauss_nodes)
    fine = _kernel_integral(zeta, x, j, quad, 2 * quad.gauss_nodes)
    err = abs(fine - coarse)
    if err > quad.rel_tol * (1.0 + abs(fine)):
        raise RuntimeError(
            "kernel quadrature did not settle: refinement moved the value "
            "by %g (j=%d, x=%s)" % (err, j, x)
        )
    return fine


def eval_Lm_kernel(zeta, x, params, quad=None):
    """Kernel-route evaluation: sum of alpha_j K_j zeta(x)."""
    quad = quad or QuadSettings()
    alphas = alpha_coefficients(params).values
    return float(
        sum(alphas[j] * eval_Kj(zeta, x, j, quad) for j in range(params.m + 1))
    )


# ---------------------------------------------------------------------------
# fourier route


def _log_head(N, m, eps):
    """Exact value of the integral of r^(N-1) (2 log r)^m over (0, eps)."""
    total = 0.0
    for i in range(m + 1):
        coeff = math.factorial(m) / math.factorial(m - i) * (-2.0 / N) ** i
        total += coeff * (2.0 * math.log(eps)) ** (m - i)
    return eps ** N / N * total


def _multiplier_integral(zeta, x, multiplier, quad, log_power=None):
    """(2 pi)^(-N) integral of multiplier(|xi|) zetahat(xi) e^(i xi.x) dxi.

    log_power marks the multiplier as (2 log rho)^m so the logarithmic head
    below the innermost panel can be added in closed form; the transform is
    frozen at its zero-frequency value there, which costs O(floor) only.
    """
    if zeta.fourier_evaluator is None:
        raise ValueError("this route needs a test function with a transform")
    x = np.asarray(x, dtype=float).reshape(zeta.N)
    directions, ang_w = _sphere_nodes(zeta.N, quad.angular_nodes)

    # Geometric grading toward zero frequency handles both the logarithmic
    # multipliers and the fractional powers, whose derivatives blow up there.
    edges = _graded_edges(quad.inner_floor, 1.0, quad.grading_ratio)
    head = 0.0
    if log_power is not None:
        at_zero = complex(
            np.asarray(zeta.fourier_evaluator(np.zeros((1, zeta.N))), dtype=complex)[0]
        )
        head = (
            at_zero.real
            * float(ang_w.sum())
            * _log_head(zeta.N, log_power, quad.inner_floor)
            / _TWO_PI ** zeta.N
        )
    count = max(2, int(math.ceil((quad.freq_cutoff - 1.0) / quad.freq_panel_width)))
    edges = edges + list(np.linspace(1.0, quad.freq_cutoff, count + 1))[1:]
    rho, w = _gauss_panels(edges, quad.gauss_nodes)

    freqs = rho[:, None, None] * directions[None, :, :]
    values = np.asarray(zeta.fourier_evaluator(freqs), dtype=complex)
    phase = np.exp(1j * (freqs @ x))
    angular = (values * phase) @ ang_w
    radial = rho ** (zeta.N - 1) * multiplier(rho)
    return head + float(np.real(np.sum(w * radial * angular))) / _TWO_PI ** zeta.N


def eval_Lm_fourier(zeta, x, params, quad=None):
    """Fourier-route evaluation through the symbol (2 log|xi|)^m."""
    quad = quad or QuadSettings()
    m = params.m
    return _multiplier_integral(
        zeta, x, lambda rho: (2.0 * np.log(rho)) ** m, quad, log_power=m
    )


def eval_fractional(zeta, x, s, quad=None):
    """(-Delta)^s zeta(x) for s > 0 through the symbol |xi|^(2s)."""
    quad = quad or QuadSettings()
    if s <= 0.0:
        raise ValueError("fractional order must be positive")
    return _multiplier_integral(zeta, x, lambda rho: rho ** (2.0 * s), quad)


def expansion_residual(zeta, x, s, n, quad=None):
    """Distance between (-Delta)^s zeta(x) and its order-n log expansion.

    Returns |(-Delta)^s zeta(x) - zeta(x) - sum_{m=1}^n (s^m/m!) L_m zeta(x)|
    with every term evaluated on the Fourier side.
    """
    quad = quad or QuadSettings()
    if not 0.0 < s < 0.25:
        raise ValueError("expansion is meant for s in (0, 1/4)")
    if n < 0:
        raise ValueError("expansion order must be non-negative")
    from .coeffs import OperatorParams

    x = np.asarray(x, dtype=float).reshape(zeta.N)
    total = eval_fractional(zeta, x, s, quad)
    partial = float(zeta(x[None, :])[0])
    for m in range(1, n + 1):
        term = eval_Lm_fourier(zeta, x, OperatorParams(N=zeta.N, m=m), quad)
        partial += s ** m / math.factorial(m) * term
    return abs(total - partial)


def check_inverse_transform(zeta, quad=None, points=5, seed=0):
    """Spot-check the declared transform against the evaluator.

    Inverse-transforms at a handful of random points inside the support and
    returns the largest absolute mismatch.
    """
    quad = quad or QuadSettings()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        x = rng.uniform(-0.5, 0.5, size=zeta.N) * zeta.support_radius * 0.2
        direct = float(zeta(x[None, :])[0])
        inverted = _multiplier_integral(
            zeta, x, lambda rho: np.ones_like(rho), quad
        )
        worst = max(worst, abs(direct - inverted))
    return worst
