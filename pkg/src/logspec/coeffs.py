"""Scalar constants of the operator family.

The two Gamma-quotient functions kappa_1, kappa_2, their Taylor expansions at
zero, the kernel coefficients alpha_0..alpha_m built from those derivatives,
the Fourier symbol (2 log|xi|)^m, and the structural constants (sphere
measure, counting-limit prefactor, alternating-sum table, lower-bound
constants) that the certificate layer consumes.
"""

import math
from dataclasses import dataclass, field

from . import specfun

MAX_TAYLOR_ORDER = 12


@dataclass(frozen=True)
class OperatorParams:
    """Dimension N (1 or 2) and operator order m >= 1."""

    N: int
    m: int

    def __post_init__(self):
        if self.N not in (1, 2):
            raise ValueError("dimension N must be 1 or 2, got %r" % (self.N,))
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError("order m must be an integer >= 1, got %r" % (self.m,))

    @property
    def smoothness_half_width(self):
        return min(self.N / 2.0, 1.0)


@dataclass(frozen=True)
class KappaTaylor:
    """Taylor coefficients of kappa_which at s = 0; entry j is kappa^(j)(0)/j!."""

    which: int
    coefficients: tuple

    def derivative(self, j):
        """The plain j-th derivative kappa^(j)(0)."""
        return self.coefficients[j] * math.factorial(j)


@dataclass(frozen=True)
class AlphaCoefficients:
    m: int
    values: tuple

    def __post_init__(self):
        if len(self.values) != self.m + 1:
            raise ValueError("expected %d alpha values, got %d" % (self.m + 1, len(self.values)))


@dataclass(frozen=True)
class StructuralConstants:
    omegaN: float
    TN: float
    A: dict = field(compare=False)
    Cm: float = 0.0
    am: float = 0.0
    bm: float = 0.0
    cm: float = 0.0


def kappa_eval(which, s, params):
    """kappa_1(s) or kappa_2(s) from the closed Gamma-quotient forms.

    kappa_1(s) = 2^(-2s) pi^(-N/2) Gamma((N-2s)/2) / Gamma(1+s)
    kappa_2(s) = 2^(-2s) Gamma((N-2s)/2) / (Gamma(N/2) Gamma(1+s))

    s must lie strictly inside the smoothness interval
    (-min(N/2, 1), min(N/2, 1)).
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    half_width = params.smoothness_half_width
    if not -half_width < s < half_width:
        raise ValueError(
            "s=%r outside the smoothness interval (-%g, %g)" % (s, half_width, half_width)
        )
    n = params.N
    log_value = (
        -2.0 * s * math.log(2.0)
        + specfun.log_gamma((n - 2.0 * s) / 2.0)
        - specfun.log_gamma(1.0 + s)
    )
    if which == 1:
        log_value -= 0.5 * n * math.log(math.pi)
    else:
        log_value -= specfun.log_gamma(n / 2.0)
    return math.exp(log_value)


def _log_kappa_series(which, order, params):
    """Taylor coefficients of log kappa(s) at s=0 up to the given order."""
    n = params.N
    coeffs = [0.0] * (order + 1)
    if which == 1:
        coeffs[0] = specfun.log_gamma(n / 2.0) - 0.5 * n * math.log(math.pi)
    else:
        coeffs[0] = 0.0
    if order >= 1:
        coeffs[1] = -2.0 * math.log(2.0)
    for k in range(1, order + 1):
        # log Gamma(N/2 - s): psi^(k-1)(N/2) (-1)^k / k!
        # -log Gamma(1 + s): -psi^(k-1)(1) / k!
        fk = math.factorial(k)
        coeffs[k] += ((-1.0) ** k * specfun.polygamma(k - 1, n / 2.0) - specfun.polygamma(k - 1, 1.0)) / fk
    return coeffs


def kappa_taylor(which, M, params):
    """Taylor expansion of kappa at 0 through order M (M <= 12).

    Builds the series of log kappa (whose coefficients are polygamma values
    and logs) and exponentiates it with the standard power-series recurrence
    E_n = (1/n) sum_{k=1}^{n} k l_k E_{n-k}.
    """
    if M < 0 or M > MAX_TAYLOR_ORDER:
        raise ValueError("Taylor order must lie in [0, %d]" % MAX_TAYLOR_ORDER)
    log_coeffs = _log_kappa_series(which, M, params)
    exp_coeffs = [math.exp(log_coeffs[0])]
    for n in range(1, M + 1):
        acc = 0.0
        for k in range(1, n + 1):
            acc += k * log_coeffs[k] * exp_coeffs[n - k]
        exp_coeffs.append(acc / n)

    direct = kappa_eval(which, 0.0, params)
    if abs(exp_coeffs[0] - direct) > 1e-12 * (1.0 + abs(direct)):
        raise AssertionError(
            "kappa_taylor constant term %r disagrees with direct evaluation %r"
            % (exp_coeffs[0], direct)
        )
    return KappaTaylor(which=which, coefficients=tuple(exp_coeffs))


def alpha_coefficients(params):
    """Kernel coefficients alpha_0..alpha_m for the order-m operator.

    alpha_0 = (-1)^m kappa_2^(m)(0),
    alpha_j = m (-1)^(m+j) C(m-1, j-1) kappa_1^(m-j)(0) for 1 <= j <= m.
    """
    m = params.m
    kappa2 = kappa_taylor(2, m, params)
    kappa1 = kappa_taylor(1, max(m - 1, 0), params)
    values = [(-1.0) ** m * kappa2.derivative(m)]
    for j in range(1, m + 1):
        values.append(
            m * (-1.0) ** (m + j) * math.comb(m - 1, j - 1) * kappa1.derivative(m - j)
        )
    return AlphaCoefficients(m=m, values=tuple(values))


def symbol(params, xi_norm):
    """The Fourier symbol (2 log xi_norm)^m; xi_norm must be positive."""
    if xi_norm <= 0.0:
        raise ValueError(
            "symbol is singular at zero frequency; callers must handle |xi| = 0"
        )
    return (2.0 * math.log(xi_norm)) ** params.m


def structural_constants(params):
    """All domain-free constants used by the bounds.

    omegaN is the surface measure of the unit sphere 2 pi^(N/2)/Gamma(N/2);
    C_m uses the closed form omegaN m!/N^(m+1) (the radial quadrature stays a
    test oracle); the alternating-sum table A and the lower-bound constants
    a_m, b_m, c_m follow their defining formulas.
    """
    n, m = params.N, params.m
    omega = 2.0 * math.pi ** (0.5 * n) / math.exp(specfun.log_gamma(0.5 * n))
    two_pi_n = (2.0 * math.pi) ** n
    table = {j: (2 ** j) * math.factorial(m) // math.factorial(m - j) for j in range(1, m + 1)}
    cm_integral = omega * math.factorial(m) / float(n ** (m + 1))
    am = n ** (m + 1) / (2.0 ** m * m) * two_pi_n / omega
    bm = (2.0 ** m / n ** m) * float(m - 1) ** m + 1.0 / n ** m
    return StructuralConstants(
        omegaN=omega,
        TN=omega / two_pi_n,
        A=table,
        Cm=cm_integral,
        am=am,
        bm=bm,
        cm=am * bm,
    )
