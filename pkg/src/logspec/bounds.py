"""Closed-form eigenvalue bounds packaged as executable certificates.

Everything a computed spectrum can be held against lives here: the
Riesz-mean upper bound and the counting bound it implies, the lower bounds
built from the tau constants, the ball and rescaling estimates, the
small-volume behaviour of the first eigenvalue, and the Weyl-limit
diagnostics. Each comparison is recorded as a BoundCertificate whose
verdict is decided by the inequality direction registered for its name,
so batch reports cannot silently flip a direction.
"""

import math
from dataclasses import dataclass

from .coeffs import structural_constants

# Inequality direction per certificate name: "upper" means the observed
# quantity must not exceed the bound, "lower" means it must not fall below.
_DIRECTIONS = {
    "riesz-upper": "upper",
    "counting-upper": "upper",
    "eig-lower": "lower",
    "riesz-sandwich-upper": "upper",
    "riesz-sandwich-lower": "lower",
    "alternating-sum-nonneg": "lower",
    "alternating-sum-cap": "upper",
    "root-lower-bound": "lower",
    "ball-lower": "lower",
    "first-eig-small-volume": "lower",
    "first-eig-linear": "lower",
    "first-eig-nonnegative": "lower",
}

ETA_SEARCH_FACTORS = (1.1, 1.25, 1.5, 2.0, 4.0)


@dataclass(frozen=True)
class BoundCertificate:
    name: str
    inputs: dict
    bound_value: float
    observed_value: object
    verdict: str


def certify(name, inputs, bound_value, observed_value=None, vacuous=False):
    """Build a certificate, deciding the verdict from the registry.

    A missing observation or a vacuous bound yields not-applicable rather
    than a pass, so absent data can never be mistaken for evidence.
    """
    direction = _DIRECTIONS.get(name)
    if direction is None:
        raise ValueError("unknown certificate name %r" % name)
    if observed_value is None or bound_value is None or vacuous:
        verdict = "not-applicable"
    elif direction == "upper":
        verdict = "pass" if observed_value <= bound_value else "fail"
    else:
        verdict = "pass" if observed_value >= bound_value else "fail"
    return BoundCertificate(
        name=name,
        inputs=dict(inputs),
        bound_value=None if bound_value is None else float(bound_value),
        observed_value=observed_value,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# spectral summaries


def counting_function(spec, lam):
    """Number of computed eigenvalues strictly below lam."""
    return int(sum(1 for ev in spec.eigenvalues if ev < lam))


def riesz_mean(spec, lam):
    """Sum of the positive parts (lam - eigenvalue)_+ over the spectrum."""
    return float(sum(max(0.0, lam - ev) for ev in spec.eigenvalues))


# ---------------------------------------------------------------------------
# tau constants


@dataclass(frozen=True)
class TauConstants:
    """The three m-dependent roots feeding every lower bound.

    tau_tilde solves (tau/3)^(1/(m-1)) = log(tau + e) above 1, tau_m is
    its max with e, and tau0 solves tau^(m-1) e^tau = tau_m. The advertised
    tau0 > 1 is not forced; construction only checks the residuals.
    """

    m: int
    tau_tilde: float
    tau_m: float
    tau0: float

    def __post_init__(self):
        resid = _h_m(self.m, self.tau_tilde)
        if not (self.tau_tilde > 1.0 and abs(resid) <= 1e-10):
            raise ValueError("tau_tilde does not satisfy its equation")
        target = (self.m - 1) * math.log(self.tau0) + self.tau0 - math.log(self.tau_m)
        if not (self.tau0 > 0.0 and abs(target) <= 1e-10):
            raise ValueError("tau0 does not satisfy its equation")


def _h_m(m, tau):
    return (tau / 3.0) ** (1.0 / (m - 1)) - math.log(tau + math.e)


def _bisect_sign_change(fn, lo, hi):
    """Standard bisection down to floating-point resolution."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_tau_constants(m):
    """Solve the two root equations for integer m >= 2 by bisection.

    The second equation is handled in log form, tau -> (m-1) log tau + tau,
    which is strictly increasing and immune to overflow for large m.
    """
    if not isinstance(m, int) or m < 2:
        raise ValueError("tau constants are defined for integer m >= 2")
    hi = 2.0
    while _h_m(m, hi) <= 0.0:
        hi *= 2.0
    tau_tilde = _bisect_sign_change(lambda t: _h_m(m, t), 1.0, hi)
    tau_m = max(math.e, tau_tilde)

    log_target = math.log(tau_m)

    def g(t):
        return (m - 1) * math.log(t) + t - log_target

    hi = 1.0
    while g(hi) <= 0.0:
        hi *= 2.0
    tau0 = _bisect_sign_change(g, 1e-12, hi)
    return TauConstants(m=m, tau_tilde=tau_tilde, tau_m=tau_m, tau0=tau0)


def f1_zero(tau, m, N):
    """Root t with (N/2)^(m-1) e^((N/2)t) t^(m-1) = tau, for tau > 0.

    The left side increases strictly from zero, so the root is unique;
    bisection runs on its logarithm.
    """
    if tau <= 0.0:
        raise ValueError("the root equation needs tau > 0")
    if m < 2:
        raise ValueError("the root equation degenerates below m = 2")
    log_tau = math.log(tau)

    def g(t):
        return (m - 1) * (math.log(0.5 * N) + math.log(t)) + 0.5 * N * t - log_tau

    hi = 1.0
    while g(hi) <= 0.0:
        hi *= 2.0
    return _bisect_sign_change(g, 1e-300, hi)


def root_lower_bound_certificate(tau, m, N, constants=None):
    """Check the closed lower estimate for the root of f_1 against bisection."""
    constants = constants or solve_tau_constants(m)
    root = f1_zero(tau, m, N)
    power = (tau / math.exp(constants.tau0)) ** (1.0 / (m - 1))
    logarithmic = math.log(
        (tau + constants.tau_m) / (2.0 * math.log(tau + math.e) ** (m - 1))
    )
    bound = (2.0 / N) * min(power, logarithmic)
    inputs = {"tau": tau, "m": m, "N": N}
    return certify("root-lower-bound", inputs, bound, observed_value=root)


# ---------------------------------------------------------------------------
# upper bounds


def alternating_symbol_sum(params, a):
    """sum_{j=1}^m (-1)^(j+1) A_{m,j} / N^(j+1) * a^(m-j)."""
    consts = structural_constants(params)
    n, m = params.N, params.m
    total = 0.0
    for j in range(1, m + 1):
        total += (-1.0) ** (j + 1) * consts.A[j] / n ** (j + 1) * a ** (m - j)
    return total


def riesz_upper_bound(lam, params, volume):
    """T_N |Omega| e^((N/2) lam^(1/m)) times the alternating sum at lam^(1/m).

    The expression can turn negative for small lam at m >= 2; it is
    returned as written, and certificate builders flag that case vacuous
    instead of clamping.
    """
    if lam <= 0.0:
        raise ValueError("the upper bound needs lam > 0")
    consts = structural_constants(params)
    a = lam ** (1.0 / params.m)
    return (
        consts.TN
        * volume
        * math.exp(0.5 * params.N * a)
        * alternating_symbol_sum(params, a)
    )


def counting_upper_bound(lam, eta, params, volume):
    """Counting bound riesz_upper_bound(eta) / (eta - lam) for eta > lam."""
    if eta <= lam:
        raise ValueError("the counting bound needs eta > lam")
    return riesz_upper_bound(eta, params, volume) / (eta - lam)


def berezin_certificate(spec, params, volume, lam):
    bound = riesz_upper_bound(lam, params, volume)
    vacuous = bound <= 0.0
    observed = riesz_mean(spec, lam)
    inputs = {"lambda": lam, "volume": volume, "vacuous": vacuous}
    return certify("riesz-upper", inputs, bound, observed, vacuous=vacuous)


def counting_certificate(spec, params, volume, lam, eta_factors=ETA_SEARCH_FACTORS):
    """Counting bound minimized over the geometric eta search grid.

    Each eta with a positive bound value is a valid upper bound on its own,
    so the minimum runs over those candidates only; etas where the closed
    form dips below zero carry no information (the Riesz mean they estimate
    is nonnegative) and are dropped. No positive candidate at all makes the
    certificate vacuous.
    """
    best = math.inf
    best_eta = None
    for factor in eta_factors:
        eta = lam * factor
        if eta <= lam:
            continue
        value = counting_upper_bound(lam, eta, params, volume)
        if value > 0.0 and value < best:
            best, best_eta = value, eta
    observed = counting_function(spec, lam)
    vacuous = best_eta is None
    inputs = {"lambda": lam, "eta": best_eta, "volume": volume, "vacuous": vacuous}
    return certify(
        "counting-upper",
        inputs,
        best if best_eta is not None else None,
        observed,
        vacuous=vacuous,
    )


def riesz_difference_quotients(spec, lam, h):
    """Forward and backward difference quotients of the Riesz mean.

    Evaluated per eigenvalue in the clamped closed form min(1, (.)/h)_+,
    which is algebraically identical to differencing riesz_mean but free of
    the cancellation that would otherwise break the exact sandwich at
    equality cases.
    """
    if h <= 0.0:
        raise ValueError("the sandwich needs h > 0")
    forward = sum(
        min(1.0, max(0.0, (lam + h - ev) / h)) for ev in spec.eigenvalues
    )
    backward = sum(min(1.0, max(0.0, (lam - ev) / h)) for ev in spec.eigenvalues)
    return float(forward), float(backward)


def sandwich_certificates(spec, lam, h):
    """Difference quotients of the Riesz mean bracket the counting function."""
    forward, backward = riesz_difference_quotients(spec, lam, h)
    observed = counting_function(spec, lam)
    inputs = {"lambda": lam, "h": h}
    return (
        certify("riesz-sandwich-upper", inputs, forward, observed),
        certify("riesz-sandwich-lower", inputs, backward, observed),
    )


def alternating_sum_certificates(params, a):
    """The alternating sum stays within [0, first term] for large a."""
    threshold = 2.0 * (params.m - 1) / params.N
    if a < threshold:
        raise ValueError(
            "the alternating-sum envelope needs a >= 2(m-1)/N = %g" % threshold
        )
    consts = structural_constants(params)
    value = alternating_symbol_sum(params, a)
    cap = consts.A[1] / params.N ** 2 * a ** (params.m - 1)
    inputs = {"a": a, "m": params.m, "N": params.N}
    return (
        certify("alternating-sum-nonneg", inputs, 0.0, value),
        certify("alternating-sum-cap", inputs, cap, value),
    )


# ---------------------------------------------------------------------------
# lower bounds


def eig_lower_bound(
    k,
    params,
    volume,
    lambda_m1=None,
    observed=None,
    strict_k=False,
    proof_variant=False,
    constants=None,
):
    """Lower bound for the k-th eigenvalue, for m >= 2.

    Case selection: even m, or odd m with a non-negative first eigenvalue,
    uses the c_m form; odd m with a negative first eigenvalue switches to
    the P_m form, whose statement writes the log-2 inside the double
    logarithm. proof_variant exposes the alternative placement with the
    constant subtracted outside, for comparison only. strict_k enforces
    k >= 2 as in the theorem header; the default also admits k = 1, which
    the small-volume corollary relies on.
    """
    m, n = params.m, params.N
    if m < 2:
        raise ValueError("the eigenvalue lower bound needs m >= 2")
    if not isinstance(k, int) or k < 1:
        raise ValueError("k must be a positive integer")
    if strict_k and k < 2:
        raise ValueError("strict mode restricts the bound to k >= 2")
    constants = constants or solve_tau_constants(m)
    consts = structural_constants(params)
    weight = constants.tau0 ** (m - 1) * math.exp(constants.tau0)
    exp_tau0 = math.exp(constants.tau0)
    ratio = m / (m - 1.0)

    if m % 2 == 1 and lambda_m1 is None:
        raise ValueError("odd m needs lambda_m1 to choose the bound's case")
    case_two = m % 2 == 1 and lambda_m1 < 0.0

    if not case_two:
        q = consts.cm * k / volume
        power = (consts.cm / exp_tau0) ** ratio * (k / volume) ** ratio
        bracket = (
            math.log(q + weight)
            - (m - 1) * math.log(math.log(q + math.e))
            - math.log(2.0)
        )
        logarithmic = bracket ** m
        shift = consts.bm
        case = "nonnegative-first"
    else:
        p_m = -lambda_m1 + consts.bm
        q = consts.am * p_m / volume * k
        power = (consts.am / exp_tau0) ** ratio * (p_m / volume) ** ratio * k ** ratio
        if proof_variant:
            bracket = (
                math.log(q + weight)
                - (m - 1) * math.log(math.log(q + math.e))
                - math.log(2.0)
            )
        else:
            bracket = math.log(q + weight) - (m - 1) * math.log(
                2.0 * math.log(q + math.e)
            )
        logarithmic = bracket ** m
        shift = p_m
        case = "negative-first"

    active = "power" if power <= logarithmic else "log"
    value = (2.0 / n) ** m * min(power, logarithmic) - shift
    inputs = {
        "k": k,
        "volume": volume,
        "lambda_m1": lambda_m1,
        "case": case,
        "active_branch": active,
        "proof_variant": proof_variant,
        "tau0": constants.tau0,
    }
    return certify("eig-lower", inputs, value, observed)


def ball_bound(r0, params):
    """Lower bound for the first eigenvalue of the ball of radius r0 < 1.

    Defined for N >= 2 and odd m >= 3 only; violations raise naming the
    condition.
    """
    n, m = params.N, params.m
    if n < 2:
        raise ValueError("the ball bound needs N >= 2")
    if m % 2 == 0 or m < 3:
        raise ValueError("the ball bound needs odd m >= 3")
    if not 0.0 < r0 < 1.0:
        raise ValueError("the ball bound needs r0 in (0, 1)")
    consts = structural_constants(params)
    edge = 2.0 * math.sqrt(n + 2.0)
    gap = math.log(edge) - math.log(r0)
    lead = 2.0 ** m * gap ** m
    prefactor = (
        2.0 ** m * edge ** n * consts.omegaN ** 2 / (2.0 * math.pi) ** (2 * n)
    )
    tail = 0.0
    for j in range(1, m + 1):
        tail += (
            (-1.0) ** (j + 1)
            / n ** (j + 2)
            * math.factorial(m)
            / math.factorial(m - j)
            * gap ** (m - j)
        )
    return lead - prefactor * tail


def ball_certificate(r0, params, observed=None):
    bound = ball_bound(r0, params)
    inputs = {"r0": r0, "m": params.m, "N": params.N}
    return certify("ball-lower", inputs, bound, observed)


def rescaling_interval(lambda_k_omega, R, params, volume):
    """Bracket for the k-th eigenvalue of the domain dilated by R > 1.

    Returns (lower, upper). The two endpoints come from separate estimates
    and nothing guarantees lower <= upper for every input; callers report
    an empty interval as a finding rather than an error.
    """
    if R <= 1.0:
        raise ValueError("the rescaling estimate needs R > 1")
    m, n = params.m, params.N
    if m % 2 == 0 or m < 3:
        raise ValueError("the rescaling estimate needs odd m >= 3")
    consts = structural_constants(params)
    log_r = math.log(R)
    lower = (
        2.0 ** (-m) * lambda_k_omega
        - 4.0 ** m * log_r ** m
        - (4.0 ** m - 1.0) / (2.0 * math.pi) ** n * consts.Cm * volume
    )
    upper = lambda_k_omega - 2.0 * log_r ** m
    return lower, upper


def stated_linear_slope(params, constants=None):
    """The corollary's admissible slope d_m in its statement form.

    The second branch holds 2 e^((m-1)^m + 2^-m), which overflows the
    double range for m >= 6; infinity is returned then, making the linear
    bound vacuous but still true.
    """
    m = params.m
    constants = constants or solve_tau_constants(m)
    consts = structural_constants(params)
    weight = constants.tau0 ** (m - 1) * math.exp(constants.tau0)
    core = float(m - 1) ** m + 2.0 ** (-m)
    first = math.exp(constants.tau0) / consts.am * core ** ((m - 1.0) / m)
    try:
        second = (2.0 * math.exp(core) - weight) / consts.am
    except OverflowError:
        second = math.inf
    return max(first, second)


def first_eig_volume_bounds(volume, params, d_m=None, observed=None, constants=None):
    """Certificate pair for the first eigenvalue against the volume.

    (a) is the small-volume logarithmic curve; (b) is the linear bound
    b_m - d_m |Omega| for odd m, and plain non-negativity for even m.
    """
    m, n = params.m, params.N
    if m < 2:
        raise ValueError("the volume bounds need m >= 2")
    constants = constants or solve_tau_constants(m)
    consts = structural_constants(params)
    weight = constants.tau0 ** (m - 1) * math.exp(constants.tau0)
    q = consts.cm / volume
    bracket = math.log((q + weight) / (2.0 * math.log(q + math.e) ** (m - 1)))
    curve = (2.0 / n) ** m * bracket ** m - consts.bm
    cert_a = certify(
        "first-eig-small-volume",
        {"volume": volume, "m": m, "N": n},
        curve,
        observed,
    )
    if m % 2 == 1:
        slope = stated_linear_slope(params, constants) if d_m is None else d_m
        linear = consts.bm - slope * volume
        cert_b = certify(
            "first-eig-linear",
            {"volume": volume, "m": m, "N": n, "d_m": slope},
            linear,
            observed,
        )
    else:
        cert_b = certify(
            "first-eig-nonnegative", {"volume": volume, "m": m, "N": n}, 0.0, observed
        )
    return cert_a, cert_b


# ---------------------------------------------------------------------------
# Weyl diagnostics


@dataclass(frozen=True)
class WeylRow:
    lam: float
    ratio1: float
    ratio2: float
    resolved: bool


def weyl_diagnostics(spec, params, volume, lambda_grid):
    """Normalized counting and Riesz-mean ratios, both tending to one.

    A row is resolved when the count stays within a quarter of the cell
    budget and lam sits below the largest computed eigenvalue; rows beyond
    that are kept but flagged, since the upper Galerkin spectrum cannot be
    trusted.
    """
    m, n = params.m, params.N
    consts = structural_constants(params)
    cells = len(spec.domain.cells)
    top = spec.eigenvalues[-1]
    rows = []
    for lam in lambda_grid:
        lam = float(lam)
        if lam <= 0.0:
            raise ValueError("the Weyl ratios need lam > 0")
        prefactor = math.exp(-0.5 * n * lam ** (1.0 / m))
        count = counting_function(spec, lam)
        mean = riesz_mean(spec, lam)
        ratio1 = prefactor * count * n / (consts.TN * volume)
        ratio2 = (
            lam ** (-(m - 1.0) / m)
            * prefactor
            * mean
            * n ** 2
            / (2.0 * m * consts.TN * volume)
        )
        resolved = count <= 0.25 * cells and lam < top
        rows.append(WeylRow(lam=lam, ratio1=ratio1, ratio2=ratio2, resolved=resolved))
    return rows
