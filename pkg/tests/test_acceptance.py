"""End-to-end gate: one test per advertised guarantee.

Each test here re-derives its expected values from an independent route
(extended-precision arithmetic, closed-form substitution, or the inequality
itself evaluated at face value), so a green run certifies the package
against its own documentation. The expensive spectra are shared through
module-scoped fixtures; the whole file stays inside the runtime budgets
quoted in the individual docstrings.

Run just this gate with

    pytest tests/test_acceptance.py -v

which prints one pass/fail line per guarantee.
"""

import math

import mpmath as mp
import numpy as np
import pytest
import scipy.special

import logspec.bounds as bd
import logspec.galerkin as ga
from logspec.coeffs import (
    OperatorParams,
    alpha_coefficients,
    kappa_taylor,
    structural_constants,
)
from logspec.experiments import certificate_grid
from logspec.operator import (
    eval_Lm_fourier,
    eval_Lm_kernel,
    expansion_residual,
    gaussian,
)
from logspec.specfun import bessel_j

EULER_GAMMA = 0.5772156649015328606


# ---------------------------------------------------------------------------
# shared spectra


@pytest.fixture(scope="module")
def interval_spectra():
    """Unit-interval spectra at h = 1/512, 150 eigenvalues, m in {2, 3}."""
    out = {}
    dom = ga.LatticeDomain.interval(0.0, 1.0, 1.0 / 512)
    for m in (2, 3):
        out[m] = ga.eigensolve(dom, OperatorParams(N=1, m=m), k=150, mode="dense")
    return out


@pytest.fixture(scope="module")
def square_spectra():
    """Unit-square spectra at h = 1/32, 150 eigenvalues, m in {2, 3}."""
    out = {}
    dom = ga.LatticeDomain.box(0.0, 1.0, 1.0 / 32)
    for m in (2, 3):
        out[m] = ga.eigensolve(dom, OperatorParams(N=2, m=m), k=150, mode="dense")
    return out


@pytest.fixture(scope="module")
def first_eig_order_three():
    """Extrapolated first eigenvalue for m = 3 on the unit interval.

    Three dyadic levels feed the Richardson step; the value comes out
    negative, which is exactly what routes the odd-order lower bound
    through its shifted branch.
    """
    p = OperatorParams(N=1, m=3)
    levels = []
    for h in (1.0 / 128, 1.0 / 256, 1.0 / 512):
        dom = ga.LatticeDomain.interval(0.0, 1.0, h)
        levels.append(ga.eigensolve(dom, p, k=40, mode="dense"))
    extra = ga.refine_extrapolate(levels)
    assert not extra.flagged[0]
    return extra.values[0]


# ---------------------------------------------------------------------------
# 1. Taylor data against extended-precision finite differences


def _kappa_closed_form(which, s, N):
    value = mp.mpf(2) ** (-2 * s) * mp.gamma((N - 2 * s) / 2) / mp.gamma(1 + s)
    if which == 1:
        return value * mp.pi ** (mp.mpf(-N) / 2)
    return value / mp.gamma(mp.mpf(N) / 2)


def _richardson_fd(which, j, N):
    """Central difference of the closed form at steps h and h/2, combined."""

    def fd(step):
        total = mp.mpf(0)
        for i in range(j + 1):
            s = (mp.mpf(j) / 2 - i) * step
            total += (-1) ** i * mp.binomial(j, i) * _kappa_closed_form(which, s, N)
        return total / step ** j

    a, b = fd(mp.mpf("1e-5")), fd(mp.mpf("1e-5") / 2)
    return float(b + (b - a) / 3)


def test_01_taylor_derivatives_match_finite_differences():
    """Derivative table vs a live 50-digit oracle; runs in well under 1 s."""
    with mp.workdps(50):
        for which in (1, 2):
            for N in (1, 2):
                taylor = kappa_taylor(which, 5, OperatorParams(N=N, m=1))
                for j in range(6):
                    oracle = _richardson_fd(which, j, N)
                    assert taylor.derivative(j) == pytest.approx(oracle, abs=1e-8)
    for N in (1, 2):
        alpha = alpha_coefficients(OperatorParams(N=N, m=1))
        closed = 2.0 * math.log(2.0) + scipy.special.digamma(N / 2.0) - EULER_GAMMA
        assert alpha.values[0] == pytest.approx(closed, abs=1e-10)


# ---------------------------------------------------------------------------
# 2. kernel route vs Fourier route


def test_02_kernel_and_fourier_routes_agree():
    """Ten random points per (N, m); budget is two minutes, actual is seconds."""
    for N in (1, 2):
        for m in (1, 2, 3):
            g = gaussian(N)
            params = OperatorParams(N=N, m=m)
            rng = np.random.default_rng(1000 * N + m)
            for x in rng.uniform(-1.5, 1.5, size=(10, N)):
                kernel = eval_Lm_kernel(g, x, params)
                fourier = eval_Lm_fourier(g, x, params)
                assert abs(kernel - fourier) <= 1e-3 * (1.0 + abs(fourier))


# ---------------------------------------------------------------------------
# 3. small-s expansion of the fractional operator


def test_03_expansion_residual_vanishes_at_stated_order():
    g = gaussian(1)
    for n in (1, 2):
        scaled = [expansion_residual(g, [0.3], s, n) / s ** n for s in (0.1, 0.05, 0.025)]
        assert scaled[0] / scaled[1] >= 1.5
        assert scaled[1] / scaled[2] >= 1.5


# ---------------------------------------------------------------------------
# 4. discretization structure


def test_04_galerkin_structural_suite(interval_spectra, square_spectra):
    """Orthonormality, matvec identity, refinement and domain monotonicity,
    the even-order floor, and the exact first-order dilation shift."""
    p2 = OperatorParams(N=1, m=2)

    # scaled indicator basis is orthonormal: I_0 is a Kronecker delta
    dom1 = ga.LatticeDomain.interval(0.0, 1.0, 1.0 / 2048)
    table1 = ga.base_integrals(p2, dom1.max_offset())
    gram1 = np.array(table1.I[0], dtype=float)
    gram1[0] -= 1.0
    assert np.max(np.abs(gram1)) <= 1e-8

    q2 = OperatorParams(N=2, m=2)
    dom2 = ga.LatticeDomain.box(0.0, 1.0, 1.0 / 64)
    table2 = ga.base_integrals(q2, dom2.max_offset())
    gram2 = np.array(table2.I[0], dtype=float)
    gram2[0, 0] -= 1.0
    assert np.max(np.abs(gram2)) <= 1e-8

    # the stencil application reproduces the dense matrix exactly
    rng = np.random.default_rng(42)
    matrix1 = ga.assemble_dense(dom1, p2, table1)
    v1 = rng.standard_normal(len(dom1.cells))
    assert np.max(np.abs(matrix1 @ v1 - ga.apply_operator(dom1, p2, table1, v1))) <= 1e-10
    matrix2 = ga.assemble_dense(dom2, q2, table2)
    v2 = rng.standard_normal(len(dom2.cells))
    assert np.max(np.abs(matrix2 @ v2 - ga.apply_operator(dom2, q2, table2, v2))) <= 1e-10

    # halving the mesh never raises an eigenvalue (nested subspaces)
    ladder = {}
    for h in (1.0 / 512, 1.0 / 1024, 1.0 / 2048):
        dom = ga.LatticeDomain.interval(0.0, 1.0, h)
        ladder[h] = ga.eigensolve(dom, p2, k=40, mode="dense").eigenvalues
    for coarse, fine in ((1.0 / 512, 1.0 / 1024), (1.0 / 1024, 1.0 / 2048)):
        for lo, hi in zip(ladder[fine], ladder[coarse]):
            assert lo <= hi

    # removing cells gives a principal submatrix: eigenvalues interlace
    big = ga.LatticeDomain.interval(0.0, 1.0, 1.0 / 1024)
    table_big = ga.base_integrals(p2, big.max_offset())
    sub = ga.LatticeDomain.from_mask(big.cells[:768], 1.0 / 1024, 1, "sub")
    removed = len(big.cells) - len(sub.cells)
    spec_big = ga.eigensolve(big, p2, k=40 + removed, mode="dense", table=table_big)
    spec_sub = ga.eigensolve(sub, p2, k=40, mode="dense", table=table_big)
    for k in range(1, 41):
        assert spec_sub.eigenvalues[k - 1] >= spec_big.eigenvalues[k - 1]
        assert spec_sub.eigenvalues[k - 1] <= spec_big.eigenvalues[k - 1 + removed]

    # even order has a non-negative symbol, so the spectrum sits above -1e-8
    assert min(interval_spectra[2].eigenvalues) >= -1e-8
    assert min(square_spectra[2].eigenvalues) >= -1e-8
    dom4 = ga.LatticeDomain.interval(0.0, 1.0, 1.0 / 256)
    spec4 = ga.eigensolve(dom4, OperatorParams(N=1, m=4), k=20, mode="dense")
    assert min(spec4.eigenvalues) >= -1e-8

    # for m = 1 a dilation by R shifts every eigenvalue by exactly -2 log R
    p1 = OperatorParams(N=1, m=1)
    base = ga.LatticeDomain.interval(0.0, 1.0, 1.0 / 1024)
    table_one = ga.base_integrals(p1, base.max_offset())
    scaled = ga.LatticeDomain.from_mask(base.cells, 3.0 / 1024, 1, "scaled")
    spec_a = ga.eigensolve(base, p1, k=40, mode="dense", table=table_one)
    spec_b = ga.eigensolve(scaled, p1, k=40, mode="dense", table=table_one)
    for x, y in zip(spec_a.eigenvalues, spec_b.eigenvalues):
        assert y - x == pytest.approx(-2.0 * math.log(3.0), abs=1e-10)


# ---------------------------------------------------------------------------
# 5. Riesz-mean upper bound


def test_05_riesz_mean_stays_below_closed_form(interval_spectra, square_spectra):
    """Exact inequality on a 50-point grid wherever the bound is positive."""
    for spec in (interval_spectra[2], interval_spectra[3],
                 square_spectra[2], square_spectra[3]):
        volume = spec.domain.volume
        positive = 0
        for lam in certificate_grid(spec, points=50):
            bound = bd.riesz_upper_bound(lam, spec.params, volume)
            if bound > 0.0:
                positive += 1
                assert bd.riesz_mean(spec, lam) <= bound
        assert positive >= 40


# ---------------------------------------------------------------------------
# 6. counting-function upper bound


def test_06_counting_function_below_eta_minimum(interval_spectra, square_spectra):
    for spec in (interval_spectra[2], interval_spectra[3],
                 square_spectra[2], square_spectra[3]):
        volume = spec.domain.volume
        for lam in certificate_grid(spec, points=50):
            cert = bd.counting_certificate(spec, spec.params, volume, lam)
            assert cert.verdict == "pass", (spec.params, lam, cert.inputs)


# ---------------------------------------------------------------------------
# 7. eigenvalue lower bound, both parity cases


def test_07_every_eigenvalue_sits_above_its_lower_bound(
    interval_spectra, first_eig_order_three
):
    even = interval_spectra[2]
    for k in range(1, len(even.eigenvalues) + 1):
        cert = bd.eig_lower_bound(
            k, even.params, even.domain.volume, observed=even.eigenvalues[k - 1]
        )
        assert cert.verdict == "pass", (k, cert.bound_value, cert.observed_value)

    odd = interval_spectra[3]
    for k in range(1, len(odd.eigenvalues) + 1):
        cert = bd.eig_lower_bound(
            k,
            odd.params,
            odd.domain.volume,
            lambda_m1=first_eig_order_three,
            observed=odd.eigenvalues[k - 1],
        )
        assert cert.verdict == "pass", (k, cert.bound_value, cert.observed_value)


# ---------------------------------------------------------------------------
# 8. root solver residuals and the closed root estimate


def test_08_root_equations_and_root_lower_estimate():
    """Residuals of both root equations, then the closed estimate vs bisection.

    The second residual is checked in relative and in log form. An absolute
    1e-10 window is narrower than one double-precision ulp of tau_m once
    m = 6 (tau_m is about 1.9e6 there), so no representable tau0 could meet
    it; relative to tau_m the residual sits at rounding level.
    """
    for m in range(2, 7):
        constants = bd.solve_tau_constants(m)
        h_residual = (constants.tau_tilde / 3.0) ** (1.0 / (m - 1)) - math.log(
            constants.tau_tilde + math.e
        )
        assert abs(h_residual) <= 1e-10
        log_residual = (
            (m - 1) * math.log(constants.tau0) + constants.tau0
            - math.log(constants.tau_m)
        )
        assert abs(log_residual) <= 1e-10
        product = constants.tau0 ** (m - 1) * math.exp(constants.tau0)
        assert abs(product - constants.tau_m) <= 1e-10 * constants.tau_m

        for N in (1, 2):
            for tau in (0.5, 2.0, 10.0, 100.0, 1000.0):
                cert = bd.root_lower_bound_certificate(tau, m, N, constants=constants)
                assert cert.verdict == "pass", (m, N, tau, cert.bound_value)


# ---------------------------------------------------------------------------
# 9. eigenvalue counting vs the leading-order growth law


def test_09_counting_ratio_window_and_drift():
    """Band check and drift check at h = 2^-13 on the unit interval, m = 2.

    The window is every count between 50 and 500. Both ratios must stay
    inside [0.6, 1.4] there, and the median distance of the first ratio
    from 1 over the upper half of the window must beat the lower half.
    Runs in about two minutes against a ten-minute budget.
    """
    params = OperatorParams(N=1, m=2)
    dom = ga.LatticeDomain.interval(0.0, 1.0, 2.0 ** -13)
    spec = ga.eigensolve(dom, params, k=600, mode="dense")
    ev = spec.eigenvalues
    grid = [0.5 * (ev[k - 1] + ev[k]) for k in range(50, 501)]
    rows = bd.weyl_diagnostics(spec, params, dom.volume, grid)

    assert all(row.resolved for row in rows)
    for row in rows:
        assert 0.6 <= row.ratio1 <= 1.4, (row.lam, row.ratio1)
        assert 0.6 <= row.ratio2 <= 1.4, (row.lam, row.ratio2)

    lam = np.array([row.lam for row in rows])
    err = np.array([abs(row.ratio1 - 1.0) for row in rows])
    middle = 0.5 * (lam[0] + lam[-1])
    upper = np.median(err[lam > middle])
    lower = np.median(err[lam <= middle])
    assert upper < lower, (
        "no drift toward 1: median |ratio1 - 1| is %.5f on the upper half "
        "of the window but %.5f on the lower half" % (upper, lower)
    )


# ---------------------------------------------------------------------------
# 10. torus multiplier vs Toeplitz assembly


def test_10_torus_and_dense_spectra_agree_to_five_percent():
    dom = ga.LatticeDomain.interval(0.0, 1.0, 1.0 / 512)
    for m in (1, 2):
        params = OperatorParams(N=1, m=m)
        dense = ga.eigensolve(dom, params, k=10, mode="dense")
        torus = ga.torus_spectrum(dom, params, padding=8, k=10)
        for approx, reference in zip(torus.eigenvalues, dense.eigenvalues):
            assert abs(approx - reference) <= 0.05 * abs(reference)


# ---------------------------------------------------------------------------
# 11. ball bound, rescaling bracket, Bessel envelope


def _ball_oracle(r0, N, m):
    """Substitute into the closed form with 50-digit arithmetic."""
    edge = 2 * mp.sqrt(N + 2)
    gap = mp.log(edge) - mp.log(r0)
    omega = 2 * mp.pi ** (mp.mpf(N) / 2) / mp.gamma(mp.mpf(N) / 2)
    lead = mp.mpf(2) ** m * gap ** m
    prefactor = mp.mpf(2) ** m * edge ** N * omega ** 2 / (2 * mp.pi) ** (2 * N)
    tail = mp.mpf(0)
    for j in range(1, m + 1):
        tail += (
            (-1) ** (j + 1)
            / mp.mpf(N) ** (j + 2)
            * mp.factorial(m)
            / mp.factorial(m - j)
            * gap ** (m - j)
        )
    return float(lead - prefactor * tail)


def _rescaling_oracle(lam, R, N, m, volume):
    omega = 2 * mp.pi ** (mp.mpf(N) / 2) / mp.gamma(mp.mpf(N) / 2)
    c_m = omega * mp.factorial(m) / mp.mpf(N) ** (m + 1)
    log_r = mp.log(R)
    lower = (
        mp.mpf(2) ** -m * lam
        - mp.mpf(4) ** m * log_r ** m
        - (mp.mpf(4) ** m - 1) / (2 * mp.pi) ** N * c_m * volume
    )
    upper = lam - 2 * log_r ** m
    return float(lower), float(upper)


def test_11_closed_forms_match_substitution_oracles():
    with mp.workdps(50):
        ball_params = OperatorParams(N=2, m=3)
        for r0 in (0.05, 0.1, 0.25, 0.5, 0.75, 0.9):
            oracle = _ball_oracle(mp.mpf(r0), 2, 3)
            assert abs(bd.ball_bound(r0, ball_params) - oracle) <= 1e-12 * (1.0 + abs(oracle))

        scale_params = OperatorParams(N=1, m=3)
        for lam in (5.0, 20.0, 100.0):
            for R in (1.5, 2.0, 4.0):
                lo_oracle, hi_oracle = _rescaling_oracle(mp.mpf(lam), mp.mpf(R), 1, 3, 1)
                lo, hi = bd.rescaling_interval(lam, R, scale_params, 1.0)
                assert abs(lo - lo_oracle) <= 1e-12 * (1.0 + abs(lo_oracle))
                assert abs(hi - hi_oracle) <= 1e-12 * (1.0 + abs(hi_oracle))

    # series evaluation never exceeds the t^l envelope on its working range
    for N in (1, 2):
        order = N / 2.0 - 1.0
        top = 2.0 * math.sqrt(2.0 * (order + 2.0))
        grid = np.linspace(0.0, top, 1000)
        if order < 0.0:
            grid = grid[1:]
        for t in grid:
            envelope = t ** order / (2.0 ** order * math.gamma(order + 1.0)) if t > 0 else 1.0
            assert abs(bessel_j(order, float(t))) <= envelope
