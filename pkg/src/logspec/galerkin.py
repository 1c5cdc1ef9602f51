"""Galerkin eigenvalue machinery on uniform lattices.

The basis functions are normalized cell indicators phi_i = h^(-N/2) 1_cell,
orthonormal in L^2, so the discrete Dirichlet problem is an ordinary
symmetric eigenproblem. Every form-matrix entry depends only on the integer
offset between cells: under u = h xi the entry becomes

    t_h(d) = sum_j C(m, j) (-2 log h)^(m-j) I_j(d),

where I_j(d) is the h-independent lattice integral of (2 log|u|)^j against
the squared-sinc window with phase cos(u . d). Observing that sinc^2(u/2) is
the Fourier transform of the unit tent lets each I_j(d) be evaluated in real
space as the order-j operator applied to the tent function at the point d,
which reduces to closed forms in one dimension and to low-dimensional
quadratures in two.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.integrate
import scipy.linalg
import scipy.sparse.linalg

from .coeffs import MAX_TAYLOR_ORDER, OperatorParams, alpha_coefficients, symbol

DENSE_CELL_CAP = 20000

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class LatticeDomain:
    """Cells of a uniform lattice of spacing h whose centers lie inside Omega."""

    N: int
    h: float
    cells: tuple
    descriptor: str

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError("lattice spacing must be positive")
        if len(self.cells) == 0:
            raise ValueError("domain has no cells")
        if len(set(self.cells)) != len(self.cells):
            raise ValueError("duplicate lattice cells")

    @property
    def volume(self):
        return self.h ** self.N * len(self.cells)

    def index_array(self):
        arr = np.asarray(self.cells, dtype=np.int64)
        if self.N == 1 and arr.ndim == 1:
            arr = arr[:, None]
        return arr

    def max_offset(self):
        """Largest per-axis index difference any pair of cells can have."""
        arr = self.index_array()
        return int((arr.max(axis=0) - arr.min(axis=0)).max())

    @classmethod
    def interval(cls, a, b, h):
        if not b > a:
            raise ValueError("empty interval")
        lo = math.floor(a / h) - 1
        hi = math.ceil(b / h) + 1
        cells = tuple(i for i in range(lo, hi + 1) if a < (i + 0.5) * h < b)
        return cls(N=1, h=h, cells=cells, descriptor="interval(%g,%g)" % (a, b))

    @classmethod
    def box(cls, a, b, h):
        """The square (a,b) x (a,b) in two dimensions."""
        if not b > a:
            raise ValueError("empty box")
        lo = math.floor(a / h) - 1
        hi = math.ceil(b / h) + 1
        side = [i for i in range(lo, hi + 1) if a < (i + 0.5) * h < b]
        cells = tuple((i, j) for i in side for j in side)
        return cls(N=2, h=h, cells=cells, descriptor="box(%g,%g)^2" % (a, b))

    @classmethod
    def disk(cls, center, radius, h):
        if radius <= 0.0:
            raise ValueError("radius must be positive")
        cx, cy = center
        lo_x = math.floor((cx - radius) / h) - 1
        hi_x = math.ceil((cx + radius) / h) + 1
        lo_y = math.floor((cy - radius) / h) - 1
        hi_y = math.ceil((cy + radius) / h) + 1
        cells = []
        for i in range(lo_x, hi_x + 1):
            px = (i + 0.5) * h - cx
            for j in range(lo_y, hi_y + 1):
                py = (j + 0.5) * h - cy
                if px * px + py * py < radius * radius:
                    cells.append((i, j))
        return cls(
            N=2, h=h, cells=tuple(cells),
            descriptor="disk((%g,%g),%g)" % (cx, cy, radius),
        )

    @classmethod
    def from_mask(cls, indices, h, N, descriptor="mask"):
        cells = tuple(tuple(ix) if N == 2 else int(ix) for ix in indices)
        return cls(N=N, h=h, cells=cells, descriptor=descriptor)


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class Spectrum:
    params: OperatorParams
    domain: LatticeDomain
    eigenvalues: tuple
    residual_norms: tuple
    method: str
    metadata: dict = field(compare=False, default_factory=dict)

    def __post_init__(self):
        vals = self.eigenvalues
        if any(vals[i] > vals[i + 1] for i in range(len(vals) - 1)):
            raise ValueError("eigenvalues must be ascending")
        if len(self.residual_norms) != len(vals):
            raise ValueError("one residual norm per eigenvalue required")
        if self.params.m % 2 == 0 and any(v < -1e-8 for v in vals):
            raise ValueError(
                "even order has a non-negative symbol, so eigenvalues below "
                "-1e-8 signal an assembly bug; got %r" % (min(vals),)
            )


@dataclass(frozen=True)
class ExtrapolatedEigenvalues:
    values: tuple
    error_bars: tuple
    rates: tuple
    flagged: tuple


# ---------------------------------------------------------------------------
# base integrals: one-dimensional closed forms

# Radial primitives used throughout: with L = -2 log r,
#   integral of L^(i-1)/r dr = -L^i / (2i)
#   integral of L^k dr       = r sum_t 2^(k-t) (k!/t!) L^t   (call it P_k)


def _pk(k, r):
    r = np.asarray(r, dtype=float)
    L = -2.0 * np.log(r)
    acc = np.zeros_like(r)
    for t in range(k + 1):
        acc += 2.0 ** (k - t) * (math.factorial(k) / math.factorial(t)) * L ** t
    return r * acc


def _log_primitive(i, r):
    r = np.asarray(r, dtype=float)
    return -((-2.0 * np.log(r)) ** i) / (2.0 * i)


def _tent_kernel_1d(i, d):
    """K_i applied to the unit tent at integer offsets d >= 0 (vectorized).

    The kernel splits into [T(d) - T(y)] inside the unit ball around d and
    -T(y) outside; with T the tent both pieces reduce to the primitives
    above. d = 0 and d = 1 carry the singularity inside the tent's support
    and have their own closed forms.
    """
    d = np.asarray(d, dtype=np.int64)
    out = np.zeros(d.shape, dtype=float)

    at0 = 2.0 ** i * math.factorial(i - 1)
    out[d == 0] = at0

    at1 = (-2.0 * math.log(2.0)) ** i / i + _pk(i - 1, 2.0) - at0
    out[d == 1] = at1

    far = d[d >= 2].astype(float)
    if far.size:
        # -(integral_{d-1}^{d} (1-d+r) w_i dr + integral_{d}^{d+1} (1+d-r) w_i dr)
        def piece(a_const, b_lin, r1, r2):
            return a_const * (_log_primitive(i, r2) - _log_primitive(i, r1)) + b_lin * (
                _pk(i - 1, r2) - _pk(i - 1, r1)
            )

        inner = piece(1.0 - far, 1.0, far - 1.0, far)
        outer = piece(1.0 + far, -1.0, far, far + 1.0)
        out[d >= 2] = -(inner + outer)
    return out


# ---------------------------------------------------------------------------
# base integrals: two-dimensional angular reduction

# tri(t) = ramp(t+1) - 2 ramp(t) + ramp(t-1) turns the tent into nine ramp
# products, and each ramp product integrates over an arc of the circle of
# radius r around the offset d in closed form.

_RAMP_WEIGHTS = {-1: 1.0, 0: -2.0, 1: 1.0}


def _quarter_moment(p1, p2, r):
    """Integral of (p1 + r cos t)(p2 + r sin t) over the arc where both
    factors are non-negative."""

    def F(theta):
        return (
            p1 * p2 * theta
            - p1 * r * math.cos(theta)
            + p2 * r * math.sin(theta)
            + 0.5 * r * r * math.sin(theta) ** 2
        )

    a = -p1 / r
    b = -p2 / r
    if a > 1.0 or b > 1.0:
        return 0.0
    if a <= -1.0:
        cos_arc = (-math.pi, math.pi)
    else:
        alpha = math.acos(a)
        cos_arc = (-alpha, alpha)
    if b <= -1.0:
        sin_arc = (-math.pi, math.pi)
    else:
        beta = math.asin(b)
        sin_arc = (beta, math.pi - beta)

    total = 0.0
    for shift in (-2.0 * math.pi, 0.0, 2.0 * math.pi):
        lo = max(cos_arc[0], sin_arc[0] + shift)
        hi = min(cos_arc[1], sin_arc[1] + shift)
        if hi > lo:
            total += F(hi) - F(lo)
    return total


def _tent_circle_integral(d, r):
    """S_d(r): the tent integrated over the circle of radius r around d."""
    d1, d2 = d
    total = 0.0
    for c1, w1 in _RAMP_WEIGHTS.items():
        for c2, w2 in _RAMP_WEIGHTS.items():
            total += w1 * w2 * _quarter_moment(d1 - c1, d2 - c2, r)
    return total


def _near_offset_kernel_2d(i, d, rel_tol):
    """K_i at the three offsets whose singularity touches the tent support."""
    d1, d2 = d
    tent_at_d = max(0.0, 1.0 - abs(d1)) * max(0.0, 1.0 - abs(d2))

    corners = [(c1, c2) for c1 in (-1.0, 0.0, 1.0) for c2 in (-1.0, 0.0, 1.0)]
    radius_max = max(math.hypot(d1 - c1, d2 - c2) for c1 in (-1.0, 1.0) for c2 in (-1.0, 1.0))
    breaks = set()
    for c1, c2 in corners:
        breaks.update({abs(d1 - c1), abs(d2 - c2), math.hypot(d1 - c1, d2 - c2)})
    breaks.add(1.0)
    cuts = sorted(b for b in breaks if 0.0 < b < radius_max) + [radius_max]

    def integrand(r):
        weight = (-2.0 * math.log(r)) ** (i - 1) / r
        if r <= 1.0:
            return (2.0 * math.pi * tent_at_d - _tent_circle_integral(d, r)) * weight
        return -_tent_circle_integral(d, r) * weight

    total = 0.0
    total_err = 0.0
    lo = 0.0
    for hi in cuts:
        if hi - lo < 1e-14:
            lo = hi
            continue
        value, err = scipy.integrate.quad(
            integrand, lo, hi, limit=200, epsabs=1e-12, epsrel=1e-12
        )
        total += value
        total_err += err
        lo = hi
    if total_err > rel_tol * (1.0 + abs(total)):
        raise RuntimeError(
            "singular radial quadrature did not converge at offset %r: "
            "achieved error %g" % (d, total_err)
        )
    return total


def _far_offset_kernels_2d(m, offsets, nodes_per_cell):
    """K_i for i = 1..m at offsets with distance >= 1 from the tent support.

    There the integrand is smooth on each bilinear panel of the tent, so a
    tensor Gauss rule per unit cell converges spectrally. Returns an array
    of shape (m, len(offsets)).
    """
    x, w = np.polynomial.legendre.leggauss(nodes_per_cell)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    nodes = []
    weights = []
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            gx, gy = np.meshgrid(sx * x, sy * x, indexing="ij")
            gw = np.outer(w * (1.0 - x), w * (1.0 - x))
            nodes.append(np.column_stack([gx.ravel(), gy.ravel()]))
            weights.append(gw.ravel())
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)

    offsets = np.asarray(offsets, dtype=float)
    out = np.zeros((m, len(offsets)))
    chunk = max(1, int(4e6 // max(len(nodes), 1)))
    for start in range(0, len(offsets), chunk):
        block = offsets[start : start + chunk]
        diff = block[:, None, :] - nodes[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        inv = weights[None, :] / r2
        log_factor = -np.log(r2)
        power = np.ones_like(r2)
        for i in range(1, m + 1):
            out[i - 1, start : start + chunk] = -(inv * power).sum(axis=1)
            if i < m:
                power *= log_factor
    return out


# ---------------------------------------------------------------------------
# the table


@dataclass(frozen=True)
class TableQuadrature:
    """Knobs for the two-dimensional table build."""

    nodes_near: int = 32
    nodes_far: int = 20
    rel_tol: float = 1e-10


@dataclass(frozen=True)
class BaseIntegralTable:
    """I_j(d) for 0 <= j <= m on all offsets |d_axis| <= max_offset.

    Stored as an array indexed by [j, |d_1|, ...]; the integrals only depend
    on componentwise absolute values (and are symmetric under coordinate
    swap in two dimensions).
    """

    N: int
    m: int
    max_offset: int
    I: np.ndarray = field(compare=False)

    def value(self, j, offset):
        if self.N == 1:
            d = abs(int(offset if np.isscalar(offset) else offset[0]))
            return float(self.I[j, d])
        a, b = abs(int(offset[0])), abs(int(offset[1]))
        return float(self.I[j, a, b])

    def offsets(self):
        if self.N == 1:
            return [(d,) for d in range(self.max_offset + 1)]
        return [
            (a, b)
            for a in range(self.max_offset + 1)
            for b in range(self.max_offset + 1)
        ]


_TABLE_MEMO = {}


def base_integrals(params, max_offset, quad=None):
    """Build the offset table of lattice integrals I_j(d), j = 0..m.

    One dimension is fully closed-form. Two dimensions splits offsets into
    the three near cases (singularity inside the tent support, handled by
    the exact angular reduction plus panelled radial quadrature) and the
    smooth far field (tensor Gauss per unit tent panel).
    """
    quad = quad or TableQuadrature()
    if max_offset < 0:
        raise ValueError("max_offset must be non-negative")
    if params.m > MAX_TAYLOR_ORDER:
        raise ValueError(
            "table construction needs Taylor data up to order m; m <= %d"
            % MAX_TAYLOR_ORDER
        )
    key = (params.N, params.m, max_offset, quad)
    if key in _TABLE_MEMO:
        return _TABLE_MEMO[key]

    m = params.m
    alphas = {
        j: alpha_coefficients(OperatorParams(N=params.N, m=j)).values
        for j in range(1, m + 1)
    }

    if params.N == 1:
        table = np.zeros((m + 1, max_offset + 1))
        table[0, 0] = 1.0
        d = np.arange(max_offset + 1)
        kernels = {i: _tent_kernel_1d(i, d) for i in range(1, m + 1)}
        for j in range(1, m + 1):
            row = np.zeros(max_offset + 1)
            row[0] = alphas[j][0]  # alpha_0 multiplies the identity part
            for i in range(1, j + 1):
                row += alphas[j][i] * kernels[i]
            table[j] = row
    else:
        table = np.zeros((m + 1, max_offset + 1, max_offset + 1))
        table[0, 0, 0] = 1.0
        near = [(0, 0), (1, 0), (1, 1)]
        grid = [
            (a, b)
            for a in range(max_offset + 1)
            for b in range(a + 1)
            if (a, b) not in near
        ]
        kernels = np.zeros((m + 1, max_offset + 1, max_offset + 1))
        if grid:
            dist = lambda ab: math.hypot(max(ab[0] - 1, 0), max(ab[1] - 1, 0))
            close = [ab for ab in grid if dist(ab) < 3.0]
            distant = [ab for ab in grid if dist(ab) >= 3.0]
            for subset, nodes in ((close, quad.nodes_near), (distant, quad.nodes_far)):
                if not subset:
                    continue
                values = _far_offset_kernels_2d(m, subset, nodes)
                for col, (a, b) in enumerate(subset):
                    kernels[1:, a, b] = values[:, col]
                    kernels[1:, b, a] = values[:, col]
        for a, b in near:
            if a > max_offset or b > max_offset:
                continue
            for i in range(1, m + 1):
                value = _near_offset_kernel_2d(i, (a, b), quad.rel_tol)
                kernels[i, a, b] = value
                kernels[i, b, a] = value
        for j in range(1, m + 1):
            row = alphas[j][0] * (
                np.arange(max_offset + 1)[:, None] + np.arange(max_offset + 1)[None, :] == 0
            )
            row = row.astype(float)
            for i in range(1, j + 1):
                row += alphas[j][i] * kernels[i]
            table[j] = row

    result = BaseIntegralTable(N=params.N, m=params.m, max_offset=max_offset, I=table)
    _TABLE_MEMO[key] = result
    return result


def toeplitz_entries(table, h):
    """t_h(d) = sum_j C(m, j) (-2 log h)^(m-j) I_j(d) for every table offset."""
    if h <= 0.0:
        raise ValueError("spacing must be positive")
    grid = _stencil_grid(table, h)
    entries = {}
    for offset in table.offsets():
        if table.N == 1:
            entries[offset[0]] = float(grid[offset[0]])
        else:
            entries[offset] = float(grid[offset])
    return entries


def _stencil_grid(table, h):
    """Array of t_h over non-negative offsets, same indexing as the table."""
    shift = -2.0 * math.log(h)
    m = table.m
    grid = np.zeros_like(table.I[0])
    for j in range(m + 1):
        grid += math.comb(m, j) * shift ** (m - j) * table.I[j]
    return grid


# ---------------------------------------------------------------------------
# assembly and application


def _require_table_cover(domain, table):
    if table.N != domain.N:
        raise ValueError("table dimension %d does not match domain" % table.N)
    needed = domain.max_offset()
    if table.max_offset < needed:
        raise ValueError(
            "table covers offsets up to %d but the domain needs %d"
            % (table.max_offset, needed)
        )


def assemble_dense(domain, params, table):
    """Dense symmetric form matrix over the domain cells."""
    _require_table_cover(domain, table)
    n = len(domain.cells)
    if n > DENSE_CELL_CAP:
        raise ValueError(
            "%d cells exceeds the dense cap %d; use apply_operator with the "
            "krylov eigensolver instead" % (n, DENSE_CELL_CAP)
        )
    grid = _stencil_grid(table, domain.h)
    idx = domain.index_array()
    if domain.N == 1:
        col = idx[:, 0]
        offsets = np.abs(col[:, None] - col[None, :])
        return grid[offsets]
    a = idx[:, 0]
    b = idx[:, 1]
    return grid[np.abs(a[:, None] - a[None, :]), np.abs(b[:, None] - b[None, :])]


class _ToeplitzApplier:
    """Matrix-free multiply: zero-padded circular convolution by FFT."""

    def __init__(self, domain, params, table):
        _require_table_cover(domain, table)
        idx = domain.index_array()
        origin = idx.min(axis=0)
        self.local = idx - origin
        extents = self.local.max(axis=0) + 1
        self.padded = tuple(scipy.fft.next_fast_len(int(2 * e)) for e in extents)
        grid = _stencil_grid(table, domain.h)

        stencil = np.zeros(self.padded)
        if domain.N == 1:
            e = int(extents[0])
            rng = np.arange(-(e - 1), e)
            stencil[rng % self.padded[0]] = grid[np.abs(rng)]
        else:
            e1, e2 = int(extents[0]), int(extents[1])
            r1 = np.arange(-(e1 - 1), e1)
            r2 = np.arange(-(e2 - 1), e2)
            stencil[np.ix_(r1 % self.padded[0], r2 % self.padded[1])] = grid[
                np.ix_(np.abs(r1), np.abs(r2))
            ]
        self.stencil_hat = scipy.fft.rfftn(stencil)
        self.cell_index = tuple(self.local[:, k] for k in range(domain.N))
        self.norm_bound = float(np.sum(np.abs(stencil)))

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        grid = np.zeros(self.padded)
        grid[self.cell_index] = v
        conv = scipy.fft.irfftn(scipy.fft.rfftn(grid) * self.stencil_hat, s=self.padded)
        return conv[self.cell_index]


def apply_operator(domain, params, table, v):
    """Multiply the form matrix by v without assembling it."""
    return _ToeplitzApplier(domain, params, table)(v)


# ---------------------------------------------------------------------------
# eigensolvers


def _spectrum_from_pairs(domain, params, values, vectors, applier, method, metadata):
    order = np.argsort(values)
    values = np.asarray(values)[order]
    vectors = np.asarray(vectors)[:, order]
    residuals = []
    for i in range(values.size):
        vec = vectors[:, i]
        residuals.append(float(np.linalg.norm(applier(vec) - values[i] * vec)))
    return Spectrum(
        params=params,
        domain=domain,
        eigenvalues=tuple(float(v) for v in values),
        residual_norms=tuple(residuals),
        method=method,
        metadata=metadata,
    )


def eigensolve(domain, params, k, mode="dense", tol=1e-9, table=None):
    """The k smallest Dirichlet eigenvalues on the domain.

    Dense mode assembles the Toeplitz matrix and calls the symmetric solver
    restricted to the lowest indices; krylov mode runs Lanczos on the
    matrix-free multiply after an operator-norm shift makes the spectrum
    positive (odd orders give indefinite but semibounded forms).
    """
    n = len(domain.cells)
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, %d]" % n)
    if table is None:
        table = base_integrals(params, domain.max_offset())
    applier = _ToeplitzApplier(domain, params, table)
    metadata = {"h": domain.h, "cells": n}

    if mode == "dense":
        matrix = assemble_dense(domain, params, table)
        values, vectors = scipy.linalg.eigh(matrix, subset_by_index=[0, k - 1])
        return _spectrum_from_pairs(
            domain, params, values, vectors, applier, "dense", metadata
        )

    if mode != "krylov":
        raise ValueError("mode must be 'dense' or 'krylov'")
    if k >= n:
        raise ValueError("krylov mode needs k < cell count; use dense")

    shift = 1.0 + applier.norm_bound
    operator = scipy.sparse.linalg.LinearOperator(
        shape=(n, n), matvec=lambda v: applier(v) + shift * v, dtype=float
    )
    v0 = np.random.default_rng(0).standard_normal(n)
    try:
        values, vectors = scipy.sparse.linalg.eigsh(
            operator, k=k, which="SA", tol=tol, v0=v0
        )
        converged = [True] * k
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        values, vectors = exc.eigenvalues, exc.eigenvectors
        converged = [True] * len(values)
        warnings.warn(
            "Lanczos returned %d of %d pairs before the iteration cap"
            % (len(values), k)
        )
    metadata = dict(metadata, converged=converged, requested=k)
    return _spectrum_from_pairs(
        domain, params, values - shift, vectors, applier, "krylov", metadata
    )


def _torus_multiplier(params, padded, h):
    """Symbol values on the discrete torus frequency grid.

    The zero mode gets the equal-measure ball average of the symbol over one
    frequency cell, using the closed-form radial integral of (2 log rho)^m.
    """
    m = params.m
    freqs = [2.0 * math.pi * scipy.fft.fftfreq(p, d=h) for p in padded]
    if params.N == 1:
        norm = np.abs(freqs[0])
    else:
        fx, fy = np.meshgrid(freqs[0], freqs[1], indexing="ij")
        norm = np.hypot(fx, fy)
    sigma = np.zeros(norm.shape)
    nz = norm > 0.0
    sigma[nz] = (2.0 * np.log(norm[nz])) ** m

    periods = [p * h for p in padded]
    if params.N == 1:
        rho = math.pi / periods[0]
    else:
        rho = 2.0 * math.sqrt(math.pi / (periods[0] * periods[1]))
    avg = 0.0
    for i in range(m + 1):
        avg += (
            math.comb(m, i)
            * (2.0 * math.log(rho)) ** (m - i)
            * (-2.0) ** i
            * math.factorial(i)
            / params.N ** i
        )
    sigma[~nz] = avg
    return sigma


def torus_spectrum(domain, params, padding=4, k=1, mode="dense", tol=1e-9):
    """Cross-check discretization: the projected multiplier on a torus.

    The bounding box blown up by the padding factor becomes the period; the
    operator is diagonal in the discrete Fourier basis up to the projection
    onto the domain cells, hence circulant, and the same Toeplitz-style
    assembly applies with stencil equal to the inverse transform of the
    multiplier.
    """
    if padding < 4:
        raise ValueError("padding must be at least 4")
    n = len(domain.cells)
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, %d]" % n)
    idx = domain.index_array()
    origin = idx.min(axis=0)
    local = idx - origin
    extents = local.max(axis=0) + 1
    padded = tuple(int(padding * e) for e in extents)
    sigma = _torus_multiplier(params, padded, domain.h)
    stencil = np.real(scipy.fft.ifftn(sigma))

    cell_index = tuple(local[:, i] for i in range(domain.N))

    def matvec(v):
        grid = np.zeros(padded)
        grid[cell_index] = np.asarray(v, dtype=float)
        conv = np.real(scipy.fft.ifftn(scipy.fft.fftn(grid) * sigma))
        return conv[cell_index]

    metadata = {"h": domain.h, "cells": n, "padding": padding}

    if mode == "dense":
        if n > DENSE_CELL_CAP:
            raise ValueError("dense torus solve capped at %d cells" % DENSE_CELL_CAP)
        if domain.N == 1:
            diffs = (local[:, 0][:, None] - local[:, 0][None, :]) % padded[0]
            matrix = stencil[diffs]
        else:
            d1 = (local[:, 0][:, None] - local[:, 0][None, :]) % padded[0]
            d2 = (local[:, 1][:, None] - local[:, 1][None, :]) % padded[1]
            matrix = stencil[d1, d2]
        values, vectors = scipy.linalg.eigh(matrix, subset_by_index=[0, k - 1])
        return _spectrum_from_pairs(
            domain, params, values, vectors, matvec, "torus", metadata
        )

    if mode != "krylov":
        raise ValueError("mode must be 'dense' or 'krylov'")
    if k >= n:
        raise ValueError("krylov mode needs k < cell count; use dense")
    shift = 1.0 + float(np.abs(sigma).max())
    operator = scipy.sparse.linalg.LinearOperator(
        shape=(n, n), matvec=lambda v: matvec(v) + shift * v, dtype=float
    )
    v0 = np.random.default_rng(0).standard_normal(n)
    values, vectors = scipy.sparse.linalg.eigsh(
        operator, k=k, which="SA", tol=tol, v0=v0
    )
    return _spectrum_from_pairs(
        domain, params, values - shift, vectors, matvec, "torus", metadata
    )


# ---------------------------------------------------------------------------
# refinement


def refine_extrapolate(spectra):
    """Richardson extrapolation across a (h, h/2, h/4) ladder of spectra.

    Fits an algebraic rate per eigenvalue index from the three levels. A
    triple without a consistent geometric decrease is flagged and gets the
    level spread as its error bar.
    """
    if len(spectra) != 3:
        raise ValueError("exactly three refinement levels expected")
    hs = [s.metadata.get("h", s.domain.h) for s in spectra]
    if not (
        math.isclose(hs[0] / hs[1], 2.0, rel_tol=1e-9)
        and math.isclose(hs[1] / hs[2], 2.0, rel_tol=1e-9)
    ):
        raise ValueError("levels must halve the spacing: got %r" % (hs,))
    count = min(len(s.eigenvalues) for s in spectra)
    values, bars, rates, flags = [], [], [], []
    for i in range(count):
        v0, v1, v2 = (s.eigenvalues[i] for s in spectra)
        d01 = v1 - v0
        d12 = v2 - v1
        if d01 == 0.0 and d12 == 0.0:
            values.append(v2)
            bars.append(0.0)
            rates.append(math.inf)
            flags.append(False)
            continue
        if d01 == 0.0 or (d12 / d01) <= 0.0 or (d12 / d01) >= 1.0:
            spread = max(abs(d01), abs(d12))
            values.append(v2)
            bars.append(spread)
            rates.append(math.nan)
            flags.append(True)
            continue
        theta = d12 / d01
        limit = v2 + d12 * theta / (1.0 - theta)
        values.append(limit)
        bars.append(abs(limit - v2))
        rates.append(-math.log2(theta))
        flags.append(False)
    return ExtrapolatedEigenvalues(
        values=tuple(values),
        error_bars=tuple(bars),
        rates=tuple(rates),
        flagged=tuple(flags),
    )
