"""HTTP facade over the library.

Every endpoint is a thin wrapper: parse the request model, call the same
functions the CLI uses in process, translate ValueError into a 422. State
lives in the spectrum cache directory, never in the process.
"""

from contextlib import contextmanager

import numpy as np
from fastapi import FastAPI, HTTPException

from . import __version__
from .cache import SpectrumCache, compute_spectrum, spectrum_from_dict, spectrum_to_dict
from .coeffs import OperatorParams, alpha_coefficients, kappa_taylor, structural_constants
from .experiments import (
    ConfigError,
    ExperimentConfig,
    build_domain,
    certificates_for_spectrum,
    demo_composition_gap,
    formula_certificates,
    run_experiment,
)
from .operator import bump, eval_Lm_fourier, eval_Lm_kernel, gaussian
from .schemas import (
    BoundsRequest,
    BoundsResponse,
    CertificateModel,
    CoeffsRequest,
    CoeffsResponse,
    DemoCompositionRequest,
    DemoCompositionResponse,
    DemoCompositionRow,
    EvalOpRequest,
    EvalOpResponse,
    EvalOpRow,
    HealthResponse,
    ReportRequest,
    SpectrumRequest,
    SpectrumResponse,
)

app = FastAPI(title="logspec", version=__version__)


@contextmanager
def _client_errors():
    """Turn domain validation failures into 422 responses."""
    try:
        yield
    except ConfigError as exc:
        raise HTTPException(
            status_code=422,
            detail={"message": str(exc), "keys": list(exc.keys)},
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


def _params(model):
    return OperatorParams(N=model.N, m=model.m)


def _domain_spec(model):
    data = {"kind": model.kind}
    if model.kind in ("interval", "box"):
        if model.a is None or model.b is None:
            raise ValueError("interval and box domains need endpoints a and b")
        data["a"] = model.a
        data["b"] = model.b
    else:
        if model.center is None or model.radius is None:
            raise ValueError("disk domains need a center and a radius")
        data["center"] = tuple(model.center)
        data["radius"] = model.radius
    return data


def _profile(req, n):
    if req.profile == "gaussian":
        return gaussian(n, sigma=req.sigma, center=req.center)
    return bump(n, radius=req.radius, center=req.center)


@app.get("/healthz", response_model=HealthResponse)
def healthz():
    return HealthResponse(status="ok", version=__version__)


@app.post("/coeffs", response_model=CoeffsResponse)
def coeffs(req: CoeffsRequest):
    with _client_errors():
        params = _params(req.operator)
        alphas = alpha_coefficients(params)
        order = max(req.taylor_order, params.m)
        kappa1 = kappa_taylor(1, order, params)
        kappa2 = kappa_taylor(2, order, params)
        consts = structural_constants(params)
        structural = {
            "omegaN": consts.omegaN,
            "TN": consts.TN,
            "Cm": consts.Cm,
            "am": consts.am,
            "bm": consts.bm,
            "cm": consts.cm,
            "A": {str(j): v for j, v in sorted(consts.A.items())},
        }
    return CoeffsResponse(
        alphas=list(alphas.values),
        kappa1_taylor=[kappa1.derivative(j) for j in range(order + 1)],
        kappa2_taylor=[kappa2.derivative(j) for j in range(order + 1)],
        structural=structural,
    )


@app.post("/spectrum", response_model=SpectrumResponse)
def spectrum(req: SpectrumRequest):
    with _client_errors():
        params = _params(req.operator)
        domain = build_domain(_domain_spec(req.domain), req.h)
        cache = SpectrumCache() if req.use_cache else None
        spec, hit = compute_spectrum(
            domain,
            params,
            k=req.k,
            method=req.method,
            tol=req.tol,
            padding=req.padding,
            cache=cache,
        )
    payload = spectrum_to_dict(spec)
    return SpectrumResponse(cache_hit=hit, **payload)


@app.post("/eval-op", response_model=EvalOpResponse)
def eval_op(req: EvalOpRequest):
    with _client_errors():
        params = _params(req.operator)
        zeta = _profile(req, params.N)
        rows = []
        for point in req.points:
            if len(point) != params.N:
                raise ValueError(
                    "point %r has %d coordinates, expected %d"
                    % (point, len(point), params.N)
                )
            x = np.asarray(point, dtype=float)
            kernel_value = fourier_value = diff = None
            if req.route in ("kernel", "both"):
                kernel_value = eval_Lm_kernel(zeta, x, params)
            if req.route in ("fourier", "both"):
                fourier_value = eval_Lm_fourier(zeta, x, params)
            if kernel_value is not None and fourier_value is not None:
                diff = abs(kernel_value - fourier_value)
            rows.append(
                EvalOpRow(
                    x=list(point),
                    kernel_value=kernel_value,
                    fourier_value=fourier_value,
                    abs_diff=diff,
                )
            )
    return EvalOpResponse(rows=rows)


@app.post("/bounds", response_model=BoundsResponse)
def bounds(req: BoundsRequest):
    with _client_errors():
        if req.formulas_only:
            if req.operator is None:
                raise ValueError("formulas-only mode needs operator parameters")
            params = _params(req.operator)
            certs = formula_certificates(
                params, req.suites, volume=req.volume, r0=req.r0
            )
        else:
            if req.spectrum is None:
                raise ValueError(
                    "bounds needs a spectrum payload unless formulas_only is set"
                )
            try:
                spec = spectrum_from_dict(req.spectrum)
            except (KeyError, TypeError) as exc:
                raise ValueError("spectrum payload invalid: %s" % exc)
            certs = certificates_for_spectrum(
                spec, spec.params, req.suites, lambda_m1=req.lambda_m1
            )
    models = [CertificateModel(**c) for c in certs]
    return BoundsResponse(
        certificates=models,
        all_pass=all(c.verdict != "fail" for c in models),
    )


@app.post("/report")
def report(req: ReportRequest):
    with _client_errors():
        config = ExperimentConfig.from_dict(req.config)
        result = run_experiment(config)
    return result.to_dict()


@app.post("/demo-composition", response_model=DemoCompositionResponse)
def demo_composition(req: DemoCompositionRequest):
    with _client_errors():
        spec_data = _domain_spec(req.domain)
        n = 1 if req.domain.kind == "interval" else 2
        domain = build_domain(spec_data, req.h)
        cache = SpectrumCache() if req.use_cache else None
        spec1, _ = compute_spectrum(
            domain, OperatorParams(N=n, m=1), k=req.k, cache=cache
        )
        spec2, _ = compute_spectrum(
            domain, OperatorParams(N=n, m=2), k=req.k, cache=cache
        )
        rows = demo_composition_gap(spec1, spec2)
    return DemoCompositionResponse(rows=[DemoCompositionRow(**r) for r in rows])
