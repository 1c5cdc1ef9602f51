"""Request and response models for the HTTP service.

The shapes here mirror the library's own dataclasses closely enough that the
CLI can run either in process or against a remote server with identical
payloads.
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field


class OperatorModel(BaseModel):
    N: int = Field(..., ge=1, le=2, description="ambient dimension")
    m: int = Field(..., ge=1, description="operator order")


class DomainModel(BaseModel):
    """Geometry for a lattice domain. Interval and box use (a, b); disk uses
    center and radius."""

    kind: Literal["interval", "box", "disk"]
    a: Optional[float] = None
    b: Optional[float] = None
    center: Optional[List[float]] = None
    radius: Optional[float] = None


class HealthResponse(BaseModel):
    status: str
    version: str


class CoeffsRequest(BaseModel):
    operator: OperatorModel
    taylor_order: int = Field(6, ge=0, le=12)


class CoeffsResponse(BaseModel):
    alphas: List[float]
    kappa1_taylor: List[float]
    kappa2_taylor: List[float]
    structural: dict


class SpectrumRequest(BaseModel):
    operator: OperatorModel
    domain: DomainModel
    h: float = Field(..., gt=0)
    k: int = Field(..., ge=1)
    method: Literal["dense", "krylov", "torus"] = "dense"
    padding: int = Field(4, ge=1)
    tol: float = Field(1e-9, gt=0)
    use_cache: bool = True


class SpectrumResponse(BaseModel):
    schema_version: int
    params: dict
    domain: dict
    eigenvalues: List[float]
    residual_norms: List[float]
    method: str
    metadata: dict
    cache_hit: bool


class EvalOpRequest(BaseModel):
    operator: OperatorModel
    profile: Literal["gaussian", "bump"] = "gaussian"
    sigma: float = Field(1.0, gt=0)
    radius: float = Field(1.0, gt=0)
    center: Optional[List[float]] = None
    points: List[List[float]] = Field(..., min_length=1)
    route: Literal["kernel", "fourier", "both"] = "both"


class EvalOpRow(BaseModel):
    x: List[float]
    kernel_value: Optional[float] = None
    fourier_value: Optional[float] = None
    abs_diff: Optional[float] = None


class EvalOpResponse(BaseModel):
    rows: List[EvalOpRow]


class CertificateModel(BaseModel):
    name: str
    inputs: dict
    bound_value: Optional[float] = None
    observed_value: Optional[float] = None
    verdict: str
    suite: Optional[str] = None


class BoundsRequest(BaseModel):
    """Certificate batch over a cached spectrum, or closed forms alone.

    With formulas_only the spectrum may be omitted and only the suites that
    need no eigenvalues run (alternating, root-lower, first-eig, ball).
    """

    suites: List[str] = Field(..., min_length=1)
    spectrum: Optional[dict] = None
    operator: Optional[OperatorModel] = None
    formulas_only: bool = False
    lambda_m1: Optional[float] = None
    volume: Optional[float] = None
    r0: Optional[float] = None


class BoundsResponse(BaseModel):
    certificates: List[CertificateModel]
    all_pass: bool


class ReportRequest(BaseModel):
    config: dict


class DemoCompositionRequest(BaseModel):
    domain: DomainModel
    h: float = Field(..., gt=0)
    k: int = Field(..., ge=1)
    use_cache: bool = True


class DemoCompositionRow(BaseModel):
    k: int
    lambda1: float
    lambda1_squared: float
    lambda2: float
    difference: float


class DemoCompositionResponse(BaseModel):
    rows: List[DemoCompositionRow]
