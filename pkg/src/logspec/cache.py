"""Content-addressed spectrum store.

Spectra are expensive and deterministic, so they are cached under a sha256
of every numerical input (dimension, order, lattice, solver, tolerances,
tool version). A corrupt or unreadable entry is never fatal: the loader
warns and the caller recomputes over it.
"""

import hashlib
import json
import os
import warnings
from pathlib import Path

from . import __version__
from .coeffs import OperatorParams
from .galerkin import LatticeDomain, Spectrum, eigensolve, torus_spectrum


def default_cache_dir():
    return Path(os.environ.get("LOGSPEC_CACHE") or "cache")


def spectrum_to_dict(spec):
    cells = [list(c) if isinstance(c, tuple) else c for c in spec.domain.cells]
    return {
        "schema_version": 1,
        "params": {"N": spec.params.N, "m": spec.params.m},
        "domain": {
            "N": spec.domain.N,
            "h": spec.domain.h,
            "cells": cells,
            "descriptor": spec.domain.descriptor,
        },
        "eigenvalues": list(spec.eigenvalues),
        "residual_norms": list(spec.residual_norms),
        "method": spec.method,
        "metadata": dict(spec.metadata),
    }


def spectrum_from_dict(payload):
    domain_data = payload["domain"]
    n = int(domain_data["N"])
    cells = tuple(
        tuple(c) if isinstance(c, list) else int(c) for c in domain_data["cells"]
    )
    domain = LatticeDomain(
        N=n,
        h=float(domain_data["h"]),
        cells=cells,
        descriptor=str(domain_data["descriptor"]),
    )
    params = OperatorParams(N=int(payload["params"]["N"]), m=int(payload["params"]["m"]))
    return Spectrum(
        params=params,
        domain=domain,
        eigenvalues=tuple(float(v) for v in payload["eigenvalues"]),
        residual_norms=tuple(float(v) for v in payload["residual_norms"]),
        method=str(payload["method"]),
        metadata=dict(payload.get("metadata", {})),
    )


class SpectrumCache:
    """File-per-entry store keyed by a digest of the full input record."""

    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_cache_dir()

    def key(self, payload):
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def path_for(self, key):
        return self.root / ("%s.json" % key)

    def load(self, key):
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            payload = json.loads(path.read_text())
            return spectrum_from_dict(payload)
        except (ValueError, KeyError, TypeError) as exc:
            warnings.warn(
                "cache entry %s is corrupt (%s); recomputing" % (path.name, exc)
            )
            return None

    def store(self, key, spec):
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.path_for(key)
        path.write_text(json.dumps(spectrum_to_dict(spec), sort_keys=True))
        return path


def compute_spectrum(
    domain, params, k, method="dense", tol=1e-9, padding=4, cache=None
):
    """Cached front end to the eigensolvers.

    Returns (spectrum, cache_hit). The cache key covers the tool version and
    every input that shapes the numbers, including the lattice cells
    themselves; pass cache=None to bypass storage entirely.
    """
    if method not in ("dense", "krylov", "torus"):
        raise ValueError("method must be dense, krylov, or torus")
    if cache is not None:
        cells = [list(c) if isinstance(c, tuple) else c for c in domain.cells]
        payload = {
            "tool": __version__,
            "N": params.N,
            "m": params.m,
            "h": domain.h,
            "cells": cells,
            "descriptor": domain.descriptor,
            "k": k,
            "method": method,
            "tol": tol,
        }
        if method == "torus":
            payload["padding"] = padding
        key = cache.key(payload)
        hit = cache.load(key)
        if hit is not None:
            return hit, True
    if method == "torus":
        spec = torus_spectrum(domain, params, padding=padding, k=k, mode="dense", tol=tol)
    else:
        spec = eigensolve(domain, params, k=k, mode=method, tol=tol)
    if cache is not None:
        cache.store(key, spec)
    return spec, False
