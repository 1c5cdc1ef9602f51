"""Experiment orchestration.

A config file names the operator, the domain, a ladder of lattice spacings,
and the certificate suites to run. run_experiment walks the ladder (hitting
the spectrum cache where it can), extrapolates across a halving triple,
batches the certificates, and writes a JSON report next to two CSV tables.

Config parsing is strict: an unrecognized key anywhere in the file is a hard
error that names the offending dotted path, because a silently ignored typo
("methods" vs "method") would quietly change what an experiment means.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    alternating_sum_certificates,
    ball_certificate,
    berezin_certificate,
    counting_certificate,
    eig_lower_bound,
    first_eig_volume_bounds,
    root_lower_bound_certificate,
    sandwich_certificates,
    solve_tau_constants,
    weyl_diagnostics,
)
from .cache import SpectrumCache, compute_spectrum
from .coeffs import OperatorParams
from .galerkin import LatticeDomain, refine_extrapolate

SCHEMA_VERSION = 1

KNOWN_SUITES = (
    "berezin",
    "counting",
    "sandwich",
    "eig-lower",
    "alternating",
    "first-eig",
    "root-lower",
)

KNOWN_METHODS = ("dense", "krylov", "torus")

GRID_POINTS = 50


def thread_cap():
    """Worker count for certificate batches, capped by LOGSPEC_THREADS."""
    raw = os.environ.get("LOGSPEC_THREADS")
    if raw is not None:
        n = int(raw)
        if n < 1:
            raise ValueError("LOGSPEC_THREADS must be a positive integer")
        return n
    return min(8, os.cpu_count() or 1)


class ConfigError(ValueError):
    """Config rejected; .keys lists the offending dotted paths."""

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


_TOP_KEYS = {
    "operator",
    "domain",
    "ladder",
    "k",
    "methods",
    "bound_suites",
    "output_dir",
    "cache_dir",
    "padding",
    "tol",
}

_OPERATOR_KEYS = {"N", "m"}

_DOMAIN_KEYS = {
    "interval": {"kind", "a", "b"},
    "box": {"kind", "a", "b"},
    "disk": {"kind", "center", "radius"},
}


def _collect_unknown(data, allowed, prefix):
    return sorted(
        "%s%s" % (prefix, key) for key in data if key not in allowed
    )


@dataclass(frozen=True)
class ExperimentConfig:
    params: OperatorParams
    domain_spec: dict
    ladder: tuple
    k: int
    methods: tuple = ("dense",)
    bound_suites: tuple = ()
    output_dir: str = "out"
    cache_dir: str = None
    padding: int = 4
    tol: float = 1e-9

    def __post_init__(self):
        if len(self.ladder) == 0:
            raise ConfigError("resolution ladder is empty", keys=("ladder",))
        if any(b >= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ConfigError(
                "resolution ladder must be strictly decreasing: %r" % (self.ladder,),
                keys=("ladder",),
            )
        if self.k < 1:
            raise ConfigError("k must be at least 1", keys=("k",))
        if len(self.methods) == 0:
            raise ConfigError("at least one method required", keys=("methods",))
        bad = [m for m in self.methods if m not in KNOWN_METHODS]
        if bad:
            raise ConfigError(
                "unknown methods %r (choose from %s)" % (bad, ", ".join(KNOWN_METHODS)),
                keys=tuple("methods.%s" % m for m in bad),
            )
        bad = [s for s in self.bound_suites if s not in KNOWN_SUITES]
        if bad:
            raise ConfigError(
                "unknown bound suites %r (choose from %s)"
                % (bad, ", ".join(KNOWN_SUITES)),
                keys=tuple("bound_suites.%s" % s for s in bad),
            )

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        offending = _collect_unknown(data, _TOP_KEYS, "")
        missing = [k for k in ("operator", "domain", "ladder", "k") if k not in data]
        offending += ["%s (missing)" % k for k in missing]

        operator = data.get("operator", {})
        if isinstance(operator, dict):
            offending += _collect_unknown(operator, _OPERATOR_KEYS, "operator.")
            offending += [
                "operator.%s (missing)" % k for k in _OPERATOR_KEYS if k not in operator
            ]
        else:
            offending.append("operator (must be an object)")

        domain = data.get("domain", {})
        if isinstance(domain, dict):
            kind = domain.get("kind")
            if kind in _DOMAIN_KEYS:
                allowed = _DOMAIN_KEYS[kind]
                offending += _collect_unknown(domain, allowed, "domain.")
                offending += [
                    "domain.%s (missing)" % k
                    for k in sorted(allowed - {"kind"})
                    if k not in domain
                ]
            else:
                offending.append(
                    "domain.kind (must be one of %s)" % ", ".join(sorted(_DOMAIN_KEYS))
                )
        else:
            offending.append("domain (must be an object)")

        if offending:
            raise ConfigError(
                "config schema error; offending keys: %s" % ", ".join(sorted(offending)),
                keys=tuple(sorted(offending)),
            )

        params = OperatorParams(N=int(operator["N"]), m=int(operator["m"]))
        spec = {"kind": domain["kind"]}
        if domain["kind"] in ("interval", "box"):
            spec["a"] = float(domain["a"])
            spec["b"] = float(domain["b"])
        else:
            spec["center"] = tuple(float(c) for c in domain["center"])
            spec["radius"] = float(domain["radius"])
        return cls(
            params=params,
            domain_spec=spec,
            ladder=tuple(float(h) for h in data["ladder"]),
            k=int(data["k"]),
            methods=tuple(data.get("methods", ["dense"])),
            bound_suites=tuple(data.get("bound_suites", [])),
            output_dir=str(data.get("output_dir", "out")),
            cache_dir=data.get("cache_dir"),
            padding=int(data.get("padding", 4)),
            tol=float(data.get("tol", 1e-9)),
        )

    @classmethod
    def from_file(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config file is not valid JSON: %s" % exc)
        return cls.from_dict(data)

    def echo(self):
        """Normalized config as plain JSON-ready data, for the report."""
        spec = dict(self.domain_spec)
        if "center" in spec:
            spec["center"] = list(spec["center"])
        return {
            "operator": {"N": self.params.N, "m": self.params.m},
            "domain": spec,
            "ladder": list(self.ladder),
            "k": self.k,
            "methods": list(self.methods),
            "bound_suites": list(self.bound_suites),
            "output_dir": self.output_dir,
            "cache_dir": self.cache_dir,
            "padding": self.padding,
            "tol": self.tol,
        }


def build_domain(spec, h):
    kind = spec["kind"]
    if kind == "interval":
        return LatticeDomain.interval(spec["a"], spec["b"], h)
    if kind == "box":
        return LatticeDomain.box(spec["a"], spec["b"], h)
    if kind == "disk":
        return LatticeDomain.disk(spec["center"], spec["radius"], h)
    raise ConfigError("unknown domain kind %r" % kind)


@dataclass(frozen=True)
class Report:
    """Everything one experiment produced.

    cache_hits records which ladder levels were served from the spectrum
    store; it is deliberately left out of to_dict so that reruns of the same
    config serialize identically apart from the timestamp.
    """

    config: dict
    spectra: tuple
    extrapolation: dict
    certificates: tuple
    weyl: tuple
    tool_version: str
    created: str
    all_pass: bool
    output_files: tuple = ()
    cache_hits: tuple = ()

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "created": self.created,
            "config": self.config,
            "spectra": list(self.spectra),
            "extrapolation": self.extrapolation,
            "certificates": [dict(c) for c in self.certificates],
            "weyl": [dict(w) for w in self.weyl],
            "all_pass": self.all_pass,
            "output_files": list(self.output_files),
        }


def certificate_grid(spec, points=GRID_POINTS):
    """Deterministic lambda grid over the resolved part of a spectrum.

    Every grid point sits strictly below the eigenvalue that would push the
    counting function past a quarter of the lattice cells, so counting and
    Riesz data at these points are trustworthy under the resolution rule.
    """
    ev = spec.eigenvalues
    cap = max(1, int(0.25 * len(spec.domain.cells)))
    idx = min(cap, len(ev)) - 1
    top = ev[idx]
    if top <= 0.0:
        return ()
    lo = top * 0.02
    return tuple(float(v) for v in np.linspace(lo, top * 0.999, points))


def _certificate_payload(cert):
    return {
        "name": cert.name,
        "inputs": dict(cert.inputs),
        "bound_value": cert.bound_value,
        "observed_value": cert.observed_value,
        "verdict": cert.verdict,
    }


def _berezin_suite(spec, params, volume, grid):
    return [berezin_certificate(spec, params, volume, lam) for lam in grid]


def _counting_suite(spec, params, volume, grid):
    return [counting_certificate(spec, params, volume, lam) for lam in grid]


def _sandwich_suite(spec, grid):
    if len(grid) < 2:
        return []
    step = (grid[-1] - grid[0]) / 20.0
    certs = []
    for lam in grid[:: max(1, len(grid) // 5)]:
        certs.extend(sandwich_certificates(spec, lam, step))
    return certs


def _eig_lower_suite(spec, params, volume, lambda_m1):
    if params.m < 2:
        return []
    certs = []
    for k, observed in enumerate(spec.eigenvalues, start=1):
        certs.append(
            eig_lower_bound(
                k,
                params,
                volume,
                lambda_m1=lambda_m1 if params.m % 2 == 1 else None,
                observed=observed,
            )
        )
    return certs


def _alternating_suite(params):
    base = max(2.0 * (params.m - 1) / params.N, 1.0)
    certs = []
    for factor in (1.0, 2.0, 8.0):
        certs.extend(alternating_sum_certificates(params, base * factor))
    return certs


def _first_eig_suite(params, volume, observed):
    if params.m < 2:
        return []
    return list(first_eig_volume_bounds(volume, params, observed=observed))


def _root_lower_suite(params):
    if params.m < 2:
        return []
    constants = solve_tau_constants(params.m)
    return [
        root_lower_bound_certificate(tau, params.m, params.N, constants=constants)
        for tau in (0.5, 5.0, 50.0)
    ]


def certificates_for_spectrum(spec, params, suites, lambda_m1=None):
    """Evaluate the requested suites against one spectrum, concurrently.

    Suites are dispatched to a thread pool but collected in request order, so
    the resulting list is deterministic. lambda_m1 defaults to the lowest
    computed eigenvalue; pass the extrapolated value when one is available,
    since the odd-order lower bound keys its case off it.
    """
    volume = spec.domain.volume
    grid = certificate_grid(spec)
    if lambda_m1 is None:
        lambda_m1 = spec.eigenvalues[0]
    jobs = []
    for suite in suites:
        if suite == "berezin":
            jobs.append((suite, _berezin_suite, (spec, params, volume, grid)))
        elif suite == "counting":
            jobs.append((suite, _counting_suite, (spec, params, volume, grid)))
        elif suite == "sandwich":
            jobs.append((suite, _sandwich_suite, (spec, grid)))
        elif suite == "eig-lower":
            jobs.append((suite, _eig_lower_suite, (spec, params, volume, lambda_m1)))
        elif suite == "alternating":
            jobs.append((suite, _alternating_suite, (params,)))
        elif suite == "first-eig":
            jobs.append((suite, _first_eig_suite, (params, volume, lambda_m1)))
        elif suite == "root-lower":
            jobs.append((suite, _root_lower_suite, (params,)))
        else:
            raise ValueError(
                "unknown suite %r (choose from %s)" % (suite, ", ".join(KNOWN_SUITES))
            )
    if not jobs:
        return []
    results = []
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        futures = [(suite, pool.submit(fn, *args)) for suite, fn, args in jobs]
        for suite, future in futures:
            for cert in future.result():
                payload = _certificate_payload(cert)
                payload["suite"] = suite
                results.append(payload)
    return results


FORMULA_SUITES = ("alternating", "root-lower", "first-eig", "ball")


def formula_certificates(params, suites, volume=None, r0=None):
    """Closed-form certificates that need no computed spectrum.

    first-eig runs against a unit volume unless one is given; ball needs an
    explicit radius r0 and is skipped otherwise. Asking for a suite that
    requires eigenvalues is an error rather than a silent omission.
    """
    results = []
    for suite in suites:
        if suite == "alternating":
            certs = _alternating_suite(params)
        elif suite == "root-lower":
            certs = _root_lower_suite(params)
        elif suite == "first-eig":
            certs = _first_eig_suite(params, volume if volume else 1.0, None)
        elif suite == "ball":
            if r0 is None:
                continue
            certs = [ball_certificate(r0, params)]
        elif suite in KNOWN_SUITES:
            raise ValueError("suite %r needs a spectrum" % suite)
        else:
            raise ValueError(
                "unknown suite %r (choose from %s)"
                % (suite, ", ".join(FORMULA_SUITES))
            )
        for cert in certs:
            payload = _certificate_payload(cert)
            payload["suite"] = suite
            results.append(payload)
    return results


def _spectrum_summary(spec, h, method):
    ev = spec.eigenvalues
    return {
        "method": method,
        "h": h,
        "cells": len(spec.domain.cells),
        "count": len(ev),
        "lambda_min": ev[0],
        "lambda_max": ev[-1],
        "residual_max": max(spec.residual_norms) if spec.residual_norms else 0.0,
    }


def _is_halving_triple(ladder):
    if len(ladder) != 3:
        return False
    return math.isclose(ladder[0] / ladder[1], 2.0, rel_tol=1e-9) and math.isclose(
        ladder[1] / ladder[2], 2.0, rel_tol=1e-9
    )


def _extrapolation_payload(extra, limit=20):
    return {
        "values": list(extra.values[:limit]),
        "error_bars": list(extra.error_bars[:limit]),
        "rates": [
            None if math.isnan(r) else r for r in extra.rates[:limit]
        ],
        "flagged": list(extra.flagged[:limit]),
        "count": len(extra.values),
    }


def run_experiment(config):
    """Execute a config end to end and write its artifacts.

    The ladder runs sequentially from coarse to fine; certificates for the
    finest spectrum run as a concurrent batch. Output files land in the
    config's output directory: report.json, weyl_ratios.csv, spectrum.csv.
    """
    cache = SpectrumCache(config.cache_dir)
    summaries = []
    hits = []
    primary_levels = []
    for method in config.methods:
        levels = []
        for h in config.ladder:
            domain = build_domain(config.domain_spec, h)
            spec, hit = compute_spectrum(
                domain,
                config.params,
                k=config.k,
                method=method,
                tol=config.tol,
                padding=config.padding,
                cache=cache,
            )
            levels.append(spec)
            summaries.append(_spectrum_summary(spec, h, method))
            hits.append(hit)
        if method == config.methods[0]:
            primary_levels = levels

    finest = primary_levels[-1]
    extrapolation = None
    lambda_m1 = finest.eigenvalues[0]
    if _is_halving_triple(config.ladder):
        extra = refine_extrapolate(primary_levels)
        extrapolation = _extrapolation_payload(extra)
        if not extra.flagged[0]:
            lambda_m1 = extra.values[0]

    certificates = certificates_for_spectrum(
        finest, config.params, config.bound_suites, lambda_m1
    )
    failures = [c for c in certificates if c["verdict"] == "fail"]

    grid = certificate_grid(finest)
    weyl_rows = []
    if grid:
        for row in weyl_diagnostics(finest, config.params, finest.domain.volume, grid):
            weyl_rows.append(
                {
                    "lambda": row.lam,
                    "ratio1": row.ratio1,
                    "ratio2": row.ratio2,
                    "resolved": row.resolved,
                }
            )

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = Report(
        config=config.echo(),
        spectra=tuple(summaries),
        extrapolation=extrapolation,
        certificates=tuple(certificates),
        weyl=tuple(weyl_rows),
        tool_version=__version__,
        created=datetime.now(timezone.utc).isoformat(),
        all_pass=not failures,
        output_files=("report.json", "weyl_ratios.csv", "spectrum.csv"),
        cache_hits=tuple(hits),
    )
    (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
    _write_weyl_csv(out_dir / "weyl_ratios.csv", weyl_rows)
    _write_spectrum_csv(out_dir / "spectrum.csv", finest)
    return report


def _write_weyl_csv(path, rows):
    lines = ["lambda,ratio1,ratio2,resolved"]
    for row in rows:
        lines.append(
            "%.17g,%.17g,%.17g,%s"
            % (
                row["lambda"],
                row["ratio1"],
                row["ratio2"],
                "true" if row["resolved"] else "false",
            )
        )
    path.write_text("\n".join(lines) + "\n")


def _write_spectrum_csv(path, spec):
    lines = ["k,lambda_k,residual"]
    for k, (lam, res) in enumerate(
        zip(spec.eigenvalues, spec.residual_norms), start=1
    ):
        lines.append("%d,%.17g,%.17g" % (k, lam, res))
    path.write_text("\n".join(lines) + "\n")


def demo_composition_gap(spec_m1, spec_m2):
    """Table contrasting squared first-order eigenvalues with second-order ones.

    Composing the operator with itself on the whole space squares the symbol,
    but Dirichlet truncation does not commute with composition, so the columns
    disagree. The rows are informational; nothing is asserted about the gap.
    """
    if spec_m1.params.m != 1 or spec_m2.params.m != 2:
        raise ValueError("expected an order-1 spectrum and an order-2 spectrum")
    d1, d2 = spec_m1.domain, spec_m2.domain
    if d1.N != d2.N or d1.h != d2.h or d1.cells != d2.cells:
        raise ValueError(
            "spectra were computed at different resolutions: %s vs %s"
            % (d1.descriptor, d2.descriptor)
        )
    rows = []
    count = min(len(spec_m1.eigenvalues), len(spec_m2.eigenvalues))
    for k in range(count):
        lam1 = spec_m1.eigenvalues[k]
        lam2 = spec_m2.eigenvalues[k]
        rows.append(
            {
                "k": k + 1,
                "lambda1": lam1,
                "lambda1_squared": lam1 * lam1,
                "lambda2": lam2,
                "difference": lam1 * lam1 - lam2,
            }
        )
    return tuple(rows)
