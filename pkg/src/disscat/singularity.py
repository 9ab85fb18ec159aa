"""Detection and classification of spectral singularities.

A real energy lam is a spectral singularity of H = H0 + V - i C*C exactly
when A(lam) = I - i C R_V(lam - i0) C* fails to be invertible; there the
scattering matrix S(lam) loses its inverse. This module classifies single
points, scans the working interior with local refinement of sigma_min
minima, and probes endpoint regularity by fitting the growth of
C R(mu - i0) C* along approach sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import boundary
from .errors import DomainError, NumericalFailure, SpectralSingularityError
from .models import interior_grid

_CSV_HEADER = "lambda,sigma_min_A,cond_A,status"


@dataclass
class PointVerdict:
    lam: float
    status: str  # "regular" or "singular"
    sigma_min_a: float
    cond_a: float
    threshold: float

    def to_json_dict(self):
        return {
            "lam": self.lam,
            "status": self.status,
            "sigma_min_A": self.sigma_min_a,
            "cond_A": self.cond_a,
            "threshold": self.threshold,
        }


@dataclass
class SingularityReport:
    grid: np.ndarray
    curve: list
    singular_points: list
    endpoint_verdicts: dict
    finite_set: bool
    model_name: str = "custom"

    def to_json_dict(self):
        return {
            "model": self.model_name,
            "grid": [float(g) for g in self.grid],
            "curve": [v.to_json_dict() for v in self.curve],
            "singular_points": self.singular_points,
            "endpoint_verdicts": self.endpoint_verdicts,
            "finite_set": self.finite_set,
        }

    def to_csv(self):
        """Grid rows merged with the refined singular points, sorted by lam.

        A refined point replaces any grid row within the dedup distance, so
        each detected singularity shows up as exactly one singular row.
        """
        rows = [(v.lam, v.sigma_min_a, v.cond_a, v.status) for v in self.curve
                if not any(abs(v.lam - p["lam_refined"]) < 1e-7
                           for p in self.singular_points)]
        for p in self.singular_points:
            rows.append((p["lam_refined"], p["sigma_min"], p["cond"],
                         "singular"))
        rows.sort(key=lambda r: r[0])
        lines = [_CSV_HEADER]
        for lam, sig, cond, status in rows:
            lines.append("%.17g,%.17g,%.17g,%s" % (lam, sig, cond, status))
        return "\n".join(lines) + "\n"


def a_matrix(model, lam=None, z=None, rel_tol=1e-12):
    """A = I - i C R_V C* at lam - i0, or at a complex point z."""
    if (lam is None) == (z is None):
        raise DomainError("pass exactly one of lam (boundary) or z (off-axis)")
    if lam is not None:
        b = boundary.rv_block(model, "C", "C", mu=lam, side="minus",
                              rel_tol=rel_tol)
    else:
        b = boundary.rv_block(model, "C", "C", z=z, rel_tol=rel_tol)
    return np.eye(model.r) - 1j * b


def _verdict_from_bundle(b):
    bm = b.rv("C", "C", "minus")
    a = np.eye(b.r) - 1j * bm
    svals = np.linalg.svd(a, compute_uv=False)
    smin = float(svals[-1])
    smax = float(svals[0])
    thr = boundary.SINGULARITY_RTOL * (1.0 + float(np.linalg.norm(bm, 2)))
    cond = smax / smin if smin > 0 else float("inf")
    status = "singular" if smin < thr else "regular"
    return PointVerdict(lam=b.lam, status=status, sigma_min_a=smin,
                        cond_a=cond, threshold=thr)


def classify_point(model, lam, rel_tol=1e-12):
    """Regular/singular verdict via sigma_min of A(lam) against the scaled
    threshold; the same dichotomy that makes crc_full_minus succeed or fail.
    """
    return _verdict_from_bundle(boundary.boundary_bundle(model, lam, rel_tol))


def _sigma_min_at(model, lam, rel_tol):
    b = boundary.boundary_bundle(model, lam, rel_tol)
    a = b.a_matrix("minus")
    return float(np.linalg.svd(a, compute_uv=False)[-1])


def _refine_minimum(model, bracket, rel_tol):
    res = minimize_scalar(
        lambda t: _sigma_min_at(model, t, rel_tol),
        bracket=bracket, method="golden", options={"xtol": 1e-11},
    )
    return float(res.x), float(res.fun)


def scan(model, n_grid=256, rel_tol=1e-12, refine_endpoints=True):
    """Scan the working interior for spectral singularities.

    Classifies every point of a uniform n_grid interior grid, then refines
    each bracketed local minimum of sigma_min(A) by golden-section search to
    an energy accuracy around 1e-8; refined minima below the local threshold
    are reported as singular points. finite_set is a sanity flag: the
    detected set should be small compared to the grid.
    """
    if n_grid < 16:
        raise DomainError("scan needs n_grid >= 16")
    grid = interior_grid(model.interval, n_grid)
    curve = [classify_point(model, lam, rel_tol) for lam in grid]
    sig = np.array([v.sigma_min_a for v in curve])

    candidates = []
    for i in range(1, n_grid - 1):
        if sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1]:
            if sig[i] < sig[i - 1] or sig[i] < sig[i + 1]:
                candidates.append(i)

    singular = []
    for i in candidates:
        lam_star, _ = _refine_minimum(
            model, (grid[i - 1], grid[i], grid[i + 1]), rel_tol)
        verdict = classify_point(model, lam_star, rel_tol)
        if verdict.status == "singular":
            if not any(abs(lam_star - p["lam_refined"]) < 1e-7 for p in singular):
                singular.append({
                    "lam_refined": float(lam_star),
                    "sigma_min": verdict.sigma_min_a,
                    "cond": verdict.cond_a,
                })
    # Grid-edge points already below threshold count as detections too,
    # even though they cannot be bracketed for refinement.
    for i in (0, n_grid - 1):
        if curve[i].status == "singular":
            lam_star = float(grid[i])
            if not any(abs(lam_star - p["lam_refined"]) < 1e-7 for p in singular):
                singular.append({
                    "lam_refined": lam_star,
                    "sigma_min": curve[i].sigma_min_a,
                    "cond": curve[i].cond_a,
                })
    singular.sort(key=lambda p: p["lam_refined"])

    endpoints = {}
    for end in ("lo", "hi"):
        if not refine_endpoints:
            endpoints[end] = "skipped"
            continue
        try:
            endpoints[end] = endpoint_regularity(model, end, rel_tol).verdict
        except (SpectralSingularityError, NumericalFailure):
            endpoints[end] = "skipped"

    return SingularityReport(
        grid=grid, curve=curve, singular_points=singular,
        endpoint_verdicts=endpoints,
        finite_set=len(singular) < n_grid / 4,
        model_name=model.name,
    )


@dataclass
class EndpointVerdict:
    end: str
    verdict: str  # "bounded" or "unbounded"
    alpha: float
    sup_norm: float
    distances: list = field(default_factory=list)
    norms: list = field(default_factory=list)


def endpoint_regularity(model, end, rel_tol=1e-12, n_points=10):
    """Boundedness of C R(mu - i0) C* along an approach to an endpoint.

    Samples a geometric sequence of distances from the endpoint (inside the
    working interior), fits ||C R(mu-i0) C*|| against distance^(-alpha), and
    declares the endpoint bounded iff alpha <= 0.05. A singular sample
    aborts with SpectralSingularityError.
    """
    if end not in ("lo", "hi"):
        raise DomainError("end must be 'lo' or 'hi'")
    iv = model.interval
    d_far = iv.width / 4.0
    d_near = iv.margin * 1.02
    dists = np.geomspace(d_far, d_near, n_points)
    mus = iv.lo + dists if end == "lo" else iv.hi - dists

    norms = []
    for mu in mus:
        b = boundary.boundary_bundle(model, mu, rel_tol)
        verdict = _verdict_from_bundle(b)
        if verdict.status == "singular":
            raise SpectralSingularityError(
                float(mu), verdict.sigma_min_a, verdict.threshold,
                context=f"endpoint approach to {end}",
            )
        crc = b.crc_full("minus")
        norms.append(float(np.linalg.norm(crc, 2)))
    norms = np.array(norms)
    sup = float(norms.max(initial=0.0))

    if sup < 1e-14:
        alpha = 0.0
    else:
        level = np.maximum(norms, 1e-300)
        slope = np.polyfit(np.log(dists), np.log(level), 1)[0]
        alpha = float(-slope)
    verdict = "bounded" if alpha <= 0.05 else "unbounded"
    return EndpointVerdict(end=end, verdict=verdict, alpha=alpha,
                           sup_norm=sup, distances=dists.tolist(),
                           norms=norms.tolist())
