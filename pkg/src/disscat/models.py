"""Model data for dissipative perturbations of a multiplication operator.

A model bundles a working energy interval, a fiber dimension k, and the
spectral data of two finite-rank couplings: a Hermitian m by m matrix K with
a k by m fiber map lam -> Z0(lam; G) describing V = G* K G, and a k by r
fiber map lam -> Z0(lam; C) describing the absorber C* C. Together they
define H = H0 + V - i C*C on L^2 of the interval with C^k fibers, where H0
is multiplication by the energy.

Fiber maps come in two representations, a Chebyshev coefficient stack and a
closed-form windowed Gaussian family, both evaluated through the kernels
module so they share the numba/numpy lanes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CalibrationError, DomainError

_HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    """Working energy interval with an interior safety margin.

    Boundary-value evaluations are restricted to [lo + margin, hi - margin];
    fiber maps themselves are defined on all of [lo, hi]. The default margin
    is 1e-2 times the width.
    """

    lo: float
    hi: float
    margin: float = None

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise DomainError(f"need finite lo < hi, got [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        margin = self.margin
        if margin is None:
            margin = 1e-2 * (hi - lo)
        margin = float(margin)
        if not 0.0 < margin < (hi - lo) / 4.0:
            raise DomainError(
                f"margin must lie in (0, width/4), got {margin} for width {hi - lo}"
            )
        object.__setattr__(self, "margin", margin)

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def interior(self):
        return (self.lo + self.margin, self.hi - self.margin)

    def in_interior(self, lam):
        a, b = self.interior
        return a <= lam <= b

    def require_interior(self, lam):
        if not self.in_interior(lam):
            a, b = self.interior
            raise DomainError(f"lam={lam} outside working interior [{a}, {b}]")


def interior_grid(interval, n):
    """Uniform n-point grid spanning the working interior."""
    a, b = interval.interior
    return np.linspace(a, b, int(n))


# ---------------------------------------------------------------------------
# Fiber maps


class FiberMap:
    """Matrix-valued map lam -> Z(lam) on [lo, hi], shape (k, q)."""

    kind = "abstract"

    def __init__(self, lo, hi, shape, holder_exponent):
        self.lo = float(lo)
        self.hi = float(hi)
        self.shape = (int(shape[0]), int(shape[1]))
        self.holder_exponent = float(holder_exponent)

    def _check_domain(self, lams):
        eps = 1e-12 * (self.hi - self.lo)
        if lams.size and (lams.min() < self.lo - eps or lams.max() > self.hi + eps):
            raise DomainError(
                f"fiber map evaluated outside [{self.lo}, {self.hi}]:"
                f" [{lams.min()}, {lams.max()}]"
            )

    def eval_many(self, lams):
        """Evaluate at a 1-d array of points, returning (n, k, q)."""
        raise NotImplementedError

    def eval(self, lam):
        return self.eval_many(np.array([float(lam)]))[0]

    def to_json_dict(self):
        raise NotImplementedError


class GaussMap(FiberMap):
    """Closed-form family: entrywise amp * gaussian bump * endpoint window.

    Entry (a, b) is amp[a,b] * exp(-(lam - center[a,b])^2 / (2 width[a,b]^2))
    times win(lam)**window_pow[a,b], where win = 4(lam-lo)(hi-lam)/(hi-lo)^2
    equals 1 at the midpoint and vanishes at the endpoints. A window power of
    1 or more makes boundary densities vanish at the interval ends.
    """

    kind = "gauss"

    def __init__(self, lo, hi, amp, center, width, window_pow, holder_exponent=0.99):
        amp = np.atleast_2d(np.asarray(amp, complex))
        center = np.broadcast_to(np.asarray(center, float), amp.shape).copy()
        width = np.broadcast_to(np.asarray(width, float), amp.shape).copy()
        window_pow = np.broadcast_to(
            np.asarray(window_pow, np.int64), amp.shape
        ).copy()
        if np.any(width <= 0):
            raise DomainError("gauss family widths must be positive")
        if np.any(window_pow < 0):
            raise DomainError("window powers must be nonnegative")
        super().__init__(lo, hi, amp.shape, holder_exponent)
        self.amp = amp
        self.center = center
        self.width = width
        self.window_pow = window_pow

    def eval_many(self, lams):
        lams = np.asarray(lams, float)
        self._check_domain(lams)
        return _kernels.gauss_batch(
            self.amp, self.center, self.width, self.window_pow,
            self.lo, self.hi, lams,
        )

    def to_json_dict(self):
        return {
            "type": "closed-form",
            "family": "gauss",
            "holder_exponent": self.holder_exponent,
            "amp": _carr_to_json(self.amp),
            "center": self.center.tolist(),
            "width": self.width.tolist(),
            "window_pow": self.window_pow.tolist(),
        }


class ZeroMap(FiberMap):
    """The identically zero fiber map."""

    kind = "zero"

    def __init__(self, lo, hi, rows, cols, holder_exponent=0.99):
        super().__init__(lo, hi, (rows, cols), holder_exponent)

    def eval_many(self, lams):
        lams = np.asarray(lams, float)
        self._check_domain(lams)
        return np.zeros((lams.shape[0],) + self.shape, complex)

    def to_json_dict(self):
        return {
            "type": "closed-form",
            "family": "zero",
            "holder_exponent": self.holder_exponent,
            "rows": self.shape[0],
            "cols": self.shape[1],
        }


class ChebyshevMap(FiberMap):
    """Chebyshev representation: coefficient stack of shape (deg+1, k, q)."""

    kind = "chebyshev"

    def __init__(self, lo, hi, coeffs, holder_exponent=0.99):
        coeffs = np.asarray(coeffs, complex)
        if coeffs.ndim != 3:
            raise DomainError("chebyshev coefficient stack must be (deg+1, k, q)")
        super().__init__(lo, hi, coeffs.shape[1:], holder_exponent)
        self.coeffs = coeffs

    @property
    def degree(self):
        return self.coeffs.shape[0] - 1

    def eval_many(self, lams):
        lams = np.asarray(lams, float)
        self._check_domain(lams)
        return _kernels.cheb_batch(self.coeffs, self.lo, self.hi, lams)

    def to_json_dict(self):
        return {
            "type": "chebyshev",
            "degree": self.degree,
            "holder_exponent": self.holder_exponent,
            "coeffs": _carr_to_json(self.coeffs),
        }


def eval_fiber(fiber_map, lam):
    """Evaluate a fiber map at a point (or 1-d array) inside its domain."""
    arr = np.asarray(lam, float)
    if arr.ndim == 0:
        return fiber_map.eval(float(arr))
    return fiber_map.eval_many(arr)


def chebyshev_fit(source, degree, lo=None, hi=None):
    """Fit a Chebyshev map of the given degree to a fiber map or callable.

    source may be a FiberMap (lo/hi default to its domain) or a vectorized
    callable lams -> (n, k, q). Uses Chebyshev-Gauss interpolation nodes, so
    analytic sources converge geometrically in the degree.
    """
    if isinstance(source, FiberMap):
        lo = source.lo if lo is None else lo
        hi = source.hi if hi is None else hi
        fn = source.eval_many
        holder = source.holder_exponent
    else:
        if lo is None or hi is None:
            raise DomainError("chebyshev_fit of a callable needs lo and hi")
        fn = source
        holder = 0.99
    n = int(degree) + 1
    theta = np.pi * (np.arange(n) + 0.5) / n
    x = np.cos(theta)
    lams = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
    vals = np.asarray(fn(lams), complex)
    cosmat = np.cos(np.outer(np.arange(n), theta))
    coeffs = np.einsum("kn,nab->kab", cosmat, vals) * (2.0 / n)
    coeffs[0] *= 0.5
    return ChebyshevMap(lo, hi, coeffs, holder_exponent=holder)


# ---------------------------------------------------------------------------
# Model


@dataclass
class Model:
    """Interval, fiber dimension and coupling data defining H = H0 + V - iC*C."""

    interval: Interval
    k: int
    m: int
    r: int
    K: np.ndarray
    z0g: FiberMap
    z0c: FiberMap
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.K = np.atleast_2d(np.asarray(self.K, complex))
        k, m, r = int(self.k), int(self.m), int(self.r)
        if self.K.shape != (m, m):
            raise DomainError(f"K must be {m}x{m}, got {self.K.shape}")
        if self.z0g.shape != (k, m):
            raise DomainError(
                f"z0g must map into {k}x{m} matrices, got {self.z0g.shape}"
            )
        if self.z0c.shape != (k, r):
            raise DomainError(
                f"z0c must map into {k}x{r} matrices, got {self.z0c.shape}"
            )
        for fm, tag in ((self.z0g, "z0g"), (self.z0c, "z0c")):
            if abs(fm.lo - self.interval.lo) > 0 or abs(fm.hi - self.interval.hi) > 0:
                raise DomainError(f"{tag} domain differs from the model interval")

    def to_json_dict(self):
        return {
            "lambda": {
                "lo": self.interval.lo,
                "hi": self.interval.hi,
                "margin": self.interval.margin,
            },
            "k": self.k,
            "m": self.m,
            "r": self.r,
            "K": _carr_to_json(self.K),
            "z0g": self.z0g.to_json_dict(),
            "z0c": self.z0c.to_json_dict(),
            "name": self.name,
            "meta": dict(self.meta),
        }


def _carr_to_json(arr):
    return {"re": np.real(arr).tolist(), "im": np.imag(arr).tolist()}


def _carr_from_json(obj):
    return np.asarray(obj["re"], float) + 1j * np.asarray(obj["im"], float)


def _map_from_json(obj, lo, hi):
    holder = float(obj.get("holder_exponent", 0.99))
    if obj["type"] == "chebyshev":
        return ChebyshevMap(lo, hi, _carr_from_json(obj["coeffs"]), holder)
    if obj["type"] == "closed-form":
        family = obj["family"]
        if family == "gauss":
            return GaussMap(
                lo, hi, _carr_from_json(obj["amp"]),
                np.asarray(obj["center"], float),
                np.asarray(obj["width"], float),
                np.asarray(obj["window_pow"], np.int64),
                holder,
            )
        if family == "zero":
            return ZeroMap(lo, hi, int(obj["rows"]), int(obj["cols"]), holder)
        raise DomainError(f"unknown closed-form family {family!r}")
    raise DomainError(f"unknown fiber map type {obj['type']!r}")


def model_to_json(model, indent=None):
    return json.dumps(model.to_json_dict(), indent=indent)


def model_from_json(text_or_dict):
    obj = text_or_dict
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    iv = obj["lambda"]
    interval = Interval(iv["lo"], iv["hi"], iv.get("margin"))
    return Model(
        interval=interval,
        k=int(obj["k"]),
        m=int(obj["m"]),
        r=int(obj["r"]),
        K=_carr_from_json(obj["K"]),
        z0g=_map_from_json(obj["z0g"], interval.lo, interval.hi),
        z0c=_map_from_json(obj["z0c"], interval.lo, interval.hi),
        name=obj.get("name", "custom"),
        meta=dict(obj.get("meta", {})),
    )


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    ok: bool
    violations: list
    stats: dict

    def to_json_dict(self):
        return {"ok": self.ok, "violations": self.violations, "stats": self.stats}


def _holder_quotient_sample(fmap, n_pairs, rng):
    lo, hi = fmap.lo, fmap.hi
    a = rng.uniform(lo, hi, n_pairs)
    b = rng.uniform(lo, hi, n_pairs)
    sep = 1e-9 * (hi - lo)
    too_close = np.abs(a - b) < sep
    nudged = np.where(a + sep > hi, a - sep, a + sep)
    b = np.where(too_close, nudged, b)
    va = fmap.eval_many(a)
    vb = fmap.eval_many(b)
    diff = np.abs(va - vb).reshape(n_pairs, -1).max(axis=1)
    quo = diff / np.abs(a - b) ** fmap.holder_exponent
    return float(np.max(quo)) if n_pairs else 0.0


def validate_model(model, n_holder_pairs=1000, seed=0):
    """Check the structural hypotheses that the rest of the package assumes.

    Returns a ValidationReport listing violations (Hermiticity of K, Holder
    exponent ranges, margin sanity, finite sampled Holder quotients, finite
    fiber values, and for tuned models the stored singular energy lying in
    the working interior). Constants are reported as sampled quotients only.
    """
    violations = []
    stats = {}
    rng = np.random.default_rng(seed)

    kmax = max(1.0, float(np.abs(model.K).max()) if model.K.size else 1.0)
    herm = float(np.abs(model.K - model.K.conj().T).max()) / (2.0 * kmax)
    stats["hermiticity_defect"] = herm
    if herm > _HERMITICITY_TOL:
        violations.append({
            "code": "k-not-hermitian",
            "message": "coupling matrix K is not Hermitian",
            "worst_value": herm,
        })

    width = model.interval.width
    stats["margin_ratio"] = model.interval.margin / width

    if not 0.5 < model.z0g.holder_exponent <= 1.0:
        violations.append({
            "code": "bad-holder-exponent",
            "message": "z0g must declare a Holder exponent in (1/2, 1]",
            "worst_value": model.z0g.holder_exponent,
        })
    if not 0.0 < model.z0c.holder_exponent <= 1.0:
        violations.append({
            "code": "bad-holder-exponent",
            "message": "z0c must declare a Holder exponent in (0, 1]",
            "worst_value": model.z0c.holder_exponent,
        })

    for tag, fmap in (("z0g", model.z0g), ("z0c", model.z0c)):
        grid = np.linspace(model.interval.lo, model.interval.hi, 101)
        vals = fmap.eval_many(grid)
        if not np.all(np.isfinite(vals)):
            violations.append({
                "code": "non-finite-fiber-values",
                "message": f"{tag} takes non-finite values",
                "worst_value": float("nan"),
            })
            continue
        quo = _holder_quotient_sample(fmap, n_holder_pairs, rng)
        stats[f"holder_quotient_{tag}"] = quo
        if not np.isfinite(quo):
            violations.append({
                "code": "holder-quotient-unbounded",
                "message": f"sampled Holder quotient of {tag} is not finite",
                "worst_value": quo,
            })

    if "lam0" in model.meta:
        lam0 = float(model.meta["lam0"])
        stats["lam0"] = lam0
        if not model.interval.in_interior(lam0):
            violations.append({
                "code": "lam0-outside-interior",
                "message": "stored singular energy lies outside the working interior",
                "worst_value": lam0,
            })

    return ValidationReport(ok=not violations, violations=violations, stats=stats)


# ---------------------------------------------------------------------------
# Builtin zoo

_DEFAULT_INTERVAL = (0.0, 4.0)

# Frozen defaults for the rank-1 family. Window power 1 keeps boundary
# densities vanishing linearly at the interval ends.
_R1_Z0G = {"amp": 0.8, "center": 2.0, "width": 0.6, "window_pow": 1}
_R1_Z0C = {"amp": 0.6, "center": 2.0, "width": 0.5, "window_pow": 1}
_R1_GV = 0.5

BUILTIN_NAMES = ("free", "rank1-gauss", "rank2-mixed", "tuned-singularity")


def _gauss_from(defaults, lo, hi, scale=1.0, center=None):
    return GaussMap(
        lo, hi,
        amp=[[scale * defaults["amp"]]],
        center=[[defaults["center"] if center is None else center]],
        width=[[defaults["width"]]],
        window_pow=[[defaults["window_pow"]]],
    )


def builtin_model(name, interval=None, params=None):
    """Construct a model from the builtin zoo.

    Supported names: 'free' (K = 0, no absorber), 'rank1-gauss' (rank-one V
    and absorber with Gaussian profiles; params g_v and g_c scale the two
    couplings), 'rank2-mixed' (k = 2, indefinite 2x2 K, rank-one absorber)
    and 'tuned-singularity' (rank1-gauss with the absorber calibrated so the
    boundary matrix A becomes singular at params['lam0'], default 2.0).
    """
    params = dict(params or {})
    if interval is None:
        interval = Interval(*_DEFAULT_INTERVAL)
    lo, hi = interval.lo, interval.hi

    if name == "free":
        k = int(params.get("k", 1))
        z0g = GaussMap(lo, hi, amp=np.full((k, 1), 0.5), center=interval.mid,
                       width=0.25 * interval.width, window_pow=1)
        z0c = ZeroMap(lo, hi, k, 1)
        return Model(interval, k=k, m=1, r=1, K=np.zeros((1, 1)),
                     z0g=z0g, z0c=z0c, name="free")

    if name == "rank1-gauss":
        gv = float(params.get("g_v", _R1_GV))
        gc = float(params.get("g_c", 1.0))
        z0g = _gauss_from(_R1_Z0G, lo, hi)
        z0c = _gauss_from(_R1_Z0C, lo, hi, scale=gc,
                          center=params.get("c_center"))
        return Model(interval, k=1, m=1, r=1, K=[[gv]],
                     z0g=z0g, z0c=z0c, name="rank1-gauss",
                     meta={"g_v": gv, "g_c": gc})

    if name == "rank2-mixed":
        z0g = GaussMap(
            lo, hi,
            amp=[[0.7, 0.3], [0.25, 0.6]],
            center=[[1.6, 2.4], [1.2, 2.8]],
            width=[[0.55, 0.7], [0.8, 0.5]],
            window_pow=1,
        )
        z0c = GaussMap(
            lo, hi,
            amp=[[0.5], [0.3]],
            center=[[2.0], [2.3]],
            width=[[0.6], [0.45]],
            window_pow=1,
        )
        kmat = np.array([[0.5, 0.15], [0.15, -0.35]])
        return Model(interval, k=2, m=2, r=1, K=kmat,
                     z0g=z0g, z0c=z0c, name="rank2-mixed")

    if name == "tuned-singularity":
        lam0 = float(params.get("lam0", 2.0))
        interval.require_interior(lam0)
        return _calibrate_singularity(interval, lam0, params)

    raise DomainError(f"unknown builtin model {name!r}; known: {BUILTIN_NAMES}")


def _calibrate_singularity(interval, lam0, params):
    """Tune the absorber so A(lam0) = I - i C R_V(lam0 - i0) C* is singular.

    Two stages. First the absorber center is shifted by a 1-d root find so
    the real part of C R_V(lam0 - i0) C* vanishes at lam0 (a coupling sweep
    alone cannot zero a complex number). Then the coupling g_c is found by a
    1-d root find on the sign-changing indicator Re det A(lam0; g_c).
    """
    from scipy.optimize import brentq

    from .boundary import rv_block

    gv = float(params.get("g_v", _R1_GV))
    lo, hi = interval.lo, interval.hi

    def model_with(center, gc):
        z0g = _gauss_from(_R1_Z0G, lo, hi)
        z0c = _gauss_from(_R1_Z0C, lo, hi, scale=gc, center=center)
        return Model(interval, k=1, m=1, r=1, K=[[gv]],
                     z0g=z0g, z0c=z0c, name="tuned-singularity")

    def phi_at(center):
        m = model_with(center, 1.0)
        return complex(rv_block(m, "C", "C", mu=lam0, side="minus")[0, 0])

    w = _R1_Z0C["width"]
    c_lo = max(lo + interval.margin, lam0 - 1.5 * w)
    c_hi = min(hi - interval.margin, lam0 + 1.5 * w)
    f_lo, f_hi = phi_at(c_lo).real, phi_at(c_hi).real
    if f_lo * f_hi > 0:
        raise CalibrationError(
            "no sign change of Re C R_V(lam0-i0) C* over the center sweep",
            lam0=lam0, bracket=(c_lo, c_hi), values=(f_lo, f_hi),
        )
    center = brentq(lambda c: phi_at(c).real, c_lo, c_hi, xtol=1e-13, rtol=1e-15)

    phi = phi_at(center)

    def indicator(gc):
        a = 1.0 - 1j * gc * gc * phi
        return a.real

    sweep = np.geomspace(0.05, 50.0, 40)
    vals = np.array([indicator(g) for g in sweep])
    sign_change = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
    if sign_change.size == 0:
        raise CalibrationError(
            "no sign change of the det-based indicator over the coupling sweep",
            lam0=lam0, sweep=(float(sweep[0]), float(sweep[-1])),
        )
    i = int(sign_change[0])
    gc = brentq(indicator, sweep[i], sweep[i + 1], xtol=1e-14, rtol=1e-15)

    a_val = 1.0 - 1j * gc * gc * phi
    if abs(a_val) > 1e-8:
        raise CalibrationError(
            "calibration left a residual boundary matrix defect",
            lam0=lam0, residual=abs(a_val),
        )

    # An optional boost past the critical coupling pushes the boundary
    # singularity off the real axis: the model then has a genuinely complex
    # eigenvalue instead of a spectral singularity.
    scale = float(params.get("gc_scale", 1.0))
    if scale <= 0:
        raise DomainError("gc_scale must be positive")
    model = model_with(center, gc * scale)
    model.meta.update({
        "lam0": lam0, "g_c": gc * scale, "c_center": center, "g_v": gv,
        "g_c_critical": gc, "gc_scale": scale,
    })
    return model
