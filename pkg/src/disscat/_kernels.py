"""Numerical kernels, each with a numba build and a numpy build.

The numba builds are explicit loops compiled with @njit; the numpy builds are
vectorized. Dispatch happens per call through _accel.get_backend(), so tests
and the benchmark can exercise both lanes in one process. Signatures and
results are identical across lanes up to floating-point summation order.
"""

from __future__ import annotations

import numpy as np

from . import _accel

# ---------------------------------------------------------------------------
# Chebyshev batch evaluation

def _cheb_batch_np(coeffs, lo, hi, lams):
    t = (2.0 * lams - lo - hi) / (hi - lo)
    deg = coeffs.shape[0] - 1
    shape = (lams.shape[0],) + coeffs.shape[1:]
    b1 = np.zeros(shape, np.complex128)
    b2 = np.zeros(shape, np.complex128)
    tt = (2.0 * t)[:, None, None]
    for d in range(deg, 0, -1):
        b0 = coeffs[d][None, :, :] + tt * b1 - b2
        b2 = b1
        b1 = b0
    return coeffs[0][None, :, :] + t[:, None, None] * b1 - b2


def _cheb_batch_loops(coeffs, lo, hi, lams):
    n = lams.shape[0]
    deg = coeffs.shape[0] - 1
    p = coeffs.shape[1]
    q = coeffs.shape[2]
    out = np.empty((n, p, q), np.complex128)
    for i in range(n):
        t = (2.0 * lams[i] - lo - hi) / (hi - lo)
        for a in range(p):
            for b in range(q):
                b1 = 0.0 + 0.0j
                b2 = 0.0 + 0.0j
                for d in range(deg, 0, -1):
                    b0 = coeffs[d, a, b] + 2.0 * t * b1 - b2
                    b2 = b1
                    b1 = b0
                out[i, a, b] = coeffs[0, a, b] + t * b1 - b2
    return out


# ---------------------------------------------------------------------------
# Closed-form Gaussian-bump family with an endpoint window

def _gauss_batch_np(amp, center, width, wpow, lo, hi, lams):
    lam = lams[:, None, None]
    win = 4.0 * (lam - lo) * (hi - lam) / (hi - lo) ** 2
    bump = np.exp(-0.5 * ((lam - center[None]) / width[None]) ** 2)
    wfac = win ** wpow[None]
    return (amp[None] * bump * wfac).astype(np.complex128)


def _gauss_batch_loops(amp, center, width, wpow, lo, hi, lams):
    n = lams.shape[0]
    p = amp.shape[0]
    q = amp.shape[1]
    out = np.empty((n, p, q), np.complex128)
    for i in range(n):
        lam = lams[i]
        win = 4.0 * (lam - lo) * (hi - lam) / (hi - lo) ** 2
        for a in range(p):
            for b in range(q):
                x = (lam - center[a, b]) / width[a, b]
                val = amp[a, b] * np.exp(-0.5 * x * x)
                e = wpow[a, b]
                if e > 0:
                    val = val * win ** e
                out[i, a, b] = val
    return out


# ---------------------------------------------------------------------------
# Pointwise density Z_X(nu)^dagger Z_Y(nu)

def _pair_density_np(zx, zy):
    return np.einsum("nka,nkb->nab", zx.conj(), zy)


def _pair_density_loops(zx, zy):
    n = zx.shape[0]
    k = zx.shape[1]
    p = zx.shape[2]
    q = zy.shape[2]
    out = np.zeros((n, p, q), np.complex128)
    for i in range(n):
        for a in range(p):
            for b in range(q):
                s = 0.0 + 0.0j
                for c in range(k):
                    s += np.conj(zx[i, c, a]) * zy[i, c, b]
                out[i, a, b] = s
    return out


# ---------------------------------------------------------------------------
# Weighted Cauchy sums

def _cauchy_sum_np(rho, nodes, weights, z):
    fac = weights / (nodes - z)
    return np.tensordot(fac, rho, axes=(0, 0))


def _cauchy_sum_loops(rho, nodes, weights, z):
    n = rho.shape[0]
    p = rho.shape[1]
    q = rho.shape[2]
    out = np.zeros((p, q), np.complex128)
    for i in range(n):
        fac = weights[i] / (nodes[i] - z)
        for a in range(p):
            for b in range(q):
                out[a, b] += fac * rho[i, a, b]
    return out


def _pv_sum_np(rho, rho_mu, nodes, weights, mu):
    d = nodes - mu
    fac = np.where(d != 0.0, weights / np.where(d != 0.0, d, 1.0), 0.0)
    return np.tensordot(fac, rho - rho_mu[None], axes=(0, 0))


def _pv_sum_loops(rho, rho_mu, nodes, weights, mu):
    n = rho.shape[0]
    p = rho.shape[1]
    q = rho.shape[2]
    out = np.zeros((p, q), np.complex128)
    for i in range(n):
        d = nodes[i] - mu
        if d == 0.0:
            continue
        fac = weights[i] / d
        for a in range(p):
            for b in range(q):
                out[a, b] += fac * (rho[i, a, b] - rho_mu[a, b])
    return out


# ---------------------------------------------------------------------------
# Windowed one-sided Fourier sum (composite Simpson over t)
#
# Accumulates sum_j coefs[j] * exp(i * omega * j * dt) entrywise. The Simpson
# weights and the time window are folded into coefs by the caller.

def _phase_window_sum_np(omega, coefs, dt):
    step = np.exp(1j * dt * omega)
    ph = np.ones_like(step)
    acc = np.zeros_like(step)
    for j in range(coefs.shape[0]):
        acc += coefs[j] * ph
        ph *= step
    return acc


def _phase_window_sum_loops(omega, coefs, dt):
    n0 = omega.shape[0]
    n1 = omega.shape[1]
    nt = coefs.shape[0]
    acc = np.empty((n0, n1), np.complex128)
    for a in range(n0):
        for b in range(n1):
            step = np.exp(1j * dt * omega[a, b])
            ph = 1.0 + 0.0j
            s = 0.0 + 0.0j
            for j in range(nt):
                s += coefs[j] * ph
                ph *= step
            acc[a, b] = s
    return acc


# ---------------------------------------------------------------------------
# Radial integration (Dormand-Prince 5(4), adaptive)
#
# Single-source kernel: the body is numba compatible and also runs as plain
# Python in the numpy lane. Potentials are lowered to an integer family code
# plus three parameters:
#   0 zero, 1 square well (value, radius), 2 gaussian (value, sigma),
#   3 woods-saxon (value, radius, diffuseness)

def _pot_val(code, p0, p1, p2, r):
    if code == 0:
        return 0.0
    if code == 1:
        if r < p1:
            return p0
        return 0.0
    if code == 2:
        x = r / p1
        return p0 * np.exp(-0.5 * x * x)
    if code == 3:
        return p0 / (1.0 + np.exp((r - p1) / p2))
    return 0.0


def _radial_rhs(r, u, v, lam, ell, vc, v0, v1, v2, wc, w0, w1, w2):
    q = ell * (ell + 1.0) / (r * r) - lam
    q = q + _pot_val(vc, v0, v1, v2, r)
    q = q - 1j * _pot_val(wc, w0, w1, w2, r)
    return v, q * u


def _radial_rk45(r0, r1, u0, v0c, lam, ell, vc, vp0, vp1, vp2,
                 wc, wp0, wp1, wp2, rtol, atol, max_steps):
    # Dormand-Prince 5(4) with PI-free standard step control.
    r = r0
    u = u0
    v = v0c
    h = 0.01 * r0
    hmax = 0.1 * (r1 - r0) + 1e-12
    if h > hmax:
        h = hmax
    nsteps = 0
    status = 0
    while r < r1:
        if nsteps >= max_steps:
            status = 1
            break
        if h > r1 - r:
            h = r1 - r
        if h < 1e-14 * (abs(r) + 1.0):
            status = 2
            break
        k1u, k1v = _radial_rhs(r, u, v, lam, ell, vc, vp0, vp1, vp2, wc, wp0, wp1, wp2)
        k2u, k2v = _radial_rhs(r + 0.2 * h, u + h * 0.2 * k1u, v + h * 0.2 * k1v,
                               lam, ell, vc, vp0, vp1, vp2, wc, wp0, wp1, wp2)
        k3u, k3v = _radial_rhs(r + 0.3 * h,
                               u + h * (0.075 * k1u + 0.225 * k2u),
                               v + h * (0.075 * k1v + 0.225 * k2v),
                               lam, ell, vc, vp0, vp1, vp2, wc, wp0, wp1, wp2)
        k4u, k4v = _radial_rhs(r + 0.8 * h,
                               u + h * ((44.0 / 45.0) * k1u - (56.0 / 15.0) * k2u + (32.0 / 9.0) * k3u),
                               v + h * ((44.0 / 45.0) * k1v - (56.0 / 15.0) * k2v + (32.0 / 9.0) * k3v),
                               lam, ell, vc, vp0, vp1, vp2, wc, wp0, wp1, wp2)
        k5u, k5v = _radial_rhs(r + (8.0 / 9.0) * h,
                               u + h * ((19372.0 / 6561.0) * k1u - (25360.0 / 2187.0) * k2u
                                        + (64448.0 / 6561.0) * k3u - (212.0 / 729.0) * k4u),
                               v + h * ((19372.0 / 6561.0) * k1v - (25360.0 / 2187.0) * k2v
                                        + (64448.0 / 6561.0) * k3v - (212.0 / 729.0) * k4v),
                               lam, ell, vc, vp0, vp1, vp2, wc, wp0, wp1, wp2)
        k6u, k6v = _radial_rhs(r + h,
                               u + h * ((9017.0 / 3168.0) * k1u - (355.0 / 33.0) * k2u
                                        + (46732.0 / 5247.0) * k3u + (49.0 / 176.0) * k4u
                                        - (5103.0 / 18656.0) * k5u),
                               v + h * ((9017.0 / 3168.0) * k1v - (355.0 / 33.0) * k2v
                                        + (46732.0 / 5247.0) * k3v + (49.0 / 176.0) * k4v
                                        - (5103.0 / 18656.0) * k5v),
                               lam, ell, vc, vp0, vp1, vp2, wc, wp0, wp1, wp2)
        unew = u + h * ((35.0 / 384.0) * k1u + (500.0 / 1113.0) * k3u + (125.0 / 192.0) * k4u
                        - (2187.0 / 6784.0) * k5u + (11.0 / 84.0) * k6u)
        vnew = v + h * ((35.0 / 384.0) * k1v + (500.0 / 1113.0) * k3v + (125.0 / 192.0) * k4v
                        - (2187.0 / 6784.0) * k5v + (11.0 / 84.0) * k6v)
        k7u, k7v = _radial_rhs(r + h, unew, vnew,
                               lam, ell, vc, vp0, vp1, vp2, wc, wp0, wp1, wp2)
        eu = h * ((71.0 / 57600.0) * k1u - (71.0 / 16695.0) * k3u + (71.0 / 1920.0) * k4u
                  - (17253.0 / 339200.0) * k5u + (22.0 / 525.0) * k6u - (1.0 / 40.0) * k7u)
        ev = h * ((71.0 / 57600.0) * k1v - (71.0 / 16695.0) * k3v + (71.0 / 1920.0) * k4v
                  - (17253.0 / 339200.0) * k5v + (22.0 / 525.0) * k6v - (1.0 / 40.0) * k7v)
        scu = atol + rtol * max(abs(u), abs(unew))
        scv = atol + rtol * max(abs(v), abs(vnew))
        err = np.sqrt(0.5 * ((abs(eu) / scu) ** 2 + (abs(ev) / scv) ** 2))
        nsteps += 1
        if err <= 1.0:
            r = r + h
            u = unew
            v = vnew
            fac = 5.0
            if err > 0.0:
                fac = 0.9 * err ** -0.2
                if fac > 5.0:
                    fac = 5.0
            h = h * fac
            if h > hmax:
                h = hmax
        else:
            fac = 0.9 * err ** -0.2
            if fac < 0.2:
                fac = 0.2
            h = h * fac
    return u, v, nsteps, status


# ---------------------------------------------------------------------------
# Backend dispatch

if _accel.HAS_NUMBA:
    from numba import njit
    from numba.extending import register_jitable

    # The integrator calls these two helpers by global name; registering
    # them keeps one definition usable from both lanes.
    _pot_val = register_jitable(_pot_val)
    _radial_rhs = register_jitable(_radial_rhs)

    _cheb_batch_nb = njit(cache=True)(_cheb_batch_loops)
    _gauss_batch_nb = njit(cache=True)(_gauss_batch_loops)
    _pair_density_nb = njit(cache=True)(_pair_density_loops)
    _cauchy_sum_nb = njit(cache=True)(_cauchy_sum_loops)
    _pv_sum_nb = njit(cache=True)(_pv_sum_loops)
    _phase_window_sum_nb = njit(cache=True)(_phase_window_sum_loops)
    _radial_rk45_nb = njit(cache=True)(_radial_rk45)
else:  # pragma: no cover
    _cheb_batch_nb = None
    _gauss_batch_nb = None
    _pair_density_nb = None
    _cauchy_sum_nb = None
    _pv_sum_nb = None
    _phase_window_sum_nb = None
    _radial_rk45_nb = None

_LANES = {
    "cheb_batch": (_cheb_batch_nb, _cheb_batch_np),
    "gauss_batch": (_gauss_batch_nb, _gauss_batch_np),
    "pair_density": (_pair_density_nb, _pair_density_np),
    "cauchy_sum": (_cauchy_sum_nb, _cauchy_sum_np),
    "pv_sum": (_pv_sum_nb, _pv_sum_np),
    "phase_window_sum": (_phase_window_sum_nb, _phase_window_sum_np),
    "radial_rk45": (_radial_rk45_nb, _radial_rk45),
}


def _pick(name):
    nb, npv = _LANES[name]
    if _accel.get_backend() == "numba" and nb is not None:
        return nb
    return npv


def cheb_batch(coeffs, lo, hi, lams):
    """Evaluate a (deg+1, p, q) Chebyshev coefficient stack at points lams."""
    return _pick("cheb_batch")(coeffs, lo, hi, np.asarray(lams, float))


def gauss_batch(amp, center, width, wpow, lo, hi, lams):
    """Evaluate the windowed Gaussian closed-form family at points lams."""
    return _pick("gauss_batch")(amp, center, width, wpow, lo, hi,
                                np.asarray(lams, float))


def pair_density(zx, zy):
    """Per-node product Z_X^dagger Z_Y, shapes (n,k,p) x (n,k,q) -> (n,p,q)."""
    return _pick("pair_density")(zx, zy)


def cauchy_sum(rho, nodes, weights, z):
    """Weighted sum of rho/(nodes - z) for complex z off the interval."""
    return _pick("cauchy_sum")(rho, nodes, weights, complex(z))


def pv_sum(rho, rho_mu, nodes, weights, mu):
    """Weighted sum of (rho - rho(mu))/(nodes - mu), the subtracted PV part."""
    return _pick("pv_sum")(rho, rho_mu, nodes, weights, float(mu))


def phase_window_sum(omega, coefs, dt):
    """Entrywise sum_j coefs[j] exp(i omega j dt) for an (n0,n1) omega grid.

    omega may be complex (decaying phases from a dissipative spectrum).
    """
    omega = np.ascontiguousarray(omega, np.complex128)
    coefs = np.ascontiguousarray(coefs, np.complex128)
    return _pick("phase_window_sum")(omega, coefs, float(dt))


def radial_rk45(r0, r1, u0, v0, lam, ell, vpot, wpot, rtol, atol, max_steps):
    """Integrate u'' = (ell(ell+1)/r^2 + V - iW - lam) u from r0 to r1.

    vpot and wpot are (code, p0, p1, p2) tuples produced by the optical
    module. Returns (u, u', steps, status); status 0 means success, 1 means
    the step budget ran out, 2 means the step size underflowed.
    """
    vc, v0p, v1p, v2p = vpot
    wc, w0p, w1p, w2p = wpot
    return _pick("radial_rk45")(
        float(r0), float(r1), complex(u0), complex(v0),
        float(lam), float(ell),
        int(vc), float(v0p), float(v1p), float(v2p),
        int(wc), float(w0p), float(w1p), float(w2p),
        float(rtol), float(atol), int(max_steps),
    )


def lane_names():
    return sorted(_LANES)
