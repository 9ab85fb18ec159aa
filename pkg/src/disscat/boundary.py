"""Boundary values of resolvent sandwiches over the working interval.

Everything here reduces to Cauchy transforms of matrix densities
rho(nu) = Z_X(nu)^* Z_Y(nu): off the real axis the transform is a plain
integral of rho(nu)/(nu - z), and on the axis the limits from above and
below are principal value plus or minus i pi rho(mu). The principal value
is computed by subtraction, integrating (rho(nu) - rho(mu))/(nu - mu)
(smooth for our maps) and adding rho(mu) log((hi - mu)/(mu - lo)).

Sandwiches of the perturbed resolvent R_V and of the full dissipative
resolvent R never need extra quadrature: with Q the free blocks taken all
on one side,

    X R_V Y* = X R0 Y* - (X R0 G*) (I + K G R0 G*)^(-1) K (G R0 Y*)
    X R  Y* = X R_V Y* + i (X R_V C*) (I - i C R_V C*)^(-1) (C R_V Y*)

so one adaptive transform of the stacked [G C] density per energy yields
every block on both sides at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DomainError,
    ExceptionalPointError,
    NumericalFailure,
    SpectralSingularityError,
)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)

_EXCEPTIONAL_RTOL = 1e-10
SINGULARITY_RTOL = 1e-6


def _panel_rule(lo, hi, n_panels):
    edges = np.linspace(lo, hi, n_panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    nodes = (mids[:, None] + half * _GL_NODES[None, :]).ravel()
    weights = np.tile(half * _GL_WEIGHTS, n_panels)
    return nodes, weights


def cauchy_transform(density, interval, z=None, mu=None, side=None,
                     rel_tol=1e-12, max_panels=2 ** 14, start_panels=4):
    """Adaptive Cauchy transform of a matrix density over the interval.

    density is a vectorized callable lams -> (n, p, q). Pass either a
    complex point z off the axis, or an interior energy mu together with
    side 'plus'/'minus' for the boundary value from the upper or lower half
    plane. Panel-doubled composite 16-point Gauss-Legendre; convergence is
    declared when a doubling changes the result by at most rel_tol in a
    mixed relative/absolute sense (the absolute floor is machine epsilon
    times the integral of the absolute integrand, which is where rounding
    stalls further refinement).
    """
    if (z is None) == (mu is None):
        raise DomainError("pass exactly one of z (off-axis) or mu (on-axis)")
    lo, hi = interval.lo, interval.hi
    if mu is not None:
        if side not in ("plus", "minus"):
            raise DomainError("on-axis transforms need side='plus' or 'minus'")
        mu = float(mu)
        interval.require_interior(mu)
        rho_mu = np.asarray(density(np.array([mu]))[0], complex)
        log_term = np.log((hi - mu) / (mu - lo))
        side_term = (1j if side == "plus" else -1j) * np.pi
    else:
        z = complex(z)
        if z.imag == 0.0 and lo <= z.real <= hi:
            raise DomainError("off-axis transform called with z on the cut")
        # Subtract the density at the nearest interval point so the
        # integrand stays bounded when z sits close to the cut.
        x0 = min(max(z.real, lo), hi)
        rho_x = np.asarray(density(np.array([x0]))[0], complex)
        log_term_z = np.log(complex(hi - z)) - np.log(complex(lo - z))

    prev = None
    err = np.inf
    n_panels = int(start_panels)
    while n_panels <= max_panels:
        nodes, weights = _panel_rule(lo, hi, n_panels)
        vals = np.asarray(density(nodes), complex)
        if mu is not None:
            total = _kernels.pv_sum(vals, rho_mu, nodes, weights, mu)
            total = total + (log_term + side_term) * rho_mu
            d = nodes - mu
            safe = np.where(d == 0.0, 1.0, d)
            absval = np.abs((vals - rho_mu) / safe[:, None, None])
            absval[d == 0.0] = 0.0
            absint = (weights[:, None, None] * absval).sum(axis=0).max()
            absint += np.abs(rho_mu).max() * (np.pi + abs(log_term))
        else:
            total = _kernels.cauchy_sum(vals - rho_x, nodes, weights, z)
            total = total + log_term_z * rho_x
            absval = np.abs(vals - rho_x) / np.abs(nodes - z)[:, None, None]
            absint = (weights[:, None, None] * absval).sum(axis=0).max()
            absint += np.abs(rho_x).max() * abs(log_term_z)
        if prev is not None:
            err = np.abs(total - prev).max()
            floor = 64.0 * np.finfo(float).eps * absint
            if err <= rel_tol * np.abs(total).max() + floor:
                return total
        prev = total
        n_panels *= 2
    raise NumericalFailure(
        "cauchy transform did not converge",
        mu=mu, z=z, side=side, last_error=float(err),
        rel_tol=rel_tol, max_panels=max_panels,
    )


# ---------------------------------------------------------------------------
# Combined-block machinery


def _combined_density(model):
    def density(lams):
        zg = model.z0g.eval_many(lams)
        zc = model.z0c.eval_many(lams)
        zx = np.concatenate([zg, zc], axis=2)
        return _kernels.pair_density(zx, zx)

    return density


def _rv_from_q(model, q, where):
    """Apply the rank-m resolvent identity to a stacked free-block matrix."""
    m = model.m
    g = slice(0, m)
    kq = model.K @ q[g, g]
    w = np.eye(m) + kq
    smin = np.linalg.svd(w, compute_uv=False)[-1]
    scale = 1.0 + np.linalg.norm(kq, 2)
    if smin < _EXCEPTIONAL_RTOL * scale:
        raise ExceptionalPointError(where, smin, scale=scale)
    qv = q - q[:, g] @ np.linalg.solve(w, model.K @ q[g, :])
    return qv, w, float(smin)


def _full_from_qv(m, r, qv, where, side=None):
    """Pass from R_V blocks to full-resolvent blocks via the absorber."""
    c = slice(m, m + r)
    b = qv[c, c]
    a = np.eye(r) - 1j * b
    smin = np.linalg.svd(a, compute_uv=False)[-1]
    if side == "minus":
        thr = SINGULARITY_RTOL * (1.0 + np.linalg.norm(b, 2))
        if smin < thr:
            raise SpectralSingularityError(where, smin, thr)
    elif smin < 1e-13 * (1.0 + np.linalg.norm(b, 2)):
        raise NumericalFailure(
            "absorber boundary matrix is numerically singular",
            where=where, sigma_min=float(smin), side=side,
        )
    return qv + 1j * qv[:, c] @ np.linalg.solve(a, qv[c, :])


@dataclass
class StationaryBlocks:
    """All stationary boundary blocks of one model at one interior energy.

    q0_* and qv_* are (m+r) square stacked matrices over the combined
    coupling index [G-columns, C-columns], holding X R0 Y* and X R_V Y*
    for X, Y in {G, C} on the named side of the axis. rho is the stacked
    local density Z^* Z at the energy.
    """

    lam: float
    m: int
    r: int
    zg: np.ndarray
    zc: np.ndarray
    rho: np.ndarray
    q0_plus: np.ndarray
    q0_minus: np.ndarray
    qv_plus: np.ndarray
    qv_minus: np.ndarray
    w_plus: np.ndarray
    w_minus: np.ndarray
    sigma_min_w_plus: float
    sigma_min_w_minus: float

    def _sl(self, x):
        if x == "G":
            return slice(0, self.m)
        if x == "C":
            return slice(self.m, self.m + self.r)
        raise DomainError(f"coupling label must be 'G' or 'C', got {x!r}")

    def _q(self, op, side):
        if side not in ("plus", "minus"):
            raise DomainError("side must be 'plus' or 'minus'")
        if op == "0":
            return self.q0_plus if side == "plus" else self.q0_minus
        if op == "V":
            return self.qv_plus if side == "plus" else self.qv_minus
        raise DomainError(f"op must be '0' or 'V', got {op!r}")

    def r0(self, x, y, side="plus"):
        q = self._q("0", side)
        return q[self._sl(x), self._sl(y)]

    def rv(self, x, y, side="plus"):
        q = self._q("V", side)
        return q[self._sl(x), self._sl(y)]

    def a_matrix(self, side="minus"):
        """I - i C R_V C* on the chosen side; singular iff S(lam) fails."""
        return np.eye(self.r) - 1j * self.rv("C", "C", side)

    def crc_full(self, side):
        """C R C* for the full dissipative resolvent on the chosen side."""
        b = self.rv("C", "C", side)
        a = np.eye(self.r) - 1j * b
        if side == "minus":
            smin = np.linalg.svd(a, compute_uv=False)[-1]
            thr = SINGULARITY_RTOL * (1.0 + np.linalg.norm(b, 2))
            if smin < thr:
                raise SpectralSingularityError(self.lam, smin, thr)
        return -1j * (np.linalg.inv(a) - np.eye(self.r))

    def full(self, x, y, side="plus"):
        qf = _full_from_qv(self.m, self.r, self._q("V", side), self.lam,
                           side=side)
        return qf[self._sl(x), self._sl(y)]


def boundary_bundle(model, mu, rel_tol=1e-12):
    """Compute every stationary block of the model at one interior energy.

    One adaptive transform of the stacked density gives the plus-side free
    blocks; the minus side follows from the jump relation (minus equals
    plus minus 2 pi i rho), and the R_V blocks from the resolvent identity
    on each side.
    """
    mu = float(mu)
    density = _combined_density(model)
    q_plus = cauchy_transform(density, model.interval, mu=mu, side="plus",
                              rel_tol=rel_tol)
    rho = np.asarray(density(np.array([mu]))[0], complex)
    q_minus = q_plus - 2j * np.pi * rho
    qv_plus, w_plus, smin_plus = _rv_from_q(model, q_plus, mu)
    qv_minus, w_minus, smin_minus = _rv_from_q(model, q_minus, mu)
    return StationaryBlocks(
        lam=mu, m=model.m, r=model.r,
        zg=model.z0g.eval(mu), zc=model.z0c.eval(mu), rho=rho,
        q0_plus=q_plus, q0_minus=q_minus,
        qv_plus=qv_plus, qv_minus=qv_minus,
        w_plus=w_plus, w_minus=w_minus,
        sigma_min_w_plus=smin_plus, sigma_min_w_minus=smin_minus,
    )


def _pair_density_fn(mapx, mapy):
    def density(lams):
        return _kernels.pair_density(mapx.eval_many(lams), mapy.eval_many(lams))

    return density


def _resolve_maps(model, x):
    if x == "G":
        return model.z0g
    if x == "C":
        return model.z0c
    raise DomainError(f"coupling label must be 'G' or 'C', got {x!r}")


def r0_block(model, x, y, mu=None, side=None, z=None, rel_tol=1e-12):
    """X R0 Y* for X, Y in {G, C}, on-axis (mu, side) or off-axis (z)."""
    density = _pair_density_fn(_resolve_maps(model, x), _resolve_maps(model, y))
    return cauchy_transform(density, model.interval, z=z, mu=mu, side=side,
                            rel_tol=rel_tol)


def _combined_q(model, mu=None, side=None, z=None, rel_tol=1e-12):
    return cauchy_transform(_combined_density(model), model.interval,
                            z=z, mu=mu, side=side, rel_tol=rel_tol)


def _csl(model, x):
    if x == "G":
        return slice(0, model.m)
    if x == "C":
        return slice(model.m, model.m + model.r)
    raise DomainError(f"coupling label must be 'G' or 'C', got {x!r}")


def rv_block(model, x, y, mu=None, side=None, z=None, rel_tol=1e-12):
    """X R_V Y* via the rank-m identity; no quadrature beyond free blocks."""
    q = _combined_q(model, mu=mu, side=side, z=z, rel_tol=rel_tol)
    qv, _, _ = _rv_from_q(model, q, mu if mu is not None else z)
    return qv[_csl(model, x), _csl(model, y)]


def full_block(model, x, y, mu=None, side=None, z=None, rel_tol=1e-12):
    """X R Y* for the full dissipative resolvent H = H0 + V - i C*C."""
    q = _combined_q(model, mu=mu, side=side, z=z, rel_tol=rel_tol)
    qv, _, _ = _rv_from_q(model, q, mu if mu is not None else z)
    qf = _full_from_qv(model.m, model.r, qv, mu if mu is not None else z,
                       side=side)
    return qf[_csl(model, x), _csl(model, y)]


def crc_full_plus(model, mu, rel_tol=1e-12):
    """C R(mu + i0) C*, always defined (the plus-side matrix is accretive)."""
    return boundary_bundle(model, mu, rel_tol=rel_tol).crc_full("plus")


def crc_full_minus(model, mu, rel_tol=1e-12):
    """C R(mu - i0) C*; raises SpectralSingularityError when S(mu) fails."""
    return boundary_bundle(model, mu, rel_tol=rel_tol).crc_full("minus")
