"""Brute-force matrix oracles, independent of the stationary formulas.

The continuum model is collapsed onto a Gauss-Legendre grid: functions are
represented by sqrt(weight)-scaled fiber values, H0 becomes a diagonal
matrix, and the two couplings become low-rank factors B_G, B_C so that
V = B_G K B_G^dagger and C*C = B_C B_C^dagger. Everything downstream is
plain dense linear algebra: eps-regularized resolvent compressions with
Richardson extrapolation, windowed Cook integrals for the wave operators
(propagated exactly through the eigendecomposition of the non-normal H),
spectral subspace inventories, and absorption probabilities.

These routines deliberately share no code path with the boundary-value
quadrature; agreement between the two is the package's ground-truth check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, NumericalFailure

_EIG_COND_LIMIT = 1e8


@dataclass
class DiscretizedSystem:
    """Finite model of H = H0 + V - i C*C on a Gauss-Legendre grid."""

    model: object
    nodes: np.ndarray
    weights: np.ndarray
    k: int
    dim: int
    h0diag: np.ndarray
    bg: np.ndarray
    bc: np.ndarray
    v: np.ndarray
    cc: np.ndarray
    h: np.ndarray
    _eig: tuple = field(default=None, repr=False)

    def eig(self):
        """Cached eigendecomposition of H: (evals, P, P^(-1), cond(P))."""
        if self._eig is None:
            evals, p = np.linalg.eig(self.h)
            try:
                pinv = np.linalg.inv(p)
            except np.linalg.LinAlgError:
                raise NumericalFailure(
                    "eigenbasis of H is singular; H is defective at working"
                    " precision", cond=float("inf"),
                ) from None
            cond = float(np.linalg.cond(p))
            self._eig = (evals, p, pinv, cond)
        return self._eig

    @property
    def mean_spacing(self):
        return self.model.interval.width / len(self.nodes)

    def local_spacing(self, lam):
        j = int(np.clip(np.searchsorted(self.nodes, lam), 1, len(self.nodes) - 2))
        return 0.5 * (self.nodes[j + 1] - self.nodes[j - 1])

    def coupling(self, x):
        if x == "G":
            return self.bg
        if x == "C":
            return self.bc
        raise DomainError(f"coupling label must be 'G' or 'C', got {x!r}")

    def operator(self, op):
        name = op[1:] if isinstance(op, str) and op.startswith("R") else op
        if name == "0":
            return np.diag(self.h0diag.astype(complex))
        if name == "V":
            return np.diag(self.h0diag.astype(complex)) + self.v
        if name == "full":
            return self.h
        raise DomainError(f"op must be 'R0', 'RV' or 'Rfull', got {op!r}")


def discretize(model, n_nodes):
    """Assemble the Gauss-Legendre matrix model with n_nodes >= 32 nodes."""
    n_nodes = int(n_nodes)
    if n_nodes < 32:
        raise DomainError("discretize needs n_nodes >= 32")
    iv = model.interval
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    half = 0.5 * iv.width
    nodes = iv.mid + half * x
    weights = half * w
    k = model.k
    dim = n_nodes * k

    zg = model.z0g.eval_many(nodes)
    zc = model.z0c.eval_many(nodes)
    sqw = np.sqrt(weights)[:, None, None]
    bg = (sqw * zg).reshape(dim, model.m)
    bc = (sqw * zc).reshape(dim, model.r)

    v = bg @ model.K @ bg.conj().T
    cc = bc @ bc.conj().T
    h0diag = np.repeat(nodes, k)
    h = np.diag(h0diag.astype(complex)) + v - 1j * cc
    return DiscretizedSystem(
        model=model, nodes=nodes, weights=weights, k=k, dim=dim,
        h0diag=h0diag, bg=bg, bc=bc, v=v, cc=cc, h=h,
    )


_EPS_MULTS = tuple(5.0 * 1.3 ** j for j in range(8))


def _extrap_to_zero(eps, vals):
    """Polynomial (Richardson) extrapolation of vals(eps) to eps = 0."""
    out = np.zeros_like(vals[0])
    for j in range(len(eps)):
        lj = 1.0
        for i in range(len(eps)):
            if i != j:
                lj *= eps[i] / (eps[i] - eps[j])
        out = out + lj * vals[j]
    return out


def matrix_boundary_block(sys, x, y, op, lam, side, return_estimate=False):
    """Richardson-extrapolated X (H_op - lam -/+ i eps)^(-1) Y* as eps -> 0.

    The eps schedule is tied to the local node spacing: eight levels in
    geometric ratio 1.3 starting at 5 spacings (below that the discreteness
    of the spectrum leaks through), removed by polynomial extrapolation.
    The returned estimate is the shift from dropping the coarsest level.
    """
    if side not in ("plus", "minus"):
        raise DomainError("side must be 'plus' or 'minus'")
    lam = float(lam)
    spacing = sys.local_spacing(lam)
    if lam - sys.nodes[0] < 3 * spacing or sys.nodes[-1] - lam < 3 * spacing:
        raise DomainError("lam too close to the spectral edges for the oracle")
    bx = sys.coupling(x)
    by = sys.coupling(y)
    hop = sys.operator(op)
    sign = 1.0 if side == "plus" else -1.0
    eye = np.eye(sys.dim)

    eps = np.array(_EPS_MULTS) * spacing
    vals = []
    for e in eps:
        z = lam + sign * 1j * e
        sol = np.linalg.solve(hop - z * eye, by)
        vals.append(bx.conj().T @ sol)
    extr = _extrap_to_zero(eps, vals)
    alt = _extrap_to_zero(eps[:-1], vals[:-1])
    scale = max(float(np.abs(extr).max()), 1e-300)
    est = float(np.abs(extr - alt).max() / scale)
    if not np.all(np.isfinite(extr)):
        raise NumericalFailure("extrapolated matrix resolvent not finite",
                               lam=lam, op=op, estimate=est)
    if return_estimate:
        return extr, est
    return extr


# ---------------------------------------------------------------------------
# Time-dependent oracles


def default_horizon(sys):
    """Integration horizon and step for the Cook integrals.

    T = 2.0 / mean spacing gives energy resolution well below the scale on
    which the fiber matrices vary while staying under the revival time of
    the discretized spectrum; dt resolves the fastest phase in the system.
    """
    t_final = 2.0 / sys.mean_spacing
    evals, _, _, _ = sys.eig()
    spread = float(np.abs(sys.h0diag[None, :] - evals[:, None]).max())
    dt = 0.1 / max(spread, 1e-12)
    return t_final, dt


def _window_coefs(t_final, dt):
    """Composite-Simpson coefficients times the cos^2 rolloff window."""
    n = int(np.ceil(t_final / dt))
    n += n % 2
    n = max(n, 8)
    h = t_final / n
    t = np.arange(n + 1) * h
    w = np.ones(n + 1)
    edge = 0.8 * t_final
    mask = t > edge
    xx = (t[mask] - edge) / (0.2 * t_final)
    w[mask] = np.cos(0.5 * np.pi * xx) ** 2
    simp = np.ones(n + 1)
    simp[1:-1:2] = 4.0
    simp[2:-1:2] = 2.0
    return (h / 3.0) * simp * w, h


def _eig_checked(sys):
    evals, p, pinv, cond = sys.eig()
    if cond > _EIG_COND_LIMIT:
        raise NumericalFailure(
            "eigendecomposition of H is too ill-conditioned; perturb the model",
            cond=cond,
        )
    return evals, p, pinv


def wave_minus(sys, t_final=None, dt=None):
    """Windowed Cook integral for W_-(H, H0).

    W_- = I - i int_0^T w(t) e^(-itH) (V - i C*C) e^(itH0) dt, evaluated in
    the eigenbasis of H so the time integral reduces to entrywise phase
    sums. The window w makes the operator an average of contractions, so
    sigma_max stays near 1 automatically.
    """
    if t_final is None or dt is None:
        t_def, dt_def = default_horizon(sys)
        t_final = t_def if t_final is None else t_final
        dt = dt_def if dt is None else dt
    evals, p, pinv = _eig_checked(sys)
    bop = sys.v - 1j * sys.cc
    m = pinv @ bop
    omega = sys.h0diag[None, :] - evals[:, None]
    coefs, h = _window_coefs(t_final, dt)
    e = _kernels.phase_window_sum(omega, coefs, h)
    return np.eye(sys.dim) - 1j * (p @ (m * e))


def wave_plus_adj(sys, t_final=None, dt=None):
    """Windowed Cook integral for W_+(H0, H) (the outgoing identification).

    W_+ = I - i int_0^T w(t) e^(itH0) (V - i C*C) e^(-itH) dt. Shares the
    phase table of wave_minus through transposition of the frequency grid.
    """
    if t_final is None or dt is None:
        t_def, dt_def = default_horizon(sys)
        t_final = t_def if t_final is None else t_final
        dt = dt_def if dt is None else dt
    evals, p, pinv = _eig_checked(sys)
    bop = sys.v - 1j * sys.cc
    n = bop @ p
    omega = sys.h0diag[:, None] - evals[None, :]
    coefs, h = _window_coefs(t_final, dt)
    e = _kernels.phase_window_sum(omega, coefs, h)
    return np.eye(sys.dim) - 1j * ((n * e) @ pinv)


def intertwining_residual(sys, w_minus):
    """Relative defect of H W_- = W_- H0, measured in the 2-norm of H."""
    h0 = np.diag(sys.h0diag.astype(complex))
    num = np.linalg.norm(sys.h @ w_minus - w_minus @ h0, 2)
    return float(num / np.linalg.norm(sys.h, 2))


@dataclass
class ScattOperatorResult:
    """Time-integrated scattering operator and its on-shell fibers.

    fibers maps node index j to the k x k matrix extracted with Gaussian
    wave packets centered at nodes[j]; raw_diag holds the renormalized
    diagonal blocks of S - I as a cruder extraction; offdiag_max is the
    largest far-off-diagonal block norm (a block-diagonality check).
    """

    s: np.ndarray
    node_indices: np.ndarray
    fibers: dict
    raw_diag: dict
    offdiag_max: float
    t_final: float
    dt: float


def _packet_fiber(sys, s, j, sigma):
    k = sys.k
    prof = np.exp(-((sys.nodes - sys.nodes[j]) ** 2) / (4.0 * sigma ** 2))
    amp = np.sqrt(sys.weights) * prof
    amp /= np.linalg.norm(amp)
    g = np.zeros((sys.dim, k), complex)
    for a in range(k):
        g[a::k, a] = amp
    return g.conj().T @ s @ g


def scatt_operator(sys, t_final=None, dt=None, fiber_fraction=0.5,
                   packet_width=1.0):
    """S(H, H0) = W_+(H0, H) W_-(H, H0) with on-shell fiber extraction.

    The finite horizon smears the energy delta over ~2 pi / T, so the fiber
    S(lam_j) is read off with normalized Gaussian packets of spectral width
    sigma = packet_width * (2 pi / T) centered at interior nodes (middle
    fiber_fraction of the grid): shat_ab = <g_j e_a, S g_j e_b>. The packet
    smearing biases the fiber by O(sigma^2); extracting at sigma and
    sigma sqrt(2) and combining 2 f(sigma) - f(sigma sqrt(2)) cancels the
    leading bias, leaving O(sigma^4) plus level-discreteness noise.
    """
    if t_final is None or dt is None:
        t_def, dt_def = default_horizon(sys)
        t_final = t_def if t_final is None else t_final
        dt = dt_def if dt is None else dt
    s = wave_plus_adj(sys, t_final, dt) @ wave_minus(sys, t_final, dt)

    n = len(sys.nodes)
    k = sys.k
    lo_i = int(np.floor(n * (0.5 - fiber_fraction / 2)))
    hi_i = int(np.ceil(n * (0.5 + fiber_fraction / 2)))
    idx = np.arange(lo_i, hi_i)

    sigma = packet_width * (2.0 * np.pi / t_final)
    fibers = {}
    for j in idx:
        f1 = _packet_fiber(sys, s, j, sigma)
        f2 = _packet_fiber(sys, s, j, sigma * np.sqrt(2.0))
        fibers[int(j)] = 2.0 * f1 - f2

    # Cruder extraction: diagonal blocks of S - I, renormalized by the
    # smeared on-shell delta w_j * (integral of the window) / (2 pi).
    win_int = 0.9 * t_final
    raw_diag = {}
    smi = s - np.eye(sys.dim)
    for j in idx:
        blk = smi[j * k:(j + 1) * k, j * k:(j + 1) * k]
        raw_diag[int(j)] = np.eye(k) + blk * (2.0 * np.pi / (sys.weights[j] * win_int))

    ridge = max(2, int(np.ceil(6.0 * sigma / sys.mean_spacing)))
    offdiag_max = 0.0
    scale = 2.0 * np.pi / (np.median(sys.weights) * win_int)
    for j in idx[:: max(1, len(idx) // 16)]:
        for l in range(0, n, max(1, n // 32)):
            if abs(l - j) <= ridge:
                continue
            blk = smi[j * k:(j + 1) * k, l * k:(l + 1) * k]
            offdiag_max = max(offdiag_max, float(np.linalg.norm(blk, 2)) * scale)

    return ScattOperatorResult(
        s=s, node_indices=idx, fibers=fibers, raw_diag=raw_diag,
        offdiag_max=offdiag_max, t_final=t_final, dt=dt,
    )


# ---------------------------------------------------------------------------
# Spectral subspaces and absorption


@dataclass
class SubspaceReport:
    dim_Hb: int
    dim_Hp_H: int
    dim_Hp_Hstar: int
    hd_decay_checks: list
    ran_w_minus_angle: float
    im_cut: float
    rank_w_minus: int = 0

    def to_json_dict(self):
        return {
            "dim_Hb": self.dim_Hb,
            "dim_Hp_H": self.dim_Hp_H,
            "dim_Hp_Hstar": self.dim_Hp_Hstar,
            "hd_decay_checks": self.hd_decay_checks,
            "ran_w_minus_angle": self.ran_w_minus_angle,
            "im_cut": self.im_cut,
            "rank_w_minus": self.rank_w_minus,
        }


def _auto_im_cut(evals):
    """Separate genuinely complex eigenvalues from discretization fuzz.

    The discretized continuum carries imaginary parts O(weight); a true
    eigenvalue of H sits at a grid-independent depth. Cut at the geometric
    mean of the deepest level and the bulk (90th percentile) level when
    they are separated by a factor 30, else report no complex eigenvalues.
    """
    im = np.abs(np.minimum(evals.imag, 0.0))
    deepest = im.max(initial=0.0)
    bulk = np.percentile(im, 90.0) if im.size else 0.0
    if deepest > 30.0 * max(bulk, 1e-14):
        return float(np.sqrt(deepest * max(bulk, 1e-14)))
    return float("inf")


def subspaces(sys, t_decay=None, im_cut=None, w_minus=None):
    """Inventory of bound, decaying and scattering-orthogonal subspaces.

    H_b: real eigenvalues outside the working band. H_p(H) and H_p(H*):
    eigenvalues below the imaginary cut (auto-separated by default), with
    eigenvectors of H* taken from the inverse eigenbasis. Each H_p(H)
    basis vector is propagated to t_decay and its final norm compared with
    the predicted exp(Im(lam) t). The largest principal angle between
    Ran(W_-) and the orthogonal complement of H_b + H_d(H*) is the
    range-of-wave-operator check; it is 0 by convention when both
    subspaces are trivial and no W_- is supplied.
    """
    evals, p, pinv = _eig_checked(sys)
    iv = sys.model.interval
    if im_cut is None:
        im_cut = _auto_im_cut(evals)

    real_mask = evals.imag > -1e-10
    outside = (evals.real < iv.lo - 1e-9) | (evals.real > iv.hi + 1e-9)
    hb_idx = np.nonzero(real_mask & outside)[0]
    hp_idx = np.nonzero(evals.imag < -im_cut)[0]

    if t_decay is None:
        worst = float(-evals.imag[hp_idx].max()) if hp_idx.size else 1.0
        t_decay = 3.0 / max(worst, 1e-12)

    checks = []
    for j in hp_idx:
        u = p[:, j] / np.linalg.norm(p[:, j])
        c = pinv @ u
        final = p @ (np.exp(-1j * evals * t_decay) * c)
        fn = float(np.linalg.norm(final))
        predicted = float(np.exp(evals.imag[j] * t_decay))
        checks.append({
            "eigval": complex(evals[j]),
            "final_norm": fn,
            "predicted": predicted,
            "consistent": fn <= predicted * 1.05 + 1e-12,
        })

    angle = 0.0
    rank_w = sys.dim
    need_angle = hb_idx.size + hp_idx.size > 0 or w_minus is not None
    if need_angle:
        from scipy.linalg import null_space, subspace_angles

        if w_minus is None:
            w_minus = wave_minus(sys)
        u_w, svals, _ = np.linalg.svd(w_minus)
        rank_w = int(np.count_nonzero(svals > 0.5))
        u_range = u_w[:, :rank_w]
        kill = []
        if hb_idx.size:
            kill.append(p[:, hb_idx])
        if hp_idx.size:
            kill.append(pinv.conj().T[:, hp_idx])
        if kill:
            q = np.concatenate(kill, axis=1)
            comp = null_space(q.conj().T)
            angle = float(np.max(subspace_angles(u_range, comp)))
        else:
            angle = 0.0

    return SubspaceReport(
        dim_Hb=int(hb_idx.size),
        dim_Hp_H=int(hp_idx.size),
        dim_Hp_Hstar=int(hp_idx.size),
        hd_decay_checks=checks,
        ran_w_minus_angle=angle,
        im_cut=float(im_cut),
        rank_w_minus=rank_w,
    )


@dataclass
class AbsorptionResult:
    p_scatt: float
    p_abs: float
    converged: bool
    times: np.ndarray
    norms_sq: np.ndarray


def absorption_probabilities(sys, u0, t_final=None, n_samples=256):
    """Survival probability of a state under the contraction semigroup.

    p_scatt = ||e^(-i t_final H) u0||^2 (the not-absorbed mass), p_abs its
    complement; converged when the survival curve has flattened over the
    last tenth of the horizon. The curve itself is returned so callers can
    verify monotone decay.
    """
    u0 = np.asarray(u0, complex).ravel()
    nrm = np.linalg.norm(u0)
    if nrm == 0:
        raise DomainError("absorption probe needs a nonzero state")
    u0 = u0 / nrm
    if t_final is None:
        t_final, _ = default_horizon(sys)
    evals, p, pinv = _eig_checked(sys)
    c = pinv @ u0
    times = np.linspace(0.0, t_final, int(n_samples))
    phases = np.exp(-1j * np.outer(evals, times))
    traj = p @ (phases * c[:, None])
    norms_sq = np.sum(np.abs(traj) ** 2, axis=0)
    if np.abs(sys.cc).max() == 0.0:
        # No absorber means H is Hermitian and the evolution is unitary,
        # so the survival curve is identically one; report the exact value
        # instead of the rounding noise of the propagated norms.
        norms_sq = np.ones_like(norms_sq)
    p_scatt = float(norms_sq[-1])
    tail = norms_sq[times >= 0.9 * t_final]
    converged = bool(
        abs(tail[-1] - tail[0]) <= 1e-3 * max(tail[-1], 1e-300)
    )
    return AbsorptionResult(
        p_scatt=p_scatt, p_abs=1.0 - p_scatt, converged=converged,
        times=times, norms_sq=norms_sq,
    )
