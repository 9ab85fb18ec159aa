"""Stationary scattering matrices for H = H0 + V - i C*C.

S_V(lam) is the unitary scattering matrix of the self-adjoint pair
(H0, H0 + V), computed from boundary blocks by the stationary (Kuroda)
representation. The dissipative S(lam) multiplies S_V by an absorber
factor built from the perturbed trace maps and I - i C R_V(lam + i0) C*.
Each matrix is assembled along two algebraically independent routes and
the disagreement is recorded, so silent formula errors cannot pass.

S(lam) is always a contraction; it loses invertibility exactly at
spectral singularities, where I - i C R_V(lam - i0) C* degenerates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boundary import SINGULARITY_RTOL, boundary_bundle
from .errors import DomainError, SpectralSingularityError

TWO_PI = 2.0 * np.pi


@dataclass
class GammaBlocks:
    """Perturbed trace maps compressed onto the two coupling factors."""

    lam: float
    zvg_plus: np.ndarray
    zvc_plus: np.ndarray
    zvc_minus: np.ndarray
    zvg_minus: np.ndarray


@dataclass
class SMatrixResult:
    """S_V(lam), S(lam), inverse when it exists, and diagnostics.

    sigma_min/sigma_max are singular values of S; defect = I - S^dagger S
    is Hermitian PSD for a contraction. cross_check_residuals records the
    disagreement between independent assembly routes (keys kuroda_forms,
    rf_forms, left_right). s_inv is None when lam is a spectral
    singularity.
    """

    lam: float
    s_v: np.ndarray
    s: np.ndarray
    s_inv: np.ndarray | None
    sigma_min: float
    sigma_max: float
    defect: np.ndarray
    cross_check_residuals: dict = field(default_factory=dict)


def _gamma_from_bundle(model, b):
    zg, zc = b.zg, b.zc
    kz = model.K
    zvg_p = zg - zg @ kz @ b.rv("G", "G", "plus")
    zvg_m = zg - zg @ kz @ b.rv("G", "G", "minus")
    zvc_p = zc - zg @ kz @ b.rv("G", "C", "plus")
    zvc_m = zc - zg @ kz @ b.rv("G", "C", "minus")
    return GammaBlocks(b.lam, zvg_p, zvc_p, zvc_m, zvg_m)


def gamma_blocks(model, lam, rel_tol=1e-12):
    """Compressions of the perturbed trace maps Gamma_pm at one energy.

    zvg_pm = Z0(lam;G) - Z0(lam;G) K (G R_V(lam pm i0) G*) and the C-column
    analog with (G R_V C*).
    """
    return _gamma_from_bundle(model, boundary_bundle(model, lam, rel_tol))


def _s_v_from_bundle(model, b):
    zg = b.zg
    kz = model.K
    eye = np.eye(model.k)
    canonical = eye - TWO_PI * 1j * zg @ np.linalg.solve(b.w_plus, kz) @ zg.conj().T
    other = eye - TWO_PI * 1j * zg @ (
        (np.eye(model.m) - kz @ b.rv("G", "G", "plus")) @ kz
    ) @ zg.conj().T
    residual = float(np.linalg.norm(canonical - other, 2))
    return canonical, residual


def s_v_matrix(model, lam, rel_tol=1e-12):
    """Unitary S_V(lam) for the pair (H0, H0 + V).

    Canonical route inverts I + K G R0(lam+i0) G*; the cross route uses the
    already-inverted R_V block. Returns (matrix, residual between routes).
    """
    b = boundary_bundle(model, lam, rel_tol)
    return _s_v_from_bundle(model, b)


def _result_from_bundle(model, b, rel_tol=1e-12):
    k, r = model.k, model.r
    eye_k, eye_r = np.eye(k), np.eye(r)
    s_v, kuroda_res = _s_v_from_bundle(model, b)
    gb = _gamma_from_bundle(model, b)
    u_p, u_m = gb.zvc_plus, gb.zvc_minus

    a_plus = b.a_matrix("plus")
    factor = eye_k - TWO_PI * u_p @ np.linalg.solve(a_plus, u_p.conj().T)
    s = factor @ s_v

    crc_p = b.crc_full("plus")
    factor_rf = eye_k - TWO_PI * u_p @ (eye_r + 1j * crc_p) @ u_p.conj().T
    rf_res = float(np.linalg.norm(factor_rf @ s_v - s, 2))

    s_left = s_v @ (eye_k - TWO_PI * u_m @ (eye_r + 1j * crc_p) @ u_m.conj().T)
    lr_res = float(np.linalg.norm(s - s_left, 2))

    svals = np.linalg.svd(s, compute_uv=False)
    defect = eye_k - s.conj().T @ s

    a_minus = b.a_matrix("minus")
    bm = b.rv("C", "C", "minus")
    smin_a = np.linalg.svd(a_minus, compute_uv=False)[-1]
    if smin_a < SINGULARITY_RTOL * (1.0 + np.linalg.norm(bm, 2)):
        s_inv = None
    else:
        s_inv = np.linalg.solve(
            s_v, eye_k + TWO_PI * u_p @ np.linalg.solve(a_minus, u_p.conj().T)
        )

    return SMatrixResult(
        lam=b.lam, s_v=s_v, s=s, s_inv=s_inv,
        sigma_min=float(svals[-1]), sigma_max=float(svals[0]),
        defect=defect,
        cross_check_residuals={
            "kuroda_forms": kuroda_res,
            "rf_forms": rf_res,
            "left_right": lr_res,
        },
    )


def s_matrix(model, lam, rel_tol=1e-12):
    """Full dissipative scattering matrix S(lam) with diagnostics.

    Canonical value: S = (I - 2 pi zvc+ (I - i C R_V(lam+i0) C*)^(-1)
    zvc+^dagger) S_V. Cross routes: the same factor written with the full
    resolvent via C R(lam+i0) C*, and the left-sided variant with zvc-.
    """
    b = boundary_bundle(model, lam, rel_tol)
    return _result_from_bundle(model, b, rel_tol)


def s_inverse(model, lam, rel_tol=1e-12):
    """S(lam)^(-1) = S_V^(-1)(I + 2 pi zvc+ A(lam)^(-1) zvc+^dagger).

    A(lam) = I - i C R_V(lam-i0) C*. Raises SpectralSingularityError when
    A(lam) is numerically singular, which is exactly the failure of
    invertibility of S(lam).
    """
    b = boundary_bundle(model, lam, rel_tol)
    a_minus = b.a_matrix("minus")
    bm = b.rv("C", "C", "minus")
    smin = np.linalg.svd(a_minus, compute_uv=False)[-1]
    thr = SINGULARITY_RTOL * (1.0 + np.linalg.norm(bm, 2))
    if smin < thr:
        raise SpectralSingularityError(b.lam, smin, thr)
    s_v, _ = _s_v_from_bundle(model, b)
    u_p = _gamma_from_bundle(model, b).zvc_plus
    eye_k = np.eye(model.k)
    return np.linalg.solve(
        s_v, eye_k + TWO_PI * u_p @ np.linalg.solve(a_minus, u_p.conj().T)
    )


def defect_closed_form_v0(model, lam, rel_tol=1e-12):
    """Closed form of I - S^dagger S for V = 0 (test oracle only).

    Requires K = 0; then the defect equals
    4 pi Z0(lam;C) (I + i C R0(lam-i0) C*)^(-1) (I - i C R0(lam+i0) C*)^(-1)
    Z0(lam;C)^dagger, manifestly PSD.
    """
    if model.K.size and np.abs(model.K).max() != 0.0:
        raise DomainError("closed-form defect requires a model with K = 0")
    b = boundary_bundle(model, lam, rel_tol)
    zc = b.zc
    eye_r = np.eye(model.r)
    cc_p = b.r0("C", "C", "plus")
    cc_m = b.r0("C", "C", "minus")
    left = np.linalg.inv(eye_r + 1j * cc_m)
    right = np.linalg.inv(eye_r - 1j * cc_p)
    return 2.0 * TWO_PI * zc @ left @ right @ zc.conj().T
