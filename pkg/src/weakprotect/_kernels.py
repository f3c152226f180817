"""Per-sample Monte-Carlo kernels.

Each kernel has a numba version and a vectorized numpy version with the same
signature. Set ``WEAKPROTECT_DISABLE_NUMBA=1`` to force the numpy path; it is
also used automatically when numba is not importable.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("WEAKPROTECT_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def _amplitudes(cos_alpha, beta):
    c = np.sqrt(np.clip(0.5 * (1.0 + cos_alpha), 0.0, 1.0))
    s = np.sqrt(np.clip(0.5 * (1.0 - cos_alpha), 0.0, 1.0))
    return c.astype(np.complex128), s * np.exp(1j * beta)


def fidelity_terms_numpy(cos_alpha, beta, kraus):
    """Return per-sample ``sum_i |<psi|K_i|psi>|^2`` and ``sum_i <psi|K_i^+ K_i|psi>``."""
    a0, a1 = _amplitudes(cos_alpha, beta)
    num = np.zeros(cos_alpha.shape[0])
    den = np.zeros(cos_alpha.shape[0])
    for k in kraus:
        v0 = k[0, 0] * a0 + k[0, 1] * a1
        v1 = k[1, 0] * a0 + k[1, 1] * a1
        overlap = np.conj(a0) * v0 + np.conj(a1) * v1
        num += overlap.real ** 2 + overlap.imag ** 2
        den += v0.real ** 2 + v0.imag ** 2 + v1.real ** 2 + v1.imag ** 2
    return num, den


def trajectory_terms_numpy(cos_alpha, beta, u, kraus):
    """One quantum trajectory per sample.

    ``u`` selects the Kraus branch by inverse-CDF over the branch weights
    ``||K_i psi||^2``; ``u`` beyond their sum means the run was discarded.
    Returns (kept indicator, fidelity of the kept output with the input).
    """
    a0, a1 = _amplitudes(cos_alpha, beta)
    n = cos_alpha.shape[0]
    kept = np.zeros(n)
    fid = np.zeros(n)
    cum = np.zeros(n)
    for k in kraus:
        v0 = k[0, 0] * a0 + k[0, 1] * a1
        v1 = k[1, 0] * a0 + k[1, 1] * a1
        w = v0.real ** 2 + v0.imag ** 2 + v1.real ** 2 + v1.imag ** 2
        hit = (kept == 0.0) & (u < cum + w) & (w > 0.0)
        overlap = np.conj(a0) * v0 + np.conj(a1) * v1
        f = np.where(w > 0.0, (overlap.real ** 2 + overlap.imag ** 2) / np.where(w > 0.0, w, 1.0), 0.0)
        fid = np.where(hit, f, fid)
        kept = np.where(hit, 1.0, kept)
        cum = cum + w
    return kept, fid


if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def fidelity_terms_numba(cos_alpha, beta, kraus):
        n = cos_alpha.shape[0]
        num = np.zeros(n)
        den = np.zeros(n)
        for j in range(n):
            c = np.sqrt(min(max(0.5 * (1.0 + cos_alpha[j]), 0.0), 1.0))
            s = np.sqrt(min(max(0.5 * (1.0 - cos_alpha[j]), 0.0), 1.0))
            a0 = complex(c, 0.0)
            a1 = s * complex(np.cos(beta[j]), np.sin(beta[j]))
            acc_num = 0.0
            acc_den = 0.0
            for i in range(kraus.shape[0]):
                v0 = kraus[i, 0, 0] * a0 + kraus[i, 0, 1] * a1
                v1 = kraus[i, 1, 0] * a0 + kraus[i, 1, 1] * a1
                ov = a0.conjugate() * v0 + a1.conjugate() * v1
                acc_num += ov.real * ov.real + ov.imag * ov.imag
                acc_den += v0.real * v0.real + v0.imag * v0.imag + v1.real * v1.real + v1.imag * v1.imag
            num[j] = acc_num
            den[j] = acc_den
        return num, den

    @numba.njit(cache=True, nogil=True)
    def trajectory_terms_numba(cos_alpha, beta, u, kraus):
        n = cos_alpha.shape[0]
        kept = np.zeros(n)
        fid = np.zeros(n)
        for j in range(n):
            c = np.sqrt(min(max(0.5 * (1.0 + cos_alpha[j]), 0.0), 1.0))
            s = np.sqrt(min(max(0.5 * (1.0 - cos_alpha[j]), 0.0), 1.0))
            a0 = complex(c, 0.0)
            a1 = s * complex(np.cos(beta[j]), np.sin(beta[j]))
            cum = 0.0
            for i in range(kraus.shape[0]):
                v0 = kraus[i, 0, 0] * a0 + kraus[i, 0, 1] * a1
                v1 = kraus[i, 1, 0] * a0 + kraus[i, 1, 1] * a1
                w = v0.real * v0.real + v0.imag * v0.imag + v1.real * v1.real + v1.imag * v1.imag
                if w > 0.0 and u[j] < cum + w:
                    ov = a0.conjugate() * v0 + a1.conjugate() * v1
                    kept[j] = 1.0
                    fid[j] = (ov.real * ov.real + ov.imag * ov.imag) / w
                    break
                cum += w
        return kept, fid

else:  # pragma: no cover
    fidelity_terms_numba = None
    trajectory_terms_numba = None


if USE_NUMBA:
    fidelity_terms = fidelity_terms_numba
    trajectory_terms = trajectory_terms_numba
else:
    fidelity_terms = fidelity_terms_numpy
    trajectory_terms = trajectory_terms_numpy
