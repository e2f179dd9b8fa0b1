"""Eigenvalues, singular values, counting functions, and Schatten sums.

Singular values come from s_n^2 = lambda_n(H_phibar* H_phibar), so the
spectral work happens on the banded Gram sections.  Truncation is
policed by a doubling test: a spectrum is accepted only when the first
N/2 singular values of the size-N section agree with the size-2N
section to a relative tolerance, since no finite-section convergence
rate is available a priori.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import DoublingTestError, EigenResidualError, WindowError
from .hankel import polynomial_gram


class SingularSpectrum:
    """Nonincreasing, nonnegative singular values with provenance.

    ``converged`` is True when the doubling test ran and passed, None
    when it was skipped (synthetic spectra, direct construction).
    """

    def __init__(self, values, source=None, converged=None):
        values = np.asarray(values, dtype=float)
        if np.any(values < 0.0):
            raise ValueError("singular values must be nonnegative")
        if np.any(np.diff(values) > 0.0):
            raise ValueError("singular values must be nonincreasing")
        self.values = values
        self.source = dict(source) if source else {}
        self.converged = converged

    @classmethod
    def from_values(cls, values, source=None):
        """Sort the given nonnegative values descending and wrap them."""
        v = np.sort(np.asarray(values, dtype=float))[::-1]
        return cls(v, source=source, converged=None)

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        head = ", ".join(f"{v:.4g}" for v in self.values[:4])
        return f"SingularSpectrum([{head}, ...], M={len(self)}, converged={self.converged})"


def _band_matvec(band, v):
    b = band.shape[0] - 1
    y = band[b] * v
    for off in range(1, b + 1):
        y[: len(v) - off] += band[b - off, off:] * v[off:]
        y[off:] += np.conj(band[b - off, off:]) * v[: len(v) - off]
    return y


def symmetric_eigenvalues(G, tol=1e-10):
    """All eigenvalues of a Hermitian BandedGram, sorted descending.

    Backed by banded tridiagonalization + implicit shifts (LAPACK);
    a sampled subset of eigenpairs is reconstructed and the residual
    ||Gv - lambda v|| <= tol * ||G|| verified, so a silent LAPACK
    breakdown cannot pass unnoticed.  Diagonal sections skip LAPACK.
    """
    if G.bandwidth == 0:
        return np.sort(G.band[0].real)[::-1]
    try:
        lam = scipy.linalg.eig_banded(G.band, lower=False, eigvals_only=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise EigenResidualError(f"banded eigensolver did not converge: {exc}") from exc
    lam = lam[::-1]
    scale = float(np.max(np.abs(lam))) if len(lam) else 0.0
    if scale > 0.0:
        N = G.size
        sample = sorted({0, N // 2, N - 1, N // 4, (3 * N) // 4})
        for i in sample:
            li = N - 1 - i  # ascending index of descending position i
            vals, vecs = scipy.linalg.eig_banded(
                G.band, lower=False, select="i", select_range=(li, li)
            )
            res = np.linalg.norm(_band_matvec(G.band, vecs[:, 0]) - vals[0] * vecs[:, 0])
            if res > tol * scale:
                raise EigenResidualError(
                    f"eigenpair residual {res:.3e} exceeds {tol:.1e} * ||G|| "
                    f"at sorted index {i} (lambda = {lam[i]:.6e})"
                )
    return lam


def singular_values(G, eig_tol=1e-10, doubling_rel_tol=1e-6, check_doubling=True):
    """s_n = sqrt(lambda_n(G)) descending, doubling-tested by default.

    The size-2N section is assembled from the same moment table and
    symbol; its first N/2 singular values must match within
    doubling_rel_tol or DoublingTestError reports the first offender.
    """
    lam = symmetric_eigenvalues(G, eig_tol)
    scale = float(np.max(np.abs(lam))) if len(lam) else 0.0
    if len(lam) and lam[-1] < -eig_tol * scale:
        raise EigenResidualError(
            f"Gram section is not PSD within tolerance: min eigenvalue "
            f"{lam[-1]:.3e} vs -{eig_tol:.1e} * {scale:.3e}"
        )
    s = np.sqrt(np.clip(lam, 0.0, None))

    converged = None
    if check_doubling:
        N = G.size
        G2 = polynomial_gram(G.mt, G.symbol, 2 * N)
        lam2 = symmetric_eigenvalues(G2, eig_tol)
        s2 = np.sqrt(np.clip(lam2, 0.0, None))
        half = N // 2
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(s[:half] / s2[:half] - 1.0)
        bad = np.nonzero(~(rel <= doubling_rel_tol))[0]
        if bad.size:
            i = int(bad[0])
            raise DoublingTestError(
                f"singular value {i} moved by rel {rel[i]:.3e} between "
                f"sections N={N} and 2N={2 * N} (tol {doubling_rel_tol:.1e})",
                index=i,
            )
        converged = True

    source = {
        "weight": repr(G.mt.weight),
        "symbol": repr(G.symbol),
        "N": G.size,
        "eig_tol": eig_tol,
        "doubling_rel_tol": doubling_rel_tol if check_doubling else None,
        "moment_rel_tol": G.mt.rel_tol,
    }
    return SingularSpectrum(s, source=source, converged=converged)


def counting(spec, s):
    """n(s) = #{n : s_n >= s}."""
    if not s > 0.0:
        raise ValueError(f"counting needs s > 0, got {s}")
    return int(np.sum(spec.values >= s))


def psi_functionals(spec, p, c, window):
    """Window statistics of psi(s) * n(s) for psi(t) = c * t^p.

    n(s) is piecewise constant with jumps exactly at the s_n, and psi is
    increasing, so sampling psi(s_n) * n(s_n) at the jump points inside
    [s_lo, s_hi] captures the extrema.  Returns (D_hat, d_hat) =
    (max, min) over those samples; these are window statistics standing
    in for the s -> 0+ limsup/liminf, never limit claims.
    """
    if not p > 0.0:
        raise ValueError(f"psi exponent must be positive, got {p}")
    s_lo, s_hi = window
    if not (0.0 < s_lo < s_hi):
        raise WindowError(f"window must satisfy 0 < s_lo < s_hi, got {window}")
    v = spec.values
    inside = v[(v >= s_lo) & (v <= s_hi) & (v > 0.0)]
    if inside.size == 0:
        raise WindowError(
            f"no singular values inside window [{s_lo}, {s_hi}]"
        )
    samples = np.array([c * s**p * counting(spec, s) for s in np.unique(inside)])
    return float(np.max(samples)), float(np.min(samples))


def schatten_norm(spec, p):
    """(sum s_n^p)^(1/p) over the computed range.

    Issues a RuntimeWarning when the last computed term still carries
    more than 1e-6 of the sum: the truncated tail is then likely to
    matter and the value is a lower bound, not an approximation.
    """
    if not p > 0.0:
        raise ValueError(f"Schatten index must be positive, got {p}")
    terms = spec.values**p
    total = float(np.sum(terms))
    if total == 0.0:
        return 0.0
    if terms[-1] > 1e-6 * total:
        warnings.warn(
            f"Schatten p={p} tail not negligible: last term is "
            f"{terms[-1] / total:.2e} of the sum; treat as a lower bound",
            RuntimeWarning,
            stacklevel=2,
        )
    return total ** (1.0 / p)
