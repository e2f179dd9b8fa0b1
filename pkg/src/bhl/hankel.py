"""Exact finite sections of H_phibar* H_phibar for polynomial symbols.

In the normalized monomial basis e_m = z^m / sqrt(m[m]) the Gram matrix
of a radial weight is banded with bandwidth d-1 (d the symbol degree),
and every entry is a finite combination of moment ratios:

    G[m][n] = sum_{j,k in [1,d], m+k = n+j} conj(c_j) c_k
              * ( m[m+k] - [m >= j] m[m] m[n] / m[m-j] ) / sqrt(m[m] m[n]).

Entries are differences of ratios that approach each other as m grows,
so everything is evaluated through log-moment differences and expm1;
naive subtraction loses all digits by m ~ 1e3 for ExpLog weights.

A two-dimensional polar quadrature oracle provides the independent
verification path: it never touches the entry formula, building
G = A - C C* from inner products against the grid's own normalization.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .errors import LogConvexityError, WeightDomainError

_QUAD_OPTS = dict(epsabs=1e-300, limit=200)


class PolynomialSymbol:
    """phi(z) = sum_{k=1}^d c_k z^k; no constant term.

    Hankel operators annihilate constants, so the constant coefficient
    is excluded by construction rather than silently ignored.
    """

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs))
        if c.ndim != 1 or len(c) == 0:
            raise ValueError("coeffs must be a nonempty 1-d sequence c[1..d]")
        self.is_real = not np.iscomplexobj(c) or np.all(c.imag == 0.0)
        self.coeffs = c.real.astype(float) if self.is_real else c.astype(complex)

    @property
    def degree(self):
        return len(self.coeffs)

    def __call__(self, z):
        z = np.asarray(z)
        return z * np.polyval(self.coeffs[::-1], z)

    def derivative_coeffs(self):
        """Coefficients of phi' as a plain polynomial, constant first."""
        return self.coeffs * np.arange(1, self.degree + 1)

    def __repr__(self):
        return f"PolynomialSymbol({[complex(c) if np.iscomplexobj(self.coeffs) else float(c) for c in self.coeffs]})"


class BandedGram:
    """Hermitian banded finite section of H_phibar* H_phibar.

    ``band`` uses upper diagonal-ordered storage: band[b - (n - m), n]
    holds G[m][n] for 0 <= n - m <= b, matching scipy.linalg.eig_banded.
    """

    def __init__(self, band, symbol, mt):
        self.band = band
        self.symbol = symbol
        self.mt = mt
        self.is_real = not np.iscomplexobj(band)

    @property
    def size(self):
        return self.band.shape[1]

    @property
    def bandwidth(self):
        return self.band.shape[0] - 1

    def diagonal(self):
        return self.band[-1].real.copy()

    def to_dense(self):
        N, b = self.size, self.bandwidth
        G = np.zeros((N, N), dtype=self.band.dtype)
        for off in range(b + 1):
            idx = np.arange(off, N)
            G[idx - off, idx] = self.band[b - off, off:]
            if off:
                G[idx, idx - off] = np.conj(self.band[b - off, off:])
        return G

    def __repr__(self):
        return f"BandedGram(size={self.size}, bandwidth={self.bandwidth})"


def _delta_log(mt, i, j):
    # log m[i] - log m[j], by ratio where the values are in normal range
    # (one rounding each) and by log differences in the deep tail.
    v = mt.values
    i = np.asarray(i)
    j = np.asarray(j)
    safe = (v[i] > 1e-280) & (v[j] > 1e-280)
    if np.all(safe):
        return np.log(v[i] / v[j])
    lv = mt.log_values
    out = lv[i] - lv[j]
    if np.any(safe):
        out = np.where(safe, np.log(np.where(safe, v[i], 1.0) / np.where(safe, v[j], 1.0)), out)
    return out


def hz_squared_sequence(mt, n_max):
    """m_w(n)^2 for n = 0..n_max: the squared singular values of H_zbar.

    m_w(n)^2 = m[n+1]/m[n] - m[n]/m[n-1] for n >= 1 and m[1]/m[0] at
    n = 0, evaluated as exp(D_{n-1}) * expm1(D_n - D_{n-1}) with
    D_n = log m[n+1] - log m[n].
    """
    n_max = int(n_max)
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    mt.require(n_max + 1)
    idx = np.arange(n_max + 2)
    delta = _delta_log(mt, idx[1:], idx[:-1])
    out = np.empty(n_max + 1)
    out[0] = np.exp(delta[0])
    if n_max >= 1:
        out[1:] = np.exp(delta[:-1][: n_max]) * np.expm1(delta[1 : n_max + 1] - delta[: n_max])
        bad = np.nonzero(out < -1e-13)[0]
        if bad.size:
            raise LogConvexityError(
                f"m_w(n)^2 negative at n={int(bad[0])} ({out[bad[0]]:.3e}); "
                "the moment table is not accurate enough for ratio differences"
            )
    return out


def monomial_gram_diagonal(mt, k, N):
    """Diagonal of H_{zbar^k}* H_{zbar^k} on e_0..e_{N-1}.

    For radial weights the operator is diagonal in the monomial basis:
    lambda_m = m[m+k]/m[m] - [m >= k] m[m]/m[m-k].
    """
    k = int(k)
    N = int(N)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    mt.require(N - 1 + k)
    m = np.arange(N)
    A = _delta_log(mt, m + k, m)
    out = np.exp(A)
    if N > k:
        tail = m[k:]
        B = _delta_log(mt, tail, tail - k)
        out[k:] = np.exp(B) * np.expm1(A[k:] - B)
        bad = np.nonzero(out < -1e-13)[0]
        if bad.size:
            raise LogConvexityError(
                f"monomial diagonal negative at m={int(bad[0])} ({out[bad[0]]:.3e})"
            )
    return out


def polynomial_gram(mt, symbol, N):
    """Exact banded finite section G[0..N-1][0..N-1] for a polynomial symbol.

    Assembly is vectorized over the row index per (band offset, j) pair
    with a fixed summation order, so output is deterministic.
    """
    N = int(N)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    d = symbol.degree
    mt.require(N - 1 + 2 * d)
    c = symbol.coeffs
    dtype = float if symbol.is_real else complex
    band = np.zeros((d, N), dtype=dtype)

    for off in range(d):
        m = np.arange(N - off)
        n = m + off
        acc = np.zeros(len(m), dtype=dtype)
        for j in range(1, d - off + 1):
            w = np.conj(c[j - 1]) * c[j + off - 1]
            if w == 0.0:
                continue
            # A = log( m[m+j+off] / sqrt(m[m] m[n]) ), B its projection
            # counterpart log( sqrt(m[m] m[n]) / m[m-j] )
            A = 0.5 * (_delta_log(mt, m + j + off, m) + _delta_log(mt, m + j + off, n))
            term = np.exp(A)
            if len(m) > j:
                mm = m[j:]
                B = 0.5 * (_delta_log(mt, mm, mm - j) + _delta_log(mt, n[j:], mm - j))
                term[j:] = np.exp(B) * np.expm1(A[j:] - B)
            acc += w * term
        band[d - 1 - off, off:] = acc

    return BandedGram(band, symbol, mt)


def dense_gram_oracle(w, symbol, N, n_r=None, n_theta=None):
    """Independent dense Gram section by two-dimensional polar quadrature.

    Builds A[m,n] = <phibar e_m, phibar e_n> and the analytic projection
    C[m,j] = <phibar e_m, e_j> on a trapezoid(theta) x Gauss-Legendre(r)
    grid, then G = A - C C*.  Every normalization (the e_m norms) comes
    from the same grid, so radial quadrature bias cancels to first
    order.  Returns (G, err_est) with err_est the max entrywise drift
    against a coarser grid.

    The trapezoid rule is exact for trigonometric polynomials below the
    grid's Nyquist order, which covers every angular frequency the
    integrands contain once n_theta >= 2(N + 2d) + 1.
    """
    N = int(N)
    if N < 1 or N > 64:
        raise WeightDomainError(f"oracle is for small sections, N in [1, 64]; got {N}")
    d = symbol.degree
    if n_theta is None:
        n_theta = 2 * (N + 2 * d) + 7
    if n_r is None:
        n_r = max(160, N + 2 * d + 40)

    def assemble(n_r, n_theta):
        x, wx = np.polynomial.legendre.leggauss(n_r)
        r = 0.5 * (x + 1.0)
        wr = 0.5 * wx * r * w.density(r)  # radial part of w dA, dtheta split off
        theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
        z = r[:, None] * np.exp(1j * theta[None, :])
        phi = symbol(z)
        dth = 2.0 * np.pi / n_theta

        # grid moments and normalized monomials
        mg = np.array([2.0 * np.pi * np.sum(wr * r ** (2 * m)) for m in range(N)])
        e = (r[:, None, None] ** np.arange(N)[None, None, :]) * np.exp(
            1j * np.outer(theta, np.arange(N))[None, :, :]
        ) / np.sqrt(mg)[None, None, :]

        pe = np.conj(phi)[:, :, None] * e  # phibar e_m on the grid
        wgt = np.repeat(wr * dth, n_theta)
        pe_flat = pe.reshape(-1, N)
        e_flat = e.reshape(-1, N)
        # <f, g> = int f conj(g): A[m,n] = <phibar e_m, phibar e_n>
        A = pe_flat.T @ (wgt[:, None] * pe_flat.conj())
        C = e_flat.conj().T @ (wgt[:, None] * pe_flat)  # C[j, m] = <phibar e_m, e_j>
        G = A - C.T @ C.conj()
        return 0.5 * (G + G.conj().T)

    G = assemble(n_r, n_theta)
    G_lo = assemble(max(24, (2 * n_r) // 3), n_theta + 4)
    err = float(np.max(np.abs(G - G_lo)))
    return G, err


def toeplitz_radial_eigs(mt, density, N):
    """Eigenvalues of the Toeplitz operator with radial density g.

    For dmu = g(r) dA the operator is diagonal on monomials with
    eigenvalue_n = (2 pi int_0^1 r^(2n+1) g(r) w(r) dr) / m[n].
    """
    N = int(N)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    mt.require(N - 1)
    w = mt.weight
    out = np.empty(N)
    for n in range(N):
        if w.kind == "standard":
            # t = r^2; QAWS handles the (1-t)^alpha endpoint factor
            val, _ = quad(
                lambda t: (w.alpha + 1.0) * t**n * float(density(np.sqrt(t))),
                0.0,
                1.0,
                weight="alg",
                wvar=(0.0, w.alpha),
                epsrel=1e-12,
                **_QUAD_OPTS,
            )
        else:
            val, _ = quad(
                lambda r: 2.0 * np.pi * r ** (2 * n + 1) * float(density(r)) * float(w.density(r)),
                0.0,
                1.0,
                epsrel=1e-12,
                points=[1.0 - 1.0 / (n + 2.0)] if n >= 8 else None,
                **_QUAD_OPTS,
            )
        out[n] = val / mt.values[n]
    return out
