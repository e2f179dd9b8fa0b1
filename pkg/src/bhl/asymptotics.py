"""Predicted singular-value laws, Hardy norms, and power-law fitting.

The closed-form laws live in AsymptoticLaw objects: s_n is predicted as
gamma * ||phi'||_p / (n + offset)^e.  The offset distinguishes the
standard-weight law sqrt(alpha+1)/(n+1) from pure power laws; it is 0
for the exponential-log family.

Hardy norms are circle means.  Polynomials are continuous up to the
boundary and the means are nondecreasing in r, so the sup is the r = 1
circle integral.  The Cauchy-type family is evaluated on radii
r_j = 1 - 2^{-j} until the means stabilize; they diverge for every
p > 1 (the boundary modulus ~ 1/(theta log^gamma(1/theta)) is not
p-integrable), which is detected by sustained growth, and the p = 1,
gamma <= 1 case is rejected outright.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DivergenceError,
    LawMismatchError,
    NonConvergedError,
    WeightDomainError,
    WindowError,
)
from .rearrangement import _theta_cells


class AsymptoticLaw:
    """s_n ~ gamma * symbol_factor / (n + offset)^exponent."""

    def __init__(self, gamma, exponent, symbol_factor=1.0, offset=0.0):
        if gamma < 0.0:
            raise ValueError(f"law constant must be >= 0, got {gamma}")
        if not exponent > 0.0:
            raise ValueError(f"law exponent must be > 0, got {exponent}")
        self.gamma = float(gamma)
        self.exponent = float(exponent)
        self.symbol_factor = float(symbol_factor)
        self.offset = float(offset)

    def __call__(self, n):
        n = np.asarray(n)
        if np.any(n < 1):
            raise ValueError("law evaluation needs n >= 1")
        out = self.gamma * self.symbol_factor / (n + self.offset) ** self.exponent
        return float(out) if out.ndim == 0 else out

    def __repr__(self):
        return (
            f"AsymptoticLaw(gamma={self.gamma:.6g}, exponent={self.exponent:.6g}, "
            f"symbol_factor={self.symbol_factor:.6g}, offset={self.offset:g})"
        )


def hardy_norm(deriv, p, rel_tol=1e-6, max_doublings=48):
    """||phi'||_{H^p} = (sup_r circle mean of |phi'|^p)^(1/p), p >= 1."""
    if not p >= 1.0:
        raise ValueError(f"hardy_norm needs p >= 1, got {p}")
    if deriv.kind == "poly":
        M = 1 << 16
        th = 2.0 * np.pi * (np.arange(M) + 0.5) / M
        vals = np.abs(np.polyval(deriv.coeffs[::-1], np.exp(1j * th)))
        return float(np.mean(vals**p)) ** (1.0 / p)
    if p == 1.0 and deriv.gamma <= 1.0:
        raise DivergenceError(
            f"ce symbol with gamma={deriv.gamma} <= 1 is not in H^1"
        )
    # circle means are nondecreasing in r, so the norms only grow with j;
    # divergence shows up as a sustained growth factor over a window of
    # doublings, convergence as shrinking increments
    norms = []
    last_change = np.inf
    for j in range(1, max_doublings + 1):
        r_j = -np.expm1(j * np.log(0.5))  # 1 - 2^-j without rounding to 1
        theta, wts = _theta_cells(deriv, r_j, 2)
        vals = deriv.abs_grid(np.array([r_j]), theta)[:, 0]
        norm = float(wts @ vals**p / (2.0 * np.pi)) ** (1.0 / p)
        norms.append(norm)
        if len(norms) > 1:
            last_change = abs(norm - norms[-2]) / abs(norm)
            if last_change <= rel_tol:
                return norm
        if norm > 1e12 or (len(norms) >= 7 and norm > 2.0 * norms[-7]):
            raise DivergenceError(
                f"H^{p} circle means grow without bound for the ce symbol "
                f"(gamma={deriv.gamma}): {norm:.3e} at radius 1-2^-{j}"
            )
    raise NonConvergedError(
        f"H^{p} circle means still moving after {max_doublings} radius "
        f"doublings (last relative change {last_change:.2e})"
    )


def predict_standard(alpha):
    """s_n(H_zbar) ~ sqrt(alpha+1)/(n+1) for the standard weight."""
    if not alpha > -1.0:
        raise WeightDomainError(f"standard law needs alpha > -1, got {alpha}")
    return AsymptoticLaw(np.sqrt(alpha + 1.0), 1.0, offset=1.0)


def predict_explog(alpha, beta):
    """s_n(H_zbar) ~ gamma/n^((beta+2)/(2(beta+1))) for the explog weight."""
    if not (alpha > 0.0 and beta > 0.0):
        raise WeightDomainError(
            f"explog law needs alpha, beta > 0, got alpha={alpha}, beta={beta}"
        )
    e = (beta + 2.0) / (2.0 * (beta + 1.0))
    gamma = np.sqrt((alpha * beta) ** (1.0 / (1.0 + beta)) / (1.0 + beta))
    return AsymptoticLaw(gamma, e, offset=0.0)


def predict_symbol(base, deriv, p):
    """Attach ||phi'||_{H^p} to a base law with exponent 1/p."""
    if abs(base.exponent - 1.0 / p) > 1e-12:
        raise LawMismatchError(
            f"base exponent {base.exponent} is not 1/p for p={p}"
        )
    return AsymptoticLaw(
        base.gamma, base.exponent, symbol_factor=hardy_norm(deriv, p), offset=base.offset
    )


def laplace_moment_prediction(alpha, beta, n):
    """Leading-order saddle approximation of the explog moment m[n].

    The saddle of (n+1)x + alpha/x^beta sits at x_n = (alpha beta/(n+1))
    ^(1/(1+beta)); with t = alpha/x_n^beta the curvature there is
    t beta(beta+1)/x_n^2, giving pi * x_n exp(-E_n) sqrt(2pi/(t beta
    (beta+1))).  The pi prefactor converts the unit integral to the
    moment convention m[n] = 2 pi int r^(2n+1) omega dr, which is what
    compute_moments returns; relative accuracy improves like 1/t.
    """
    if not (alpha > 0.0 and beta > 0.0):
        raise WeightDomainError(
            f"laplace prediction needs alpha, beta > 0, got {alpha}, {beta}"
        )
    if n < 1:
        raise ValueError(f"laplace prediction needs n >= 1, got {n}")
    x_n = (alpha * beta / (n + 1.0)) ** (1.0 / (1.0 + beta))
    t = alpha / x_n**beta
    E_n = (n + 1.0) * x_n + t
    return float(
        np.pi * x_n * np.exp(-E_n) * np.sqrt(2.0 * np.pi / (t * beta * (beta + 1.0)))
    )


def fit_power_law(spec, window):
    """Least-squares fit log s_n = log gamma - e log n over n in window.

    window is an inclusive 1-based (lo, hi) range of singular-value
    indices; returns (e_hat, gamma_hat, rms_log_residual).
    """
    lo, hi = int(window[0]), int(window[1])
    if spec.converged is False:
        raise WindowError("spectrum failed its convergence check; refusing to fit")
    if lo < 1 or hi > len(spec.values):
        raise WindowError(
            f"window [{lo}, {hi}] outside computed range [1, {len(spec.values)}]"
        )
    if hi - lo + 1 < 10:
        raise WindowError(f"window [{lo}, {hi}] has fewer than 10 points")
    s = spec.values[lo - 1 : hi]
    if np.any(s <= 0.0):
        raise WindowError("window contains nonpositive singular values")
    n = np.arange(lo, hi + 1, dtype=float)
    X = np.column_stack([np.ones(len(n)), -np.log(n)])
    coef, *_ = np.linalg.lstsq(X, np.log(s), rcond=None)
    resid = np.sqrt(np.mean((X @ coef - np.log(s)) ** 2))
    return float(coef[1]), float(np.exp(coef[0])), float(resid)
