"""Level-set geometry: R(t), its inverse, trace integrals, lattices.

Everything here integrates over the truncated disk {|z| <= r_max} in
polar coordinates with the boundary substitution u = log(1/(1-r)), so
dA/tau^2 = r (1-r) / tau(r)^2 du dtheta.  Integrands like 1/tau^2 are
not integrable up to |z| = 1, so r_max is always an explicit argument
and level_measure reports how much the answer moves when r_max is
pushed halfway closer to 1.

Superlevel sets are resolved per angle: along each radial slice the
crossing of tau|phi'| through the level t is located by linear
interpolation and the boundary cell is split, which keeps the
indicator integral second-order accurate.  Meshes refine dyadically
until successive estimates agree to a relative tolerance.

The Cauchy-type family phi'(z) = 1/((1-z) log^gamma(e/(1-z))) puts all
its mass in a spike of angular width ~ (1-r) around theta = 0, so its
angular mesh is log-graded toward the singular angle; a uniform mesh
aliases the spike and converges to wrong answers while looking stable.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import CoveringError, NonConvergedError, WeightDomainError


class SymbolDerivative:
    """|phi'| evaluation for polynomial symbols or the Cauchy-type family.

    Use the classmethods ``polynomial`` (coefficients of phi', constant
    first), ``from_symbol`` (hankel.PolynomialSymbol), or ``ce_family``
    (phi'(z) = 1/((1-z) log^gamma(e/(1-z))), gamma > 1).
    """

    def __init__(self, kind, coeffs=None, gamma=None):
        self.kind = kind
        self.coeffs = coeffs
        self.gamma = gamma

    @classmethod
    def polynomial(cls, coeffs):
        c = np.atleast_1d(np.asarray(coeffs))
        if c.ndim != 1 or len(c) == 0:
            raise ValueError("coeffs of phi' must be a nonempty 1-d sequence")
        if not np.iscomplexobj(c) or np.all(c.imag == 0.0):
            c = c.real.astype(float)
        return cls("poly", coeffs=c)

    @classmethod
    def from_symbol(cls, symbol):
        return cls.polynomial(symbol.derivative_coeffs())

    @classmethod
    def ce_family(cls, gamma):
        if not gamma > 1.0:
            raise WeightDomainError(f"ce family needs gamma > 1, got {gamma}")
        return cls("ce", gamma=float(gamma))

    @property
    def is_radial(self):
        if self.kind != "poly":
            return False
        return np.count_nonzero(self.coeffs) <= 1

    def __call__(self, z):
        """|phi'(z)| at arbitrary complex points."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "poly":
            return np.abs(np.polyval(self.coeffs[::-1], z))
        w = 1.0 - z
        return 1.0 / (np.abs(w) * np.abs(1.0 - np.log(w)) ** self.gamma)

    def radial_abs(self, r):
        """|phi'| on a radius for radial moduli (single-term phi')."""
        if not self.is_radial:
            raise ValueError("symbol derivative modulus is not radial")
        r = np.asarray(r, dtype=float)
        k = np.nonzero(self.coeffs)[0]
        if k.size == 0:
            return np.zeros_like(r)
        return np.abs(self.coeffs[k[0]]) * r ** int(k[0])

    def abs_grid(self, r, theta):
        """|phi'| on an outer(theta, r) polar grid, boundary-stable.

        For the Cauchy-type family 1 - z is assembled as
        (1-r) + 2 r sin^2(theta/2), exact near z = 1 where the naive
        difference cancels.
        """
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if self.kind == "poly":
            z = r[None, :] * np.exp(1j * theta[:, None])
            return np.abs(np.polyval(self.coeffs[::-1], z))
        s = 1.0 - r
        rew = s[None, :] + 2.0 * r[None, :] * np.sin(0.5 * theta[:, None]) ** 2
        imw = -r[None, :] * np.sin(theta)[:, None]
        w = rew + 1j * imw
        return 1.0 / (np.abs(w) * np.abs(1.0 - np.log(w)) ** self.gamma)

    def __repr__(self):
        if self.kind == "poly":
            c = [complex(v) if np.iscomplexobj(self.coeffs) else float(v) for v in self.coeffs]
            return f"SymbolDerivative.polynomial({c})"
        return f"SymbolDerivative.ce_family(gamma={self.gamma})"


class MeasureResult(float):
    """A float carrying its grid-refinement and truncation diagnostics."""

    def __new__(cls, value, refine_error=0.0, r_max_delta=None):
        obj = super().__new__(cls, value)
        obj.refine_error = refine_error
        obj.r_max_delta = r_max_delta
        return obj


def _u_grid(r_max, level):
    u_max = -np.log1p(-r_max)
    n = 1024 * 2**level + 1
    u = np.linspace(0.0, u_max, n)
    return u, -np.expm1(-u)


def _theta_cells(deriv, r_max, level):
    """Angular nodes and weights so that sum w_j I(theta_j) ~ int I dtheta."""
    if deriv.kind == "poly":
        M = max(256, 32 * len(deriv.coeffs)) * 2**level
        return 2.0 * np.pi * np.arange(M) / M, np.full(M, 2.0 * np.pi / M)
    # log-graded mesh around the singular angle theta = 0, folded by the
    # conjugation symmetry |phi'(conj z)| = |phi'(z)|
    u_max = -np.log1p(-r_max)
    n_b = 192 * 2**level
    n_s = 192 * 2**level
    th_cut = 0.1
    bulk = np.linspace(th_cut, np.pi, n_b)
    wb = np.full(n_b, bulk[1] - bulk[0])
    wb[0] *= 0.5
    wb[-1] *= 0.5
    v = np.linspace(np.log(th_cut), -u_max - 2.0, n_s)
    spike = np.exp(v)
    hv = abs(v[1] - v[0])
    ws = np.full(n_s, hv) * spike
    ws[0] *= 0.5
    ws[-1] *= 0.5
    theta = np.concatenate([bulk, spike, [0.0]])
    wts = np.concatenate([wb, ws, [spike[-1]]])
    return theta, 2.0 * wts


def _slice_integrals(f, dens, du, t):
    """Per-row integral of dens over {f > t} along the u axis.

    Trapezoid on the indicator-masked integrand plus a linear-crossing
    correction in each cell where f - t changes sign.
    """
    ind = f > t
    base = np.where(ind, dens[None, :], 0.0)
    I = np.trapezoid(base, dx=du, axis=1)
    flips = ind[:, :-1] != ind[:, 1:]
    ii, jj = np.nonzero(flips)
    if ii.size:
        f0 = f[ii, jj]
        f1 = f[ii, jj + 1]
        frac = (t - f0) / (f1 - f0)
        d0 = dens[jj]
        d1 = dens[jj + 1]
        dm = d0 + (d1 - d0) * frac
        left = du * 0.5 * (d0 + dm) * frac
        right = du * 0.5 * (dm + d1) * (1.0 - frac)
        counted = np.where(f0 > t, du * 0.5 * d0, 0.0) + np.where(f1 > t, du * 0.5 * d1, 0.0)
        corr = np.where(f0 > t, left, right) - counted
        np.add.at(I, ii, corr)
    return I


def _field_rows(tau_prof, deriv, r, theta_block):
    tau_vals = np.asarray(tau_prof(r), dtype=float)
    return tau_vals[None, :] * deriv.abs_grid(r, theta_block), tau_vals


def _measure_at(tau_prof, deriv, t, r_max, level):
    u, r = _u_grid(r_max, level)
    du = u[1] - u[0]
    tau_vals = np.asarray(tau_prof(r), dtype=float)
    dens = r * (1.0 - r) / tau_vals**2
    if deriv.is_radial:
        f = (tau_vals * deriv.radial_abs(r))[None, :]
        return 2.0 * np.pi * float(_slice_integrals(f, dens, du, t)[0])
    theta, wts = _theta_cells(deriv, r_max, level)
    total = 0.0
    for lo in range(0, len(theta), 256):
        block = theta[lo : lo + 256]
        f = tau_vals[None, :] * deriv.abs_grid(r, block)
        total += float(wts[lo : lo + 256] @ _slice_integrals(f, dens, du, t))
    return total


def _refined(fn, rel_tol, max_level):
    prev = fn(0)
    for level in range(1, max_level + 1):
        cur = fn(level)
        scale = max(abs(cur), abs(prev))
        err = abs(cur - prev) / scale if scale > 0.0 else 0.0
        if err < rel_tol:
            return cur, err, level
        prev = cur
    raise NonConvergedError(
        f"dyadic refinement did not reach rel tol {rel_tol:.1e} within "
        f"{max_level} levels (last delta {err:.3e})"
    )


def level_measure(tau_prof, deriv, t, r_max, rel_tol=1e-4, max_level=5, check_r_max=True):
    """R(t) = integral of dA/tau^2 over {tau|phi'| > t, |z| <= r_max}.

    Returns a MeasureResult float whose ``refine_error`` is the last
    dyadic-refinement delta and whose ``r_max_delta`` reports how much
    the value moves when r_max is pushed halfway to 1 (capped at the
    tau profile's own reach).  The caller owns the truncation decision.
    """
    if not t > 0.0:
        raise ValueError(f"level t must be positive, got {t}")
    if not 0.0 < r_max < 1.0:
        raise WeightDomainError(f"r_max must lie in (0, 1), got {r_max}")
    val, err, level = _refined(
        lambda lv: _measure_at(tau_prof, deriv, t, r_max, lv), rel_tol, max_level
    )
    delta = None
    if check_r_max:
        r_push = min(0.5 * (1.0 + r_max), tau_prof.r_hi)
        if r_push > r_max:
            delta = abs(_measure_at(tau_prof, deriv, t, r_push, level) - val)
        else:
            delta = 0.0
    return MeasureResult(val, refine_error=err, r_max_delta=delta)


def rearrangement_plus(tau_prof, deriv, x, r_max, rel_tol=1e-4, iters=48):
    """R+(x) = sup { t : R(t) >= x }, by monotone bisection in log t.

    One dyadic mesh level is fixed for the whole bisection, so R is
    evaluated through the exact same grids at every t and the computed
    R is genuinely monotone in t.  The returned value is the high end
    of the final bracket, which preserves R+(R(t)) >= t.  If even the
    smallest probed level has R < x the sup runs over an empty set and
    0 is returned.
    """
    if not x > 0.0:
        raise ValueError(f"rearrangement_plus needs x > 0, got {x}")
    T = bloch_norm(tau_prof, deriv, r_max=r_max)
    if T == 0.0:
        return 0.0
    _, _, level = _refined(
        lambda lv: _measure_at(tau_prof, deriv, T / 8.0, r_max, lv), rel_tol, 5
    )
    R = lambda t: _measure_at(tau_prof, deriv, t, r_max, level)
    t_hi = T * (1.0 + 1e-9)
    if R(t_hi) >= x:
        return t_hi
    t_lo = T * 2.0**-10
    while R(t_lo) < x:
        t_lo *= 0.25
        if t_lo < T * 1e-15:
            return 0.0
    for _ in range(iters):
        mid = np.sqrt(t_lo * t_hi)
        if R(mid) >= x:
            t_lo = mid
        else:
            t_hi = mid
    return float(t_hi)


def trace_integral(tau_prof, deriv, h, r_max, rel_tol=1e-4, max_level=5):
    """int h(tau |phi'|) dA/tau^2 over {|z| <= r_max}.

    h must be increasing and convex with h(0) = 0; this is spot-checked
    on a geometric sample, the caller owns the rest.
    """
    if not 0.0 < r_max < 1.0:
        raise WeightDomainError(f"r_max must lie in (0, 1), got {r_max}")
    h0 = float(h(np.asarray(0.0)))
    T = max(bloch_norm(tau_prof, deriv, r_max=r_max), 1e-300)
    probe = T * np.logspace(-6, 0, 9)
    hp = np.asarray(h(probe), dtype=float)
    if abs(h0) > 1e-12 * max(1.0, float(hp[-1])):
        raise ValueError(f"h(0) must be 0, got {h0}")
    if np.any(np.diff(hp) < -1e-12 * max(1.0, float(np.max(np.abs(hp))))):
        raise ValueError("h must be nondecreasing on (0, sup tau|phi'|]")
    mids = np.asarray(h(0.5 * (probe[:-1] + probe[1:])), dtype=float)
    if np.any(mids > 0.5 * (hp[:-1] + hp[1:]) + 1e-9 * max(1.0, float(hp[-1]))):
        raise ValueError("h fails midpoint convexity on the spot-check grid")

    def at_level(level):
        u, r = _u_grid(r_max, level)
        du = u[1] - u[0]
        tau_vals = np.asarray(tau_prof(r), dtype=float)
        dens = r * (1.0 - r) / tau_vals**2
        if deriv.is_radial:
            f = tau_vals * deriv.radial_abs(r)
            return 2.0 * np.pi * float(np.trapezoid(np.asarray(h(f)) * dens, dx=du))
        theta, wts = _theta_cells(deriv, r_max, level)
        total = 0.0
        for lo in range(0, len(theta), 256):
            f = tau_vals[None, :] * deriv.abs_grid(r, theta[lo : lo + 256])
            rows = np.trapezoid(np.asarray(h(f)) * dens[None, :], dx=du, axis=1)
            total += float(wts[lo : lo + 256] @ rows)
        return total

    val, err, _ = _refined(at_level, rel_tol, max_level)
    return MeasureResult(val, refine_error=err, r_max_delta=None)


def bloch_norm(tau_prof, deriv, r_max=None):
    """sup over |z| <= r_max of tau(r) |phi'(z)|, by grid + local zoom.

    The coarse grid uses the same angular grading as the integrators,
    then the running argmax is refined on shrinking windows.
    """
    if r_max is None:
        r_max = min(tau_prof.r_hi, 1.0 - 1e-9)
    u_max = -np.log1p(-r_max)

    def f_of(u_arr, th_arr):
        r = -np.expm1(-np.asarray(u_arr, dtype=float))
        tau_vals = np.asarray(tau_prof(r), dtype=float)
        if deriv.is_radial:
            return (tau_vals * deriv.radial_abs(r))[None, :]
        return tau_vals[None, :] * deriv.abs_grid(r, np.asarray(th_arr, dtype=float))

    u = np.linspace(0.0, u_max, 2049)
    if deriv.is_radial:
        theta = np.array([0.0])
    else:
        theta, _ = _theta_cells(deriv, r_max, 0)
    f = f_of(u, theta)
    it, iu = np.unravel_index(np.argmax(f), f.shape)
    best = float(f[it, iu])
    if best == 0.0:
        return 0.0
    cu, ct = u[iu], theta[it if not deriv.is_radial else 0]
    wu = u[1] - u[0]
    wt = np.pi / max(len(theta), 1)
    for _ in range(14):
        uu = np.clip(np.linspace(cu - wu, cu + wu, 17), 0.0, u_max)
        tt = np.linspace(ct - wt, ct + wt, 17) if not deriv.is_radial else np.array([0.0])
        fz = f_of(uu, tt)
        it, iu = np.unravel_index(np.argmax(fz), fz.shape)
        best = max(best, float(fz[it, iu]))
        cu = uu[iu]
        if not deriv.is_radial:
            ct = tt[it]
        wu /= 6.0
        wt /= 6.0
    return best


class Lattice:
    """(tau, delta)-lattice: centers with disks D(z_k, delta tau(z_k)).

    ``multiplicity`` is the measured maximum overlap count of the
    b-dilated disks on the verification grid; ``comparability`` is the
    measured tau-ratio constant C over delta*tau displacements.
    """

    def __init__(self, centers, radii, delta, b, multiplicity, comparability, r_max, tau_prof):
        self.centers = centers
        self.radii = radii
        self.delta = delta
        self.b = b
        self.multiplicity = multiplicity
        self.comparability = comparability
        self.r_max = r_max
        self.tau = tau_prof

    def __len__(self):
        return len(self.centers)

    def __repr__(self):
        return (
            f"Lattice(n={len(self)}, delta={self.delta}, b={self.b}, "
            f"multiplicity={self.multiplicity}, C={self.comparability:.3f})"
        )


def build_lattice(tau_prof, delta, r_max, b=1.25):
    """Greedy (tau, delta)-lattice on {|z| <= r_max}, covering-verified.

    Scan rings are delta*tau/8 apart; a scanned point becomes a center
    iff it lies in no accepted disk D(z_k, delta tau(z_k)), which makes
    the accepted set maximal on the scan grid: separation >=
    delta*tau(z_k) gives the shrunk-disk disjointness for any C >= 1,
    and maximality makes the b-dilated disks cover as long as
    b >= 1 + C/8.  Covering is then verified on an offset grid and the
    failure carries an uncovered witness.
    """
    if not 0.0 < delta <= 0.5:
        raise WeightDomainError(f"delta must lie in (0, 0.5], got {delta}")
    if not 0.0 < r_max < 1.0 or r_max > tau_prof.r_hi:
        raise WeightDomainError(
            f"r_max must lie in (0, 1) within the profile reach {tau_prof.r_hi}"
        )
    C = tau_prof.measured_comparability(delta, r_max)
    if 1.0 + C / 8.0 > b:
        raise WeightDomainError(
            f"dilation b={b} cannot cover: measured comparability C={C:.3f} "
            f"needs b >= {1.0 + C / 8.0:.3f}"
        )

    centers = []
    taus = []
    tree = None
    pending = 0
    r = 0.0
    ring_idx = 0
    while r <= r_max:
        tau_r = float(tau_prof(r))
        step = delta * tau_r / 8.0
        if r == 0.0:
            cand = np.array([0.0 + 0.0j])
        else:
            M = max(8, int(np.ceil(2.0 * np.pi * r / step)))
            th = 2.0 * np.pi * (np.arange(M) + 0.5 * (ring_idx % 2)) / M
            cand = r * np.exp(1j * th)
        keep = np.ones(len(cand), dtype=bool)
        if centers:
            pts = np.column_stack([cand.real, cand.imag])
            if tree is not None and len(centers) - pending > 0:
                radius = delta * C * tau_r * 1.0001 + 1e-15
                hits = tree.query_ball_point(pts, radius)
                base = np.array(centers[: len(centers) - pending])
                base_tau = np.array(taus[: len(centers) - pending])
                for i, hit in enumerate(hits):
                    for k in hit:
                        if abs(cand[i] - base[k]) < delta * base_tau[k]:
                            keep[i] = False
                            break
            if pending:
                tail = np.array(centers[-pending:])
                tail_tau = np.array(taus[-pending:])
                d = np.abs(cand[:, None] - tail[None, :])
                keep &= ~np.any(d < delta * tail_tau[None, :], axis=1)
        # sequential intra-ring acceptance
        accepted_here = []
        for i in np.nonzero(keep)[0]:
            ok = True
            for zc, tz in accepted_here:
                if abs(cand[i] - zc) < delta * tz:
                    ok = False
                    break
            if ok:
                tz = float(tau_prof(abs(cand[i])))
                accepted_here.append((cand[i], tz))
        for zc, tz in accepted_here:
            centers.append(zc)
            taus.append(tz)
        pending += len(accepted_here)
        if pending > 512:
            pts_all = np.array(centers)
            tree = cKDTree(np.column_stack([pts_all.real, pts_all.imag]))
            pending = 0
        r += step
        ring_idx += 1

    centers = np.array(centers)
    taus = np.array(taus)

    # verification grid: rings offset by half a step, angles offset too
    test_pts = [0.5 * delta * float(tau_prof(0.0)) / 8.0 + 0.0j]
    r = float(abs(test_pts[0]))
    ring_idx = 0
    while r <= r_max:
        step = delta * float(tau_prof(r)) / 8.0
        M = max(8, int(np.ceil(2.0 * np.pi * r / step)))
        th = 2.0 * np.pi * (np.arange(M) + 0.25 + 0.5 * (ring_idx % 2)) / M
        test_pts.extend(r * np.exp(1j * th))
        r += step
        ring_idx += 1
    test = np.array(test_pts)
    test = test[np.abs(test) <= r_max]
    ttree = cKDTree(np.column_stack([test.real, test.imag]))
    counts = np.zeros(len(test), dtype=np.int32)
    covered = np.zeros(len(test), dtype=bool)
    for zc, tz in zip(centers, taus):
        hit = ttree.query_ball_point([zc.real, zc.imag], b * delta * tz)
        counts[hit] += 1
        inner = [k for k in hit if abs(test[k] - zc) <= delta * tz]
        covered[inner] = True
    miss = np.nonzero(~covered)[0]
    if miss.size:
        # maximality only guarantees coverage by the dilated disks
        dil_miss = np.nonzero(counts == 0)[0]
        if dil_miss.size:
            wz = complex(test[dil_miss[0]])
            raise CoveringError(
                f"dilated disks leave {dil_miss.size} verification points "
                f"uncovered, first at {wz:.6f}",
                witness=wz,
            )
    mult = int(counts.max()) if len(counts) else 0
    return Lattice(centers, delta * taus, delta, b, mult, C, r_max, tau_prof)


def besov_sum(lattice, deriv, p):
    """Sum over lattice cells of (cell average of tau|phi'|)^p weighted
    by the cell's lambda-measure int dA/tau^2.

    Cell integrals run on a local polar Gauss-Legendre x uniform-angle
    grid over each disk, clipped to {|z| <= r_max}.
    """
    if not p > 0.0:
        raise ValueError(f"besov_sum needs p > 0, got {p}")
    tau_prof = lattice.tau
    gl_x, gl_w = np.polynomial.legendre.leggauss(8)
    s = 0.5 * (gl_x + 1.0)
    ws = 0.5 * gl_w
    psi = 2.0 * np.pi * (np.arange(16) + 0.5) / 16.0
    # local disk nodes: z = z_k + rho * s * e^(i psi), area weight s ds dpsi
    local = (s[:, None] * np.exp(1j * psi)[None, :]).ravel()
    wloc = (ws[:, None] * s[:, None] * np.full((1, 16), 2.0 * np.pi / 16.0)).ravel()

    z = lattice.centers[:, None] + lattice.radii[:, None] * local[None, :]
    rr = np.abs(z)
    lim = min(lattice.r_max, tau_prof.r_hi)
    mask = rr <= lim
    tz = np.zeros_like(rr)
    tz[mask] = tau_prof(rr[mask])
    fz = np.zeros_like(rr)
    fz[mask] = tz[mask] * deriv(z[mask])
    wm = np.where(mask, wloc[None, :], 0.0)
    rho2 = lattice.radii**2
    area = rho2 * wm.sum(axis=1)
    mu = rho2 * (fz * wm).sum(axis=1)
    lam_cells = rho2 * (wm / np.where(mask, tz, 1.0) ** 2).sum(axis=1)
    ok = area > 0.0
    avg = np.zeros(len(area))
    avg[ok] = mu[ok] / area[ok]
    return float(np.sum(np.sort(avg[ok] ** p * lam_cells[ok])[::-1]))
