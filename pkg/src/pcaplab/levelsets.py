"""Level curves {u = 1/t} of a meridian field and their geometry.

A level curve lives in the meridian half-plane and sweeps out a hypersurface
of revolution.  Samples carry |Du|, the mean curvature, both principal
curvatures and the revolution weight |S^{n-2}| (h sin theta)^{n-2}, so that
hypersurface integrals become line integrals  int f weight ds_g.

The contour is located by marching squares on the (rho, theta) grid, then
every sample is projected onto the level of the bicubic interpolant along its
theta ray and the curve is resampled to uniform arclength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CriticalContact, LevelOutOfRange
from .manifold import sphere_measure

DEFAULT_SAMPLES = 513


@dataclass
class LevelSetCurve:
    t: float
    n: int
    p: float
    rho: np.ndarray
    theta: np.ndarray
    r: np.ndarray
    s: np.ndarray
    grad_log: np.ndarray            # |D log u| = |Dphi|
    normDu: np.ndarray
    weight: np.ndarray
    ds: np.ndarray                  # quadrature weights in arclength
    closed: bool = False            # open: meets the symmetry axis at both ends
    H: np.ndarray | None = None
    kappa_m: np.ndarray | None = None
    kappa_par: np.ndarray | None = None
    dT_normDu: np.ndarray | None = None
    flags: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def integrate(self, values):
        """int f dsigma over the hypersurface of revolution."""
        return _line_integral(np.asarray(values) * self.weight, self.ds)

    def to_rows(self):
        cols = ("t", "s", "r", "theta", "normDu", "H", "kappa_m", "kappa_par", "weight")
        data = [np.full_like(self.s, self.t), self.s, self.r, self.theta, self.normDu,
                _or_nan(self.H, self.s), _or_nan(self.kappa_m, self.s),
                _or_nan(self.kappa_par, self.s), self.weight]
        return cols, np.column_stack(data)


def _or_nan(arr, like):
    return np.full_like(like, np.nan) if arr is None else arr


def _line_integral(g, ds):
    """Trapezoid sum on uniform arclength with the Euler-Maclaurin end correction."""
    total = float(np.sum(g * ds))
    step = ds[1] if len(ds) > 2 else 0.0
    if len(g) >= 4 and step > 0.0:
        d0 = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * step)
        d1 = (3.0 * g[-1] - 4.0 * g[-2] + g[-3]) / (2.0 * step)
        total -= step * step / 12.0 * (d1 - d0)
    return total


# -- marching squares ----------------------------------------------------------

# edges of a cell: 0 bottom (i, j)-(i, j+1), 1 right (i, j+1)-(i+1, j+1),
# 2 top (i+1, j)-(i+1, j+1), 3 left (i, j)-(i+1, j)
_CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 5: None, 6: [(0, 2)],
    7: [(3, 2)], 8: [(2, 3)], 9: [(2, 0)], 10: None, 11: [(2, 1)], 12: [(1, 3)],
    13: [(1, 0)], 14: [(0, 3)],
}


def marching_squares(values, level):
    """Contour segments of ``values`` at ``level`` in fractional index coordinates.

    Returns a list of polylines, each an array of (i, j) points; i is the row
    (rho) index and j the column (theta) index.
    """
    v = np.asarray(values, dtype=float)
    above = v > level
    idx = (above[:-1, :-1].astype(int) + 2 * above[:-1, 1:] + 4 * above[1:, 1:]
           + 8 * above[1:, :-1])
    cells = np.argwhere((idx != 0) & (idx != 15))

    def edge_point(i, j, e):
        if e == 0:
            a, b, pa, pb = v[i, j], v[i, j + 1], (i, j), (i, j + 1)
        elif e == 1:
            a, b, pa, pb = v[i, j + 1], v[i + 1, j + 1], (i, j + 1), (i + 1, j + 1)
        elif e == 2:
            a, b, pa, pb = v[i + 1, j], v[i + 1, j + 1], (i + 1, j), (i + 1, j + 1)
        else:
            a, b, pa, pb = v[i, j], v[i + 1, j], (i, j), (i + 1, j)
        w = 0.0 if b == a else (level - a) / (b - a)
        return (pa[0] + w * (pb[0] - pa[0]), pa[1] + w * (pb[1] - pa[1]))

    def edge_key(i, j, e):
        return {0: ("h", i, j), 2: ("h", i + 1, j), 3: ("v", i, j), 1: ("v", i, j + 1)}[e]

    segments = []
    for i, j in cells:
        case = idx[i, j]
        pairs = _CASES.get(case)
        if pairs is None:
            centre = 0.25 * (v[i, j] + v[i, j + 1] + v[i + 1, j] + v[i + 1, j + 1]) > level
            if case == 5:
                pairs = [(3, 2), (1, 0)] if centre else [(3, 0), (1, 2)]
            else:
                pairs = [(0, 1), (2, 3)] if centre else [(2, 1), (0, 3)]
        for e0, e1 in pairs:
            segments.append((edge_key(i, j, e0), edge_key(i, j, e1),
                             edge_point(i, j, e0), edge_point(i, j, e1)))
    # chain segments through shared edges
    adj = {}
    for k, (a, b, _, _) in enumerate(segments):
        adj.setdefault(a, []).append(k)
        adj.setdefault(b, []).append(k)
    used = np.zeros(len(segments), dtype=bool)
    lines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        a, b, pa, pb = segments[start]
        chain = [pa, pb]
        keys = [a, b]
        for direction in (1, 0):
            key = keys[-1] if direction else keys[0]
            while True:
                nxt = [k for k in adj.get(key, []) if not used[k]]
                if not nxt:
                    break
                k = nxt[0]
                used[k] = True
                ka, kb, qa, qb = segments[k]
                key, point = (kb, qb) if ka == key else (ka, qa)
                if direction:
                    chain.append(point)
                    keys.append(key)
                else:
                    chain.insert(0, point)
                    keys.insert(0, key)
        lines.append(np.array(chain))
    return lines


# -- extraction ----------------------------------------------------------------

def _project_to_level(field_, rho, theta, level, iters=40):
    """Newton along each theta ray so the interpolated phi equals ``level``."""
    rho = np.array(rho, dtype=float)
    for _ in range(iters):
        f = field_.interpolate("phi", rho, theta) - level
        df = field_.interpolate("phi", rho, theta, drho=1)
        step = f / df
        rho = np.clip(rho - step, 0.0, 1.0)
        if np.max(np.abs(f)) < 1e-14:
            break
    return rho


def extract(field_, t, samples=DEFAULT_SAMPLES):
    """Level curve {u = 1/t}, resampled to ``samples`` points of uniform arclength."""
    t = float(t)
    g = field_.grid
    level = math.log(t) if t > 0 else -math.inf
    phi = field_.phi
    top = float(phi[-1, :].min())
    if not (t >= 1.0 and level <= top):
        raise LevelOutOfRange(f"level t={t} outside [1, {math.exp(top):.6g}]")
    flags = {}
    if t == 1.0:
        rho_of_theta = lambda th: np.zeros_like(th)
        lines = [np.column_stack([np.zeros(g.Ntheta), np.arange(g.Ntheta)])]
    else:
        lines = marching_squares(phi, level)
        if len(lines) != 1:
            flags["disconnected"] = len(lines)
        line = max(lines, key=len)
        th_line = line[:, 1] * g.dtheta
        rho_line = line[:, 0] * g.drho
        order = np.argsort(th_line)
        th_sorted, rho_sorted = th_line[order], rho_line[order]
        if np.any(np.diff(th_line) < 0) and np.any(np.diff(th_line) > 0):
            flags["not_a_graph"] = True
        if th_sorted[0] > 1e-9 or th_sorted[-1] < math.pi - 1e-9:
            flags["misses_axis"] = True

        def rho_of_theta(th):
            guess = np.interp(th, th_sorted, rho_sorted)
            return _project_to_level(field_, guess, th, level)

    # arclength on a fine theta grid
    fine = np.linspace(0.0, math.pi, 4 * (samples - 1) + 1)
    rho_f = rho_of_theta(fine)
    r_f, drdth = _ray_geometry(field_, rho_f, fine, level if t != 1.0 else None)
    h_f = field_.profile.h(r_f)
    speed = np.sqrt(drdth ** 2 + h_f ** 2)
    s_spline = CubicSpline(fine, speed).antiderivative()
    s_f = s_spline(fine)
    length = float(s_f[-1])
    s = np.linspace(0.0, length, samples)
    theta = CubicSpline(s_f, fine)(s)
    theta[0], theta[-1] = 0.0, math.pi
    # Newton polish of theta(s) against the accurate arclength function
    for _ in range(3):
        theta = np.clip(theta - (s_spline(theta) - s) / CubicSpline(fine, speed)(theta), 0.0, math.pi)
    rho = rho_of_theta(theta)
    r = g.to_meridian(rho, theta)
    n = field_.n
    h = field_.profile.h(r)
    weight = sphere_measure(n - 2) * (h * np.sin(theta)) ** (n - 2)
    weight[0] = weight[-1] = 0.0 if n > 2 else weight[0]
    fr = field_.interpolate("phi_r", rho, theta)
    ft = field_.interpolate("phi_t", rho, theta)
    grad_log = np.sqrt(fr * fr + ft * ft / h ** 2)
    ds = np.full(samples, length / (samples - 1))
    ds[0] = ds[-1] = 0.5 * ds[1]
    crit = field_.critical_mask()
    if np.any(crit):
        ii = np.clip((rho / g.drho).astype(int), 0, g.Nr - 2)
        jj = np.clip((theta / g.dtheta).astype(int), 0, g.Ntheta - 2)
        touched = crit[ii, jj] | crit[ii + 1, jj] | crit[ii, jj + 1] | crit[ii + 1, jj + 1]
        if np.any(touched):
            flags["critical_contact"] = int(np.count_nonzero(touched))
    curve = LevelSetCurve(t=t, n=n, p=field_.p, rho=rho, theta=theta, r=r, s=s,
                          grad_log=grad_log, normDu=grad_log / t, weight=weight, ds=ds,
                          flags=flags)
    curve.extra["phi_residual"] = float(np.max(np.abs(
        np.exp(-field_.interpolate("phi", rho, theta)) - 1.0 / t)))
    return curve


def _ray_geometry(field_, rho, theta, level):
    """r and dr/dtheta along the curve rho = rho(theta)."""
    g = field_.grid
    R, dR, _ = g.domain.radius(theta)
    lam, dlam = np.log(R), dR / R
    L = math.log(g.R_max) - lam
    r = np.exp(lam + rho * L)
    if level is None:
        drho = np.zeros_like(rho)
    else:
        # implicit differentiation of phi(rho, theta) = level in logical variables
        fp = field_.interpolate("phi", rho, theta, drho=1)
        ft = field_.interpolate("phi", rho, theta, dtheta=1)
        drho = -ft / fp
    drdth = r * (dlam * (1.0 - rho) + L * drho)
    return r, drdth


# -- quadratures ------------------------------------------------------------------

def area(curve):
    return curve.integrate(np.ones_like(curve.s))


def integral_power(curve, q):
    """int |Du|^q dsigma over the level."""
    return curve.integrate(curve.normDu ** q)


def enclosed_volume(field_, curve):
    """Volume of Omega_t = {u > 1/t} union Omega, by quadrature in theta of int_0^{r_t} h^{n-1}."""
    from scipy.integrate import quad
    from scipy.integrate import simpson
    n = field_.n
    prof = field_.profile
    th = curve.theta
    radial = np.array([quad(lambda x: float(prof.h(x)) ** (n - 1), 0.0, float(rt),
                            epsabs=0.0, epsrel=1e-12, limit=100)[0] for rt in curve.r])
    integrand = radial * np.sin(th) ** (n - 2)
    return sphere_measure(n - 2) * simpson(integrand, x=th)


def column_integral(field_, density, rho_lower):
    """int of a node density over {rho >= rho_lower(theta)} against dmu."""
    from .solver_axisym import _theta_weights
    g = field_.grid
    n = field_.n
    jac = g.h ** (n - 1) * g.r_rho
    vals = density * jac
    col = np.empty(g.Ntheta)
    for j in range(g.Ntheta):
        spline = CubicSpline(g.rho, vals[:, j])
        col[j] = spline.integrate(float(rho_lower[j]), 1.0)
    return float(np.sum(col * _theta_weights(g, n)))


def level_rho_on_nodes(field_, t):
    """rho of the level {u = 1/t} on every theta node."""
    if t == 1.0:
        return np.zeros(field_.grid.Ntheta)
    g = field_.grid
    level = math.log(t)
    guess = np.array([np.interp(level, field_.phi[:, j], g.rho) for j in range(g.Ntheta)])
    return _project_to_level(field_, guess, g.theta, level)


# -- curvatures ---------------------------------------------------------------------

def _hessian_frame(field_, rho, theta, r):
    """Covariant Hessian of phi in the orthonormal frame (N, tau, fibre) at curve points."""
    prof = field_.profile
    h, dh, _ = prof.evaluate(r)
    fr = field_.interpolate("phi_r", rho, theta)
    ft = field_.interpolate("phi_t", rho, theta)
    frr = field_.interpolate("phi_rr", rho, theta)
    frt = field_.interpolate("phi_rt", rho, theta)
    ftt = field_.interpolate("phi_tt", rho, theta)
    return hessian_frame(fr, ft, frr, frt, ftt, h, dh, theta)


def hessian_frame(fr, ft, frr, frt, ftt, h, dh, theta):
    """Frame components of Hess phi from meridian derivatives.

    Returns (G, Hnn, Hnt, Htt, Hff): |Dphi|, Hess(N,N), Hess(N,tau), Hess(tau,tau)
    and the fibre eigenvalue, with N = Dphi/|Dphi| and tau the unit meridian
    tangent.  Christoffel symbols of the warped metric: Gamma^r_tt = -h h',
    Gamma^t_rt = h'/h, and the fibre block contributes <Dphi, D log(h sin theta)>.
    """
    G = np.sqrt(fr * fr + ft * ft / h ** 2)
    Hrr = frr
    Hrt = frt - dh / h * ft
    Htt_c = ftt + h * dh * fr
    # orthonormal components: e_r, e_t = d_theta / h
    a11, a12, a22 = Hrr, Hrt / h, Htt_c / h ** 2
    nr, nt = fr / G, ft / (h * G)            # N in the orthonormal frame
    tr, tt_ = nt, -nr                         # tau
    Hnn = nr * nr * a11 + 2 * nr * nt * a12 + nt * nt * a22
    Hnt = nr * tr * a11 + (nr * tt_ + nt * tr) * a12 + nt * tt_ * a22
    Htt = tr * tr * a11 + 2 * tr * tt_ * a12 + tt_ * tt_ * a22
    sin = np.sin(theta)
    pole = (sin < 1e-12)
    cot_term = np.where(pole, ftt, np.cos(theta) * ft / np.where(pole, 1.0, sin))
    Hff = fr * dh / h + cot_term / h ** 2
    return G, Hnn, Hnt, Htt, Hff


def curvatures(field_, curve, strict=False):
    """Fill H, kappa_m, kappa_par and the tangential derivative of |Du|."""
    from .solver_axisym import DELTA_CRIT
    G, Hnn, Hnt, Htt, Hff = _hessian_frame(field_, curve.rho, curve.theta, curve.r)
    curve.kappa_m = Htt / G
    curve.kappa_par = Hff / G
    curve.H = field_.interpolate("H", curve.rho, curve.theta)
    # tangential derivative by arclength differencing of |Du|
    step = curve.s[1] - curve.s[0]
    curve.dT_normDu = np.abs(np.gradient(curve.normDu, step, edge_order=2))
    curve.extra["dT_normDu_analytic"] = np.abs(Hnt) / curve.t
    curve.extra["dN_normDu"] = (Hnn - G * G) / curve.t
    curve.extra["Hnn"] = Hnn
    gmax = float(field_.grad_norm().max())
    low = curve.normDu < 10.0 * DELTA_CRIT * gmax
    if np.any(low):
        curve.flags["critical_contact"] = int(np.count_nonzero(low))
        if strict:
            raise CriticalContact(f"|Du| below threshold at {int(np.count_nonzero(low))} samples")
    return curve


def umbilicity_deficit(curve):
    """sup over samples of |h - (H/(n-1)) g|^2 = ((n-2)/(n-1)) (kappa_m - kappa_par)^2."""
    n = curve.n
    vals = (n - 2) / (n - 1) * (curve.kappa_m - curve.kappa_par) ** 2
    return float(np.max(vals))


def orthogonal_decomposition_residual(field_, curve):
    """max | |D|Du||^2 - |D^T|Du||^2 - |D^perp|Du||^2 | / |D|Du||^2 along the curve.

    The full gradient comes from differentiating the |Du| node field, the
    tangential part from arclength differencing, the normal part from the
    Hessian of phi.
    """
    g = field_.grid
    key = "dnorm"
    if key not in field_._cache:
        field_._cache[key] = g.physical_first(field_.grad_norm())
    dr_, dt_ = field_._cache[key]
    spl_r = field_._spline("dnorm_r", dr_)
    spl_t = field_._spline("dnorm_t", dt_, parity=-1.0)
    a = spl_r.ev(curve.rho, curve.theta)
    b = spl_t.ev(curve.rho, curve.theta)
    h = field_.profile.h(curve.r)
    full = a * a + b * b / h ** 2
    tang = curve.dT_normDu ** 2
    normal = curve.extra["dN_normDu"] ** 2
    inner = slice(2, -2)
    return float(np.max(np.abs(full - tang - normal)[inner] / full[inner]))


def export_csv_rows(curves):
    rows = []
    cols = None
    for c in curves:
        cols, data = c.to_rows()
        rows.append(data)
    return cols, np.vstack(rows) if rows else np.empty((0, 9))
