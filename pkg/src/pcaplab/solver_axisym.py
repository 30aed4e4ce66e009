"""Exterior p-Laplace solver for axisymmetric domains in a warped product.

The unknown is the log-potential ``phi = -log u``, which is close to an affine
function of ``log r`` for every flat or conical end.  In these variables the
regularized p-Laplace equation reads

    |Dphi|^2 - Lap(phi) + (p - 2) (|Dphi|^4 - Hess phi(Dphi, Dphi)) / (eps^2 + |Dphi|^2) = 0,

which is the non-divergence form of div((eps^2 + |Du|^2)^((p-2)/2) Du) = 0
divided by the positive factor u (eps^2 + |Du|^2)^((p-2)/2), with the
regularization measured on the log-gradient.

Discretization
--------------
Meridian coordinates (r, theta) with theta in [0, pi] and a body-fitted
coordinate rho in [0, 1]:  log r = (1 - rho) log R(theta) + rho log R_max.
Nodes are uniform in (rho, theta), hence geometric in r.  Derivatives use
fourth-order finite differences; theta stencils fold across the poles by even
reflection, which is exact for smooth axisymmetric fields.  The outer sphere
carries a Robin condition matching the exact radial decay of the profile.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.sparse.linalg import splu

from .errors import ExponentOutOfRange, GridTooCoarse, InvalidDomain, NonConvergence, OutOfDomain
from .manifold import DomainSpec, WarpedProfile
from .radial import _cached_J, decay_exponent

DELTA_CRIT = 1e-7
DEFAULT_EPS_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
_ODD_FIELDS = ("phi_t", "phi_rt")


# -- finite-difference stencils ---------------------------------------------

def fd_weights(offsets, order):
    """Weights w with sum w_j f(x + o_j) ~ f^(order)(x) for unit spacing."""
    offsets = np.asarray(offsets, dtype=float)
    k = len(offsets)
    V = np.vander(offsets, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def _diff_matrix_open(N, order):
    """Fourth-order derivative on N uniform nodes (unit spacing), shifted near the ends."""
    width = 5 if order == 1 else 6
    rows, cols, vals = [], [], []
    for i in range(N):
        if 2 <= i <= N - 3:
            offs = np.arange(-2, 3)
        else:
            start = min(max(i - width // 2, 0), N - width)
            offs = np.arange(start, start + width) - i
        w = fd_weights(offs, order)
        rows += [i] * len(offs)
        cols += list(i + offs)
        vals += list(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def _diff_matrix_even(N, order, parity=1.0):
    """Fourth-order central derivative on [0, pi] nodes folded across both poles.

    ``parity`` is +1 for fields even in theta about the poles (phi, u) and -1
    for odd ones (theta-components of vectors).
    """
    w = fd_weights(np.arange(-2, 3), order)
    rows, cols, vals = [], [], []
    last = N - 1
    for j in range(N):
        for o, wk in zip(range(-2, 3), w):
            c = j + o
            sign = 1.0
            if c < 0:
                c, sign = -c, parity
            elif c > last:
                c, sign = 2 * last - c, parity
            rows.append(j)
            cols.append(c)
            vals.append(sign * wk)
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


# -- grid -------------------------------------------------------------------

@dataclass(frozen=True)
class GridParams:
    Nr: int = 256
    Ntheta: int = 96
    R_max_factor: float = 100.0


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-10
    eps_schedule: tuple = DEFAULT_EPS_SCHEDULE
    picard_steps: int = 2
    max_newton: int = 40
    stage_tol: float = 1e-7
    damping_floor: float = 1.0 / 64.0
    floor_factor: float = 10.0


class MeridianGrid:
    """Body-fitted (rho, theta) grid and its map to meridian coordinates (r, theta)."""

    def __init__(self, profile, domain, Nr, Ntheta, R_max):
        if Nr < 8 or Ntheta < 5:
            raise InvalidDomain("grid needs Nr >= 8 and Ntheta >= 5")
        self.profile = profile
        self.domain = domain
        self.Nr, self.Ntheta = int(Nr), int(Ntheta)
        self.R_max = float(R_max)
        if self.R_max < 50.0 * domain.r0 * (1.0 + abs(domain.eps)) - 1e-12:
            raise InvalidDomain("R_max must be at least 50 r0")
        self.rho = np.linspace(0.0, 1.0, self.Nr)
        self.theta = np.linspace(0.0, math.pi, self.Ntheta)
        self.drho = self.rho[1] - self.rho[0]
        self.dtheta = self.theta[1] - self.theta[0]
        R, dR, d2R = domain.radius(self.theta)
        lam = np.log(R)
        dlam = dR / R
        d2lam = d2R / R - dlam ** 2
        L = math.log(self.R_max) - lam
        rho2 = self.rho[:, None]
        self.R_boundary = R
        self.lam, self.dlam, self.d2lam, self.L = lam, dlam, d2lam, L
        self.log_r = lam[None, :] + rho2 * L[None, :]
        self.r = np.exp(self.log_r)
        # inverse map derivatives, rho as a function of (r, theta)
        one = 1.0 - rho2
        self.rho_r = 1.0 / (self.r * L[None, :])
        self.rho_rr = -1.0 / (self.r ** 2 * L[None, :])
        self.rho_t = -dlam[None, :] * one / L[None, :]
        self.rho_rt = dlam[None, :] / (self.r * L[None, :] ** 2)
        self.rho_tt = -d2lam[None, :] * one / L[None, :] - 2.0 * dlam[None, :] ** 2 * one / L[None, :] ** 2
        # forward map: dr/drho
        self.r_rho = self.r * L[None, :]
        h, dh, d2h = profile.evaluate(self.r)
        self.h, self.dh, self.d2h = h, dh, d2h
        sin = np.sin(self.theta)
        self.sin = np.broadcast_to(sin, self.r.shape)
        pole = np.zeros(self.Ntheta, dtype=bool)
        pole[0] = pole[-1] = True
        self.pole = np.broadcast_to(pole, self.r.shape)
        with np.errstate(divide="ignore"):
            cot = np.where(pole, 0.0, np.cos(self.theta) / np.where(pole, 1.0, sin))
        self.cot = np.broadcast_to(cot, self.r.shape)
        if np.any(self.r_rho <= 0.0):
            raise InvalidDomain("body-fitted map is not orientation preserving")
        self._ops = None

    @property
    def shape(self):
        return (self.Nr, self.Ntheta)

    def operators(self):
        """Sparse logical derivative operators on the flattened (rho-major) grid."""
        if self._ops is None:
            Ir, It = sp.identity(self.Nr, format="csr"), sp.identity(self.Ntheta, format="csr")
            d1r = _diff_matrix_open(self.Nr, 1) / self.drho
            d2r = _diff_matrix_open(self.Nr, 2) / self.drho ** 2
            d1t = _diff_matrix_even(self.Ntheta, 1) / self.dtheta
            d2t = _diff_matrix_even(self.Ntheta, 2) / self.dtheta ** 2
            self._ops = {
                "p": sp.kron(d1r, It, format="csr"),
                "t": sp.kron(Ir, d1t, format="csr"),
                "pp": sp.kron(d2r, It, format="csr"),
                "pt": sp.kron(d1r, d1t, format="csr"),
                "tt": sp.kron(Ir, d2t, format="csr"),
            }
        return self._ops

    def logical_derivatives(self, f):
        ops = self.operators()
        flat = np.ravel(f)
        return {k: (op @ flat).reshape(self.shape) for k, op in ops.items()}

    def physical_first(self, f, parity=1.0):
        """(f_r, f_theta); odd fields (parity -1) fold across the poles with a sign flip."""
        if parity == 1.0:
            d = self.logical_derivatives(f)
            return self.rho_r * d["p"], self.rho_t * d["p"] + d["t"]
        if getattr(self, "_odd_t", None) is None:
            Ir = sp.identity(self.Nr, format="csr")
            self._odd_t = sp.kron(Ir, _diff_matrix_even(self.Ntheta, 1, -1.0) / self.dtheta,
                                  format="csr")
        flat = np.ravel(f)
        fp = (self.operators()["p"] @ flat).reshape(self.shape)
        ft = (self._odd_t @ flat).reshape(self.shape)
        return self.rho_r * fp, self.rho_t * fp + ft

    def physical_derivatives(self, f):
        """(f_r, f_theta, f_rr, f_rtheta, f_thetatheta) at all nodes."""
        d = self.logical_derivatives(f)
        fp, ft, fpp, fpt, ftt = d["p"], d["t"], d["pp"], d["pt"], d["tt"]
        f_r = self.rho_r * fp
        f_t = self.rho_t * fp + ft
        f_rr = self.rho_r ** 2 * fpp + self.rho_rr * fp
        f_rt = self.rho_r * self.rho_t * fpp + self.rho_r * fpt + self.rho_rt * fp
        f_tt = self.rho_t ** 2 * fpp + 2.0 * self.rho_t * fpt + ftt + self.rho_tt * fp
        return f_r, f_t, f_rr, f_rt, f_tt

    def to_logical(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < -1e-12) or np.any(theta > math.pi + 1e-12):
            raise OutOfDomain("theta outside [0, pi]")
        R, _, _ = self.domain.radius(theta)
        rho = (np.log(r) - np.log(R)) / (math.log(self.R_max) - np.log(R))
        if np.any(rho < -1e-12) or np.any(rho > 1.0 + 1e-12):
            raise OutOfDomain("point outside the computational annulus")
        return np.clip(rho, 0.0, 1.0), np.clip(theta, 0.0, math.pi)

    def to_meridian(self, rho, theta):
        R, _, _ = self.domain.radius(theta)
        lam = np.log(R)
        return np.exp(lam + np.asarray(rho) * (math.log(self.R_max) - lam))


# -- the nonlinear operator ---------------------------------------------------

def _residual_terms(P, geo, p, n, eps, frozen=None):
    """Scaled residual r^2 * [G - Lap + c (G^2 - Hess(Dphi, Dphi))] at nodes.

    ``P`` holds the physical derivatives (phi_r, phi_t, phi_rr, phi_rt, phi_tt);
    ``frozen`` replaces the coefficient c = (p-2)/(eps^2+G) when lagging it.
    """
    fr, ft, frr, frt, ftt = P
    h, dh, cot, pole, r = geo
    h2 = h * h
    G = fr * fr + ft * ft / h2
    cot_term = np.where(pole, ftt, cot * ft)
    lap = frr + (n - 1) * dh / h * fr + (ftt + (n - 2) * cot_term) / h2
    hess = (fr * fr * frr + 2.0 * fr * (ft / h2) * (frt - dh / h * ft)
            + (ft / h2) ** 2 * (ftt + h * dh * fr))
    coef = (p - 2.0) / (eps * eps + G) if frozen is None else frozen
    return r * r * (G - lap + coef * (G * G - hess))


def _complex_step_partials(P, geo, p, n, eps, frozen=None):
    step = 1e-30
    out = []
    for k in range(5):
        Q = [np.asarray(x, dtype=complex) for x in P]
        Q[k] = Q[k] + 1j * step
        out.append(np.imag(_residual_terms(Q, geo, p, n, eps, frozen)) / step)
    return out


class _Problem:
    def __init__(self, grid, p, kappa_R):
        self.g = grid
        self.p = p
        self.n = grid.profile.n
        self.kappa_R = kappa_R
        self.geo = (grid.h, grid.dh, grid.cot, grid.pole, grid.r)
        Nr, Nt = grid.shape
        self.unknown = np.arange(Nt, Nr * Nt)          # all rows except the boundary rho = 0
        ops = grid.operators()
        self.ops = ops
        # Robin rows: R_max * phi_r - R_max * kappa_R on the outer sphere
        last = (Nr - 1) * Nt + np.arange(Nt)
        self.robin_rows = last

    def residual(self, phi, eps, frozen=None):
        g = self.g
        d = g.logical_derivatives(phi)
        P = self._physical(d)
        res = _residual_terms(P, self.geo, self.p, self.n, eps, frozen)
        res[-1, :] = g.r[-1, :] * P[0][-1, :] - g.r[-1, :] * self.kappa_R
        return res[1:, :].ravel(), d, P

    def _physical(self, d):
        g = self.g
        fp, ft, fpp, fpt, ftt = d["p"], d["t"], d["pp"], d["pt"], d["tt"]
        return (g.rho_r * fp,
                g.rho_t * fp + ft,
                g.rho_r ** 2 * fpp + g.rho_rr * fp,
                g.rho_r * g.rho_t * fpp + g.rho_r * fpt + g.rho_rt * fp,
                g.rho_t ** 2 * fpp + 2.0 * g.rho_t * fpt + ftt + g.rho_tt * fp)

    def jacobian(self, P, eps, frozen=None):
        g = self.g
        dF = _complex_step_partials(P, self.geo, self.p, self.n, eps, frozen)
        Fr, Ft, Frr, Frt, Ftt = dF
        coeff = {
            "p": Fr * g.rho_r + Ft * g.rho_t + Frr * g.rho_rr + Frt * g.rho_rt + Ftt * g.rho_tt,
            "t": Ft,
            "pp": Frr * g.rho_r ** 2 + Frt * g.rho_r * g.rho_t + Ftt * g.rho_t ** 2,
            "pt": Frt * g.rho_r + 2.0 * Ftt * g.rho_t,
            "tt": Ftt,
        }
        # outer boundary: only d/drho through rho_r
        for key in coeff:
            coeff[key] = coeff[key].copy()
            coeff[key][-1, :] = 0.0
        coeff["p"][-1, :] = g.r[-1, :] * g.rho_r[-1, :]
        J = None
        for key, c in coeff.items():
            term = sp.diags(c.ravel()) @ self.ops[key]
            J = term if J is None else J + term
        J = J.tocsr()[self.unknown][:, self.unknown]
        return J.tocsc()


# -- solution container -------------------------------------------------------

@dataclass
class Convergence:
    iterations: int
    residual: float
    eps_reached: float
    eps_schedule: tuple
    history: list = field(default_factory=list)
    stalled: list = field(default_factory=list)     # stages stopped at the roundoff floor


class MeridianField:
    """A converged axisymmetric potential with derived node fields and interpolants."""

    def __init__(self, grid, p, phi, convergence):
        self.grid = grid
        self.p = float(p)
        self.profile = grid.profile
        self.domain = grid.domain
        self.n = grid.profile.n
        self.phi = phi
        self.convergence = convergence
        self._cache = {}

    # node fields
    @property
    def u(self):
        return np.exp(-self.phi)

    def derivatives(self):
        if "P" not in self._cache:
            self._cache["P"] = self.grid.physical_derivatives(self.phi)
        return self._cache["P"]

    def grad_log(self):
        """|D log u| = |Dphi| at nodes."""
        fr, ft = self.derivatives()[:2]
        return np.sqrt(fr * fr + ft * ft / self.grid.h ** 2)

    def grad_norm(self):
        """|Du| at nodes."""
        return self.u * self.grad_log()

    def critical_mask(self, delta=DELTA_CRIT):
        g = self.grad_norm()
        return g < delta * g.max()

    def mean_curvature_nodes(self):
        """Divergence of the unit normal Dphi/|Dphi| (outward) at nodes."""
        if "H" not in self._cache:
            g = self.grid
            fr, ft = self.derivatives()[:2]
            G = self.grad_log()
            Nr_ = fr / G
            Nt_ = ft / (g.h ** 2 * G)
            dNr_r, _ = g.physical_first(Nr_)
            _, dNt_t = g.physical_first(Nt_, parity=-1.0)
            cot_term = np.where(g.pole, dNt_t, g.cot * Nt_)
            self._cache["H"] = dNr_r + (self.n - 1) * g.dh / g.h * Nr_ + dNt_t + (self.n - 2) * cot_term
        return self._cache["H"]

    # interpolation
    def _spline(self, name, values, parity=1.0):
        key = "spline_" + name
        if key not in self._cache:
            g = self.grid
            ext = 3
            th = g.theta
            th_ext = np.concatenate([-th[ext:0:-1], th, 2.0 * math.pi - th[-2:-ext - 2:-1]])
            v = np.concatenate([parity * values[:, ext:0:-1], values,
                                parity * values[:, -2:-ext - 2:-1]], axis=1)
            self._cache[key] = RectBivariateSpline(g.rho, th_ext, v, kx=3, ky=3, s=0)
        return self._cache[key]

    def node_fields(self):
        fr, ft, frr, frt, ftt = self.derivatives()
        return {"phi": self.phi, "phi_r": fr, "phi_t": ft, "phi_rr": frr, "phi_rt": frt,
                "phi_tt": ftt, "H": self.mean_curvature_nodes()}

    def interpolate(self, name, rho, theta, drho=0, dtheta=0):
        values = self.node_fields()[name]
        parity = -1.0 if name in _ODD_FIELDS else 1.0
        return self._spline(name, values, parity).ev(rho, theta, dx=drho, dy=dtheta)

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_cache"] = {}
        return state


# -- solve --------------------------------------------------------------------

def robin_coefficient(profile, p, R):
    """-u_r/u of the exact radial potential at R: 1/J(R) in scaled variables."""
    m = (profile.n - 1) / (p - 1.0)
    return 1.0 / _cached_J(profile, float(R), m)


def _initial_guess(grid, p):
    """Radial log-potential re-anchored at the boundary radius of each ray."""
    prof = grid.profile
    m = (prof.n - 1) / (p - 1.0)
    r_lo, r_hi = float(grid.r[0].min()), grid.R_max
    radii = np.geomspace(r_lo, r_hi, 160)
    logI = np.array([-m * math.log(float(prof.h(x))) + math.log(_cached_J(prof, float(x), m))
                     for x in radii])
    spline = CubicSpline(np.log(radii), logI)
    logI_nodes = spline(grid.log_r)
    return logI_nodes[0:1, :] - logI_nodes


def _damped_step(prob, grid, phi, F, P, eps, frozen, solver_params):
    """Backtracking line search on ||F||; None when the step is rejected at the damping floor."""
    J = prob.jacobian(P, eps, frozen)
    delta = splu(J, permc_spec="MMD_AT_PLUS_A").solve(-F)
    step = np.zeros(grid.shape)
    step[1:, :] = delta.reshape(grid.Nr - 1, grid.Ntheta)
    alpha = 1.0
    base = float(np.linalg.norm(F))
    while alpha >= solver_params.damping_floor:
        trial = phi + alpha * step
        Ft = prob.residual(trial, eps)[0]
        if np.all(np.isfinite(Ft)) and np.linalg.norm(Ft) <= (1.0 - 1e-4 * alpha) * base:
            return trial
        alpha *= 0.5
    return None


def solve(profile: WarpedProfile, p, domain: DomainSpec, grid_params=GridParams(),
          solver_params=SolverParams()):
    n = profile.n
    if not (1.0 < p < n):
        raise ExponentOutOfRange(f"p={p} must lie in (1, {n})")
    R_max = grid_params.R_max_factor * domain.r0
    grid = MeridianGrid(profile, domain, grid_params.Nr, grid_params.Ntheta, R_max)
    kappa_R = robin_coefficient(profile, p, R_max)
    prob = _Problem(grid, float(p), kappa_R)
    phi = _initial_guess(grid, p)
    history = []
    stalled = []
    iterations = 0
    schedule = tuple(solver_params.eps_schedule)
    res_norm = math.inf
    for stage, eps in enumerate(schedule):
        final = stage == len(schedule) - 1
        target = solver_params.tol if final else solver_params.stage_tol
        picard_left = solver_params.picard_steps if stage == 0 else 0
        for it in range(solver_params.max_newton):
            F, d, P = prob.residual(phi, eps)
            res_norm = float(np.max(np.abs(F)))
            history.append((eps, res_norm))
            if res_norm <= target:
                break
            frozen = None
            if picard_left > 0:
                G = P[0] ** 2 + P[1] ** 2 / grid.h ** 2
                frozen = (p - 2.0) / (eps * eps + G)
                picard_left -= 1
            trial = _damped_step(prob, grid, phi, F, P, eps, frozen, solver_params)
            if trial is None and frozen is not None:
                # a lagged step that fails the line search falls back to Newton
                picard_left = 0
                trial = _damped_step(prob, grid, phi, F, P, eps, None, solver_params)
            if trial is None and res_norm <= solver_params.floor_factor * target:
                # no descent left within a small factor of the target: roundoff floor
                stalled.append((eps, res_norm))
                break
            if trial is None:
                raise GridTooCoarse(f"Newton step rejected below damping floor at eps={eps}",
                                    eps_reached=eps, residual=res_norm)
            phi = trial
            iterations += 1
        else:
            raise NonConvergence(f"no convergence at eps={eps}: residual {res_norm:.3e}",
                                 eps_reached=eps, residual=res_norm)
    conv = Convergence(iterations, res_norm, schedule[-1], schedule, history, stalled)
    field_ = MeridianField(grid, p, phi, conv)
    u = field_.u
    if not (np.all(u[1:, :] < 1.0) and np.all(u > 0.0)):
        raise NonConvergence("discrete maximum principle violated", eps_reached=schedule[-1],
                             residual=res_norm)
    return field_


# -- point queries --------------------------------------------------------------

def gradient(field_: MeridianField, r, theta):
    """(u_r, u_theta, |Du|) at a meridian point, by interpolating node derivatives."""
    rho, th = field_.grid.to_logical(r, theta)
    phi = field_.interpolate("phi", rho, th)
    fr = field_.interpolate("phi_r", rho, th)
    ft = field_.interpolate("phi_t", rho, th)
    u = np.exp(-phi)
    h = field_.profile.h(r)
    ur, ut = -u * fr, -u * ft
    return ur, ut, np.sqrt(ur * ur + ut * ut / h ** 2)


@dataclass(frozen=True)
class ChengYauReport:
    radii: tuple
    products: tuple
    max_product: float
    bounded: bool


def cheng_yau_check(field_: MeridianField, shells=12):
    """max of (|Du|/u) r over geometric shells of the computational annulus."""
    g = field_.grid
    prod = field_.grad_log() * g.r
    edges = np.geomspace(g.r.min(), g.R_max, shells + 1)
    vals = []
    for lo, hi in zip(edges, edges[1:]):
        mask = (g.r >= lo) & (g.r <= hi)
        vals.append(float(prod[mask].max()) if np.any(mask) else float("nan"))
    vals = np.array(vals)
    finite = vals[np.isfinite(vals)]
    bounded = bool(np.all(np.isfinite(finite)) and finite[-1] <= 2.0 * finite.max())
    return ChengYauReport(tuple(edges), tuple(vals), float(finite.max()), bounded)


# -- capacity from the field ----------------------------------------------------

def flux_integral(field_: MeridianField):
    """Boundary flux int_{dOmega} |Du|^{p-1} dsigma (u = 1 there)."""
    from .levelsets import extract, integral_power
    curve = extract(field_, 1.0)
    return integral_power(curve, field_.p - 1.0)


def energy_integral(field_: MeridianField):
    """int |Du|^p dmu over the annulus plus the far-field tail flux * mean u(R_max)."""
    from .levelsets import column_integral
    g = field_.grid
    dens = field_.grad_norm() ** field_.p
    inner = column_integral(field_, dens, np.zeros(g.Ntheta))
    flux = flux_integral(field_)
    u_far = field_.u[-1, :]
    from .manifold import sphere_measure
    wts = _theta_weights(g, field_.n) * g.h[-1, :] ** (field_.n - 1)
    mean_u = float(np.sum(u_far * wts) / np.sum(wts))
    return inner + flux * mean_u


def _theta_weights(grid, n):
    """Quadrature weights in theta for int_0^pi f sin^{n-2} dtheta |S^{n-2}| (Simpson when possible)."""
    from scipy.integrate import simpson
    from .manifold import sphere_measure
    eye = np.eye(grid.Ntheta)
    base = np.array([simpson(row, x=grid.theta) for row in eye])
    return base * np.sin(grid.theta) ** (n - 2) * sphere_measure(n - 2)


def capacity_from_field(field_: MeridianField):
    """(cap_p, c_p, details) from the boundary flux, with the energy form for comparison."""
    from .manifold import sphere_measure
    n, p = field_.n, field_.p
    S = sphere_measure(n - 1)
    flux = flux_integral(field_)
    energy = energy_integral(field_)
    c_p = ((p - 1.0) / (n - p)) ** (p - 1.0) * flux / S
    return flux, c_p, {"cap_boundary": flux, "cap_energy": energy,
                       "boundary_vs_energy": abs(flux - energy) / flux}


# -- binary dump ----------------------------------------------------------------

_MAGIC = b"PCAPFLD1"
_HEADER = struct.Struct("<8sqqdqd")


def dump_field(field_: MeridianField, path):
    g = field_.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, g.Nr, g.Ntheta, field_.p, field_.n, g.R_max))
        for arr in (g.rho, g.theta, g.r, field_.u, field_.phi):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_dump(path):
    """Read a binary dump back as a dict of arrays and header values."""
    with open(path, "rb") as fh:
        magic, Nr, Nt, p, n, R_max = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError("not a field dump")
        data = np.frombuffer(fh.read(), dtype="<f8")
    sizes = [Nr, Nt, Nr * Nt, Nr * Nt, Nr * Nt]
    parts, pos = [], 0
    for s in sizes:
        parts.append(data[pos:pos + s])
        pos += s
    return {"Nr": Nr, "Ntheta": Nt, "p": p, "n": n, "R_max": R_max, "rho": parts[0],
            "theta": parts[1], "r": parts[2].reshape(Nr, Nt), "u": parts[3].reshape(Nr, Nt),
            "phi": parts[4].reshape(Nr, Nt)}
