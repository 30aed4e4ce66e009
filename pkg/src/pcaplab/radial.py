"""Exterior p-capacitary potentials of geodesic balls, by quadrature.

For a ball of radius r0 the potential is radial,

    u(r) = I(r) / I(r0),    I(r) = int_r^inf h(s)^(-(n-1)/(p-1)) ds,

and every other quantity (capacity, level-set functionals, Green's function)
has a closed expression in terms of ``I`` and ``h``.  This is the oracle layer
for the grid-based solver.

``I`` is stored in scaled form ``I(r) = h(r)^(-m) * J(r)`` with ``m = (n-1)/(p-1)``
so that exponents near p = 1 neither overflow nor underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ExponentOutOfRange, ExtrapolationDiverged, QuadratureFailure, RootNotBracketed
from .manifold import WarpedProfile, _breakpoints, sphere_measure

TAIL_TOL = 1e-12


def _check_exponent(p, n):
    if not (1.0 < p < n):
        raise ExponentOutOfRange(f"p={p} must lie in (1, {n})")


def decay_exponent(p, n):
    """Power k in u ~ r^(-k) for flat and conical ends."""
    return (n - p) / (p - 1.0)


def _switch_radius(profile, r, m):
    """Radius beyond which the affine asymptote replaces h inside the integral."""
    start = profile.affine_from
    if math.isfinite(start):
        return max(start, 100.0 * r)
    a, off, c1, shift = profile.asymptote()
    R = max(1e4 * max(r, 1.0), shift + 10.0)
    while True:
        # relative integrand error m c1 / ((s - shift) h) at the switch point,
        # times the tail's share of the integral, must stay below TAIL_TOL
        err = m * c1 / ((R - shift) * (a * R + off))
        share = ((a * R + off) / float(profile.h(r))) ** (1.0 - m) * R
        if err * min(1.0, share) < TAIL_TOL or R > 1e15:
            return R
        R *= 10.0


def scaled_tail_integral(profile, r, m):
    """J(r) = int_r^inf (h(s)/h(r))^(-m) ds, so that I(r) = h(r)^(-m) J(r)."""
    r = float(r)
    hr = float(profile.h(r))
    R = _switch_radius(profile, r, m)
    a, off, _, _ = profile.asymptote()

    def integrand(x):
        s = math.exp(x)
        return math.exp(-m * math.log(float(profile.h(s)) / hr)) * s

    cuts = [math.log(r)]
    cuts += [math.log(b) for b in _breakpoints(profile) if r < b < R]
    cuts.append(math.log(R))
    # break the log interval into unit pieces: the integrand decays like s^(1-m)
    pieces = []
    for lo, hi in zip(cuts, cuts[1:]):
        pieces += list(np.linspace(lo, hi, max(2, int(math.ceil(hi - lo)) + 1)))
    pieces = sorted(set(pieces))
    total = 0.0
    for lo, hi in zip(pieces, pieces[1:]):
        val, err = quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        if not math.isfinite(val):
            raise QuadratureFailure(f"quadrature of I failed on [{math.exp(lo)}, {math.exp(hi)}]")
        total += val
    hR = a * R + off
    tail = math.exp((1.0 - m) * math.log(hR / hr)) * hr / (a * (m - 1.0))
    return total + tail


@dataclass(frozen=True)
class RadialSolution:
    profile: WarpedProfile
    p: float
    r0: float
    J_r0: float
    quadrature_tol: float = 1e-12
    residual: float = field(default=0.0, compare=False)

    @property
    def n(self):
        return self.profile.n

    @property
    def m(self):
        return (self.n - 1) / (self.p - 1.0)

    @property
    def h0(self):
        return float(self.profile.h(self.r0))

    @property
    def I_r0(self):
        return self.h0 ** (-self.m) * self.J_r0

    def log_u(self, r):
        """log u(r), exact scaling without cancellation."""
        r = float(r)
        if r == self.r0:
            return 0.0
        J = _cached_J(self.profile, r, self.m)
        return -self.m * math.log(float(self.profile.h(r)) / self.h0) + math.log(J / self.J_r0)

    def u(self, r):
        if np.ndim(r):
            return np.array([math.exp(self.log_u(x)) for x in np.ravel(r)]).reshape(np.shape(r))
        return math.exp(self.log_u(r))

    def du(self, r):
        """u'(r) = -h^(-m)/I(r0) (always negative)."""
        h = np.asarray(self.profile.h(r), dtype=float)
        val = -np.exp(-self.m * np.log(h / self.h0)) / self.J_r0
        return float(val) if val.ndim == 0 else val

    def d2u(self, r):
        """u''(r) = m h' h^(-m-1)/I(r0)."""
        h, dh, _ = self.profile.evaluate(r)
        val = -self.m * dh / h * self.du(r)
        return float(val) if np.ndim(val) == 0 else val

    def radius_of_level(self, t):
        """Radius r_t with u(r_t) = 1/t."""
        return radius_of_level(self, float(t))


@lru_cache(maxsize=65536)
def _cached_J(profile, r, m):
    return scaled_tail_integral(profile, r, m)


def solve_radial(profile, p, r0, check_points=64):
    _check_exponent(p, profile.n)
    if r0 <= 0.0:
        from .errors import NonPositiveRadius
        raise NonPositiveRadius("r0 must be positive")
    m = (profile.n - 1) / (p - 1.0)
    J0 = _cached_J(profile, float(r0), m)
    sol = RadialSolution(profile, float(p), float(r0), J0)
    # flux h^{n-1}|u'|^{p-1} must be constant; check it on a log grid
    r = np.geomspace(r0, 1e4 * r0, check_points)
    h = profile.h(r)
    flux = h ** (profile.n - 1) * np.abs(sol.du(r)) ** (p - 1.0)
    res = float(np.max(np.abs(flux / flux[0] - 1.0)))
    return RadialSolution(profile, float(p), float(r0), J0, residual=res)


def radius_of_level(sol, t, xtol=1e-12):
    if t < 1.0:
        raise RootNotBracketed(f"level t={t} is below 1")
    if t == 1.0:
        return sol.r0
    target = -math.log(t)
    lo = sol.r0
    hi = 2.0 * sol.r0
    for _ in range(200):
        if sol.log_u(hi) < target:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RootNotBracketed(f"could not bracket level t={t}")
    f = lambda x: sol.log_u(math.exp(x)) - target
    x = brentq(f, math.log(lo), math.log(hi), xtol=xtol, rtol=1e-15, maxiter=200)
    return math.exp(x)


def capacity(sol):
    """``(cap_p, c_p, details)`` with both the boundary-flux and the energy forms."""
    n, p = sol.n, sol.p
    S = sphere_measure(n - 1)
    # |S| I(r0)^{1-p} = |S| h0^{n-1} J0^{1-p}
    cap = S * sol.h0 ** (n - 1) * sol.J_r0 ** (1.0 - p)
    boundary = S * sol.h0 ** (n - 1) * abs(sol.du(sol.r0)) ** (p - 1.0)
    energy = S * _energy_integral(sol)
    c_p = ((p - 1.0) / (n - p)) ** (p - 1.0) * cap / S
    details = {"cap_formula": cap, "cap_boundary": boundary, "cap_energy": energy,
               "boundary_vs_energy": abs(boundary - energy) / cap}
    return cap, c_p, details


def _energy_integral(sol):
    """int_{r0}^inf h^{n-1} |u'|^p dr, integrated in log r over the same pieces as J."""
    n, p, m = sol.n, sol.p, sol.m
    prof = sol.profile
    R = _switch_radius(prof, sol.r0, m)
    h0 = sol.h0

    def integrand(x):
        s = math.exp(x)
        q = float(prof.h(s)) / h0
        return q ** (n - 1) * math.exp(-m * p * math.log(q)) * s

    cuts = [math.log(sol.r0)] + [math.log(b) for b in _breakpoints(prof) if sol.r0 < b < R]
    cuts.append(math.log(R))
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        grid = np.linspace(lo, hi, max(2, int(math.ceil(hi - lo)) + 1))
        for a_, b_ in zip(grid, grid[1:]):
            total += quad(integrand, a_, b_, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    a, off, _, _ = prof.asymptote()
    hR = (a * R + off) / h0
    total += hR ** (n - 1 - m * p + 1) * h0 / (a * (m * p - n))
    # restore scale: h0^{n-1} (h0^{-m}/I0)^p = h0^{n-1} J0^{-p}
    return h0 ** (n - 1) * total * sol.J_r0 ** (-p)


def normalised_capacity(profile, p, r0):
    return capacity(solve_radial(profile, p, r0))[1]


# -- Green's function --------------------------------------------------------

def green_scale(n, p):
    """Factor turning the unit-flux Green's function into the d^{-(n-p)/(p-1)} convention."""
    return (n - p) / (p - 1.0) * sphere_measure(n - 1) ** (1.0 / (p - 1.0))


def green_function(profile, p, r):
    """Unit-flux p-Green's function with pole at the origin, at distance r.

    |S^{n-1}| h^{n-1} |G'|^{p-1} = 1, hence G(r) = |S^{n-1}|^{-1/(p-1)} I(r).
    """
    _check_exponent(p, profile.n)
    m = (profile.n - 1) / (p - 1.0)
    h = float(profile.h(r))
    I = h ** (-m) * _cached_J(profile, float(r), m)
    return sphere_measure(profile.n - 1) ** (-1.0 / (p - 1.0)) * I


@dataclass(frozen=True)
class GreenReport:
    p: float
    scale: float
    min_ratio: float
    max_ratio: float
    radii: tuple


def green_bound_check(profile, p, r_min=1e-2, r_max=1e6, num=61):
    """Ratio G(r) r^{(n-p)/(p-1)} in the power-law convention, min and max over a grid.

    The sharp lower bound says min_ratio >= 1; max_ratio is the constant of the
    matching upper bound.
    """
    n = profile.n
    k = decay_exponent(p, n)
    scale = green_scale(n, p)
    radii = np.geomspace(r_min, r_max, num)
    ratios = np.array([scale * green_function(profile, p, r) * r ** k for r in radii])
    return GreenReport(p, scale, float(ratios.min()), float(ratios.max()), tuple(radii))


# -- growth bounds -----------------------------------------------------------

def li_yau_check(sol, r_max=1e6, num=121):
    """``(C1, C2, grad_bound)``: inf/sup of u r^k over a log grid and sup |u'| u^{-(n-1)/(n-p)}."""
    n, p = sol.n, sol.p
    k = decay_exponent(p, n)
    r = np.geomspace(sol.r0, max(r_max, 10.0 * sol.r0), num)
    log_u = np.array([sol.log_u(x) for x in r])
    prod = np.exp(log_u + k * np.log(r))
    grad = np.abs(sol.du(r)) * np.exp(-(n - 1) / (n - p) * log_u)
    return float(prod.min()), float(prod.max()), float(grad.max())


# -- monotone quantities on spheres ------------------------------------------

def f_beta_exponents(n, p, beta):
    """Power of t and power of |Du| in F_p^beta."""
    return beta * (n - 1) * (p - 1.0) / (n - p), (beta + 1.0) * (p - 1.0)


def f_beta_radial(sol, beta, t):
    n, p = sol.n, sol.p
    ta, q = f_beta_exponents(n, p, beta)
    r = sol.radius_of_level(t)
    h = float(sol.profile.h(r))
    return t ** ta * sphere_measure(n - 1) * h ** (n - 1) * abs(sol.du(r)) ** q


def f_infty_radial(sol, t):
    n, p = sol.n, sol.p
    r = sol.radius_of_level(t)
    return t ** ((n - 1) / (n - p)) * abs(sol.du(r))


# -- p -> 1 limit ------------------------------------------------------------

@dataclass(frozen=True)
class Extrapolation:
    value: float
    uncertainty: float
    estimates: tuple
    samples: tuple
    fit_residual: float


def richardson_to_one(p_values, values, log_space=True):
    """Polynomial (Neville) extrapolation of values(p) to p = 1.

    Works on log(values) by default: for flat and exactly conical ends log C_p
    is affine in p, so the extrapolation is exact there.
    """
    x = np.asarray(p_values, dtype=float) - 1.0
    y = np.log(values) if log_space else np.asarray(values, dtype=float)
    order = np.argsort(-x)
    x, y = x[order], y[order]
    estimates = []
    for k in range(1, len(x) + 1):
        # interpolating polynomial through the k points closest to p = 1
        xs, ys = x[-k:], y[-k:]
        table = list(ys)
        for level in range(1, k):
            table = [((0.0 - xs[i + level]) * table[i] - (0.0 - xs[i]) * table[i + 1])
                     / (xs[i] - xs[i + level]) for i in range(k - level)]
        estimates.append(table[0])
    est = np.exp(estimates) if log_space else np.asarray(estimates)
    diffs = np.abs(np.diff(est))
    if len(diffs) >= 2 and diffs[-1] > diffs[-2] and diffs[-1] > 1e-12 * abs(est[-1]):
        raise ExtrapolationDiverged(f"extrapolants {est.tolist()} are not Cauchy")
    unc = float(diffs[-1]) if len(diffs) else math.inf
    # residual of the best straight-line fit, a proxy for being in the asymptotic
    # regime; in log space it is a relative deviation of the values themselves
    if len(x) >= 3:
        coef = np.polyfit(x, y, 1)
        fit = float(np.max(np.abs(np.polyval(coef, x) - y)))
        if not log_space:
            fit /= max(float(np.max(np.abs(y))), 1e-300)
    else:
        fit = 0.0
    return Extrapolation(float(est[-1]), unc, tuple(float(e) for e in est),
                         tuple(zip(map(float, np.asarray(p_values)), map(float, values))), fit)


def p_to_one_limit(profile, r0, p_sequence=(1.2, 1.1, 1.05)):
    """Extrapolated lim_{p->1} C_p of the ball of radius r0."""
    ps = [float(p) for p in p_sequence]
    if any(b >= a for a, b in zip(ps, ps[1:])):
        raise ExtrapolationDiverged("p_sequence must decrease toward 1")
    for p in ps:
        _check_exponent(p, profile.n)
    values = [normalised_capacity(profile, p, r0) for p in ps]
    return richardson_to_one(ps, values)
