"""Geometric inequalities for exterior p-capacitary potentials, with margins and rigidity.

Every check is written as ``lhs <= rhs`` in its natural orientation and
returns :class:`InequalityReport` objects.  Verdicts use the relative margin

    relative_margin = (rhs - lhs) / max(|lhs|, |rhs|)

so that radial and grid-based configurations share one scale: ``equality``
when it is within ``eq_tol`` of zero, ``violated`` below ``-tol_report``.

Notation: S = |S^{n-1}|, AVR the asymptotic volume ratio, C_p the normalised
capacity (one for the flat unit ball), k = (n-p)/(p-1) the decay power.
Mean curvature is taken with respect to the outward normal of the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from . import imcf
from .errors import NotConicalRegion
from .levelsets import enclosed_volume, extract, hessian_frame
from .manifold import DomainSpec, WarpedProfile, avr, ball_measure, ball_volume, sphere_measure
from .radial import (capacity, decay_exponent, green_bound_check, green_function, green_scale,
                     p_to_one_limit, richardson_to_one, solve_radial)
from .solver_axisym import GridParams, SolverParams, capacity_from_field, solve

RADIAL_TOL = 1e-6
FIELD_TOL = 1e-3
FIT_RESIDUAL_LIMIT = 0.1
DEFAULT_P_SEQUENCE = (1.2, 1.1, 1.05)
SWEEP_LEVELS = tuple(float(t) for t in np.geomspace(1.0, 4.0, 7))

VERDICTS = ("holds", "equality", "violated")
RIGIDITY = ("none", "cone", "euclidean_ball")


@dataclass
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    relative_margin: float
    verdict: str
    rigidity_class: str
    provenance: dict
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
                "relative_margin": self.relative_margin, "verdict": self.verdict,
                "rigidity_class": self.rigidity_class, "provenance": dict(self.provenance),
                "details": dict(self.details)}


# -- configurations -----------------------------------------------------------------

@dataclass(frozen=True)
class Boundary:
    """Samples of the boundary with a quadrature, geometric H and the potential's |Du|."""
    H: np.ndarray
    v: np.ndarray
    quadrature: object          # values on the samples -> integral over the boundary
    area: float
    volume: float
    H_field: np.ndarray = None

    def integrate(self, values):
        return float(self.quadrature(np.asarray(values, dtype=float)))


class Configuration:
    """A solved exterior problem: radial for geodesic balls, on the meridian grid otherwise."""

    def __init__(self, profile: WarpedProfile, domain: DomainSpec, p, grid_params=GridParams(),
                 solver_params=SolverParams(), p_sequence=DEFAULT_P_SEQUENCE, field_=None):
        self.profile = profile
        self.domain = domain
        self.p = float(p)
        self.n = profile.n
        self.grid_params = grid_params
        self.solver_params = solver_params
        self.p_sequence = tuple(float(x) for x in p_sequence)
        self.radial = domain.is_ball
        if self.radial:
            self.source = solve_radial(profile, self.p, domain.r0)
        else:
            self.source = field_ if field_ is not None else solve(profile, self.p, domain,
                                                                  grid_params, solver_params)
        tol = RADIAL_TOL if self.radial else FIELD_TOL
        self.tol_report = tol
        self.eq_tol = tol
        self._cache = {}

    @property
    def provenance(self):
        out = {"solver": "radial" if self.radial else "axisymmetric",
               "tol_report": self.tol_report, "eq_tol": self.eq_tol, "p": self.p}
        if not self.radial:
            g = self.grid_params
            out.update({"Nr": g.Nr, "Ntheta": g.Ntheta, "R_max_factor": g.R_max_factor,
                        "solver_tol": self.solver_params.tol})
        return out

    def avr(self):
        if "avr" not in self._cache:
            self._cache["avr"] = avr(self.profile)
        return self._cache["avr"]

    def capacity(self):
        """(Cap_p, C_p)."""
        if "cap" not in self._cache:
            if self.radial:
                cap, c_p, _ = capacity(self.source)
            else:
                cap, c_p, _ = capacity_from_field(self.source)
            self._cache["cap"] = (cap, c_p)
        return self._cache["cap"]

    def boundary(self):
        if "boundary" not in self._cache:
            self._cache["boundary"] = (_radial_boundary(self) if self.radial
                                       else _field_boundary(self))
        return self._cache["boundary"]

    def level_volume(self, t):
        """|{u > 1/t} union Omega|."""
        if self.radial:
            return ball_volume(self.profile, self.source.radius_of_level(t))
        if t == 1.0:
            return self.boundary().volume
        return enclosed_volume(self.source, extract(self.source, t))

    def hull_extrapolation(self):
        """p -> 1 extrapolation of C_p, an estimate of |dOmega*| / S."""
        if "hull" not in self._cache:
            if self.radial:
                ext = p_to_one_limit(self.profile, self.domain.r0, self.p_sequence)
            else:
                values = []
                for q in self.p_sequence:
                    fq = solve(self.profile, q, self.domain, self.grid_params, self.solver_params)
                    values.append(capacity_from_field(fq)[1])
                ext = richardson_to_one(self.p_sequence, values)
            self._cache["hull"] = ext
        return self._cache["hull"]


def prepare(profile, domain, p, grid_params=GridParams(), solver_params=SolverParams(),
            p_sequence=DEFAULT_P_SEQUENCE):
    return Configuration(profile, domain, p, grid_params, solver_params, p_sequence)


def _radial_boundary(cfg):
    sol = cfg.source
    n = cfg.n
    h, dh, _ = cfg.profile.evaluate(sol.r0)
    area = sphere_measure(n - 1) * float(h) ** (n - 1)
    one = lambda x: np.array([float(x)])
    return Boundary(one((n - 1) * dh / h), one(abs(sol.du(sol.r0))), lambda f: area * f[0],
                    area, ball_volume(cfg.profile, sol.r0))


def boundary_mean_curvature(profile, domain, theta):
    """Outward mean curvature of the graph r = R(theta), as the divergence of D(r - R)/|D(r - R)|."""
    R, dR, d2R = domain.radius(theta)
    h, dh, _ = profile.evaluate(R)
    one = np.ones_like(theta)
    G, _, _, Htt, Hff = hessian_frame(one, -dR, 0.0 * one, 0.0 * one, -d2R, h, dh, theta)
    return (Htt + (profile.n - 2) * Hff) / G


def domain_volume(profile, domain, nodes=128):
    """|Omega| = |S^{n-2}| int_0^pi (int_0^{R(theta)} h^{n-1} dr) sin^{n-2} dtheta."""
    n = profile.n
    if domain.is_ball:
        return ball_volume(profile, domain.r0)
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * math.pi * (x + 1.0)
    R = domain.radius(theta)[0]
    radial = np.array([quad(lambda s: float(profile.h(s)) ** (n - 1), 0.0, float(r),
                            epsabs=0.0, epsrel=1e-13, limit=100)[0] for r in R])
    return sphere_measure(n - 2) * 0.5 * math.pi * float(np.dot(w, radial * np.sin(theta) ** (n - 2)))


def _field_boundary(cfg):
    # the level sampler's quadrature is the one the flux and F use
    curve = extract(cfg.source, 1.0)
    H = boundary_mean_curvature(cfg.profile, cfg.domain, curve.theta)
    H_field = cfg.source.interpolate("H", curve.rho, curve.theta)
    return Boundary(H, curve.normDu, curve.integrate, curve.integrate(np.ones_like(H)),
                    domain_volume(cfg.profile, cfg.domain), H_field)


# -- verdicts ------------------------------------------------------------------------

def _report(name, lhs, rhs, cfg, rigidity, slack=0.0, details=None):
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs
    scale = max(abs(lhs), abs(rhs), 1e-300)
    rel = margin / scale
    if abs(rel) <= cfg.eq_tol + slack:
        verdict, klass = "equality", rigidity
    elif rel < -(cfg.tol_report + slack):
        verdict, klass = "violated", "none"
    else:
        verdict, klass = "holds", "none"
    return InequalityReport(name, lhs, rhs, margin, rel, verdict, klass, cfg.provenance,
                            dict(details or {}))


def _curvature_details(b):
    out = {"min_H": float(np.min(b.H)), "max_H": float(np.max(b.H))}
    if b.H_field is not None:
        out["H_field_gap"] = float(np.max(np.abs(b.H_field - b.H)) / np.max(np.abs(b.H)))
    return out


# -- Minkowski family ------------------------------------------------------------------

def _lp_sides(cfg):
    n, p = cfg.n, cfg.p
    S = sphere_measure(n - 1)
    b = cfg.boundary()
    _, c_p = cfg.capacity()
    lhs = c_p ** ((n - p - 1.0) / (n - p)) * cfg.avr() ** (1.0 / (n - p))
    rhs_H = b.integrate(np.abs(b.H / (n - 1)) ** p) / S
    rhs_grad = ((p - 1.0) / (n - p)) ** p * b.integrate(b.v ** p) / S
    return lhs, rhs_grad, rhs_H


def lp_minkowski(cfg):
    """C_p^{(n-p-1)/(n-p)} AVR^{1/(n-p)} <= (1/S) int |H/(n-1)|^p."""
    lhs, rhs_grad, rhs_H = _lp_sides(cfg)
    chain = (rhs_H - lhs) - ((rhs_grad - lhs) + (rhs_H - rhs_grad))
    details = _curvature_details(cfg.boundary())
    details["chain_residual"] = chain
    return [_report("lp_minkowski", lhs, rhs_H, cfg, "cone", details=details)]


def intermediate_minkowski(cfg):
    """Gradient form C_p^{..} AVR^{..} <= (1/S)((p-1)/(n-p))^p int |Du|^p, then the Hoelder step."""
    lhs, rhs_grad, rhs_H = _lp_sides(cfg)
    grad = _report("intermediate_minkowski_gradient", lhs, rhs_grad, cfg, "cone")
    holder = _report("intermediate_minkowski_holder", rhs_grad, rhs_H, cfg, "cone")
    # the L^p margin splits exactly into these two margins
    grad.details["lp_margin"] = rhs_H - lhs
    grad.details["composed_margin"] = grad.margin + holder.margin
    return [grad, holder]


def _minkowski_rhs(cfg):
    n = cfg.n
    b = cfg.boundary()
    return b.integrate(np.abs(b.H) / (n - 1)) / sphere_measure(n - 1)


def extended_minkowski(cfg):
    """(|dOmega*|/S)^{(n-2)/(n-1)} AVR^{1/(n-1)} <= (1/S) int |H|/(n-1), hull area via p -> 1."""
    n = cfg.n
    ext = cfg.hull_extrapolation()
    expo = (n - 2.0) / (n - 1.0)
    lhs = ext.value ** expo * cfg.avr() ** (1.0 / (n - 1))
    rhs = _minkowski_rhs(cfg)
    # relative uncertainty of lhs propagated from the extrapolated hull area
    slack = expo * ext.uncertainty / ext.value
    details = {"hull_area_ratio": ext.value, "extrapolation_uncertainty": ext.uncertainty,
               "fit_residual": ext.fit_residual, "estimates": list(ext.estimates),
               "p_sequence": list(cfg.p_sequence),
               "estimate_only": bool(ext.fit_residual > FIT_RESIDUAL_LIMIT)}
    if not cfg.domain.is_ball:
        details["assumption"] = "domain taken to be outward minimising"
        details["exact_area_ratio"] = cfg.boundary().area / sphere_measure(n - 1)
    details.update(_curvature_details(cfg.boundary()))
    return [_report("extended_minkowski", lhs, rhs, cfg, "cone", slack=slack, details=details)]


def minkowski_outward_minimising(cfg):
    """Same inequality with |dOmega| in place of the hull area."""
    n = cfg.n
    b = cfg.boundary()
    S = sphere_measure(n - 1)
    lhs = (b.area / S) ** ((n - 2.0) / (n - 1.0)) * cfg.avr() ** (1.0 / (n - 1))
    details = {"area": b.area}
    if not cfg.domain.is_ball:
        details["assumption"] = "domain taken to be outward minimising"
    return [_report("minkowski_outward_minimising", lhs, _minkowski_rhs(cfg), cfg, "cone",
                    details=details)]


def volumetric_minkowski(cfg):
    """(|Omega|/|B^n|)^{(n-2)/n} AVR^{2/n} <= (1/S) int |H|/(n-1)."""
    n = cfg.n
    b = cfg.boundary()
    lhs = (b.volume / ball_measure(n)) ** ((n - 2.0) / n) * cfg.avr() ** (2.0 / n)
    return [_report("volumetric_minkowski", lhs, _minkowski_rhs(cfg), cfg, "euclidean_ball",
                    details={"volume": b.volume})]


# -- iso-p-capacitary -------------------------------------------------------------------

def _iso_sides(cfg, t):
    """n-th roots of both sides at the level t: Cap_p(Omega_t) = t^{p-1} Cap_p(Omega)."""
    n, p = cfg.n, cfg.p
    cap, _ = cfg.capacity()
    cap_ball = sphere_measure(n - 1) * ((n - p) / (p - 1.0)) ** (p - 1.0)
    lhs = cap_ball / ball_measure(n) ** ((n - p) / n) * cfg.avr() ** (p / n)
    vol = cfg.level_volume(t)
    rhs = t ** (p - 1.0) * cap / vol ** ((n - p) / n)
    return lhs, rhs, vol


def iso_p_capacitary(cfg, levels=SWEEP_LEVELS):
    """Cap_p(B)^n AVR^p / |B|^{n-p} <= Cap_p(Omega_t)^n / |Omega_t|^{n-p}, compared as n-th roots."""
    lhs, rhs, vol = _iso_sides(cfg, 1.0)
    main = _report("iso_p_capacitary", lhs, rhs, cfg, "euclidean_ball", details={"volume": vol})
    sweep = []
    for t in levels:
        l_, r_, _ = _iso_sides(cfg, t)
        sweep.append((float(t), (r_ - l_) / max(abs(l_), abs(r_))))
    worst_t, _ = min(sweep, key=lambda x: x[1])
    l_, r_, v_ = _iso_sides(cfg, worst_t)
    worst = _report("iso_p_capacitary_sweep", l_, r_, cfg, "euclidean_ball",
                    details={"worst_level": worst_t, "volume": v_,
                             "levels": [s[0] for s in sweep],
                             "relative_margins": [s[1] for s in sweep]})
    return [main, worst]


# -- pinching ------------------------------------------------------------------------

def pinching_classifier(cfg):
    """Three pinching inequalities on the boundary and the rigidity they single out.

    (i)   (AVR/C_p)^{1/(n-p)} <= sup |H|/(n-1)                                  cone
    (ii)  (AVR/C_p)^{1/(n-p)} / (p-1) <= sup |Du| / (n-p)                        cone
    (iii) AVR^{1/(p-1)} (S/|dOmega|)^{1/(n-1)} / (p-1) <= sup |Du| / (n-p)        flat ball
    """
    n, p = cfg.n, cfg.p
    b = cfg.boundary()
    _, c_p = cfg.capacity()
    A = cfg.avr()
    base = (A / c_p) ** (1.0 / (n - p))
    sup_H = float(np.max(np.abs(b.H))) / (n - 1)
    sup_v = float(np.max(b.v)) / (n - p)
    first = _report("pinching_i", base, sup_H, cfg, "cone")
    second = _report("pinching_ii", base / (p - 1.0), sup_v, cfg, "cone")
    third_lhs = A ** (1.0 / (p - 1.0)) * (sphere_measure(n - 1) / b.area) ** (1.0 / (n - 1)) / (p - 1.0)
    third = _report("pinching_iii", third_lhs, sup_v, cfg, "euclidean_ball")
    if third.verdict == "equality":
        klass = "euclidean_ball"
    elif first.verdict == "equality":
        klass = "cone"
    else:
        klass = "none"
    for rep in (first, second, third):
        rep.details["classification"] = klass
    return [first, second, third]


# -- growth of the potential ---------------------------------------------------------

def _green_ratio_spline(profile, p, r_lo, r_hi, num=161):
    """r -> G(r) r^k in the power-law normalisation, as a spline in log r."""
    n = profile.n
    k = decay_exponent(p, n)
    scale = green_scale(n, p)
    radii = np.geomspace(r_lo, r_hi, num)
    vals = np.array([scale * green_function(profile, p, r) * r ** k for r in radii])
    return CubicSpline(np.log(radii), vals)


def li_yau(cfg, r_max=1e6, num=121):
    """Lower growth bound u >= r^{-k} / sup_{dOmega} G with G in the power-law normalisation.

    Comparison gives u >= G / sup_{dOmega} G and the sharp Green bound G >= r^{-k};
    reported as 1 <= min u r^k sup_{dOmega} G.  The constant of the matching
    upper bound u <= C2 r^{-k} goes in the details.
    """
    n, p = cfg.n, cfg.p
    k = decay_exponent(p, n)
    if cfg.radial:
        sol = cfg.source
        r = np.geomspace(sol.r0, max(r_max, 10.0 * sol.r0), num)
        log_u = np.array([sol.log_u(x) for x in r])
        R_bdry = np.array([sol.r0])
    else:
        g = cfg.source.grid
        r = g.r[1:, :].ravel()
        log_u = -cfg.source.phi[1:, :].ravel()
        R_bdry = g.r[0, :]
    spline = _green_ratio_spline(cfg.profile, p, float(R_bdry.min()), float(r.max()))
    green_bdry = spline(np.log(R_bdry)) * R_bdry ** (-k)
    sup_g, inf_g = float(green_bdry.max()), float(green_bdry.min())
    prod = np.exp(log_u + k * np.log(r))
    lower = float(prod.min()) * sup_g
    ratio = spline(np.log(r))
    c_green = float(ratio.max())
    details = {"C1": 1.0 / sup_g, "C2": float(prod.max()), "upper_green_constant": c_green,
               "upper_bound_ratio": float(prod.max()) * inf_g / c_green}
    if cfg.radial:
        grad = np.abs(cfg.source.du(r)) * np.exp(-(n - 1) / (n - p) * log_u)
        details["gradient_bound"] = float(grad.max())
    return [_report("li_yau", 1.0, lower, cfg, "euclidean_ball", details=details)]


def green_lower_bound(cfg, r_min=1e-2, r_max=1e6, num=61):
    """1 <= min_r G(r) r^k: the sharp lower bound of the Green's function with pole at the origin."""
    rep = green_bound_check(cfg.profile, cfg.p, r_min, r_max, num)
    return [_report("green_lower_bound", 1.0, rep.min_ratio, cfg, "euclidean_ball",
                    details={"scale": rep.scale, "max_ratio": rep.max_ratio,
                             "r_min": r_min, "r_max": r_max})]


def bg_cone(cfg):
    """rho0^{n-1} S AVR <= |dK| for a sphere in a conical band, rho0 = h/h'."""
    if not cfg.domain.is_ball:
        raise NotConicalRegion("the cone bound is evaluated on geodesic spheres only")
    cb = imcf.bishop_gromov_cone_bound(cfg.profile, cfg.domain.r0)
    return [_report("bg_cone", cb.bound, cb.area, cfg, "cone",
                    details={"rho0": cb.rho0, "conical_beyond": cb.conical_beyond})]


CHECKS = {
    "lp_minkowski": lp_minkowski,
    "intermediate_minkowski": intermediate_minkowski,
    "extended_minkowski": extended_minkowski,
    "minkowski_outward_minimising": minkowski_outward_minimising,
    "volumetric_minkowski": volumetric_minkowski,
    "iso_p_capacitary": iso_p_capacitary,
    "pinching_classifier": pinching_classifier,
    "li_yau": li_yau,
    "green_lower_bound": green_lower_bound,
    "bg_cone": bg_cone,
}


def run_checks(cfg, names=None):
    names = list(CHECKS) if names is None else list(names)
    reports = []
    for name in names:
        reports.extend(CHECKS[name](cfg))
    return reports


def any_violated(reports):
    return any(r.verdict == "violated" for r in reports)
