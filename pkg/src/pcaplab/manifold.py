"""Rotationally symmetric ambient manifolds.

The metric is ``dr^2 + h(r)^2 g_S`` on ``(0, inf) x S^{n-1}``, encoded by the
warping profile ``h``.  Nonnegative Ricci curvature follows from ``h'' <= 0``
together with ``h' <= 1``, and Euclidean volume growth from ``h' -> a > 0``.

Profile kinds
-------------
euclidean       h = r
cone            h = a r (singular tip; the origin is never evaluated)
smoothed_cone   h = a r + (1 - a) arctan r
grafted         smoothed cone up to r1, an exactly conical band on [r1, r2],
                then a concave arctan continuation with slope tending to a
capped_cone     h' = a + (1 - a)(1 - (r/r1)^2)^3 up to r1, exactly a r + const
                beyond: a smooth cap glued C^2 to a truncated cone
tabulated       monotone cubic fit of sampled (r, h), affine beyond the last node
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln

from .errors import (
    InvalidProfile,
    NonConcaveProfile,
    NonPositiveRadius,
    NonPositiveWarp,
    NoVolumeGrowth,
    ProfileSingularAtOrigin,
)

KINDS = ("euclidean", "cone", "smoothed_cone", "grafted", "capped_cone", "tabulated")

# int_0^1 (1 - s^2)^3 ds
_CAP_INTEGRAL = 16.0 / 35.0

CONCAVITY_TOL = 1e-12
RICCI_TOL = 1e-10


def sphere_measure(k):
    """Area of the unit round sphere S^k."""
    return 2.0 * math.exp(0.5 * (k + 1) * math.log(math.pi) - gammaln(0.5 * (k + 1)))


def ball_measure(n):
    """Volume of the unit ball in R^n."""
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


def _smoothed(r, a):
    r2 = 1.0 + r * r
    return (a * r + (1.0 - a) * np.arctan(r),
            a + (1.0 - a) / r2,
            -2.0 * (1.0 - a) * r / (r2 * r2))


@dataclass(frozen=True)
class WarpedProfile:
    kind: str
    n: int
    a: float = 1.0
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidProfile(f"unknown profile kind {self.kind!r}")
        if int(self.n) != self.n or self.n < 3:
            raise InvalidProfile(f"dimension must be an integer >= 3, got {self.n}")
        if self.kind == "euclidean" and self.a != 1.0:
            raise InvalidProfile("euclidean profile has slope 1")
        if self.kind != "tabulated" and not (0.0 < self.a <= 1.0):
            if self.a <= 0.0:
                raise NoVolumeGrowth(f"slope a={self.a} gives no volume growth")
            raise InvalidProfile(f"slope a={self.a} must lie in (0, 1]")
        if self.kind == "grafted":
            r1, r2 = self.params
            if not (0.0 < r1 < r2 < math.inf):
                raise InvalidProfile("grafted profile needs 0 < r1 < r2 < inf")
        if self.kind == "capped_cone":
            (r1,) = self.params
            if not (0.0 < r1 < math.inf):
                raise InvalidProfile("capped_cone needs 0 < r1 < inf")

    # -- evaluation ---------------------------------------------------------

    @cached_property
    def _graft(self):
        r1, r2 = self.params
        h1, b, _ = _smoothed(r1, self.a)
        return float(r1), float(r2), float(h1), float(b), float(h1 + b * (r2 - r1))

    @cached_property
    def _table(self):
        r, h = (np.asarray(v, dtype=float) for v in self.params)
        return PchipInterpolator(r, h, extrapolate=False), r[-1]

    def evaluate(self, r):
        """Return ``(h, h', h'')`` at radius or array of radii ``r``."""
        r = np.asarray(r, dtype=float)
        kind = self.kind
        if kind == "euclidean":
            return r.copy(), np.ones_like(r), np.zeros_like(r)
        if kind == "cone":
            return self.a * r, np.full_like(r, self.a), np.zeros_like(r)
        if kind == "smoothed_cone":
            return _smoothed(r, self.a)
        if kind == "grafted":
            r1, r2, h1, b, h2 = self._graft
            base = _smoothed(np.minimum(r, r1), self.a)
            x = np.maximum(r - r2, 0.0)
            x2 = 1.0 + x * x
            tail = (h2 + self.a * x + (b - self.a) * np.arctan(x),
                    self.a + (b - self.a) / x2,
                    -2.0 * (b - self.a) * x / (x2 * x2))
            band = (h1 + b * (r - r1), np.full_like(r, b), np.zeros_like(r))
            out = []
            for f0, f1, f2 in zip(base, band, tail):
                out.append(np.where(r <= r1, f0, np.where(r <= r2, f1, f2)))
            return tuple(out)
        if kind == "capped_cone":
            (r1,) = self.params
            a = self.a
            s = np.minimum(r / r1, 1.0)
            s2 = s * s
            w = 1.0 - s2
            poly = s - s2 * s + 0.6 * s2 * s2 * s - s2 * s2 * s2 * s / 7.0
            inside = r < r1
            h = np.where(inside, a * r + (1.0 - a) * r1 * poly, a * r + (1.0 - a) * r1 * _CAP_INTEGRAL)
            dh = a + (1.0 - a) * w ** 3
            d2h = -6.0 * (1.0 - a) * s * w * w / r1
            return h, dh, d2h
        spline, r_end = self._table
        inside = r <= r_end
        rc = np.clip(r, 0.0, r_end)
        h_in, dh_in, d2_in = spline(rc), spline(rc, 1), spline(rc, 2)
        h_end, slope = float(spline(r_end)), float(spline(r_end, 1))
        return (np.where(inside, h_in, h_end + slope * (r - r_end)),
                np.where(inside, dh_in, slope),
                np.where(inside, d2_in, 0.0))

    def h(self, r):
        return self.evaluate(r)[0]

    def dh(self, r):
        return self.evaluate(r)[1]

    def d2h(self, r):
        return self.evaluate(r)[2]

    # -- asymptotics --------------------------------------------------------

    @property
    def slope(self):
        """Limit of h'(r) as r -> infinity."""
        if self.kind == "tabulated":
            spline, r_end = self._table
            return float(spline(r_end, 1))
        return float(self.a)

    @property
    def smooth_at_origin(self):
        return self.kind != "cone"

    @property
    def affine_from(self):
        """Radius beyond which h is exactly affine (inf if never)."""
        if self.kind in ("euclidean", "cone"):
            return 0.0
        if self.kind == "tabulated":
            return float(self._table[1])
        if self.kind == "capped_cone":
            return float(self.params[0])
        return math.inf

    def asymptote(self):
        """``(slope, offset, c1, shift)`` with h(s) = slope*s + offset - c1/(s - shift) + O(s^-3).

        ``c1`` is zero when the profile is exactly affine at infinity.
        """
        a = self.slope
        if self.kind in ("euclidean", "cone"):
            return a, 0.0, 0.0, 0.0
        if self.kind == "smoothed_cone":
            return a, (1.0 - a) * math.pi / 2.0, 1.0 - a, 0.0
        if self.kind == "grafted":
            r1, r2, h1, b, h2 = self._graft
            return a, h2 - a * r2 + (b - a) * math.pi / 2.0, b - a, r2
        if self.kind == "capped_cone":
            return a, (1.0 - a) * self.params[0] * _CAP_INTEGRAL, 0.0, 0.0
        spline, r_end = self._table
        return a, float(spline(r_end)) - a * r_end, 0.0, 0.0

    def conical_on(self, r_lo, r_hi, tol=1e-12):
        """True when h'' vanishes identically on [r_lo, r_hi]."""
        if self.kind in ("euclidean", "cone"):
            return True
        if self.kind == "grafted":
            r1, r2 = self.params
            return r1 - tol <= r_lo and r_hi <= r2 + tol
        if self.kind == "capped_cone":
            return self.params[0] - tol <= r_lo
        if self.kind == "tabulated":
            r = np.linspace(r_lo, r_hi, 2001)
            return bool(np.all(np.abs(self.d2h(r)) <= tol))
        return False

    def describe(self):
        out = {"kind": self.kind, "n": self.n, "a": self.slope}
        if self.kind == "grafted":
            out["r1"], out["r2"] = self.params
        if self.kind == "capped_cone":
            out["r1"] = self.params[0]
        if self.kind == "tabulated":
            out["r"] = list(self.params[0])
            out["h"] = list(self.params[1])
        return out


# -- constructors -----------------------------------------------------------

def euclidean(n):
    return WarpedProfile("euclidean", n, 1.0)


def cone(n, a):
    return WarpedProfile("cone", n, float(a))


def smoothed_cone(n, a):
    return WarpedProfile("smoothed_cone", n, float(a))


def grafted(n, a, r1, r2):
    return WarpedProfile("grafted", n, float(a), (float(r1), float(r2)))


def capped_cone(n, a, r1):
    return WarpedProfile("capped_cone", n, float(a), (float(r1),))


def tabulated(n, r, h):
    r = tuple(float(x) for x in r)
    h = tuple(float(x) for x in h)
    if len(r) != len(h) or len(r) < 3:
        raise InvalidProfile("tabulated profile needs matching r and h with at least 3 nodes")
    if r[0] != 0.0 or h[0] != 0.0:
        raise InvalidProfile("tabulated profile must start at (0, 0)")
    if any(b <= a for a, b in zip(r, r[1:])):
        raise InvalidProfile("tabulated radii must be strictly increasing")
    prof = WarpedProfile("tabulated", n, 1.0, (r, h))
    return prof


def make_profile(n, kind, a=1.0, **params):
    if kind == "euclidean":
        return euclidean(n)
    if kind == "cone":
        return cone(n, a)
    if kind == "smoothed_cone":
        return smoothed_cone(n, a)
    if kind == "grafted":
        return grafted(n, a, params["r1"], params["r2"])
    if kind == "capped_cone":
        return capped_cone(n, a, params["r1"])
    if kind == "tabulated":
        return tabulated(n, params["r"], params["h"])
    raise InvalidProfile(f"unknown profile kind {kind!r}")


# -- geometric quantities ---------------------------------------------------

def _check_radius(profile, r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        if profile.kind == "cone" and np.any(r == 0.0):
            raise ProfileSingularAtOrigin("cone profile is singular at the origin")
        raise NonPositiveRadius(f"radius must be positive, got {r}")
    return r


def ricci_components(profile, r):
    """Radial and tangential Ricci eigenvalues at radius ``r``."""
    r = _check_radius(profile, r)
    n = profile.n
    h, dh, d2h = profile.evaluate(r)
    ric_rad = -(n - 1) * d2h / h
    ric_tan = (-h * d2h + (n - 2) * (1.0 - dh * dh)) / (h * h)
    if ric_rad.ndim == 0:
        return float(ric_rad), float(ric_tan)
    return ric_rad, ric_tan


def avr(profile, check_radius=1e12):
    """Asymptotic volume ratio a^(n-1), cross-checked against (h(R)/R)^(n-1)."""
    a = profile.slope
    if a <= 0.0:
        raise NoVolumeGrowth(f"asymptotic slope {a} is not positive")
    value = a ** (profile.n - 1)
    ratio = (float(profile.h(check_radius)) / check_radius) ** (profile.n - 1)
    if abs(ratio - value) > 1e-6 * value:
        raise NoVolumeGrowth(f"declared AVR {value} disagrees with far ratio {ratio}")
    return value


def sphere_area(profile, r):
    r = _check_radius(profile, r)
    area = sphere_measure(profile.n - 1) * profile.h(r) ** (profile.n - 1)
    return float(area) if area.ndim == 0 else area


def ball_volume(profile, r):
    """|B_r| = |S^{n-1}| * integral of h^{n-1} over [0, r]."""
    r = float(_check_radius(profile, r))
    n = profile.n
    breaks = [x for x in _breakpoints(profile) if 0.0 < x < r]
    val, _ = quad(lambda s: float(profile.h(s)) ** (n - 1), 0.0, r, points=breaks or None,
                  epsabs=0.0, epsrel=1e-12, limit=200)
    return sphere_measure(n - 1) * val


def _breakpoints(profile):
    if profile.kind == "grafted":
        return list(profile.params)
    if profile.kind == "tabulated":
        return list(profile.params[0][1:-1])
    if profile.kind == "capped_cone":
        return [profile.params[0]]
    return []


def mean_curvature_sphere(profile, r):
    """Mean curvature (n-1) h'/h of the geodesic sphere of radius r, outward normal."""
    r = _check_radius(profile, r)
    h, dh, _ = profile.evaluate(r)
    H = (profile.n - 1) * dh / h
    return float(H) if H.ndim == 0 else H


# -- standing hypotheses ----------------------------------------------------

@dataclass(frozen=True)
class ProfileCheck:
    ok: bool
    max_d2h: float
    max_dh: float
    min_h: float
    min_ric_rad: float
    min_ric_tan: float
    avr: float
    issues: tuple


def check_profile(profile, r_min=1e-3, r_max=1e6, num=4000, raise_on_fail=True):
    """Sample the hypotheses h > 0, h'' <= 0, h' <= 1, Ric >= 0 on a log grid."""
    r = np.geomspace(r_min, r_max, num)
    r = np.union1d(r, [x for x in _breakpoints(profile) if r_min < x < r_max])
    h, dh, d2h = profile.evaluate(r)
    ric_rad, ric_tan = ricci_components(profile, r)
    issues = []
    if np.any(h <= 0.0):
        issues.append(("non_positive_warp", float(h.min())))
    if np.any(d2h > CONCAVITY_TOL):
        issues.append(("non_concave", float(d2h.max())))
    if np.any(dh > 1.0 + 1e-12):
        issues.append(("slope_above_one", float(dh.max())))
    if min(ric_rad.min(), ric_tan.min()) < -RICCI_TOL:
        issues.append(("negative_ricci", float(min(ric_rad.min(), ric_tan.min()))))
    try:
        ratio = avr(profile)
    except NoVolumeGrowth as exc:
        issues.append(("no_volume_growth", str(exc)))
        ratio = float("nan")
    report = ProfileCheck(not issues, float(d2h.max()), float(dh.max()), float(h.min()),
                          float(ric_rad.min()), float(ric_tan.min()), ratio, tuple(issues))
    if raise_on_fail and issues:
        tag, detail = issues[0]
        exc = {"non_positive_warp": NonPositiveWarp, "non_concave": NonConcaveProfile,
               "no_volume_growth": NoVolumeGrowth}.get(tag, InvalidProfile)
        raise exc(f"profile {profile.kind} fails hypothesis {tag}: {detail}")
    return report


# -- domains ----------------------------------------------------------------

@dataclass(frozen=True)
class DomainSpec:
    kind: str = "geodesic_ball"
    r0: float = 1.0
    eps: float = 0.0
    k: int = 0

    def __post_init__(self):
        from .errors import InvalidDomain
        if self.kind not in ("geodesic_ball", "perturbed_ball"):
            raise InvalidDomain(f"unknown domain kind {self.kind!r}")
        if not self.r0 > 0.0:
            raise InvalidDomain("r0 must be positive")
        if not abs(self.eps) < 1.0:
            raise InvalidDomain("perturbation amplitude must satisfy |eps| < 1")
        if int(self.k) != self.k or self.k < 0:
            raise InvalidDomain("angular mode k must be a nonnegative integer")
        if self.kind == "geodesic_ball" and self.eps != 0.0:
            raise InvalidDomain("geodesic_ball takes eps = 0")

    @property
    def is_ball(self):
        return self.kind == "geodesic_ball" or self.eps == 0.0 or self.k == 0

    def radius(self, theta):
        """Boundary radius R(theta) and its first two theta derivatives."""
        theta = np.asarray(theta, dtype=float)
        c, s = np.cos(self.k * theta), np.sin(self.k * theta)
        R = self.r0 * (1.0 + self.eps * c)
        dR = -self.r0 * self.eps * self.k * s
        d2R = -self.r0 * self.eps * self.k ** 2 * c
        return R, dR, d2R
