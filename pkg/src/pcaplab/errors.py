"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``code`` so the command line
front end can map failures onto exit statuses.
"""


class PcapError(Exception):
    code = "error"


# manifold
class InvalidProfile(PcapError):
    code = "invalid_profile"


class NonConcaveProfile(InvalidProfile):
    code = "non_concave_profile"


class NonPositiveWarp(InvalidProfile):
    code = "non_positive_warp"


class NoVolumeGrowth(InvalidProfile):
    code = "no_volume_growth"


class NonPositiveRadius(PcapError, ValueError):
    code = "non_positive_radius"


class ProfileSingularAtOrigin(PcapError, ValueError):
    code = "profile_singular_at_origin"


class InvalidDomain(PcapError, ValueError):
    code = "invalid_domain"


# radial
class ExponentOutOfRange(PcapError, ValueError):
    code = "exponent_out_of_range"


class QuadratureFailure(PcapError):
    code = "quadrature_failure"


class RootNotBracketed(PcapError):
    code = "root_not_bracketed"


class ExtrapolationDiverged(PcapError):
    code = "extrapolation_diverged"


# solver
class NonConvergence(PcapError):
    code = "non_convergence"

    def __init__(self, message, eps_reached=None, residual=None):
        super().__init__(message)
        self.eps_reached = eps_reached
        self.residual = residual


class GridTooCoarse(NonConvergence):
    code = "grid_too_coarse"


class OutOfDomain(PcapError, ValueError):
    code = "out_of_domain"


# level sets and monotone quantities
class LevelOutOfRange(PcapError, ValueError):
    code = "level_out_of_range"


class CriticalContact(PcapError):
    code = "critical_contact"


class BulkQuadratureUnderflow(PcapError):
    code = "bulk_quadrature_underflow"


# flow
class StepFailure(PcapError):
    code = "step_failure"


class NotConicalRegion(PcapError):
    code = "not_conical_region"


# command line
class ConfigParse(PcapError):
    code = "config_parse"


class CheckFailed(PcapError):
    code = "check_failed"
