"""Random Gaussian designs with identity or AR(1) column covariance."""

import re

import numpy as np
from scipy.signal import lfilter

from .data import standardize

__all__ = ["parse_cov", "format_cov", "gaussian_design", "gen_design"]

_AR1_RE = re.compile(r"^ar1\(\s*([0-9.eE+-]+)\s*\)$")


def parse_cov(spec):
    """Parse a covariance label: ``identity`` or ``ar1(rho)``.

    Returns (kind, rho) with rho = 0.0 for the identity.
    """
    if isinstance(spec, (tuple, list)):
        kind, rho = spec
        return parse_cov(f"{kind}({rho})" if kind == "ar1" else kind)
    s = str(spec).strip().lower()
    if s in ("identity", "id", "i"):
        return ("identity", 0.0)
    m = _AR1_RE.match(s)
    if m:
        rho = float(m.group(1))
        if not 0.0 <= rho < 1.0:
            raise ValueError(f"ar1 correlation must be in [0, 1), got {rho}")
        if rho == 0.0:
            return ("identity", 0.0)
        return ("ar1", rho)
    raise ValueError(f"unknown covariance spec {spec!r}; "
                     "use 'identity' or 'ar1(rho)'")


def format_cov(cov):
    kind, rho = parse_cov(cov)
    return "identity" if kind == "identity" else f"ar1({rho:g})"


def gaussian_design(n, p, cov, rng):
    """Raw n-by-p design with rows N_p(0, Sigma), unstandardized.

    Sigma is the identity or the AR(1) matrix rho^|i-j|, realised through
    the stationary recursion z_j = rho z_{j-1} + sqrt(1-rho^2) e_j applied
    along each row.
    """
    kind, rho = parse_cov(cov)
    e = rng.standard_normal((n, p))
    if kind == "identity":
        return e
    scaled = e * np.sqrt(1.0 - rho * rho)
    scaled[:, 0] = e[:, 0]
    return lfilter([1.0], [1.0, -rho], scaled, axis=1)


def gen_design(n, p, cov, rng):
    """Standardized design with rows drawn N_p(0, Sigma)."""
    return standardize(gaussian_design(n, p, cov, rng))
