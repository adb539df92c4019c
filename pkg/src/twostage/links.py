"""Symmetric sigmoid links and their inverses.

The logistic link uses ``scipy.special.expit``/``logit``.  The probit link
uses ``scipy.special.ndtr`` (Cephes erf/erfc, absolute error well below
1e-15) for the CDF and ``ndtri`` followed by Newton refinement for the
inverse.  Both links are evaluated in the symmetric form so that
``sigma(u) + sigma(-u) == 1`` holds to rounding.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy import special

from .errors import LinkError

_SQRT_2PI = np.sqrt(2.0 * np.pi)


class Link(str, enum.Enum):
    LOGISTIC = "logistic"
    PROBIT = "probit"
    IDENTITY = "identity"

    @property
    def probabilistic(self) -> bool:
        return self is not Link.IDENTITY


def as_link(link: "Link | str") -> Link:
    try:
        return Link(link)
    except ValueError:
        raise LinkError(f"unknown link kind {link!r}") from None


def _require_probabilistic(link: Link) -> None:
    if not link.probabilistic:
        raise LinkError("identity link has no probabilistic evaluation")


def link_eval(link: Link | str, u):
    """sigma(u) for the logistic or probit link; scalar in, scalar out."""
    link = as_link(link)
    _require_probabilistic(link)
    u = np.asarray(u, dtype=float)
    out = special.expit(u) if link is Link.LOGISTIC else special.ndtr(u)
    return out[()] if out.ndim == 0 else out


def link_pair(link: Link, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(sigma(u), sigma(-u), sigma'(u))``; the second term avoids ``1 - p`` cancellation."""
    if link is Link.LOGISTIC:
        p, q = special.expit(u), special.expit(-u)
        return p, q, p * q
    if link is Link.PROBIT:
        return special.ndtr(u), special.ndtr(-u), np.exp(-0.5 * u * u) / _SQRT_2PI
    raise LinkError("identity link has no probabilistic evaluation")


def link_inverse(link: Link | str, p):
    """sigma^{-1}(p) for p strictly inside (0, 1)."""
    link = as_link(link)
    _require_probabilistic(link)
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise LinkError("probability must lie strictly inside (0, 1)")
    if link is Link.LOGISTIC:
        out = special.logit(p)
    else:
        # ndtri is accurate to a few ulps; two Newton steps on whichever tail
        # is smaller keep the residual at rounding level.
        out = special.ndtri(p)
        lower = p <= 0.5
        for _ in range(2):
            resid = np.where(lower, special.ndtr(out) - p, (1.0 - p) - special.ndtr(-out))
            dens = np.exp(-0.5 * out * out) / _SQRT_2PI
            step = np.divide(resid, dens, out=np.zeros_like(resid), where=dens > 0)
            out = out - step
    return out[()] if out.ndim == 0 else out


def complete_transitive(link: Link | str, p12, p23):
    """Probability of x1 over x3 implied by sigma-transitivity."""
    return link_eval(link, link_inverse(link, p12) + link_inverse(link, p23))
