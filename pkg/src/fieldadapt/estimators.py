"""Baseline estimators of the field angle from a measurement record:
Pauli-expectation tomography and exact Bayesian updating via a Fourier-series
recursion.

Both consume exactly the record the agent generates. Outcome bits b map to
signed results r = 2b - 1 at this module's boundary; the Fourier coefficients
are stored unnormalized exactly as the recursion produces them, with the
normalization pi * c(0) applied only when densities or moments are queried.
"""

import math
from dataclasses import dataclass

import numpy as np

from .angles import (EPS_ANGLE, EPS_RESULTANT, DegenerateDistribution,
                     circular_distance, normalize_angle)
from .pscore import CANONICAL_ACTIONS

DENSITY_GRID = 4096


class InsufficientData(ValueError):
    """The record does not cover both measurement axes."""


def sign_from_bit(bit: int) -> int:
    """Bridge between the record's outcome bits and signed results."""
    if bit not in (0, 1):
        raise ValueError(f"outcome must be a bit, got {bit!r}")
    return 2 * bit - 1


@dataclass
class FourierPosterior:
    """Fourier coefficients of p(phi | record).

    The density is cos_coeffs[0]/2 + sum_q cos_coeffs[q] cos(q phi)
    + sin_coeffs[q] sin(q phi), unnormalized; after M updates at most M
    harmonics are populated. sin_coeffs[0] is identically zero.
    """

    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    @property
    def harmonics(self) -> int:
        return len(self.cos_coeffs) - 1

    def normalization(self) -> float:
        """Integral of the unnormalized density over the circle."""
        return math.pi * float(self.cos_coeffs[0])

    def density(self, phis) -> np.ndarray:
        """Renormalized density evaluated at the given angles."""
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        q = np.arange(1, self.harmonics + 1)
        qphi = np.outer(phis, q)
        values = 0.5 * self.cos_coeffs[0] + np.cos(qphi) @ self.cos_coeffs[1:] \
            + np.sin(qphi) @ self.sin_coeffs[1:]
        return values / self.normalization()


def flat_prior() -> FourierPosterior:
    """Uniform distribution on the circle, density 1/(2 pi)."""
    return FourierPosterior(np.array([1.0 / math.pi]), np.array([0.0]))


def bayes_update(post: FourierPosterior, result: int, alpha: float) -> FourierPosterior:
    """Multiply the posterior by (1 + result * cos(phi - alpha)) / 2.

    `result` is the signed outcome +-1. The recursion couples each harmonic
    only to its neighbors, so one update costs O(harmonics) and adds one
    harmonic.
    """
    if result not in (-1, 1):
        raise ValueError(f"result must be +-1, got {result!r}")
    m = post.harmonics
    # padded copies: index q runs 0..m+2, zero beyond the current cutoff
    c = np.zeros(m + 3)
    s = np.zeros(m + 3)
    c[:m + 1] = post.cos_coeffs
    s[:m + 1] = post.sin_coeffs
    ca, sa = math.cos(alpha), math.sin(alpha)
    r = float(result)

    c_new = np.zeros(m + 2)
    s_new = np.zeros(m + 2)
    c_new[0] = 0.5 * c[0] + 0.5 * r * (ca * c[1] + sa * s[1])
    c_new[1:] = 0.5 * c[1:m + 2] + 0.25 * r * (
        ca * (c[0:m + 1] + c[2:m + 3]) - sa * (s[0:m + 1] - s[2:m + 3]))
    s_new[1:] = 0.5 * s[1:m + 2] + 0.25 * r * (
        sa * (c[0:m + 1] - c[2:m + 3]) + ca * (s[0:m + 1] + s[2:m + 3]))
    return FourierPosterior(c_new, s_new)


def posterior_from_record(record) -> FourierPosterior:
    """Fold a whole measurement record into the flat prior."""
    post = flat_prior()
    for alpha, bit in record:
        post = bayes_update(post, sign_from_bit(bit), alpha)
    return post


def posterior_mean_std(post: FourierPosterior):
    """Mean angle and circular standard deviation from the first moment.

    The renormalized first circular moment is (c(1) + i s(1)) / c(0); its
    argument is the mean, sqrt(-2 ln |.|) the spread.
    """
    if post.harmonics < 1:
        raise DegenerateDistribution("flat prior carries no direction")
    c0 = float(post.cos_coeffs[0])
    moment = complex(post.cos_coeffs[1], post.sin_coeffs[1]) / c0
    magnitude = abs(moment)
    if magnitude <= EPS_RESULTANT:
        raise DegenerateDistribution("first circular moment vanishes")
    mean = normalize_angle(math.atan2(moment.imag, moment.real))
    spread = math.sqrt(max(0.0, -2.0 * math.log(min(magnitude, 1.0))))
    return mean, spread


@dataclass
class TomographyEstimate:
    """Equatorial Bloch-vector estimate and the angle it points at."""

    sx: float
    sy: float
    angle: float


def tomography(record) -> TomographyEstimate:
    """Estimate the Bloch vector from sample means of the signed outcomes.

    Entries must measure the canonical directions; sx comes from the 0 / pi
    pair, sy from the pi/2 / 3pi/2 pair, each as (sum of +r) minus (sum of
    -r) over the pair's total count. Raises InsufficientData when either
    axis pair is unsampled.
    """
    sums = {a: 0.0 for a in CANONICAL_ACTIONS}
    counts = {a: 0 for a in CANONICAL_ACTIONS}
    for alpha, bit in record:
        for canonical in CANONICAL_ACTIONS:
            if circular_distance(alpha, canonical) <= EPS_ANGLE:
                sums[canonical] += sign_from_bit(bit)
                counts[canonical] += 1
                break

    east, west = CANONICAL_ACTIONS[0], CANONICAL_ACTIONS[2]
    north, south = CANONICAL_ACTIONS[1], CANONICAL_ACTIONS[3]
    m_x = counts[east] + counts[west]
    m_y = counts[north] + counts[south]
    if m_x == 0 or m_y == 0:
        raise InsufficientData(
            f"need both axis pairs sampled, got x-axis {m_x} and y-axis {m_y}"
        )
    sx = (sums[east] - sums[west]) / m_x
    sy = (sums[north] - sums[south]) / m_y
    if sx * sx + sy * sy <= EPS_RESULTANT:
        raise DegenerateDistribution("Bloch-vector estimate has zero length")
    return TomographyEstimate(sx, sy, normalize_angle(math.atan2(sy, sx)))
