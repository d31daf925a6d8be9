"""Circular arithmetic and circular statistics on the Bloch-equator circle.

All directions are radians, kept canonical in [0, 2pi). Everything here is a
pure function and safe to call concurrently.
"""

import math
from typing import Iterable, Tuple

TWO_PI = 2.0 * math.pi

# Below this resultant magnitude the mean angle is numerically meaningless.
EPS_RESULTANT = 1e-12

# Plumbing-level tolerance for treating two directions as equal.
EPS_ANGLE = 1e-9


class DegenerateDistribution(ValueError):
    """A circular mean or spread was requested for a ~zero resultant."""


def normalize_angle(x: float) -> float:
    """Map a radian value to its canonical representative in [0, 2pi)."""
    if not math.isfinite(x):
        raise ValueError(f"angle must be finite, got {x!r}")
    x = math.fmod(x, TWO_PI)
    if x < 0.0:
        x += TWO_PI
    if x >= TWO_PI:  # fmod can land exactly on the period after rounding
        x -= TWO_PI
    return x


def circular_distance(a: float, b: float) -> float:
    """Absolute distance between two directions along the circle, in [0, pi]."""
    d = abs(normalize_angle(a) - normalize_angle(b))
    return min(d, TWO_PI - d)


def resultant(pairs: Iterable[Tuple[float, float]]) -> complex:
    """Weighted sum of unit vectors, sum_k w_k * e^{i angle_k}.

    Weights must be nonnegative; the input may not be empty. The magnitude is
    bounded by the weight sum, and by 1 for probability weights.
    """
    total = 0j
    count = 0
    for angle, weight in pairs:
        if weight < 0.0:
            raise ValueError(f"weights must be nonnegative, got {weight!r}")
        total += weight * complex(math.cos(angle), math.sin(angle))
        count += 1
    if count == 0:
        raise ValueError("resultant of an empty collection is undefined")
    return total


def circular_mean(pairs: Iterable[Tuple[float, float]]) -> float:
    """Direction of the resultant, in [0, 2pi).

    Raises DegenerateDistribution when the resultant is too short to carry a
    direction (e.g. weights spread symmetrically around the circle).
    """
    r = resultant(pairs)
    if abs(r) <= EPS_RESULTANT:
        raise DegenerateDistribution(
            f"resultant magnitude {abs(r):.3e} <= {EPS_RESULTANT}; mean undefined"
        )
    return normalize_angle(math.atan2(r.imag, r.real))


def circular_std(pairs: Iterable[Tuple[float, float]]) -> float:
    """Circular standard deviation sqrt(-2 ln |r|) of a probability-weighted set.

    The weights must sum to 1; a point mass gives 0 and broader distributions
    grow without bound as |r| -> 0.
    """
    pairs = list(pairs)
    weight_sum = sum(w for _, w in pairs)
    if abs(weight_sum - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {weight_sum!r}")
    magnitude = abs(resultant(pairs))
    if magnitude <= EPS_RESULTANT:
        raise DegenerateDistribution("zero resultant: dispersion is unbounded")
    return math.sqrt(max(0.0, -2.0 * math.log(min(magnitude, 1.0))))
