"""Composition: creating new measurement directions at runtime.

Two mechanisms act on a single agent's network. Bisection inserts the
midpoint of the two strongest directions. Glow composition lets rewards
accumulate in the glow registers while behavior stays uniform, then inserts
the glow-weighted mean direction (or strengthens the nearest existing one
when the mean lands too close to it).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .angles import (EPS_ANGLE, EPS_RESULTANT, TWO_PI, circular_distance,
                     normalize_angle)
from .pscore import TRIGGER_PERCEPT, ClipNetwork

DEFAULT_GLOW_THRESHOLD = 500.0
DEFAULT_PROXIMITY_FACTOR = 0.1


class DegenerateGlow(ValueError):
    """The glow resultant is too short to define a composed direction."""


@dataclass
class CompositionOutcome:
    """What a composition step did: kind is "inserted", "strengthened" or
    "none"; angle is the new or reinforced direction; weight its h-value."""

    kind: str
    angle: Optional[float] = None
    weight: Optional[float] = None


def _shorter_arc_midpoint(a: float, b: float) -> float:
    """Midpoint of the shorter arc from a to b; antipodal pairs bisect the
    arc running clockwise from a."""
    delta = math.fmod(b - a + math.pi, TWO_PI)
    if delta < 0.0:
        delta += TWO_PI
    delta -= math.pi
    return normalize_angle(a + 0.5 * delta)


def bisect_compose(net: ClipNetwork, percept=TRIGGER_PERCEPT) -> CompositionOutcome:
    """Insert the shorter-arc midpoint of the two highest-weight directions.

    The new edge starts at weight 1. Weight ties are broken toward the pair
    spanning the shortest arc, then toward the lowest angles; if the midpoint
    already exists as an action nothing is inserted.
    """
    if len(net.actions) < 2:
        raise ValueError("bisection needs at least two actions")
    weights = net.weights[net.percept_row(percept)]
    top_two = np.sort(weights)[-2:]
    tie_tol = 1e-12 * max(1.0, float(np.abs(weights).max()))
    first = [i for i, w in enumerate(weights) if w >= top_two[1] - tie_tol]
    second = [i for i, w in enumerate(weights) if w >= top_two[0] - tie_tol]
    pairs = {tuple(sorted((i, j))) for i in first for j in second if i != j}

    def pair_key(pair):
        a, b = (net.actions[pair[0]], net.actions[pair[1]])
        lo, hi = sorted((a, b))
        return (circular_distance(a, b), lo, hi)

    i, j = min(pairs, key=pair_key)
    midpoint = _shorter_arc_midpoint(net.actions[i], net.actions[j])
    for existing in net.actions:
        if circular_distance(midpoint, existing) <= EPS_ANGLE:
            return CompositionOutcome("none")
    net.add_action(midpoint, weight=1.0)
    return CompositionOutcome("inserted", midpoint, 1.0)


def glow_compose(net: ClipNetwork, percept=TRIGGER_PERCEPT,
                 glow_threshold: float = DEFAULT_GLOW_THRESHOLD,
                 proximity_factor: float = DEFAULT_PROXIMITY_FACTOR) -> CompositionOutcome:
    """Compose the glow-weighted mean direction once a glow register has
    reached the threshold.

    The composed direction gets h = sum of all glow. It is inserted as a new
    action only if it differs from every existing direction by more than
    proximity_factor circular standard deviations of the glow distribution;
    otherwise the nearest existing action is strengthened to that h instead.
    Glow resets to zero either way and normal weight updates resume.
    """
    row = net.percept_row(percept)
    glow = net.glow[row]
    if glow.max() < glow_threshold:
        raise ValueError(
            f"no glow register reached the threshold {glow_threshold!r} yet"
        )
    total = float(glow.sum())
    angles = np.asarray(net.actions)
    res = complex(np.dot(glow, np.cos(angles)), np.dot(glow, np.sin(angles)))
    if abs(res) <= EPS_RESULTANT:
        raise DegenerateGlow("glow resultant is zero; no direction inferable")
    composed = normalize_angle(math.atan2(res.imag, res.real))
    spread = math.sqrt(max(0.0, -2.0 * math.log(min(abs(res) / total, 1.0))))

    distances = [circular_distance(composed, a) for a in net.actions]
    nearest = int(np.argmin(distances))
    net.glow[:] = 0.0
    if distances[nearest] > proximity_factor * spread:
        net.add_action(composed, weight=total)
        return CompositionOutcome("inserted", composed, total)
    net.weights[row, nearest] = total
    return CompositionOutcome("strengthened", net.actions[nearest], total)
