"""Shared helpers for the test suite."""

import math

import numpy as np

from conekit.cones import GeneratorCone
from conekit.numerics import SeededStream


def stream(seed, counter=0):
    return SeededStream(seed, counter)


def planar_wedge(alpha, theta0=0.0):
    """Wedge of opening angle alpha starting at direction theta0."""
    g0 = np.array([math.cos(theta0), math.sin(theta0)])
    g1 = np.array([math.cos(theta0 + alpha), math.sin(theta0 + alpha)])
    return GeneratorCone(np.column_stack([g0, g1]))


def random_generator_cone(rng, n, k):
    return GeneratorCone(rng.standard_normal((n, k)))


def combined_stderr(*estimates):
    return math.hypot(*[e.stderr for e in estimates])
