import numpy as np

from quadkit.geometry import Quad, canonicalize
from quadkit.errors import NonConvexError, NotSimpleError


def random_convex_quad(rng: np.random.Generator, lo: float = 0.0, hi: float = 100.0) -> Quad:
    """Generic convex quad: rejection-sample 4 uniform corners."""
    while True:
        pts = rng.uniform(lo, hi, size=(4, 2))
        try:
            return canonicalize(pts)
        except (NonConvexError, NotSimpleError):
            continue


def random_parallelogram(rng: np.random.Generator, lo: float = 0.0, hi: float = 100.0) -> Quad:
    """Parallelogram from an origin and two independent edge vectors."""
    while True:
        origin = rng.uniform(lo, hi, size=2)
        e1 = rng.uniform(-30.0, 30.0, size=2)
        e2 = rng.uniform(-30.0, 30.0, size=2)
        try:
            return canonicalize([origin, origin + e1, origin + e1 + e2, origin + e2])
        except (NonConvexError, NotSimpleError):
            continue
