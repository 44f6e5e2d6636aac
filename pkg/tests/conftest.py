import os

import pytest
from hypothesis import settings

from robin_annulus.geometry import AnnulusSpec

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def a12():
    return AnnulusSpec(2, 1.0, 2.0)


def random_convex_polygon(rng, k: int = 12, scale: float = 1.0):
    """Convex hull of k random points in a disc, rescaled; returns a ConvexPolygon."""
    import numpy as np
    from scipy.spatial import ConvexHull

    from robin_annulus.geometry import ConvexPolygon

    while True:
        r = np.sqrt(rng.uniform(0, 1, k))
        t = rng.uniform(0, 2 * np.pi, k)
        pts = scale * np.column_stack([r * np.cos(t), r * np.sin(t)]) * rng.uniform(0.5, 2.0, 2)
        hull = ConvexHull(pts)
        v = pts[hull.vertices]  # counterclockwise in 2-D
        try:
            return ConvexPolygon(v)
        except ValueError:
            continue
