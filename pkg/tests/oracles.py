"""Independent oracles shared by the test modules."""

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection


def half_disk_polar_area(x, arc_points=20_000):
    """Area of (B - x)° from the polygon cut out by the extreme points of the half-disk."""
    phi = np.linspace(-np.pi / 2, np.pi / 2, arc_points)
    z = np.column_stack([np.cos(phi), np.sin(phi)]) - np.asarray(x)
    halfspaces = np.column_stack([z, -np.ones(len(z))])
    hs = HalfspaceIntersection(halfspaces, np.zeros(2))
    return ConvexHull(hs.intersections).volume


def polygon_santalo_point(step=1e-3):
    """Brute-force minimizer of the polygon polar area over an x-grid of spacing ``step``."""
    xs = np.arange(0.30, 0.50, step)
    areas = [half_disk_polar_area([x, 0.0]) for x in xs]
    k = int(np.argmin(areas))
    # the minimizer stays on the axis when the grid is widened off it
    off = [half_disk_polar_area([xs[k], y]) for y in (-2 * step, -step, step, 2 * step)]
    assert min(off) > areas[k]
    return xs[k]
