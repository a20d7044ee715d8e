"""Built-in fractal families.

Presets addressable by name: "gasket", "vicsek", "gasket3" and
"rhombic-vicsek:<theta>" with theta the rhombus half-angle in radians.
"""

import math

import numpy as np

from .errors import DegenerateRhombus, ParseError
from .ifs import NestedFractal, Similitude


def _translation_maps(ratio, fixed_points, dim):
    """Rotation-free similitudes with the given fixed points."""
    eye = np.eye(dim)
    return [
        Similitude(ratio, eye, (1.0 - ratio) * np.asarray(p, dtype=float))
        for p in fixed_points
    ]


def gasket():
    """Three half-scale maps on the corners of a unit equilateral triangle."""
    corners = [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0)]
    return NestedFractal(_translation_maps(0.5, corners, 2), name="gasket")


def gasket3():
    """Six third-scale maps: corners plus side midpoints of the triangle.

    The midpoint fixed points are not essential, so V_0 is still the three
    corners; every side subdivides exactly into three level-1 edges.
    """
    a = np.array([0.0, 0.0])
    b = np.array([1.0, 0.0])
    c = np.array([0.5, math.sqrt(3.0) / 2.0])
    pts = [a, b, c, (a + b) / 2, (b + c) / 2, (a + c) / 2]
    return NestedFractal(_translation_maps(1.0 / 3.0, pts, 2), name="gasket3")


def vicsek():
    """Five third-scale maps on the unit square's corners and center.

    Corner order is cyclic: (0,0), (1,0), (1,1), (0,1); the center is the
    fifth map and is not an essential fixed point.
    """
    pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)]
    return NestedFractal(_translation_maps(1.0 / 3.0, pts, 2), name="vicsek")


def rhombic_vicsek(theta):
    """Vicsek-type family on a unit-side rhombus with half-angle theta.

    Vertices sit at (+-cos(theta), 0) and (0, +-sin(theta)) in cyclic
    order, so the diagonals measure 2cos(theta) and 2sin(theta); the fifth
    map fixes the center. theta = pi/4 reproduces the square Vicsek up to
    a rotation.
    """
    theta = float(theta)
    if not 0.0 < theta < math.pi / 2.0:
        raise DegenerateRhombus(
            f"half-angle must lie strictly between 0 and pi/2, got {theta}"
        )
    co, si = math.cos(theta), math.sin(theta)
    pts = [(co, 0.0), (0.0, si), (-co, 0.0), (0.0, -si), (0.0, 0.0)]
    return NestedFractal(
        _translation_maps(1.0 / 3.0, pts, 2), name=f"rhombic-vicsek:{theta:g}"
    )


PRESETS = {"gasket": gasket, "vicsek": vicsek, "gasket3": gasket3}


def load_preset(name):
    """Resolve a preset name, including the parametrized rhombic family."""
    if name in PRESETS:
        return PRESETS[name]()
    if name.startswith("rhombic-vicsek:"):
        arg = name.split(":", 1)[1]
        try:
            theta = float(arg)
        except ValueError as exc:
            raise ParseError(f"bad rhombic-vicsek angle {arg!r}") from exc
        return rhombic_vicsek(theta)
    raise KeyError(name)
