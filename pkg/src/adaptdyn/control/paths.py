"""Reference-path generators for the tracking tasks."""

from __future__ import annotations

import numpy as np

__all__ = ["stadium_path", "circle_refs"]


def stadium_path(straight: float = 1.0, radius: float = 0.4, n_points: int = 200,
                 speed: float = 0.2, center=(0.0, 0.0)):
    """Closed stadium (two straights joined by semicircles), traversed CCW.

    Points are equally spaced in arc length. Returns (path (p, 2),
    headings (p,), speeds (p,)).
    """
    if straight < 0.0 or radius <= 0.0 or n_points < 4:
        raise ValueError("need straight >= 0, radius > 0, n_points >= 4")
    total = 2.0 * straight + 2.0 * np.pi * radius
    s = np.linspace(0.0, total, n_points, endpoint=False)
    half = straight / 2.0
    xy = np.empty((n_points, 2))
    heading = np.empty(n_points)
    for i, si in enumerate(s):
        if si < straight:  # bottom straight, left to right
            xy[i] = (-half + si, -radius)
            heading[i] = 0.0
        elif si < straight + np.pi * radius:  # right semicircle
            a = (si - straight) / radius
            xy[i] = (half + radius * np.sin(a), -radius * np.cos(a))
            heading[i] = a
        elif si < 2.0 * straight + np.pi * radius:  # top straight, right to left
            d = si - straight - np.pi * radius
            xy[i] = (half - d, radius)
            heading[i] = np.pi
        else:  # left semicircle
            a = (si - 2.0 * straight - np.pi * radius) / radius
            xy[i] = (-half - radius * np.sin(a), radius * np.cos(a))
            heading[i] = np.pi + a
    heading = np.mod(heading + np.pi, 2.0 * np.pi) - np.pi
    xy += np.asarray(center, dtype=np.float64)
    return xy, heading, np.full(n_points, float(speed))


def circle_refs(radius: float = 0.5, period: int = 200, n_steps: int = 200,
                center=(0.0, 0.0, 0.0)):
    """Step-indexed circular position references in the xy plane at fixed z.

    One full revolution every ``period`` control steps, starting at angle 0.
    Returns (positions (n, 3), quaternions (n, 4)); orientation reference is
    the identity (level hover).
    """
    if radius <= 0.0 or period < 1 or n_steps < 1:
        raise ValueError("need radius > 0, period >= 1, n_steps >= 1")
    k = np.arange(n_steps)
    a = 2.0 * np.pi * k / period
    c = np.asarray(center, dtype=np.float64)
    pos = np.stack([c[0] + radius * np.cos(a), c[1] + radius * np.sin(a),
                    np.full(n_steps, c[2])], axis=1)
    quat = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (n_steps, 1))
    return pos, quat
