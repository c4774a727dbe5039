"""Deterministic point-set generators for runs and stress tests."""

from __future__ import annotations

import math
import random

from .algebra import RAT, Constructible
from .errors import InputError
from .geometry import Point


def grid(n: int) -> list[Point]:
    """The n-by-n integer lattice, x-major."""
    if n <= 0:
        raise InputError("grid size must be positive")
    return [Point(i, j) for i in range(n) for j in range(n)]


def random_rational(n: int, seed: int, denom_bound: int = 20) -> list[Point]:
    """n distinct points with small rational coordinates."""
    if n <= 0 or denom_bound <= 0:
        raise InputError("corpus parameters must be positive")
    rng = random.Random(seed)
    pts: list[Point] = []
    seen = set()
    while len(pts) < n:
        d1 = rng.randint(1, denom_bound)
        d2 = rng.randint(1, denom_bound)
        x = RAT(rng.randint(-6 * d1, 6 * d1), d1)
        y = RAT(rng.randint(-6 * d2, 6 * d2), d2)
        if (x, y) in seen:
            continue
        seen.add((x, y))
        pts.append(Point(Constructible(x), Constructible(y)))
    return pts


def _pythagorean_unit_points(count: int) -> list[tuple]:
    """Rational points on the unit circle from primitive triples, in a
    fixed enumeration: (3/5, 4/5) and (-3/5, 4/5) come first."""
    out = []
    m = 2
    while len(out) < count:
        for k in range(1, m):
            if (m - k) % 2 == 0 or math.gcd(m, k) != 1:
                continue
            a = m * m - k * k
            b = 2 * m * k
            c = m * m + k * k
            for sx, sy in ((1, 1), (-1, 1), (1, -1), (-1, -1)):
                out.append((RAT(sx * a, c), RAT(sy * b, c)))
                out.append((RAT(sx * b, c), RAT(sy * a, c)))
        m += 1
    return out[:count]


def circle_rich(n: int, seed: int) -> list[Point]:
    """Points dense in antipodal pairs: the four unit-circle axis points,
    then Pythagorean rational points on the unit circle."""
    if n <= 0:
        raise InputError("corpus size must be positive")
    base = [(RAT(1), RAT(0)), (RAT(-1), RAT(0)), (RAT(0), RAT(1)), (RAT(0), RAT(-1))]
    pts = _pythagorean_unit_points(max(0, n - len(base)) + 8)
    rng = random.Random(seed)
    extra = pts[: max(0, n - len(base))]
    if len(extra) > 4:
        head, tail = extra[:4], extra[4:]
        rng.shuffle(tail)
        extra = head + tail
    coords = (base + extra)[:n]
    return [Point(Constructible(x), Constructible(y)) for x, y in coords]


def make(kind: str, n: int, seed: int = 0, denom_bound: int = 20) -> list[Point]:
    if kind == "grid":
        return grid(n)
    if kind == "random_rational":
        return random_rational(n, seed, denom_bound)
    if kind == "circle_rich":
        return circle_rich(n, seed)
    raise InputError(f"unknown corpus kind {kind!r}")
