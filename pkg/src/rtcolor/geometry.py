"""Exact planar geometry over constructible coordinates.

Lines are canonical coefficient triples (first nonzero of (a, b) is 1),
circles store the squared radius, so objects deduplicate by structural
equality.  Every predicate is exact; a certified float pre-filter makes
the common non-incident case cheap.  The same midpoint-radius filter is
exposed in batch (numpy) form for incidence scans over many objects.
"""

from __future__ import annotations

import math

import numpy as np

from .algebra import Constructible, RAT, _coerce, _ia_add, _ia_mul
from .errors import (
    DegenerateInputError,
    IdenticalCurvesError,
    IncidenceError,
)

_EPS = 2.3e-16  # slack factor > 2^-53, applied with a wide margin


def _cc(v) -> Constructible:
    c = _coerce(v)
    if c is None:
        raise DegenerateInputError(f"not an exact coordinate: {v!r}")
    return c


class Point:
    __slots__ = ("x", "y", "ratc", "_hashv")

    def __init__(self, x, y):
        x, y = _cc(x), _cc(y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        xr, yr = x.rat, y.rat
        object.__setattr__(self, "ratc", None if xr is None or yr is None else (xr, yr))
        object.__setattr__(self, "_hashv", None)

    def __setattr__(self, *a):
        raise AttributeError("Point is immutable")

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        if self.ratc is not None and other.ratc is not None:
            return self.ratc == other.ratc
        return self.x == other.x and self.y == other.y

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        h = self._hashv
        if h is None:
            # hash(rational Constructible) == hash(mpq), so both forms agree
            h = hash(self.ratc) if self.ratc is not None else hash((self.x, self.y))
            object.__setattr__(self, "_hashv", h)
        return h

    def sort_key(self):
        return _CoordKey(self)

    def approx(self) -> tuple[float, float]:
        return (float(self.x), float(self.y))

    def __repr__(self):
        return f"Point({self.x!r}, {self.y!r})"


class _CoordKey:
    """Exact lexicographic (x, y) ordering for deterministic tie-breaks."""

    __slots__ = ("p",)

    def __init__(self, p: Point):
        self.p = p

    def __lt__(self, other: "_CoordKey") -> bool:
        sx = (self.p.x - other.p.x).sign()
        if sx != 0:
            return sx < 0
        return (self.p.y - other.p.y).sign() < 0


class Line:
    """{(x, y) : a*x + b*y + c = 0}, canonicalized."""

    __slots__ = ("a", "b", "c", "ratc", "_hashv")

    def __init__(self, a, b, c):
        a, b, c = _cc(a), _cc(b), _cc(c)
        sa = a.sign()
        if sa != 0:
            if not (sa == 1 and a == 1):
                b = b / a
                c = c / a
                a = Constructible(1)
        elif b.sign() != 0:
            if b != 1:
                c = c / b
                b = Constructible(1)
            a = Constructible(0)
        else:
            raise DegenerateInputError("line with zero normal vector")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        ar, br, cr = a.rat, b.rat, c.rat
        object.__setattr__(self, "ratc",
                           None if ar is None or br is None or cr is None
                           else (ar, br, cr))
        object.__setattr__(self, "_hashv", None)

    @staticmethod
    def _from_canonical_rat(a, b, c) -> "Line":
        """Line from an already-canonical rational triple."""
        l = Line.__new__(Line)
        object.__setattr__(l, "a", Constructible._of_rat(a))
        object.__setattr__(l, "b", Constructible._of_rat(b))
        object.__setattr__(l, "c", Constructible._of_rat(c))
        object.__setattr__(l, "ratc", (a, b, c))
        object.__setattr__(l, "_hashv", None)
        return l

    def __setattr__(self, *a):
        raise AttributeError("Line is immutable")

    def __eq__(self, other):
        if not isinstance(other, Line):
            return NotImplemented
        if self.ratc is not None and other.ratc is not None:
            return self.ratc == other.ratc
        return self.a == other.a and self.b == other.b and self.c == other.c

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        h = self._hashv
        if h is None:
            rc = self.ratc
            h = hash((1,) + rc) if rc is not None else hash((1, self.a, self.b, self.c))
            object.__setattr__(self, "_hashv", h)
        return h

    def __repr__(self):
        return f"Line({self.a!r}, {self.b!r}, {self.c!r})"


class Circle:
    __slots__ = ("center", "r2", "ratc", "_hashv")

    def __init__(self, center: Point, r2):
        r2 = _cc(r2)
        if not isinstance(center, Point):
            raise DegenerateInputError("circle center must be a Point")
        if r2.sign() != 1:
            raise DegenerateInputError("circle needs positive squared radius")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "r2", r2)
        rr = r2.rat
        object.__setattr__(self, "ratc",
                           None if center.ratc is None or rr is None
                           else (center.ratc[0], center.ratc[1], rr))
        object.__setattr__(self, "_hashv", None)

    def __setattr__(self, *a):
        raise AttributeError("Circle is immutable")

    def __eq__(self, other):
        if not isinstance(other, Circle):
            return NotImplemented
        if self.ratc is not None and other.ratc is not None:
            return self.ratc == other.ratc
        return self.center == other.center and self.r2 == other.r2

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        h = self._hashv
        if h is None:
            rc = self.ratc
            h = hash((2,) + rc) if rc is not None else hash((2, self.center, self.r2))
            object.__setattr__(self, "_hashv", h)
        return h

    def __repr__(self):
        return f"Circle({self.center!r}, r2={self.r2!r})"


Curve = (Line, Circle)


# ---------------------------------------------------------------------------
# constructors

def line_through(p: Point, q: Point) -> Line:
    if p == q:
        raise DegenerateInputError("line through coincident points")
    if p.ratc is not None and q.ratc is not None:
        px, py = p.ratc
        qx, qy = q.ratc
        a = qy - py
        b = px - qx
        if a != 0:
            b = b / a
            return Line._from_canonical_rat(a / a, b, -(px + b * py))
        return Line._from_canonical_rat(a, b / b, -py)
    a = q.y - p.y
    b = p.x - q.x
    c = -(a * p.x + b * p.y)
    return Line(a, b, c)


def thales_circle(p: Point, q: Point) -> Circle:
    """Circle with diameter pq."""
    if p == q:
        raise DegenerateInputError("degenerate diameter")
    if p.ratc is not None and q.ratc is not None:
        px, py = p.ratc
        qx, qy = q.ratc
        cx, cy = (px + qx) / 2, (py + qy) / 2
        dx, dy = px - qx, py - qy
        r2 = (dx * dx + dy * dy) / 4
        return Circle(Point(Constructible._of_rat(cx), Constructible._of_rat(cy)),
                      Constructible._of_rat(r2))
    cx = (p.x + q.x) / 2
    cy = (p.y + q.y) / 2
    dx = p.x - q.x
    dy = p.y - q.y
    return Circle(Point(cx, cy), (dx * dx + dy * dy) / 4)


def collinear(p: Point, q: Point, r: Point) -> bool:
    if p.ratc is not None and q.ratc is not None and r.ratc is not None:
        px, py = p.ratc
        qx, qy = q.ratc
        rx, ry = r.ratc
        return (qx - px) * (ry - py) - (qy - py) * (rx - px) == 0
    det = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
    return det.sign() == 0


def circumcircle(p: Point, q: Point, r: Point) -> Circle:
    if p == q or p == r or q == r:
        raise DegenerateInputError("circumcircle of coincident points")
    if p.ratc is not None and q.ratc is not None and r.ratc is not None:
        px, py = p.ratc
        qx, qy = q.ratc
        rx, ry = r.ratc
        a1 = 2 * (qx - px)
        b1 = 2 * (qy - py)
        c1 = qx * qx + qy * qy - px * px - py * py
        a2 = 2 * (rx - px)
        b2 = 2 * (ry - py)
        c2 = rx * rx + ry * ry - px * px - py * py
        det = a1 * b2 - a2 * b1
        if det == 0:
            raise DegenerateInputError("circumcircle of collinear points")
        cx = (c1 * b2 - c2 * b1) / det
        cy = (a1 * c2 - a2 * c1) / det
        dx, dy = px - cx, py - cy
        return Circle(Point(Constructible._of_rat(cx), Constructible._of_rat(cy)),
                      Constructible._of_rat(dx * dx + dy * dy))
    a1 = (q.x - p.x) * 2
    b1 = (q.y - p.y) * 2
    c1 = q.x * q.x + q.y * q.y - p.x * p.x - p.y * p.y
    a2 = (r.x - p.x) * 2
    b2 = (r.y - p.y) * 2
    c2 = r.x * r.x + r.y * r.y - p.x * p.x - p.y * p.y
    det = a1 * b2 - a2 * b1
    if det.sign() == 0:
        raise DegenerateInputError("circumcircle of collinear points")
    cx = (c1 * b2 - c2 * b1) / det
    cy = (a1 * c2 - a2 * c1) / det
    dx = p.x - cx
    dy = p.y - cy
    return Circle(Point(cx, cy), dx * dx + dy * dy)


# ---------------------------------------------------------------------------
# predicates

def _line_residual_enc(l: Line, p: Point):
    t1 = _ia_mul(l.a.enc, p.x.enc)
    t2 = _ia_mul(l.b.enc, p.y.enc)
    return _ia_add(_ia_add(t1, t2), l.c.enc)


def _circle_residual_enc(c: Circle, p: Point):
    negx = c.center.x.enc
    dx = _ia_add(p.x.enc, (-negx[1], -negx[0]))
    negy = c.center.y.enc
    dy = _ia_add(p.y.enc, (-negy[1], -negy[0]))
    s = _ia_add(_ia_mul(dx, dx), _ia_mul(dy, dy))
    r = c.r2.enc
    return _ia_add(s, (-r[1], -r[0]))


def on_curve_exact(p: Point, e) -> bool:
    """Exact incidence with no float pre-filter (for pre-filtered input)."""
    pc = p.ratc
    ec = e.ratc
    if pc is not None and ec is not None:
        if type(e) is Line:
            a, b, c = ec
            return a * pc[0] + b * pc[1] + c == 0
        dx = pc[0] - ec[0]
        dy = pc[1] - ec[1]
        return dx * dx + dy * dy == ec[2]
    if isinstance(e, Line):
        return (e.a * p.x + e.b * p.y + e.c).sign() == 0
    dx = p.x - e.center.x
    dy = p.y - e.center.y
    return (dx * dx + dy * dy - e.r2).sign() == 0


def on_curve(p: Point, e) -> bool:
    """Exact incidence test."""
    if isinstance(e, Line):
        lo, hi = _line_residual_enc(e, p)
        if lo > 0.0 or hi < 0.0:
            return False
    else:
        lo, hi = _circle_residual_enc(e, p)
        if lo > 0.0 or hi < 0.0:
            return False
    return on_curve_exact(p, e)


def is_right_angle(x: Point, y: Point, z: Point) -> bool:
    """True iff the angle at y (middle argument) is exactly 90 degrees."""
    if x == y or y == z or x == z:
        raise DegenerateInputError("right-angle test needs distinct points")
    if x.ratc is not None and y.ratc is not None and z.ratc is not None:
        xx, xy = x.ratc
        yx, yy = y.ratc
        zx, zy = z.ratc
        return (xx - yx) * (zx - yx) + (xy - yy) * (zy - yy) == 0
    dot = (x.x - y.x) * (z.x - y.x) + (x.y - y.y) * (z.y - y.y)
    return dot.sign() == 0


def antipode(x: Point, c: Circle) -> Point:
    if not on_curve(x, c):
        raise IncidenceError("antipode of a point not on the circle")
    return Point(c.center.x * 2 - x.x, c.center.y * 2 - x.y)


def perpendicular_at_unchecked(l: Line, x: Point) -> Line:
    # normal of the new line is the direction (-b, a) of l
    if l.ratc is not None and x.ratc is not None:
        a, b = l.ratc[0], l.ratc[1]
        px, py = x.ratc
        # canonical form directly: original line has a in {0, 1}
        if b == 0:
            # l vertical, perpendicular horizontal: y = py
            return Line._from_canonical_rat(b, a, -py)
        na = -b
        nb = a / na
        nc = (b * px - a * py) / na
        return Line._from_canonical_rat(na / na, nb, nc)
    return Line(-l.b, l.a, l.b * x.x - l.a * x.y)


def perpendicular_at(l: Line, x: Point) -> Line:
    if not on_curve(x, l):
        raise IncidenceError("perpendicular foot must lie on the line")
    return perpendicular_at_unchecked(l, x)


def perpendicular(l0: Line, l1: Line) -> bool:
    dot = l0.a * l1.a + l0.b * l1.b
    return dot.sign() == 0


def intersect(e0, e1) -> list[Point]:
    """Exact intersection, at most two points, canonically ordered."""
    if e0 == e1:
        raise IdenticalCurvesError("intersection of identical curves is infinite")
    if isinstance(e0, Line) and isinstance(e1, Line):
        det = e0.a * e1.b - e1.a * e0.b
        if det.sign() == 0:
            return []
        x = (e0.b * e1.c - e1.b * e0.c) / det
        y = (e1.a * e0.c - e0.a * e1.c) / det
        return [Point(x, y)]
    if isinstance(e0, Line):
        return _line_circle(e0, e1)
    if isinstance(e1, Line):
        return _line_circle(e1, e0)
    # circle-circle via the radical line
    c0, c1 = e0, e1
    if c0.center == c1.center:
        return []
    a = (c1.center.x - c0.center.x) * 2
    b = (c1.center.y - c0.center.y) * 2
    s0 = c0.center.x * c0.center.x + c0.center.y * c0.center.y - c0.r2
    s1 = c1.center.x * c1.center.x + c1.center.y * c1.center.y - c1.r2
    radical = Line(a, b, s0 - s1)
    return _line_circle(radical, c0)


def _line_circle(l: Line, c: Circle) -> list[Point]:
    # parametrize by the free coordinate; l is canonical (a == 1 or a == 0)
    cx, cy, r2 = c.center.x, c.center.y, c.r2
    if l.a.sign() != 0:
        # x = -b*y - c
        k = l.c + cx
        A = l.b * l.b + 1
        B = (l.b * k - cy) * 2
        C = k * k + cy * cy - r2
        roots = _quadratic(A, B, C)
        pts = [Point(-(l.b * y) - l.c, y) for y in roots]
    else:
        # y = -c
        k = l.c + cy
        A = Constructible(1)
        B = cx * -2
        C = cx * cx + k * k - r2
        roots = _quadratic(A, B, C)
        pts = [Point(x, -l.c) for x in roots]
    pts.sort(key=Point.sort_key)
    return pts


def _quadratic(A: Constructible, B: Constructible, C: Constructible):
    disc = B * B - A * C * 4
    s = disc.sign()
    if s < 0:
        return []
    twoA = A * 2
    if s == 0:
        return [-B / twoA]
    rd = disc.sqrt()
    return [(-B - rd) / twoA, (-B + rd) / twoA]


# ---------------------------------------------------------------------------
# batch incidence filtering (midpoint-radius, certified outward)

class ApproxColumn:
    """Append-only midpoint/radius arrays for one exact quantity."""

    __slots__ = ("mid", "rad", "n")

    def __init__(self):
        self.mid = np.empty(64, dtype=np.float64)
        self.rad = np.empty(64, dtype=np.float64)
        self.n = 0

    def append(self, value: Constructible):
        if self.n == len(self.mid):
            self.mid = np.resize(self.mid, 2 * self.n)
            self.rad = np.resize(self.rad, 2 * self.n)
        q = value.rat
        if q is not None:
            # float(q) rounds to nearest: off by at most half an ulp
            try:
                m = float(q)
                r = abs(m) * 4 * _EPS + 5e-324
            except OverflowError:
                m, r = 0.0, math.inf
            if math.isinf(m):
                m, r = 0.0, math.inf
        else:
            lo, hi = value.enc
            if math.isinf(lo) or math.isinf(hi):
                m, r = 0.0, math.inf
            else:
                m = 0.5 * (lo + hi)
                r = (hi - lo) * 0.5 + abs(m) * 4 * _EPS + 5e-324
        self.mid[self.n] = m
        self.rad[self.n] = r
        self.n += 1

    def rows(self, n=None):
        n = self.n if n is None else n
        return self.mid[:n], self.rad[:n]


def line_incidence_candidates(am, ar, bm, br, cm, cr, xm, xr, ym, yr):
    """Boolean matrix: residual a*x + b*y + c possibly zero.

    Curve arrays are column vectors (m, 1); point arrays rows (n,).  The
    residual midpoint is compared against a per-line upper bound on the
    entrywise certified radius, so a False entry certifies
    non-incidence; True entries still need exact confirmation.
    """
    aam = np.abs(am)
    abm = np.abs(bm)
    acm = np.abs(cm)
    mxa = float(np.max(np.abs(xm), initial=0.0))
    mya = float(np.max(np.abs(ym), initial=0.0))
    mxr = float(np.max(xr, initial=0.0))
    myr = float(np.max(yr, initial=0.0))
    trow = aam * (mxr + (16 * _EPS) * mxa)
    trow += ar * (mxa + mxr)
    trow += abm * (myr + (16 * _EPS) * mya)
    trow += br * (mya + myr)
    trow += cr
    trow += acm * (16 * _EPS)
    trow *= 1.0 + 1e-9
    mid = am * xm
    mid += bm * ym
    mid += cm
    np.abs(mid, out=mid)
    return mid <= trow


def circle_incidence_candidates(cxm, cxr, cym, cyr, r2m, r2r, xm, xr, ym, yr):
    """Boolean matrix: residual (x-cx)^2 + (y-cy)^2 - r2 possibly zero."""
    mxa = float(np.max(np.abs(xm), initial=0.0))
    mya = float(np.max(np.abs(ym), initial=0.0))
    mxr = float(np.max(xr, initial=0.0))
    myr = float(np.max(yr, initial=0.0))
    xa = np.abs(cxm)
    xa += mxa                # row bound on |x - cx|
    ya = np.abs(cym)
    ya += mya
    xrr = cxr + mxr          # row bound on the x-interval radius
    yrr = cyr + myr
    trow = xrr * (2 * xa + xrr)
    trow += yrr * (2 * ya + yrr)
    trow += r2r
    xa *= xa
    ya *= ya
    xa += ya
    xa += np.abs(r2m)
    xa *= 16 * _EPS
    trow += xa
    trow *= 1.0 + 1e-9
    dx = xm - cxm
    dx *= dx
    dy = ym - cym
    dy *= dy
    mid = dx
    mid += dy
    mid -= r2m
    np.abs(mid, out=mid)
    return mid <= trow


def iter_line_candidates(lap: "LineApprox", rows, pap: "PointApprox",
                         pt_sel, chunk: int = 8192):
    """Yield (line_row, point_idx) arrays of possibly-incident pairs.

    `rows` and `pt_sel` are integer index arrays selecting which lines and
    points participate; candidates still need exact confirmation.
    """
    rows = np.asarray(rows, dtype=np.int64)
    pt_sel = np.asarray(pt_sel, dtype=np.int64)
    if len(rows) == 0 or len(pt_sel) == 0:
        return
    xm, xr, ym, yr = pap.rows()
    xm, xr, ym, yr = xm[pt_sel], xr[pt_sel], ym[pt_sel], yr[pt_sel]
    for start in range(0, len(rows), chunk):
        sel = rows[start:start + chunk]
        cols = lap.cols(sel)
        mask = line_incidence_candidates(*cols, xm, xr, ym, yr)
        ri, pi = np.nonzero(mask)
        if len(ri):
            yield sel[ri].tolist(), pt_sel[pi].tolist()


def iter_circle_candidates(cap: "CircleApprox", rows, pap: "PointApprox",
                           pt_sel, chunk: int = 8192):
    """Circle analogue of iter_line_candidates."""
    rows = np.asarray(rows, dtype=np.int64)
    pt_sel = np.asarray(pt_sel, dtype=np.int64)
    if len(rows) == 0 or len(pt_sel) == 0:
        return
    xm, xr, ym, yr = pap.rows()
    xm, xr, ym, yr = xm[pt_sel], xr[pt_sel], ym[pt_sel], yr[pt_sel]
    for start in range(0, len(rows), chunk):
        sel = rows[start:start + chunk]
        cols = cap.cols(sel)
        mask = circle_incidence_candidates(*cols, xm, xr, ym, yr)
        ri, pi = np.nonzero(mask)
        if len(ri):
            yield sel[ri].tolist(), pt_sel[pi].tolist()


class PointApprox:
    """Midpoint/radius table for registered points."""

    __slots__ = ("x", "y")

    def __init__(self):
        self.x = ApproxColumn()
        self.y = ApproxColumn()

    def append(self, p: Point):
        self.x.append(p.x)
        self.y.append(p.y)

    def rows(self, n=None):
        xm, xr = self.x.rows(n)
        ym, yr = self.y.rows(n)
        return xm, xr, ym, yr


class LineApprox:
    __slots__ = ("a", "b", "c")

    def __init__(self):
        self.a = ApproxColumn()
        self.b = ApproxColumn()
        self.c = ApproxColumn()

    def append(self, l: Line):
        self.a.append(l.a)
        self.b.append(l.b)
        self.c.append(l.c)

    def cols(self, idx):
        am, ar = self.a.rows()
        bm, br = self.b.rows()
        cm, cr = self.c.rows()
        sel = (slice(None) if idx is None else idx)
        return (am[sel, None], ar[sel, None], bm[sel, None],
                br[sel, None], cm[sel, None], cr[sel, None])


class CircleApprox:
    __slots__ = ("cx", "cy", "r2")

    def __init__(self):
        self.cx = ApproxColumn()
        self.cy = ApproxColumn()
        self.r2 = ApproxColumn()

    def append(self, c: Circle):
        self.cx.append(c.center.x)
        self.cy.append(c.center.y)
        self.r2.append(c.r2)

    def cols(self, idx):
        cxm, cxr = self.cx.rows()
        cym, cyr = self.cy.rows()
        r2m, r2r = self.r2.rows()
        sel = (slice(None) if idx is None else idx)
        return (cxm[sel, None], cxr[sel, None], cym[sel, None],
                cyr[sel, None], r2m[sel, None], r2r[sel, None])
