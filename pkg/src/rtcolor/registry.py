"""Birth-level bookkeeping for points and curves.

Points and curves carry the level at which they were created.  Curve
generation is exhaustive over point pairs (connecting lines, circles on
a diameter) and over line/point incidences (perpendiculars); circles
through point triples can be capped per level, with a caller-supplied
priority list that is always registered.  Point derivation (antipodes,
then pairwise curve intersections) is budgeted.

Everything is deterministic: registration order is a pure function of
the seed list and the configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .geometry import (
    Circle,
    CircleApprox,
    Line,
    LineApprox,
    Point,
    PointApprox,
    circumcircle,
    collinear,
    intersect,
    iter_circle_candidates,
    iter_line_candidates,
    line_through,
    on_curve_exact,
    perpendicular_at_unchecked,
    thales_circle,
)

RULE_SEED = 0
RULE_PAIR = 1        # connecting line and diameter circle of a point pair
RULE_CIRCUMCIRCLE = 2
RULE_INTERSECT = 3
RULE_ANTIPODE = 4
RULE_PERPENDICULAR = 5

RULE_NAMES = {
    RULE_SEED: "seed",
    RULE_PAIR: "pair",
    RULE_CIRCUMCIRCLE: "circumcircle",
    RULE_INTERSECT: "intersection",
    RULE_ANTIPODE: "antipode",
    RULE_PERPENDICULAR: "perpendicular",
}


@dataclass(frozen=True)
class ClosureConfig:
    max_level: int = 2
    point_budget_per_level: int = 16
    seed: int = 0
    circumcircle_cap: int | None = 10_000
    strict: bool = False

    def __post_init__(self):
        if self.max_level < 1:
            raise InputError("max_level must be >= 1")
        if self.point_budget_per_level < 0:
            raise InputError("point budget must be >= 0")


class PointRec:
    __slots__ = ("point", "idx", "level", "batch_index", "rule", "parents")

    def __init__(self, point, idx, level, batch_index, rule, parents):
        self.point = point
        self.idx = idx
        self.level = level
        self.batch_index = batch_index
        self.rule = rule
        self.parents = parents


class CurveRec:
    __slots__ = ("curve", "idx", "level", "rule", "parents", "row")

    def __init__(self, curve, idx, level, rule, parents, row):
        self.curve = curve
        self.idx = idx
        self.level = level
        self.rule = rule
        self.parents = parents
        self.row = row  # row in the per-kind approx table


class LevelRegistry:
    """Ordered store of points and curves with birth levels and provenance."""

    def __init__(self):
        self.point_recs: list[PointRec] = []
        self.point_index: dict[Point, int] = {}
        self.curve_recs: list[CurveRec] = []
        self.curve_index: dict = {}
        self.papprox = PointApprox()
        self.lapprox = LineApprox()
        self.capprox = CircleApprox()
        self.line_rows: list[int] = []    # curve idx per line-table row
        self.circle_rows: list[int] = []  # curve idx per circle-table row
        self._batch_counters: dict[int, int] = {}
        self._pair_done = 0
        self._tri_done = 0
        self._perp_built: set = set()
        self._dir_keys: dict[int, object] = {}
        self._perp_pts_done = 0
        self._perp_rows_done = 0
        self.flags: list[str] = []

    # -- registration ------------------------------------------------------

    def add_point(self, p: Point, level: int, rule: int, parents: tuple) -> PointRec | None:
        if p in self.point_index:
            return None
        idx = len(self.point_recs)
        b = self._batch_counters.get(level, 0)
        self._batch_counters[level] = b + 1
        rec = PointRec(p, idx, level, b, rule, parents)
        self.point_recs.append(rec)
        self.point_index[p] = idx
        self.papprox.append(p)
        return rec

    def add_curve(self, c, level: int, rule: int, parents: tuple) -> CurveRec | None:
        if c in self.curve_index:
            return None
        idx = len(self.curve_recs)
        if isinstance(c, Line):
            row = len(self.line_rows)
            self.line_rows.append(idx)
            self.lapprox.append(c)
        else:
            row = len(self.circle_rows)
            self.circle_rows.append(idx)
            self.capprox.append(c)
        rec = CurveRec(c, idx, level, rule, parents, row)
        self.curve_recs.append(rec)
        self.curve_index[c] = idx
        return rec

    # -- queries -----------------------------------------------------------

    def points_at(self, level: int) -> list[PointRec]:
        return [r for r in self.point_recs if r.level == level]

    def n_points_upto(self, level: int) -> int:
        # points are registered in nondecreasing level order
        n = 0
        for r in self.point_recs:
            if r.level <= level:
                n += 1
            else:
                break
        return n

    def curves_upto(self, level: int) -> list[CurveRec]:
        return [r for r in self.curve_recs if r.level <= level]

    def line_table_rows(self, max_level: int | None = None) -> np.ndarray:
        rows = []
        for row, idx in enumerate(self.line_rows):
            if max_level is None or self.curve_recs[idx].level <= max_level:
                rows.append(row)
        return np.asarray(rows, dtype=np.int64)

    def circle_table_rows(self, max_level: int | None = None) -> np.ndarray:
        rows = []
        for row, idx in enumerate(self.circle_rows):
            if max_level is None or self.curve_recs[idx].level <= max_level:
                rows.append(row)
        return np.asarray(rows, dtype=np.int64)

    def incident_points(self, rec: CurveRec, pt_sel=None) -> list[int]:
        """Indices of registered points exactly on rec.curve (ascending)."""
        if pt_sel is None:
            pt_sel = np.arange(len(self.point_recs), dtype=np.int64)
        out = []
        it = (iter_line_candidates(self.lapprox, [rec.row], self.papprox, pt_sel)
              if isinstance(rec.curve, Line)
              else iter_circle_candidates(self.capprox, [rec.row], self.papprox, pt_sel))
        for _, pis in it:
            for pi in pis:
                if on_curve_exact(self.point_recs[pi].point, rec.curve):
                    out.append(int(pi))
        out.sort()
        return out

    def prior_curves_through(self, x: Point) -> list:
        """Curves born strictly before x's level that pass through x."""
        idx = self.point_index.get(x)
        if idx is None:
            raise InputError("point is not registered")
        level = self.point_recs[idx].level
        recs = self.prior_curve_recs_through(idx, level)
        return [r.curve for r in recs]

    def prior_curve_recs_through(self, pt_idx: int, before_level: int) -> list[CurveRec]:
        sel = np.asarray([pt_idx], dtype=np.int64)
        hits = []
        lrows = self.line_table_rows(before_level - 1)
        for rows, _ in iter_line_candidates(self.lapprox, lrows, self.papprox, sel):
            for row in rows:
                rec = self.curve_recs[self.line_rows[row]]
                if on_curve_exact(self.point_recs[pt_idx].point, rec.curve):
                    hits.append(rec)
        crows = self.circle_table_rows(before_level - 1)
        for rows, _ in iter_circle_candidates(self.capprox, crows, self.papprox, sel):
            for row in rows:
                rec = self.curve_recs[self.circle_rows[row]]
                if on_curve_exact(self.point_recs[pt_idx].point, rec.curve):
                    hits.append(rec)
        hits.sort(key=lambda r: r.idx)
        return hits

    # -- serialization ------------------------------------------------------

    def dump_jsonl(self, fh):
        for r in self.point_recs:
            fh.write(json.dumps({
                "kind": "point",
                "id": f"p{r.idx}",
                "level": r.level,
                "batch_index": r.batch_index,
                "rule": r.rule,
                "rule_name": RULE_NAMES[r.rule],
                "parents": list(r.parents),
                "x": r.point.x.to_expr(),
                "y": r.point.y.to_expr(),
            }, sort_keys=True) + "\n")
        for r in self.curve_recs:
            d = {
                "kind": "line" if isinstance(r.curve, Line) else "circle",
                "id": f"c{r.idx}",
                "level": r.level,
                "rule": r.rule,
                "rule_name": RULE_NAMES[r.rule],
                "parents": list(r.parents),
            }
            if isinstance(r.curve, Line):
                d["coeffs"] = [r.curve.a.to_expr(), r.curve.b.to_expr(), r.curve.c.to_expr()]
            else:
                d["center"] = [r.curve.center.x.to_expr(), r.curve.center.y.to_expr()]
                d["r2"] = r.curve.r2.to_expr()
            fh.write(json.dumps(d, sort_keys=True) + "\n")


def register_seed(points: list[Point], dedup: bool = False) -> LevelRegistry:
    """Fresh registry with the given points as the level-1 batch."""
    reg = LevelRegistry()
    for p in points:
        rec = reg.add_point(p, 1, RULE_SEED, ())
        if rec is None and not dedup:
            raise InputError(f"duplicate seed point {p!r}")
    return reg


def generate_curves(reg: LevelRegistry, level: int,
                    circumcircle_cap: int | None = None,
                    priority_triples: tuple = (),
                    line_incidence_out: dict | None = None) -> list[CurveRec]:
    """Register the curves generated by the points of level <= level.

    Pairs (connecting line + diameter circle) and line/point
    perpendiculars are exhaustive.  Circles through triples are
    registered for every priority triple, then for remaining triples in
    enumeration order up to the cap.

    When `line_incidence_out` is given, the confirmed incidences of the
    lines registered by this call (curve idx -> sorted point indices)
    are recorded there, saving the caller a second scan.
    """
    n = reg.n_points_upto(level)
    recs = reg.point_recs
    new: list[CurveRec] = []

    def put(curve, rule, parents):
        rec = reg.add_curve(curve, level, rule, parents)
        if rec is not None:
            new.append(rec)
        return rec

    # connecting line and diameter circle of every new pair
    for j in range(reg._pair_done, n):
        pj = recs[j].point
        for i in range(j):
            pi = recs[i].point
            put(line_through(pi, pj), RULE_PAIR, (i, j))
            put(thales_circle(pi, pj), RULE_PAIR, (i, j))
    reg._pair_done = n

    # circles through same-priority triples, never capped
    for (i, j, k) in priority_triples:
        if i >= n or j >= n or k >= n:
            continue
        a, b, c = recs[i].point, recs[j].point, recs[k].point
        if not collinear(a, b, c):
            put(circumcircle(a, b, c), RULE_CIRCUMCIRCLE, (i, j, k))

    # circles through remaining new triples, capped per call
    budget = circumcircle_cap
    stop = False
    for k in range(max(reg._tri_done, 2), n):
        if stop:
            break
        pk = recs[k].point
        for j in range(1, k):
            if stop:
                break
            pj = recs[j].point
            for i in range(j):
                if budget is not None and budget <= 0:
                    stop = True
                    break
                pi = recs[i].point
                if collinear(pi, pj, pk):
                    continue
                rec = put(circumcircle(pi, pj, pk), RULE_CIRCUMCIRCLE, (i, j, k))
                if rec is not None and budget is not None:
                    budget -= 1
    if stop:
        reg.flags.append(f"circumcircle cap reached at level {level}")
    reg._tri_done = n

    # perpendiculars at every (registered line, incident point) pair;
    # scanned incrementally (old lines x new points, new lines x all
    # points) and iterated because fresh perpendiculars admit new feet.
    # Perpendiculars are deduplicated by (line direction, foot) before
    # construction: parallel lines share their perpendicular at a point.
    all_pts = np.arange(n, dtype=np.int64)
    new_pts = np.arange(reg._perp_pts_done, n, dtype=np.int64)
    rows_at_start = reg._perp_rows_done
    dir_keys = reg._dir_keys

    def dir_key(row, line):
        k = dir_keys.get(row)
        if k is None:
            if line.a.sign() == 0:
                k = ("h",)
            elif line.b.sign() == 0:
                k = ("v",)
            else:
                k = line.b
            dir_keys[row] = k
        return k

    scans = [
        (np.arange(rows_at_start, dtype=np.int64), new_pts),
        (np.arange(rows_at_start, len(reg.line_rows), dtype=np.int64), all_pts),
    ]
    while scans:
        lrows, pts = scans.pop(0)
        fresh_rows: list[int] = []
        for rows, pis in iter_line_candidates(reg.lapprox, lrows, reg.papprox, pts):
            for row, pi in zip(rows, pis):
                row = int(row)
                pi = int(pi)
                line_rec = reg.curve_recs[reg.line_rows[row]]
                p = recs[pi].point
                if not on_curve_exact(p, line_rec.curve):
                    continue
                if line_incidence_out is not None and row >= rows_at_start:
                    line_incidence_out.setdefault(line_rec.idx, []).append(pi)
                jkey = (dir_key(row, line_rec.curve), pi)
                if jkey in reg._perp_built:
                    continue
                reg._perp_built.add(jkey)
                rec = put(perpendicular_at_unchecked(line_rec.curve, p),
                          RULE_PERPENDICULAR, (line_rec.idx, pi))
                if rec is not None:
                    fresh_rows.append(rec.row)
        if fresh_rows:
            scans.append((np.asarray(fresh_rows, dtype=np.int64), all_pts))
    reg._perp_pts_done = n
    reg._perp_rows_done = len(reg.line_rows)
    if line_incidence_out is not None:
        for lst in line_incidence_out.values():
            lst.sort()

    return new


def derive_points(reg: LevelRegistry, level: int, budget: int) -> list[PointRec]:
    """Register points derivable from curves of birth <= level.

    Antipodes of registered points on registered circles come first,
    then pairwise curve intersections, both in registry order, stopping
    once `budget` new points have been registered; they are born at
    level + 1.
    """
    if budget <= 0:
        return []
    n_pts = reg.n_points_upto(level)
    pt_sel = np.arange(n_pts, dtype=np.int64)
    new: list[PointRec] = []

    # antipodes first: (circle, incident point) in registry order
    crows = reg.circle_table_rows(level)
    pairs: list[tuple[int, int]] = []
    for rows, pis in iter_circle_candidates(reg.capprox, crows, reg.papprox, pt_sel):
        for row, pi in zip(rows, pis):
            pairs.append((int(row), int(pi)))
    pairs.sort(key=lambda rp: (reg.circle_rows[rp[0]], rp[1]))
    for row, pi in pairs:
        if budget <= 0:
            return new
        crec = reg.curve_recs[reg.circle_rows[row]]
        p = reg.point_recs[pi].point
        if not on_curve_exact(p, crec.curve):
            continue
        c = crec.curve
        ap = Point(c.center.x * 2 - p.x, c.center.y * 2 - p.y)
        rec = reg.add_point(ap, level + 1, RULE_ANTIPODE, (pi, crec.idx))
        if rec is not None:
            new.append(rec)
            budget -= 1

    # pairwise intersections in registry order
    curve_recs = reg.curves_upto(level)
    m = len(curve_recs)
    for i in range(m):
        if budget <= 0:
            break
        ci = curve_recs[i]
        for j in range(i + 1, m):
            if budget <= 0:
                break
            cj = curve_recs[j]
            pts = intersect(ci.curve, cj.curve)
            for p in pts:
                if budget <= 0:
                    break
                rec = reg.add_point(p, level + 1, RULE_INTERSECT, (ci.idx, cj.idx))
                if rec is not None:
                    new.append(rec)
                    budget -= 1
    return new
