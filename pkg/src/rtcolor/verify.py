"""Oracle-grade verification, independent of the construction.

The monochromatic-right-triangle search enumerates same-color triples
and applies the exact right-angle predicate at every vertex.  The
condition checker recomputes every point/curve incidence geometrically
(never trusting the registry's provenance) and re-evaluates the batch,
palette, multiplicity and perpendicular conditions from scratch.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coloring import (
    ColorState,
    Palette,
    circle_palette,
    line_palette,
    run_construction,
)
from .errors import InputError
from .geometry import (
    Circle,
    Line,
    Point,
    circumcircle,
    collinear,
    is_right_angle,
    iter_circle_candidates,
    iter_line_candidates,
    line_through,
    on_curve_exact,
    perpendicular_at_unchecked,
    thales_circle,
)
from .registry import ClosureConfig, LevelRegistry

CONDITION_KINDS = tuple(f"COND_{i}" for i in range(6, 13))
ALL_KINDS = ("MONO_RIGHT_TRIANGLE",) + CONDITION_KINDS + ("CLAIM_2_STRICT",)


@dataclass
class ViolationReport:
    kind: str
    witness: dict
    level_info: dict = field(default_factory=dict)
    warning: bool = False

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "warning": self.warning,
            "witness": self.witness,
            "level_info": self.level_info,
        }


def _point_blob(p: Point, color=None) -> dict:
    d = {"x": p.x.to_expr(), "y": p.y.to_expr(),
         "approx": [float(p.x), float(p.y)]}
    if color is not None:
        d["color"] = color
    return d


def _curve_blob(e) -> dict:
    if isinstance(e, Line):
        return {"kind": "line",
                "coeffs": [e.a.to_expr(), e.b.to_expr(), e.c.to_expr()]}
    return {"kind": "circle",
            "center": [e.center.x.to_expr(), e.center.y.to_expr()],
            "r2": e.r2.to_expr()}


# ---------------------------------------------------------------------------
# the oracle

def _color_groups(state: ColorState):
    groups: dict[int, list[Point]] = {}
    for p, c in state.f.items():
        groups.setdefault(c, []).append(p)
    return groups


def _search_group(args):
    color, pts = args
    for x, y, z in itertools.combinations(pts, 3):
        for a, b, c in ((x, y, z), (y, x, z), (x, z, y)):
            # b is the candidate right-angle vertex
            if is_right_angle(a, b, c):
                return ViolationReport(
                    kind="MONO_RIGHT_TRIANGLE",
                    witness={
                        "color": color,
                        "vertices": [_point_blob(a, color), _point_blob(b, color),
                                     _point_blob(c, color)],
                        "right_angle_at": _point_blob(b, color),
                    },
                )
    return None


def find_mono_right_triangle(state: ColorState, workers: int = 1) -> ViolationReport | None:
    """Exhaustive search for three same-colored points forming an exact
    right triangle; returns the first witness in color order, or None."""
    groups = _color_groups(state)
    jobs = [(c, groups[c]) for c in sorted(groups) if len(groups[c]) >= 3]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rep in pool.map(_search_group, jobs):
                if rep is not None:
                    return rep
        return None
    for job in jobs:
        rep = _search_group(job)
        if rep is not None:
            return rep
    return None


# ---------------------------------------------------------------------------
# incidence recomputation (shared by the condition checks)

def _colored_incidences(colors: list, reg: LevelRegistry):
    """For every registered curve, the indices of colored points exactly
    on it; plus the transpose.  Pure geometry, no provenance."""
    n = len(reg.point_recs)
    colored_sel = np.asarray([i for i in range(n) if colors[i] is not None],
                             dtype=np.int64)
    per_curve: dict[int, list[int]] = {r.idx: [] for r in reg.curve_recs}
    per_point: dict[int, list[int]] = {int(i): [] for i in colored_sel}
    for rows, pis in iter_line_candidates(
            reg.lapprox, np.arange(len(reg.line_rows)), reg.papprox, colored_sel):
        for row, pi in zip(rows, pis):
            rec = reg.curve_recs[reg.line_rows[row]]
            if on_curve_exact(reg.point_recs[pi].point, rec.curve):
                per_curve[rec.idx].append(int(pi))
                per_point[int(pi)].append(rec.idx)
    for rows, pis in iter_circle_candidates(
            reg.capprox, np.arange(len(reg.circle_rows)), reg.papprox, colored_sel):
        for row, pi in zip(rows, pis):
            rec = reg.curve_recs[reg.circle_rows[row]]
            if on_curve_exact(reg.point_recs[pi].point, rec.curve):
                per_curve[rec.idx].append(int(pi))
                per_point[int(pi)].append(rec.idx)
    for lst in per_curve.values():
        lst.sort()
    for lst in per_point.values():
        lst.sort()
    return per_curve, per_point


def _perp_partner_key(l: Line):
    """Key such that two lines are perpendicular iff one's key equals the
    other's partner key.  Canonical lines have a in {0, 1}."""
    if l.a.sign() == 0:
        return ("h",)  # horizontal: normal (0, 1)
    if l.b.sign() == 0:
        return ("v",)  # vertical: normal (1, 0)
    return ("s", l.b)


def _perp_key_of_partner(l: Line):
    if l.a.sign() == 0:
        return ("v",)
    if l.b.sign() == 0:
        return ("h",)
    return ("s", -1 / l.b)


# ---------------------------------------------------------------------------
# condition suite

def check_conditions(state: ColorState, reg: LevelRegistry,
                     strict: bool = False) -> list[ViolationReport]:
    """Re-derive all incidences and re-evaluate the construction's
    invariants; warnings mark configurations that budgeted derivation
    legitimately produces (points on several older curves)."""
    n = len(reg.point_recs)
    colors: list = [None] * n
    for i, rec in enumerate(reg.point_recs):
        c = state.f.get(rec.point)
        colors[i] = c
    reports: list[ViolationReport] = []

    # batch injectivity and the +2 gap
    levels = sorted({r.level for r in reg.point_recs})
    for level in levels:
        batch = [(r.batch_index, r.idx) for r in reg.point_recs
                 if r.level == level and colors[r.idx] is not None]
        batch.sort()
        cs = [colors[i] for _, i in batch]
        if len(set(cs)) < len(cs):
            dup = [c for c in cs if cs.count(c) > 1][0]
            reports.append(ViolationReport(
                "COND_6",
                {"level": level, "repeated_color": dup, "batch_colors": cs},
                {"level": level}))
        ss = sorted(cs)
        for a, b in zip(ss, ss[1:]):
            if b - a < 2:
                reports.append(ViolationReport(
                    "COND_6",
                    {"level": level, "gap_pair": [a, b], "batch_colors": cs,
                     "sub_check": "gap"},
                    {"level": level}))
                break

    per_curve, per_point = _colored_incidences(colors, reg)
    point_of = reg.point_recs

    # palette membership for points colored after a curve's birth
    # (curves born at the top level have no later points to constrain)
    max_pt_level = max((r.level for r in reg.point_recs), default=0)
    for rec in reg.curve_recs:
        if rec.level >= max_pt_level:
            continue
        pal = state.phi.get(rec.curve)
        if pal is None:
            continue
        for pi in per_curve[rec.idx]:
            if point_of[pi].level > rec.level and colors[pi] not in pal:
                reports.append(ViolationReport(
                    "COND_7",
                    {"point": _point_blob(point_of[pi].point, colors[pi]),
                     "curve": _curve_blob(rec.curve),
                     "palette_complement": pal.sorted_complement()},
                    {"curve_level": rec.level, "point_level": point_of[pi].level}))

    # same-color structure: a same-colored pair is antipodal only on the
    # circle having it as a diameter, collinear only on its connecting
    # line, and a same-colored triple is concyclic only on its
    # circumcircle, so those conditions reduce to direct lookups
    classes: dict[int, list[int]] = {}
    for i, c in enumerate(colors):
        if c is not None:
            classes.setdefault(c, []).append(i)

    for i in sorted(classes):
        members = classes[i]
        for ai in range(len(members)):
            for bi in range(ai + 1, len(members)):
                p, q = point_of[members[ai]].point, point_of[members[bi]].point
                diam = thales_circle(p, q)
                ci = reg.curve_index.get(diam)
                if ci is not None:
                    pal = state.phi.get(reg.curve_recs[ci].curve)
                    if pal is not None and i in pal:
                        reports.append(ViolationReport(
                            "COND_8",
                            {"color": i,
                             "pair": [_point_blob(p, i), _point_blob(q, i)],
                             "curve": _curve_blob(diam),
                             "palette_complement": pal.sorted_complement()},
                            {"curve_level": reg.curve_recs[ci].level}))
                conn = line_through(p, q)
                li = reg.curve_index.get(conn)
                if li is not None:
                    pal = state.phi.get(reg.curve_recs[li].curve)
                    if pal is not None and i not in pal:
                        reports.append(ViolationReport(
                            "COND_10",
                            {"color": i,
                             "points": [_point_blob(p, i), _point_blob(q, i)],
                             "curve": _curve_blob(conn)},
                            {"curve_level": reg.curve_recs[li].level}))
        for a, b, c in itertools.combinations(members, 3):
            pa, pb, pc = point_of[a].point, point_of[b].point, point_of[c].point
            if collinear(pa, pb, pc):
                continue
            circ = circumcircle(pa, pb, pc)
            ci = reg.curve_index.get(circ)
            if ci is not None:
                pal = state.phi.get(reg.curve_recs[ci].curve)
                if pal is not None and i not in pal:
                    reports.append(ViolationReport(
                        "COND_9",
                        {"color": i,
                         "points": [_point_blob(pa, i), _point_blob(pb, i),
                                    _point_blob(pc, i)],
                         "curve": _curve_blob(circ)},
                        {"curve_level": reg.curve_recs[ci].level}))

    # perpendicular-foot exclusion, inverted: a violation pairs x with an
    # older same-colored y such that some older registered line through x
    # is perpendicular to the segment xy
    line_key_cache: dict[int, tuple] = {}

    def own_key(idx):
        k = line_key_cache.get(idx)
        if k is None:
            k = _perp_partner_key(reg.curve_recs[idx].curve)
            line_key_cache[idx] = k
        return k

    point_line_buckets: dict[int, dict] = {}
    for pi, curve_idxs in per_point.items():
        by_key: dict = {}
        for ci in curve_idxs:
            if isinstance(reg.curve_recs[ci].curve, Line):
                by_key.setdefault(own_key(ci), []).append(ci)
        point_line_buckets[pi] = by_key

    for i in sorted(classes):
        members = classes[i]
        for xi in members:
            xl = point_of[xi].level
            x = point_of[xi].point
            for yi in members:
                if point_of[yi].level >= xl:
                    continue
                y = point_of[yi].point
                conn = line_through(x, y)
                for ci in point_line_buckets[xi].get(_perp_key_of_partner(conn), ()):
                    lrec = reg.curve_recs[ci]
                    if lrec.level < xl:
                        reports.append(ViolationReport(
                            "COND_12",
                            {"color": i,
                             "point": _point_blob(x, i),
                             "older_point": _point_blob(y, i),
                             "base_line": _curve_blob(lrec.curve),
                             "perpendicular": _curve_blob(
                                 perpendicular_at_unchecked(lrec.curve, x))},
                            {"point_level": xl,
                             "older_level": point_of[yi].level}))

    # perpendicular meets of registered line pairs
    for pi, by_key in point_line_buckets.items():
        x = point_of[pi].point
        xc = colors[pi]
        xl = point_of[pi].level
        for key, idxs in by_key.items():
            for li in idxs:
                lrec = reg.curve_recs[li]
                partners = by_key.get(_perp_key_of_partner(lrec.curve), ())
                for ci in partners:
                    if ci <= li:
                        continue
                    prec = reg.curve_recs[ci]
                    pal_l = state.phi.get(lrec.curve)
                    pal_p = state.phi.get(prec.curve)
                    if pal_l is None or pal_p is None:
                        continue
                    if xc in pal_l and xc in pal_p:
                        relaxed = lrec.level < xl and prec.level < xl
                        reports.append(ViolationReport(
                            "COND_11",
                            {"color": xc, "point": _point_blob(x, xc),
                             "lines": [_curve_blob(lrec.curve), _curve_blob(prec.curve)],
                             "both_lines_older": relaxed},
                            {"point_level": xl,
                             "line_levels": [lrec.level, prec.level]},
                            warning=(relaxed and not strict)))

    # points lying on more than one strictly older curve
    for pi, curve_idxs in per_point.items():
        lvl = point_of[pi].level
        if lvl <= 1:
            continue
        older = [ci for ci in curve_idxs if reg.curve_recs[ci].level < lvl]
        if len(older) > 1:
            reports.append(ViolationReport(
                "CLAIM_2_STRICT",
                {"point": _point_blob(point_of[pi].point, colors[pi]),
                 "older_curve_count": len(older)},
                {"point_level": lvl},
                warning=not strict))

    return reports


def audit_palettes(state: ColorState, reg: LevelRegistry) -> list[dict]:
    """Recompute every palette from scratch and compare bit-for-bit.

    Returns one record per mismatch; empty means every stored palette
    matches its defining rule.
    """
    n = len(reg.point_recs)
    colors: list = [None] * n
    for i, rec in enumerate(reg.point_recs):
        colors[i] = state.f.get(rec.point)
    per_curve, _ = _colored_incidences(colors, reg)
    bad = []
    for rec in reg.curve_recs:
        pal = state.phi.get(rec.curve)
        if pal is None:
            continue
        older = [pi for pi in per_curve[rec.idx]
                 if reg.point_recs[pi].level < rec.level and colors[pi] is not None]
        if isinstance(rec.curve, Circle):
            expect, _fl = circle_palette([colors[pi] for pi in older])
        else:
            batch = [pi for pi in per_curve[rec.idx]
                     if reg.point_recs[pi].level == rec.level and colors[pi] is not None]
            expect, _fl = line_palette([colors[pi] for pi in older],
                                       [colors[pi] for pi in batch])
        if expect != pal:
            bad.append({
                "curve": _curve_blob(rec.curve),
                "level": rec.level,
                "stored": {"full": pal.is_full, "complement": pal.sorted_complement()},
                "expected": {"full": expect.is_full,
                             "complement": expect.sorted_complement()},
            })
    return bad


# ---------------------------------------------------------------------------
# mutation harness

def mutation_suite(seeds: list[Point], cfg: ClosureConfig, mutant: str) -> dict:
    """Rerun the construction with one enforcement disabled and report
    what the oracle and the condition checker find."""
    if mutant not in ("ALL", "GAP_RULE", "COND_7", "COND_12", "PHI_CASES"):
        raise InputError(f"unknown mutant tag {mutant!r}")
    state, reg = run_construction(seeds, cfg, disabled=frozenset({mutant}))
    oracle = find_mono_right_triangle(state)
    reports = check_conditions(state, reg, strict=cfg.strict)
    by_kind: dict[str, int] = {}
    for r in reports:
        if not r.warning:
            by_kind[r.kind] = by_kind.get(r.kind, 0) + 1
    return {
        "mutant": mutant,
        "points": len(reg.point_recs),
        "curves": len(reg.curve_recs),
        "oracle_found": oracle is not None,
        "oracle_witness": oracle.to_json() if oracle else None,
        "violations_by_kind": by_kind,
        "reports": [r.to_json() for r in reports if not r.warning][:50],
    }


def report_json(reports: list[ViolationReport], oracle: ViolationReport | None,
                extra: dict | None = None, max_listed_warnings: int = 200) -> str:
    errors = [r for r in reports if not r.warning]
    warnings = [r for r in reports if r.warning]
    doc = {
        "oracle": oracle.to_json() if oracle else None,
        "errors": [r.to_json() for r in errors],
        "warnings": [r.to_json() for r in warnings[:max_listed_warnings]],
        "error_count": len(errors),
        "warning_count": len(warnings),
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, sort_keys=True, indent=1)
