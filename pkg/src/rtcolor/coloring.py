"""Batch coloring of points and palette assignment for curves.

Each level's new points are colored in registration order.  A point's
color must clear every palette of an older curve through it, skip the
colors disqualified by the perpendicular-foot rule, skip the colors of
antipodal partners on older circles, and respect the +2 gap over the
colors already used in its batch.  The least color satisfying all of
that is chosen, so runs are fully deterministic.

Curves born with a level get their palette right after the batch is
colored: circles exclude the colors of strictly older points on them
(all of omega when an older color repeats), lines also fold in the
colors of the current batch, re-admitting the old point's color when
the batch already uses it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InternalOrderingError
from .geometry import (
    Circle,
    Line,
    LineApprox,
    Point,
    iter_line_candidates,
    on_curve_exact,
    perpendicular_at_unchecked,
)
from .registry import (
    ClosureConfig,
    CurveRec,
    LevelRegistry,
    derive_points,
    generate_curves,
    register_seed,
)

MUTANTS = ("ALL", "GAP_RULE", "COND_7", "COND_12", "PHI_CASES")


@dataclass(frozen=True)
class Palette:
    """Cofinite color set: everything except `complement`.

    `is_full` marks the all-of-omega case that arises from a repeated
    older color on a circle; its complement is empty.
    """

    complement: frozenset
    is_full: bool = False

    def __post_init__(self):
        if self.is_full and self.complement:
            raise InternalOrderingError("full palette with nonempty complement")

    def __contains__(self, color: int) -> bool:
        return color not in self.complement

    def sorted_complement(self) -> list[int]:
        return sorted(self.complement)


FULL_PALETTE = Palette(frozenset(), True)

_PALETTE_CACHE: dict[frozenset, Palette] = {}


def _palette_of(colors) -> Palette:
    key = frozenset(colors)
    pal = _PALETTE_CACHE.get(key)
    if pal is None:
        pal = Palette(key)
        _PALETTE_CACHE[key] = pal
    return pal


def circle_palette(older_colors: list[int]) -> tuple[Palette, bool]:
    """Palette for a newborn circle from the colors of strictly older
    points on it.  Returns (palette, capped_flag).

    A repeated color yields the full palette; with at most two older
    points that is exactly the equal-pair case.  More than two older
    points only happens when circle registration was capped earlier;
    those are flagged.
    """
    flagged = len(older_colors) > 2
    if len(set(older_colors)) < len(older_colors):
        return FULL_PALETTE, flagged
    return _palette_of(older_colors), flagged


def line_palette(older_colors: list[int], batch_colors: list[int]) -> tuple[Palette, bool]:
    """Palette for a newborn line.

    `older_colors` are colors of strictly older points on the line (at
    most one for construction-born lines), `batch_colors` the colors of
    same-level points on it.  When the old color reappears in the batch
    it is re-admitted.
    """
    bset = frozenset(batch_colors)
    if not older_colors:
        return _palette_of(bset), False
    if len(older_colors) == 1:
        fy = older_colors[0]
        if fy in bset:
            return _palette_of(bset - {fy}), False
        return _palette_of(bset | {fy}), False
    return _palette_of(bset | frozenset(older_colors)), True


class ColorState:
    """Total coloring plus per-curve palettes and batch bookkeeping."""

    def __init__(self):
        self.f: dict[Point, int] = {}
        self.color_by_idx: list[int] = []
        self.phi: dict = {}
        self.phi_flags: dict = {}
        self.batches: dict[int, list[int]] = {}
        self.classes: dict[int, list[int]] = {}
        self.flags: list[str] = []

    @classmethod
    def from_coloring(cls, coloring: dict) -> "ColorState":
        """State carrying only a point -> color map (for oracle tests)."""
        st = cls()
        for p, c in coloring.items():
            if not isinstance(p, Point):
                p = Point(p[0], p[1])
            st.f[p] = int(c)
        return st

    def assign(self, rec, color: int):
        if rec.idx != len(self.color_by_idx):
            raise InternalOrderingError("coloring out of registration order")
        self.f[rec.point] = color
        self.color_by_idx.append(color)
        self.batches.setdefault(rec.level, []).append(rec.idx)
        self.classes.setdefault(color, []).append(rec.idx)

    def max_color(self) -> int:
        return max(self.color_by_idx, default=-1)


# ---------------------------------------------------------------------------
# per-point exclusion sets

def _colored_on_line(line: Line, reg: LevelRegistry, state: ColorState,
                     upto_idx: int, exclude: int | None = None) -> list[int]:
    """Indices of colored points (idx < upto_idx) exactly on `line`."""
    if upto_idx <= 0:
        return []
    lap = LineApprox()
    lap.append(line)
    sel = np.arange(upto_idx, dtype=np.int64)
    hits = []
    for _, pis in iter_line_candidates(lap, [0], reg.papprox, sel):
        for pi in pis:
            pi = int(pi)
            if pi == exclude:
                continue
            if on_curve_exact(reg.point_recs[pi].point, line):
                hits.append(pi)
    hits.sort()
    return hits


def disqualified_colors(state: ColorState, reg: LevelRegistry, x: Point,
                        prior_lines: list | None = None) -> set[int]:
    """Colors barred by the perpendicular-foot rule.

    For each older line through x, the color of any older colored point
    on the perpendicular erected at x is excluded.
    """
    idx = reg.point_index.get(x)
    if idx is None:
        raise InputError("point is not registered")
    level = reg.point_recs[idx].level
    if prior_lines is None:
        prior_lines = [r.curve for r in reg.prior_curve_recs_through(idx, level)
                       if isinstance(r.curve, Line)]
    n_prior = reg.n_points_upto(level - 1)
    out: set[int] = set()
    for l in prior_lines:
        perp = perpendicular_at_unchecked(l, x)
        for pi in _colored_on_line(perp, reg, state, n_prior, exclude=idx):
            out.add(state.color_by_idx[pi])
    return out


def _antipodal_exclusions(state: ColorState, reg: LevelRegistry, x: Point,
                          prior_circles: list) -> set[int]:
    """Colors of already-colored antipodal partners of x on older circles.

    The transfinite construction sweeps a point's antipode into the same
    closed level, where batch injectivity separates their colors; a
    budgeted emulation colors the antipode in a later batch, so the
    separation is enforced directly here.
    """
    out: set[int] = set()
    for c in prior_circles:
        partner = Point(c.center.x * 2 - x.x, c.center.y * 2 - x.y)
        col = state.f.get(partner)
        if col is not None:
            out.add(col)
    return out


# ---------------------------------------------------------------------------
# batch coloring

def color_batch(state: ColorState, reg: LevelRegistry, level: int,
                disabled: frozenset = frozenset()) -> list[int]:
    """Color the points of `level` in batch order; returns their colors."""
    batch = [r for r in reg.point_recs if r.level == level]
    if not batch:
        return []
    n_prior = reg.n_points_upto(level - 1)

    # older curves through each batch point, one bulk scan
    prior_map: dict[int, list[CurveRec]] = {r.idx: [] for r in batch}
    sel = np.arange(batch[0].idx, batch[-1].idx + 1, dtype=np.int64)
    lrows = reg.line_table_rows(level - 1)
    crows = reg.circle_table_rows(level - 1)
    from .geometry import iter_circle_candidates  # local to avoid cycle noise
    for rows, pis in iter_line_candidates(reg.lapprox, lrows, reg.papprox, sel):
        for row, pi in zip(rows, pis):
            rec = reg.curve_recs[reg.line_rows[row]]
            if on_curve_exact(reg.point_recs[pi].point, rec.curve):
                prior_map[int(pi)].append(rec)
    for rows, pis in iter_circle_candidates(reg.capprox, crows, reg.papprox, sel):
        for row, pi in zip(rows, pis):
            rec = reg.curve_recs[reg.circle_rows[row]]
            if on_curve_exact(reg.point_recs[pi].point, rec.curve):
                prior_map[int(pi)].append(rec)

    colors: list[int] = []
    prev_max = -1
    for j, rec in enumerate(batch):
        if "ALL" in disabled:
            state.assign(rec, 0)
            colors.append(0)
            continue
        priors = sorted(prior_map[rec.idx], key=lambda r: r.idx)
        forbidden: set[int] = set()
        if "COND_7" not in disabled:
            for prec in priors:
                pal = state.phi.get(prec.curve)
                if pal is None:
                    raise InternalOrderingError(
                        f"curve c{prec.idx} has no palette before level {level}")
                forbidden |= pal.complement
        if "COND_12" not in disabled:
            lines = [r.curve for r in priors if isinstance(r.curve, Line)]
            forbidden |= disqualified_colors(state, reg, rec.point, lines)
            circles = [r.curve for r in priors if isinstance(r.curve, Circle)]
            forbidden |= _antipodal_exclusions(state, reg, rec.point, circles)
        if "GAP_RULE" in disabled:
            base = 0
            forbidden |= set(colors)
        else:
            base = 0 if j == 0 else prev_max + 2
        c = base
        while c in forbidden:
            c += 1
        state.assign(rec, c)
        colors.append(c)
        prev_max = max(prev_max, c)
    return colors


# ---------------------------------------------------------------------------
# palette assignment

def assign_phi_circle(state: ColorState, reg: LevelRegistry, c: Circle,
                      level: int, older: list[int] | None = None) -> Palette:
    """Palette for circle `c` born at `level`; `older` may carry the
    precomputed indices of strictly older points on it."""
    if older is None:
        n_prior = reg.n_points_upto(level - 1)
        rec = reg.curve_recs[reg.curve_index[c]]
        older = [pi for pi in reg.incident_points(rec, np.arange(n_prior, dtype=np.int64))]
    pal, flagged = circle_palette([state.color_by_idx[pi] for pi in older])
    if flagged:
        state.flags.append(f"circle with {len(older)} older points at level {level}")
    return pal


def assign_phi_line(state: ColorState, reg: LevelRegistry, l: Line,
                    level: int, older: list[int] | None = None,
                    batch: list[int] | None = None) -> Palette:
    """Palette for line `l` born at `level`."""
    if older is None or batch is None:
        rec = reg.curve_recs[reg.curve_index[l]]
        n_here = reg.n_points_upto(level)
        pts = reg.incident_points(rec, np.arange(n_here, dtype=np.int64))
        n_prior = reg.n_points_upto(level - 1)
        older = [pi for pi in pts if pi < n_prior]
        batch = [pi for pi in pts if pi >= n_prior]
    pal, flagged = line_palette([state.color_by_idx[pi] for pi in older],
                                [state.color_by_idx[pi] for pi in batch])
    if flagged:
        state.flags.append(f"line with {len(older)} older points at level {level}")
    return pal


def assign_palettes(state: ColorState, reg: LevelRegistry,
                    new_recs: list[CurveRec], level: int,
                    disabled: frozenset = frozenset(),
                    line_incidences: dict | None = None) -> None:
    """Assign palettes to the curves born at `level`, in registry order.

    `line_incidences` may carry confirmed incidence lists for the new
    lines (from curve generation); circles are always scanned here.
    """
    if not new_recs:
        return
    n_prior = reg.n_points_upto(level - 1)
    n_here = reg.n_points_upto(level)
    sel = np.arange(n_here, dtype=np.int64)

    line_recs = [r for r in new_recs if isinstance(r.curve, Line)]
    circ_recs = [r for r in new_recs if isinstance(r.curve, Circle)]
    inc: dict[int, list[int]] = {r.idx: [] for r in new_recs}

    if line_incidences is None:
        for rows, pis in iter_line_candidates(
                reg.lapprox, [r.row for r in line_recs], reg.papprox, sel):
            for row, pi in zip(rows, pis):
                rec = reg.curve_recs[reg.line_rows[row]]
                if rec.idx in inc and on_curve_exact(reg.point_recs[pi].point, rec.curve):
                    inc[rec.idx].append(int(pi))
    else:
        for r in line_recs:
            inc[r.idx] = line_incidences.get(r.idx, [])
    from .geometry import iter_circle_candidates
    for rows, pis in iter_circle_candidates(
            reg.capprox, [r.row for r in circ_recs], reg.papprox, sel):
        for row, pi in zip(rows, pis):
            rec = reg.curve_recs[reg.circle_rows[row]]
            if rec.idx in inc and on_curve_exact(reg.point_recs[pi].point, rec.curve):
                inc[rec.idx].append(int(pi))

    for rec in new_recs:
        if "PHI_CASES" in disabled:
            state.phi[rec.curve] = FULL_PALETTE
            continue
        pts = sorted(inc[rec.idx])
        if isinstance(rec.curve, Circle):
            older = [pi for pi in pts if pi < n_prior]
            state.phi[rec.curve] = assign_phi_circle(state, reg, rec.curve, level, older)
        else:
            older = [pi for pi in pts if pi < n_prior]
            batch = [pi for pi in pts if pi >= n_prior]
            state.phi[rec.curve] = assign_phi_line(state, reg, rec.curve, level, older, batch)


# ---------------------------------------------------------------------------
# the construction loop

def _same_color_triples(state: ColorState, reg: LevelRegistry) -> list[tuple[int, int, int]]:
    out = []
    for color in sorted(state.classes):
        members = state.classes[color]
        m = len(members)
        for a in range(m):
            for b in range(a + 1, m):
                for c in range(b + 1, m):
                    out.append((members[a], members[b], members[c]))
    return out


def run_construction(seeds: list[Point], cfg: ClosureConfig,
                     disabled: frozenset = frozenset()) -> tuple[ColorState, LevelRegistry]:
    """Derive, color and register level by level, then run the completion
    pass that gives every colored pair its line and diameter circle and
    every prioritized triple its circle, all with palettes."""
    for tag in disabled:
        if tag not in MUTANTS:
            raise InputError(f"unknown mutant tag {tag!r}")
    reg = register_seed(seeds)
    state = ColorState()
    for level in range(1, cfg.max_level + 1):
        if level > 1:
            derive_points(reg, level - 1, cfg.point_budget_per_level)
        color_batch(state, reg, level, disabled)
        prio = _same_color_triples(state, reg)
        line_inc: dict = {}
        new = generate_curves(reg, level, cfg.circumcircle_cap, prio,
                              line_incidence_out=line_inc)
        assign_palettes(state, reg, new, level, disabled, line_inc)
    completion = cfg.max_level + 1
    prio = _same_color_triples(state, reg)
    line_inc = {}
    new = generate_curves(reg, completion, cfg.circumcircle_cap, prio,
                          line_incidence_out=line_inc)
    assign_palettes(state, reg, new, completion, disabled, line_inc)
    return state, reg


# ---------------------------------------------------------------------------
# dumps

def _coord_text(v) -> str:
    r = v.rat
    if r is not None:
        return f"{r.numerator}/{r.denominator}"
    return json.dumps(v.to_expr(), sort_keys=True, separators=(",", ":"))


def dump_csv(state: ColorState, reg: LevelRegistry, fh) -> None:
    fh.write("id,x,y,level,batch_index,color\n")
    for rec in reg.point_recs:
        color = state.color_by_idx[rec.idx] if rec.idx < len(state.color_by_idx) else ""
        fh.write(f"p{rec.idx},{_coord_text(rec.point.x)},{_coord_text(rec.point.y)},"
                 f"{rec.level},{rec.batch_index},{color}\n")


def dump_json(state: ColorState, reg: LevelRegistry, fh) -> None:
    points = []
    for rec in reg.point_recs:
        points.append({
            "id": f"p{rec.idx}",
            "x": _coord_text(rec.point.x),
            "y": _coord_text(rec.point.y),
            "level": rec.level,
            "batch_index": rec.batch_index,
            "color": state.color_by_idx[rec.idx] if rec.idx < len(state.color_by_idx) else None,
        })
    curves = []
    for rec in reg.curve_recs:
        pal = state.phi.get(rec.curve)
        curves.append({
            "id": f"c{rec.idx}",
            "kind": "line" if isinstance(rec.curve, Line) else "circle",
            "level": rec.level,
            "palette_full": bool(pal.is_full) if pal is not None else None,
            "palette_complement": pal.sorted_complement() if pal is not None else None,
        })
    json.dump({"points": points, "curves": curves, "flags": state.flags},
              fh, sort_keys=True, indent=1)
