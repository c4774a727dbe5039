"""Exact arithmetic over real quadratic towers.

A value is an element of Q(sqrt(r1), ..., sqrt(rk)) where each radicand
r(i) is a positive element of the prefix tower and is not a perfect
square there.  Elements are nested pairs: at level 0 a rational, at
level i a pair (lo, hi) meaning lo + hi*sqrt(r(i)).  Within one tower,
{1, sqrt(r(i))} is a basis at every level, so structural equality of
elements *is* value equality.

sign() is decided exactly by norm descent: sign(a + b*sqrt(r)) reduces
to signs of a, b and a^2 - b^2*r, all one level down.  A certified float
enclosure (outward-rounded interval) short-circuits the common case; it
never decides that a value is zero.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import isqrt

from .errors import ExactArithmeticError, InputError

try:
    from gmpy2 import mpq as RAT
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    RAT = Fraction

RZERO = RAT(0)
RONE = RAT(1)

_INF = math.inf
_SQUAREFREE_TRIAL_LIMIT = 10_000


# ---------------------------------------------------------------------------
# outward-rounded float intervals (accelerator only, never decides zero)

def _fdown(v: float) -> float:
    return math.nextafter(v, -_INF)


def _fup(v: float) -> float:
    return math.nextafter(v, _INF)


def _enc_rat(x) -> tuple[float, float]:
    try:
        f = float(x)
    except OverflowError:
        return (-_INF, _INF)
    if math.isinf(f):
        return (-_INF, _INF)
    return (_fdown(f), _fup(f))


def _ia_add(a, b):
    return (_fdown(a[0] + b[0]), _fup(a[1] + b[1]))


def _ia_mul(a, b):
    p0 = a[0] * b[0]
    p1 = a[0] * b[1]
    p2 = a[1] * b[0]
    p3 = a[1] * b[1]
    lo = min(p0, p1, p2, p3)
    hi = max(p0, p1, p2, p3)
    if math.isnan(lo) or math.isnan(hi):
        return (-_INF, _INF)
    return (_fdown(lo), _fup(hi))


def _ia_sqrt(a):
    lo = a[0] if a[0] > 0.0 else 0.0
    if math.isinf(a[1]):
        return (_fdown(math.sqrt(lo)), _INF)
    return (_fdown(math.sqrt(lo)), _fup(math.sqrt(a[1])))


# ---------------------------------------------------------------------------
# exact Fraction intervals (the refinable isolating interval)

def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(int(x.numerator), int(x.denominator))


def _frac_sqrt_bounds(lo: Fraction, hi: Fraction, bits: int) -> tuple[Fraction, Fraction]:
    # lo may dip below 0 from interval slack on a nonnegative value
    if lo < 0:
        lo = Fraction(0)
    s = 1 << bits
    s2 = s * s
    n = isqrt((lo.numerator * s2) // lo.denominator)
    t = -((-hi.numerator * s2) // hi.denominator)  # ceil(hi * s2)
    u = isqrt(t)
    if u * u < t:
        u += 1
    return (Fraction(n, s), Fraction(u, s))


def _ival_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _ival_mul(a, b):
    p = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return (min(p), max(p))


# ---------------------------------------------------------------------------
# element helpers (nested pairs over a Tower)

def _ekey(e, k: int):
    if k == 0:
        return (int(e.numerator), int(e.denominator))
    return (_ekey(e[0], k - 1), _ekey(e[1], k - 1))


def _eadd(x, y, k: int):
    if k == 0:
        return x + y
    return (_eadd(x[0], y[0], k - 1), _eadd(x[1], y[1], k - 1))


def _esub(x, y, k: int):
    if k == 0:
        return x - y
    return (_esub(x[0], y[0], k - 1), _esub(x[1], y[1], k - 1))


def _eneg(x, k: int):
    if k == 0:
        return -x
    return (_eneg(x[0], k - 1), _eneg(x[1], k - 1))


def _escale(x, c, k: int):
    # c rational
    if k == 0:
        return x * c
    return (_escale(x[0], c, k - 1), _escale(x[1], c, k - 1))


class Tower:
    """Interned chain of radicands; rads[i] is an element at level i."""

    __slots__ = (
        "rads", "key", "depth", "zeros", "ones", "intkeys",
        "_sqrt_enc", "_sqrt_ival", "_rad_enc_bits",
    )

    _registry: dict = {}
    _merge_cache: dict = {}

    def __new__(cls, rads: tuple, key: tuple):
        tw = cls._registry.get(key)
        if tw is not None:
            return tw
        tw = object.__new__(cls)
        tw.rads = rads
        tw.key = key
        tw.depth = len(rads)
        zeros = [RZERO]
        ones = [RONE]
        for i in range(len(rads)):
            zeros.append((zeros[i], zeros[i]))
            ones.append((ones[i], zeros[i]))
        tw.zeros = zeros
        tw.ones = ones
        intk = []
        for i, r in enumerate(rads):
            v = _rat_of(r, i)
            intk.append(int(v.numerator) if v is not None and v.denominator == 1 else None)
        tw.intkeys = tuple(intk)
        tw._sqrt_enc = [None] * len(rads)
        tw._sqrt_ival = {}
        tw._rad_enc_bits = None
        cls._registry[key] = tw
        return tw

    @classmethod
    def make(cls, rads: tuple) -> "Tower":
        key = tuple(_ekey(r, i) for i, r in enumerate(rads))
        return cls(rads, key)

    def prefix(self, k: int) -> "Tower":
        if k == self.depth:
            return self
        return Tower.make(self.rads[:k])

    def embed(self, e, frm: int, to: int):
        for i in range(frm, to):
            e = (e, self.zeros[i])
        return e

    def sqrt_enc(self, i: int) -> tuple[float, float]:
        enc = self._sqrt_enc[i]
        if enc is None:
            enc = _ia_sqrt(_enc_elem(self.rads[i], self, i))
            self._sqrt_enc[i] = enc
        return enc

    def sqrt_ival(self, i: int, bits: int) -> tuple[Fraction, Fraction]:
        got = self._sqrt_ival.get((i, bits))
        if got is None:
            lo, hi = _ival_elem(self.rads[i], self, i, bits)
            got = _frac_sqrt_bounds(lo, hi, bits)
            self._sqrt_ival[(i, bits)] = got
        return got

    def __repr__(self):
        return f"Tower(depth={self.depth})"


EMPTY_TOWER = Tower.make(())


def _rat_of(e, k: int):
    """The rational value of e if it is (embedded) rational, else None."""
    while k > 0:
        lo, hi = e
        if hi != _zero_at(k - 1):
            return None
        e = lo
        k -= 1
    return e


_ZEROS_CACHE = [RZERO]


def _zero_at(k: int):
    while len(_ZEROS_CACHE) <= k:
        z = _ZEROS_CACHE[-1]
        _ZEROS_CACHE.append((z, z))
    return _ZEROS_CACHE[k]


def _emul(x, y, tw: Tower, k: int):
    if k == 0:
        return x * y
    k1 = k - 1
    a, b = x
    c, d = y
    zero = tw.zeros[k1]
    if b == zero:
        if a == zero:
            return tw.zeros[k]
        return (_emul(a, c, tw, k1), _emul(a, d, tw, k1))
    if d == zero:
        if c == zero:
            return tw.zeros[k]
        return (_emul(a, c, tw, k1), _emul(b, c, tw, k1))
    r = tw.rads[k1]
    ac = _emul(a, c, tw, k1)
    bd = _emul(b, d, tw, k1)
    ad = _emul(a, d, tw, k1)
    bc = _emul(b, c, tw, k1)
    return (_eadd(ac, _emul(bd, r, tw, k1), k1), _eadd(ad, bc, k1))


def _einv(x, tw: Tower, k: int):
    if k == 0:
        if x == 0:
            raise ZeroDivisionError("division by zero")
        return RONE / x
    k1 = k - 1
    a, b = x
    zero = tw.zeros[k1]
    if b == zero:
        return (_einv(a, tw, k1), zero)
    r = tw.rads[k1]
    # norm a^2 - b^2 r vanishes only when x = 0 (r is not a square below)
    n = _esub(_emul(a, a, tw, k1), _emul(_emul(b, b, tw, k1), r, tw, k1), k1)
    ninv = _einv(n, tw, k1)
    return (_emul(a, ninv, tw, k1), _eneg(_emul(b, ninv, tw, k1), k1))


def _ediv(x, y, tw: Tower, k: int):
    return _emul(x, _einv(y, tw, k), tw, k)


def _enc_elem(e, tw: Tower, k: int) -> tuple[float, float]:
    if k == 0:
        return _enc_rat(e)
    a, b = e
    k1 = k - 1
    if b == tw.zeros[k1]:
        return _enc_elem(a, tw, k1)
    t = _ia_mul(_enc_elem(b, tw, k1), tw.sqrt_enc(k1))
    return _ia_add(_enc_elem(a, tw, k1), t)


def _ival_elem(e, tw: Tower, k: int, bits: int) -> tuple[Fraction, Fraction]:
    if k == 0:
        v = _frac(e)
        return (v, v)
    a, b = e
    k1 = k - 1
    if b == tw.zeros[k1]:
        return _ival_elem(a, tw, k1, bits)
    t = _ival_mul(_ival_elem(b, tw, k1, bits), tw.sqrt_ival(k1, bits))
    return _ival_add(_ival_elem(a, tw, k1, bits), t)


def _esign(e, tw: Tower, k: int) -> int:
    if k == 0:
        if e > 0:
            return 1
        if e < 0:
            return -1
        return 0
    lo, hi = _enc_elem(e, tw, k)
    if lo > 0.0:
        return 1
    if hi < 0.0:
        return -1
    a, b = e
    k1 = k - 1
    sb = _esign(b, tw, k1)
    if sb == 0:
        return _esign(a, tw, k1)
    sa = _esign(a, tw, k1)
    if sa == 0:
        return sb
    if sa == sb:
        return sa
    r = tw.rads[k1]
    n = _esub(_emul(a, a, tw, k1), _emul(_emul(b, b, tw, k1), r, tw, k1), k1)
    return sa * _esign(n, tw, k1)


# ---------------------------------------------------------------------------
# square roots inside a tower

def _rat_sqrt(x):
    """Exact square root of a nonnegative rational, or None."""
    num = int(x.numerator)
    den = int(x.denominator)
    rn = isqrt(num)
    if rn * rn != num:
        return None
    rd = isqrt(den)
    if rd * rd != den:
        return None
    return RAT(rn, rd)


def _sqrt_in_field(x, tw: Tower, k: int):
    """Exact square root of x within level k of tw, or None.

    Returns the nonnegative root when one exists.
    """
    if k == 0:
        if x < 0:
            return None
        return _rat_sqrt(x)
    k1 = k - 1
    a, b = x
    zero = tw.zeros[k1]
    r = tw.rads[k1]
    if b == zero:
        s = _sqrt_in_field(a, tw, k1)
        if s is not None:
            return (s, zero)
        # a = d^2 * r  <=>  sqrt(a) = d * sqrt(r)
        t = _ediv(a, r, tw, k1)
        d = _sqrt_in_field(t, tw, k1)
        if d is not None:
            if _esign(d, tw, k1) < 0:
                d = _eneg(d, k1)
            return (zero, d)
        return None
    # sqrt(a + b sqrt(r)) = c + d sqrt(r) needs norm a^2 - b^2 r a square below
    n = _esub(_emul(a, a, tw, k1), _emul(_emul(b, b, tw, k1), r, tw, k1), k1)
    sn = _sqrt_in_field(n, tw, k1)
    if sn is None:
        return None
    for num in (_eadd(a, sn, k1), _esub(a, sn, k1)):
        c2 = _escale(num, RAT(1, 2), k1)
        c = _sqrt_in_field(c2, tw, k1)
        if c is None or c == zero:
            continue
        d = _ediv(_escale(b, RAT(1, 2), k1), c, tw, k1)
        cand = (c, d)
        if _emul(cand, cand, tw, k) == x:
            if _esign(cand, tw, k) < 0:
                cand = _eneg(cand, k)
            return cand
    return None


def _squarefree_part(m: int) -> tuple[int, int]:
    """m = s^2 * f with f square-free up to the trial limit; returns (s, f)."""
    s = 1
    f = m
    d = 2
    while d * d <= f and d <= _SQUAREFREE_TRIAL_LIMIT:
        d2 = d * d
        while f % d2 == 0:
            f //= d2
            s *= d
        d += 1 if d == 2 else 2
    root = isqrt(f)
    if root * root == f:
        s *= root
        f = 1
    return s, f


# ---------------------------------------------------------------------------
# tower merging

def _merge(ta: Tower, tb: Tower):
    """Common tower plus per-source sqrt images.

    Returns (tw, maps_a, maps_b) where maps_x[i] = (elem, level) is the
    image of sqrt(x.rads[i]) inside tw.
    """
    if ta is tb:
        ident = tuple(
            ((ta.zeros[i], ta.ones[i]), i + 1) for i in range(ta.depth)
        )
        return ta, ident, ident
    ck = (ta.key, tb.key)
    got = Tower._merge_cache.get(ck)
    if got is not None:
        return got

    target = EMPTY_TOWER
    maps_a: list = [None] * ta.depth
    maps_b: list = [None] * tb.depth

    def adjoin(val, lvl):
        # val: element of target at level lvl (padded to target.depth by caller)
        nonlocal target
        val = target.embed(val, lvl, target.depth)
        s = _sqrt_in_field(val, target, target.depth)
        if s is not None:
            return (s, target.depth)
        target = Tower.make(target.rads + (val,))
        return ((target.zeros[target.depth - 1], target.ones[target.depth - 1]), target.depth)

    # integer radicands first, ascending, then nested radicands in source order
    ints = []
    for src, maps in ((ta, maps_a), (tb, maps_b)):
        for i, ik in enumerate(src.intkeys):
            if ik is not None:
                ints.append((ik, src, maps, i))
    ints.sort(key=lambda t: t[0])
    for ik, src, maps, i in ints:
        if maps[i] is None:
            maps[i] = adjoin(RAT(ik), 0)
            # identical integer radicand in the other source resolves identically
            for osrc, omaps in ((ta, maps_a), (tb, maps_b)):
                for j, ok in enumerate(osrc.intkeys):
                    if ok == ik and omaps[j] is None:
                        omaps[j] = maps[i]

    for src, maps in ((ta, maps_a), (tb, maps_b)):
        for i in range(src.depth):
            if maps[i] is None:
                val = _lift(src.rads[i], i, maps, target)
                maps[i] = adjoin(val, target.depth)

    result = (target, tuple(maps_a), tuple(maps_b))
    Tower._merge_cache[ck] = result
    return result


def _lift(e, k: int, maps, tw: Tower):
    """Re-express a source-level-k element inside tw (at tw.depth)."""
    L = tw.depth
    if k == 0:
        return tw.embed(e, 0, L)
    lo, hi = e
    lv = _lift(lo, k - 1, maps, tw)
    img, il = maps[k - 1]
    s = tw.embed(img, il, L)
    hv = _lift(hi, k - 1, maps, tw)
    return _eadd(lv, _emul(hv, s, tw, L), L)


# ---------------------------------------------------------------------------
# public wrapper

_HASH_BITS = 20


class Constructible:
    """Immutable exact real from iterated square roots of rationals."""

    __slots__ = ("tower", "elem", "_enc", "_ival", "_ivalbits", "_hashv")

    def __init__(self, value=0):
        if isinstance(value, Constructible):
            tower, elem = value.tower, value.elem
        else:
            tower, elem = EMPTY_TOWER, _to_rat(value)
        object.__setattr__(self, "tower", tower)
        object.__setattr__(self, "elem", elem)
        object.__setattr__(self, "_enc", None)
        object.__setattr__(self, "_ival", None)
        object.__setattr__(self, "_ivalbits", 0)
        object.__setattr__(self, "_hashv", None)

    def __setattr__(self, *a):
        raise AttributeError("Constructible is immutable")

    @staticmethod
    def _of_rat(q) -> "Constructible":
        """Fast wrapper for an already-normalized rational leaf."""
        out = Constructible.__new__(Constructible)
        object.__setattr__(out, "tower", EMPTY_TOWER)
        object.__setattr__(out, "elem", q)
        object.__setattr__(out, "_enc", None)
        object.__setattr__(out, "_ival", None)
        object.__setattr__(out, "_ivalbits", 0)
        object.__setattr__(out, "_hashv", None)
        return out

    @staticmethod
    def _wrap(tw: Tower, elem) -> "Constructible":
        k = tw.depth
        while k > 0 and elem[1] == tw.zeros[k - 1]:
            elem = elem[0]
            k -= 1
        out = Constructible.__new__(Constructible)
        object.__setattr__(out, "tower", tw.prefix(k))
        object.__setattr__(out, "elem", elem)
        object.__setattr__(out, "_enc", None)
        object.__setattr__(out, "_ival", None)
        object.__setattr__(out, "_ivalbits", 0)
        object.__setattr__(out, "_hashv", None)
        return out

    @classmethod
    def from_rational(cls, n, d=1) -> "Constructible":
        if d == 0:
            raise InputError("zero denominator")
        return cls(RAT(n, d))

    # -- representation queries ------------------------------------------

    @property
    def rat(self):
        """Underlying rational when the value is rational, else None."""
        return self.elem if self.tower.depth == 0 else None

    def is_rational(self) -> bool:
        return self.tower.depth == 0

    def is_zero(self) -> bool:
        return self.tower.depth == 0 and self.elem == 0

    # -- enclosure / interval --------------------------------------------

    @property
    def enc(self) -> tuple[float, float]:
        e = self._enc
        if e is None:
            e = _enc_elem(self.elem, self.tower, self.tower.depth)
            object.__setattr__(self, "_enc", e)
        return e

    def interval(self, bits: int = 53) -> tuple[Fraction, Fraction]:
        """Isolating interval; refinement narrows monotonically."""
        if bits <= self._ivalbits and self._ival is not None:
            return self._ival
        lo, hi = _ival_elem(self.elem, self.tower, self.tower.depth, bits)
        old = self._ival
        if old is not None:
            lo = max(lo, old[0])
            hi = min(hi, old[1])
        object.__setattr__(self, "_ival", (lo, hi))
        object.__setattr__(self, "_ivalbits", bits)
        return (lo, hi)

    def __float__(self) -> float:
        lo, hi = self.enc
        if math.isinf(lo) or math.isinf(hi):
            lo, hi = self.interval(64)
            return float(lo)
        return (lo + hi) / 2.0

    # -- sign and comparisons --------------------------------------------

    def sign(self) -> int:
        if self.tower.depth == 0:
            e = self.elem
            return 1 if e > 0 else (-1 if e < 0 else 0)
        lo, hi = self.enc
        if lo > 0.0:
            return 1
        if hi < 0.0:
            return -1
        return _esign(self.elem, self.tower, self.tower.depth)

    def _binop(self, other, f):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        ta, tb = self.tower, other.tower
        if ta is tb:
            return Constructible._wrap(ta, f(self.elem, other.elem, ta, ta.depth))
        if tb.depth == 0:
            eb = ta.embed(other.elem, 0, ta.depth)
            return Constructible._wrap(ta, f(self.elem, eb, ta, ta.depth))
        if ta.depth == 0:
            ea = tb.embed(self.elem, 0, tb.depth)
            return Constructible._wrap(tb, f(ea, other.elem, tb, tb.depth))
        tw, ma, mb = _merge(ta, tb)
        ea = _lift(self.elem, ta.depth, ma, tw)
        eb = _lift(other.elem, tb.depth, mb, tw)
        return Constructible._wrap(tw, f(ea, eb, tw, tw.depth))

    def __add__(self, other):
        return self._binop(other, lambda x, y, tw, k: _eadd(x, y, k))

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, lambda x, y, tw, k: _esub(x, y, k))

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other.__sub__(self)

    def __mul__(self, other):
        return self._binop(other, _emul)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, _ediv)

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other.__truediv__(self)

    def __neg__(self):
        return Constructible._wrap(self.tower, _eneg(self.elem, self.tower.depth))

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __bool__(self):
        return not self.is_zero()

    def sqrt(self) -> "Constructible":
        s = self.sign()
        if s < 0:
            raise ExactArithmeticError("square root of a negative value")
        if s == 0:
            return Constructible(0)
        tw, k = self.tower, self.tower.depth
        root = _sqrt_in_field(self.elem, tw, k)
        if root is not None:
            return Constructible._wrap(tw, root)
        if k == 0:
            # sqrt(p/q) = sqrt(p*q)/q; pull out the square part
            x = self.elem
            m = int(x.numerator) * int(x.denominator)
            s_, f = _squarefree_part(m)
            scale = RAT(s_, int(x.denominator))
            ntw, pos = _extend_with_int(EMPTY_TOWER, f)
            elem = ntw.embed((_zero_at(pos), ntw.embed(scale, 0, pos)), pos + 1, ntw.depth)
            return Constructible._wrap(ntw, elem)
        # irrational radicand: clear denominators and square content, append
        den_l = _leaf_lcm(self.elem, k)
        scaled = _escale(self.elem, RAT(den_l * den_l), k)
        g = _leaf_gcd(scaled, k)
        s_, _f = _squarefree_part(g)
        rad = _escale(scaled, RAT(1, s_ * s_), k)
        ntw = Tower.make(tw.rads + (rad,))
        coeff = RAT(s_, den_l)
        elem = (ntw.zeros[k], ntw.embed(coeff, 0, k))
        return Constructible._wrap(ntw, elem)

    # -- equality / ordering / hashing -----------------------------------

    def __eq__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if self.tower is other.tower:
            return self.elem == other.elem
        a, b = self.enc, other.enc
        if a[1] < b[0] or b[1] < a[0]:
            return False
        return (self - other).is_zero()

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __lt__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() < 0

    def __le__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() <= 0

    def __gt__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() > 0

    def __ge__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() >= 0

    def __hash__(self):
        h = self._hashv
        if h is None:
            if self.tower.depth == 0:
                h = hash(self.elem)
            else:
                h = hash((0x5F3E, self._dyadic_floor(_HASH_BITS)))
            object.__setattr__(self, "_hashv", h)
        return h

    def _dyadic_floor(self, bits: int) -> int:
        """floor(self * 2^bits), exact.  Irrational self terminates."""
        scale = 1 << bits
        for prec in (64, 128, 256, 512):
            lo, hi = self.interval(prec)
            fl = (lo.numerator * scale) // lo.denominator
            fh = (hi.numerator * scale) // hi.denominator
            if fl == fh:
                return fl
        lo, hi = self.interval(512)
        fl = (lo.numerator * scale) // lo.denominator
        fh = (hi.numerator * scale) // hi.denominator
        # adversarially close to a dyadic boundary: decide exactly
        while fl < fh:
            mid = Fraction(fl + 1, scale)
            if (self - Constructible(RAT(mid.numerator, mid.denominator))).sign() >= 0:
                fl += 1
            else:
                fh = fl
        return fl

    # -- serialization ----------------------------------------------------

    def to_expr(self):
        """Value as an {op, args} expression tree (JSON-compatible)."""
        return _elem_expr(self.elem, self.tower, self.tower.depth)

    def __repr__(self):
        if self.tower.depth == 0:
            return f"Constructible({self.elem})"
        return f"Constructible(~{float(self):.9g})"


def _leaf_lcm(e, k: int) -> int:
    if k == 0:
        return int(e.denominator)
    a = _leaf_lcm(e[0], k - 1)
    b = _leaf_lcm(e[1], k - 1)
    return a * b // math.gcd(a, b)


def _leaf_gcd(e, k: int) -> int:
    if k == 0:
        return abs(int(e.numerator))
    return math.gcd(_leaf_gcd(e[0], k - 1), _leaf_gcd(e[1], k - 1))


def _extend_with_int(tw: Tower, f: int) -> tuple[Tower, int]:
    """Insert square-free integer radicand f into tw's sorted-integer block.

    Returns (new tower, insertion position).  Assumes f is not a square
    in tw (caller checked via _sqrt_in_field).
    """
    pos = 0
    for i, ik in enumerate(tw.intkeys):
        if ik is not None and ik < f:
            pos = i + 1
        elif ik is None:
            break
    new_rads = []
    for i, r in enumerate(tw.rads[:pos]):
        new_rads.append(r)
    new_rads.append(tw.embed(RAT(f), 0, pos))
    for i in range(pos, tw.depth):
        new_rads.append(_insert_level(tw.rads[i], i, pos))
    return Tower.make(tuple(new_rads)), pos


def _insert_level(e, k: int, pos: int):
    """Re-index element e (level k) after a radicand insertion at pos."""
    if k < pos:
        return e
    if k == pos:
        return (e, _zero_at(k))
    lo, hi = e
    return (_insert_level(lo, k - 1, pos), _insert_level(hi, k - 1, pos))


def _to_rat(value):
    if isinstance(value, (int,)):
        return RAT(value)
    if isinstance(value, Fraction):
        return RAT(value.numerator, value.denominator)
    if type(value) is RAT:
        return value
    if isinstance(value, str):
        return parse_rational(value)
    try:
        return RAT(value.numerator, value.denominator)
    except AttributeError:
        raise InputError(f"cannot interpret {value!r} as an exact rational") from None


def _coerce(x):
    if isinstance(x, Constructible):
        return x
    if isinstance(x, (int, Fraction)) or type(x) is RAT:
        return Constructible(x)
    return None


def _elem_expr(e, tw: Tower, k: int):
    if k == 0:
        return {"op": "rat", "value": f"{e.numerator}/{e.denominator}"}
    lo, hi = e
    k1 = k - 1
    rad = {"op": "sqrt", "args": [_elem_expr(tw.rads[k1], tw, k1)]}
    if hi == tw.zeros[k1]:
        return _elem_expr(lo, tw, k1)
    term = {"op": "mul", "args": [_elem_expr(hi, tw, k1), rad]}
    if lo == tw.zeros[k1]:
        return term
    return {"op": "add", "args": [_elem_expr(lo, tw, k1), term]}


def parse_rational(text: str):
    """Exact rational from 'p/q', integer, or decimal literal text."""
    t = text.strip()
    try:
        f = Fraction(t)
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"bad rational literal {text!r}: {e}") from None
    return RAT(f.numerator, f.denominator)


_EXPR_OPS = {"rat", "add", "sub", "mul", "div", "neg", "sqrt"}


def parse_expr(obj) -> Constructible:
    """Constructible from the {op, args} JSON expression grammar."""
    if not isinstance(obj, dict) or "op" not in obj:
        raise InputError(f"bad expression node: {obj!r}")
    op = obj["op"]
    if op not in _EXPR_OPS:
        raise InputError(f"unknown expression op {op!r}")
    if op == "rat":
        return Constructible(parse_rational(str(obj.get("value", obj.get("args", ["0"])[0]))))
    args = [parse_expr(a) for a in obj.get("args", [])]
    if op == "neg":
        if len(args) != 1:
            raise InputError("neg takes one argument")
        return -args[0]
    if op == "sqrt":
        if len(args) != 1:
            raise InputError("sqrt takes one argument")
        return args[0].sqrt()
    if len(args) != 2:
        raise InputError(f"{op} takes two arguments")
    a, b = args
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    return a / b


def sqrt(x) -> Constructible:
    x = _coerce(x)
    if x is None:
        raise InputError("sqrt needs an exact value")
    return x.sqrt()


def sign(x) -> int:
    x = _coerce(x)
    if x is None:
        raise InputError("sign needs an exact value")
    return x.sign()


ZERO = Constructible(0)
ONE = Constructible(1)
