"""Exact integers, rationals and rational intervals.

Integers are ``gmpy2.mpz`` and rationals ``gmpy2.mpq`` (always in lowest terms
with a positive denominator).  A :class:`RatInterval` is a closed interval with
rational endpoints; every operation on intervals returns an enclosure of all
pointwise results.  Transcendental functions (``log_enclose``,
``sqrt_enclose``) return outward-rounded dyadic enclosures.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2
from gmpy2 import mpq, mpz

__all__ = [
    "RatInterval",
    "to_rat",
    "floor_rat",
    "ceil_rat",
    "interval_add",
    "interval_neg",
    "interval_mul",
    "interval_abs",
    "imax",
    "imin",
    "round_out",
    "floor_pow",
    "pow_compare",
    "log_enclose",
    "sqrt_enclose",
    "fmt_dec",
    "rat_str",
]


def to_rat(x):
    """Coerce ``x`` (int, mpz, Fraction, mpq, or a "p/q" or decimal string) to ``mpq``."""
    if isinstance(x, str):
        # Fraction parses "p/q" and exact decimals such as "0.01"
        x = Fraction(x.strip())
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass an exact rational")
    return mpq(x)


def floor_rat(x):
    x = mpq(x)
    return x.numerator // x.denominator


def ceil_rat(x):
    x = mpq(x)
    return -((-x.numerator) // x.denominator)


def _floor_scaled(n, d, s):
    # floor(n * 2**s / d)
    if s >= 0:
        return (mpz(n) << s) // d
    return mpz(n) // (mpz(d) << -s)


def _ceil_scaled(n, d, s):
    return -_floor_scaled(-mpz(n), d, s)


def _dyadic(m, s):
    return mpq(m, mpz(1) << s) if s >= 0 else mpq(mpz(m) << -s)


@dataclass(frozen=True)
class RatInterval:
    lo: mpq
    hi: mpq

    def __post_init__(self):
        lo, hi = to_rat(self.lo), to_rat(self.hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x):
        x = to_rat(x)
        return cls(x, x)

    @classmethod
    def hull(cls, *xs):
        xs = [to_rat(x) for x in xs]
        return cls(min(xs), max(xs))

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return (self.lo + self.hi) / 2

    def is_point(self):
        return self.lo == self.hi

    def __contains__(self, x):
        if isinstance(x, RatInterval):
            return self.lo <= x.lo and x.hi <= self.hi
        x = to_rat(x)
        return self.lo <= x <= self.hi

    def overlaps(self, other):
        return not (self.hi < other.lo or other.hi < self.lo)

    def certainly_lt(self, other):
        other = _as_interval(other)
        return self.hi < other.lo

    def certainly_gt(self, other):
        other = _as_interval(other)
        return self.lo > other.hi

    def certainly_positive(self):
        return self.lo > 0

    def __add__(self, other):
        return interval_add(self, _as_interval(other))

    __radd__ = __add__

    def __neg__(self):
        return interval_neg(self)

    def __sub__(self, other):
        return interval_add(self, interval_neg(_as_interval(other)))

    def __rsub__(self, other):
        return interval_add(_as_interval(other), interval_neg(self))

    def __mul__(self, other):
        return interval_mul(self, _as_interval(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_interval(other)
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("divisor interval contains zero")
        return interval_mul(self, RatInterval.hull(1 / other.lo, 1 / other.hi))

    def __abs__(self):
        return interval_abs(self)

    def __repr__(self):
        return f"RatInterval[{fmt_dec(self.lo, 12, 'down')}, {fmt_dec(self.hi, 12, 'up')}]"

    def to_json(self, digits=20):
        return {
            "dec": [fmt_dec(self.lo, digits, "down"), fmt_dec(self.hi, digits, "up")],
            "exact": [rat_str(self.lo), rat_str(self.hi)],
        }


def _as_interval(x):
    return x if isinstance(x, RatInterval) else RatInterval.point(x)


def interval_add(a, b):
    return RatInterval(a.lo + b.lo, a.hi + b.hi)


def interval_neg(a):
    return RatInterval(-a.hi, -a.lo)


def interval_mul(a, b):
    if a.lo >= 0 and b.lo >= 0:
        return RatInterval(a.lo * b.lo, a.hi * b.hi)
    ps = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return RatInterval(min(ps), max(ps))


def interval_abs(a):
    if a.lo >= 0:
        return a
    if a.hi <= 0:
        return RatInterval(-a.hi, -a.lo)
    return RatInterval(0, max(-a.lo, a.hi))


def imax(a, b):
    return RatInterval(max(a.lo, b.lo), max(a.hi, b.hi))


def imin(a, b):
    return RatInterval(min(a.lo, b.lo), min(a.hi, b.hi))


def _round_endpoint(x, bits, up):
    if x == 0:
        return x
    n, d = x.numerator, x.denominator
    s = bits - (n.bit_length() - d.bit_length())
    if up:
        return _dyadic(_ceil_scaled(n, d, s), s)
    return _dyadic(_floor_scaled(n, d, s), s)


def round_out(iv, bits):
    """Widen ``iv`` to dyadic endpoints carrying about ``bits`` significant bits."""
    return RatInterval(_round_endpoint(iv.lo, bits, False), _round_endpoint(iv.hi, bits, True))


def floor_pow(q, gamma):
    """Return the integer part of ``q ** gamma`` for integer q >= 1, rational gamma > 0.

    >>> floor_pow(7, "1/2")
    mpz(2)
    """
    q = mpz(q)
    g = to_rat(gamma)
    if q < 1:
        raise ValueError("floor_pow needs q >= 1")
    if g <= 0:
        raise ValueError("floor_pow needs a positive exponent")
    u, v = g.numerator, g.denominator
    x = q ** int(u)
    if v == 1:
        return x
    return gmpy2.iroot(x, int(v))[0]


def _side_of_one(x, e):
    if e == 0 or x == 1:
        return 0
    return 1 if x > 1 else -1


def pow_compare(a, e1, b, e2):
    """Compare ``a**e1`` with ``b**e2`` exactly; returns -1, 0 or 1."""
    a, b = to_rat(a), to_rat(b)
    e1, e2 = int(e1), int(e2)
    if a <= 0 or b <= 0:
        raise ValueError("pow_compare needs positive bases")
    if e1 < 0 or e2 < 0:
        raise ValueError("pow_compare needs non-negative exponents")
    sa, sb = _side_of_one(a, e1), _side_of_one(b, e2)
    if sa != sb:
        return 1 if sa > sb else -1
    if sa == 0:
        return 0
    if a == b:
        return sa * ((e1 > e2) - (e1 < e2))
    # log2(n/d) lies strictly between bl(n)-bl(d)-1 and bl(n)-bl(d)+1
    da = a.numerator.bit_length() - a.denominator.bit_length()
    db = b.numerator.bit_length() - b.denominator.bit_length()
    if e1 * (da + 1) <= e2 * (db - 1):
        return -1
    if e1 * (da - 1) >= e2 * (db + 1):
        return 1
    lhs = a.numerator ** e1 * b.denominator ** e2
    rhs = b.numerator ** e2 * a.denominator ** e1
    return (lhs > rhs) - (lhs < rhs)


def _atanh_fixed(a, b, F, upper):
    """Bound 2**F * atanh(a/b) for 0 <= a/b <= 1/3 from below (or above)."""
    if a == 0:
        return mpz(0)
    a2, b2 = a * a, b * b
    if not upper:
        t = (mpz(a) << F) // b
        acc = t
        i = 1
        while True:
            t = t * a2 // b2
            if t == 0:
                return acc
            acc += t // (2 * i + 1)
            i += 1
    t = -((-(mpz(a) << F)) // b)
    acc = t
    i = 1
    while True:
        t = -((-t * a2) // b2)
        if t <= 8:
            # remaining terms shrink by at least 9x each
            return acc + t + 1
        acc += -((-t) // (2 * i + 1))
        i += 1


@lru_cache(maxsize=64)
def _ln2_fixed(F, upper):
    return 2 * _atanh_fixed(mpz(1), mpz(3), F, upper)


def _ln_fixed(x, P, upper):
    """Return (L, F) with L / 2**F a lower (upper) bound of ln(x), x > 0 rational.

    x is first snapped to a dyadic grid of relative spacing 2**-P (floor for the
    lower bound, ceil for the upper bound); the result is a monotone function
    of x.
    """
    n, d = x.numerator, x.denominator
    e = n.bit_length() - d.bit_length()
    if (n << max(-e, 0)) < (d << max(e, 0)):
        e -= 1
    if upper:
        M = _ceil_scaled(n, d, P - e)
        if M == (mpz(1) << (P + 1)):
            M >>= 1
            e += 1
    else:
        M = _floor_scaled(n, d, P - e)
    F = P + abs(e).bit_length() + 2 * P.bit_length() + 16
    one = mpz(1) << P
    A = _atanh_fixed(M - one, M + one, F, upper)
    if e >= 0:
        L2 = _ln2_fixed(F, upper)
    else:
        L2 = _ln2_fixed(F, not upper)
    return 2 * A + e * L2, F


def log_enclose(x, bits=64):
    """Enclosure of ln(y) for all y in the positive interval ``x``.

    Width is about 2**-bits for point inputs (plus the spread of ``x`` itself).
    """
    if not isinstance(x, RatInterval):
        x = RatInterval.point(x)
    if x.lo <= 0:
        raise ValueError("log_enclose needs an interval of positive numbers")
    P = int(bits) + 2
    L, F = _ln_fixed(x.lo, P, False)
    H, G = _ln_fixed(x.hi, P, True)
    return RatInterval(mpq(L, mpz(1) << F), mpq(H, mpz(1) << G))


def sqrt_enclose(x, bits=64):
    """Enclosure of sqrt(y) for all y in the non-negative interval ``x``."""
    if x.lo < 0:
        raise ValueError("sqrt_enclose needs a non-negative interval")

    def bound(v, up):
        if v == 0:
            return mpq(0)
        n, d = v.numerator, v.denominator
        s = bits + 2 - (n.bit_length() - d.bit_length()) // 2
        if up:
            y = _ceil_scaled(n, d, 2 * s)
            r = gmpy2.isqrt(y)
            if r * r < y:
                r += 1
        else:
            r = gmpy2.isqrt(_floor_scaled(n, d, 2 * s))
        return _dyadic(r, s)

    return RatInterval(bound(x.lo, False), bound(x.hi, True))


def rat_str(x):
    x = to_rat(x)
    return f"{x.numerator}/{x.denominator}"


def fmt_dec(x, digits=20, direction="nearest"):
    """Scientific-notation decimal string for a rational.

    ``direction`` is "down" (toward -inf), "up" (toward +inf) or "nearest";
    directed rounding keeps printed interval endpoints sound.
    """
    x = to_rat(x)
    if x == 0:
        return "0"
    neg = x < 0
    ax = -x if neg else x
    n, d = ax.numerator, ax.denominator
    e = int((n.bit_length() - d.bit_length()) * 0.30102999566398120)
    # settle e so that 10**e <= ax < 10**(e+1)
    while True:
        lo_ok = n * (mpz(10) ** max(-e, 0)) >= d * (mpz(10) ** max(e, 0))
        if not lo_ok:
            e -= 1
            continue
        hi_ok = n * (mpz(10) ** max(-e - 1, 0)) < d * (mpz(10) ** max(e + 1, 0))
        if not hi_ok:
            e += 1
            continue
        break
    shift = digits - 1 - e
    num = n * mpz(10) ** max(shift, 0)
    den = d * mpz(10) ** max(-shift, 0)
    away = (direction == "up" and not neg) or (direction == "down" and neg)
    if direction == "nearest":
        m = (2 * num + den) // (2 * den)
    elif away:
        m = -((-num) // den)
    else:
        m = num // den
    if m >= mpz(10) ** digits:
        m //= 10
        e += 1
    s = str(m)
    frac = s[1:].rstrip("0")
    body = s[0] + ("." + frac if frac else "")
    return f"{'-' if neg else ''}{body}e{e:+d}"
