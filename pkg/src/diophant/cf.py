"""Continued fractions: quotient rules, convergents and enclosures of theta.

A :class:`CFNumber` lazily produces partial quotients a_0, a_1, ... from a
quotient rule and caches the convergents p_k/q_k.  Reals are never formed;
theta is only ever known through rational brackets built from convergents.
"""

import json
import math
import os
from dataclasses import dataclass

from gmpy2 import mpq, mpz

from .errors import BudgetExceeded, DomainError
from .exact import RatInterval, _ceil_scaled, _dyadic, _floor_scaled, floor_pow, to_rat

DEFAULT_MAX_DIGITS = 10**5
LOG10_2 = math.log10(2)


def default_max_digits():
    env = os.environ.get("DIOPHANT_MAX_DIGITS")
    return int(env) if env else DEFAULT_MAX_DIGITS


# -- quotient rules ---------------------------------------------------------


@dataclass(frozen=True)
class Explicit:
    """Finite list of quotients; the number is the rational [a0; a1, ..., an]."""

    quotients: tuple

    def __post_init__(self):
        if not self.quotients:
            raise ValueError("explicit rule needs at least one quotient")
        if any(int(a) < 1 for a in self.quotients):
            raise ValueError("partial quotients must be positive")
        object.__setattr__(self, "quotients", tuple(int(a) for a in self.quotients))

    def spec(self):
        return "quotients:" + ",".join(str(a) for a in self.quotients)


@dataclass(frozen=True)
class Periodic:
    prefix: tuple
    period: tuple

    def __post_init__(self):
        if not self.period:
            raise ValueError("period must be non-empty")
        if any(int(a) < 1 for a in self.prefix + self.period):
            raise ValueError("partial quotients must be positive")
        object.__setattr__(self, "prefix", tuple(int(a) for a in self.prefix))
        object.__setattr__(self, "period", tuple(int(a) for a in self.period))

    def spec(self):
        pre = ",".join(str(a) for a in self.prefix)
        per = ",".join(str(a) for a in self.period)
        return f"periodic:{pre};{per}"

    def quotient(self, k):
        if k < len(self.prefix):
            return mpz(self.prefix[k])
        return mpz(self.period[(k - len(self.prefix)) % len(self.period)])


@dataclass(frozen=True)
class PowerGrowth:
    """a_0 = 1 and a_{k+1} = [q_k ** gamma] + 1."""

    gamma: mpq

    def __post_init__(self):
        g = to_rat(self.gamma)
        if g <= 0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "gamma", g)

    def spec(self):
        return f"power:{self.gamma.numerator}/{self.gamma.denominator}"


@dataclass(frozen=True)
class SuperGrowth:
    """a_0 = 1 and a_{k+1} = [q_k ** k] + 1 (so a_1 = 2)."""

    def spec(self):
        return "super"


@dataclass(frozen=True)
class Rational:
    num: int
    den: int

    def __post_init__(self):
        if self.den < 1:
            raise ValueError("denominator must be >= 1")
        if self.num < self.den:
            raise ValueError("rational rule needs num/den >= 1 (positive quotients only)")

    def spec(self):
        return f"rational:{self.num}/{self.den}"


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def parse_rule(text):
    """Parse a rule string.

    Forms: ``power:U/V``, ``super``, ``quotients:a0,a1,...`` (a trailing ``...``
    repeats the last quotient forever), ``periodic:prefix;period`` and
    ``rational:P/Q``.
    """
    text = text.strip()
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "super":
            return SuperGrowth()
        if kind == "power":
            return PowerGrowth(to_rat(body))
        if kind == "rational":
            r = to_rat(body)
            return Rational(int(r.numerator), int(r.denominator))
        if kind == "quotients":
            body = body.replace("…", "...")
            if body.rstrip().endswith("..."):
                qs = _int_list(body.rstrip()[:-3])
                if not qs:
                    raise ValueError("no quotients before '...'")
                return Periodic(tuple(qs[:-1]), (qs[-1],))
            return Explicit(tuple(_int_list(body)))
        if kind == "periodic":
            pre, _, per = body.partition(";")
            return Periodic(tuple(_int_list(pre)), tuple(_int_list(per)))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"invalid rule {text!r}: {exc}") from exc
    raise DomainError(f"unknown rule kind in {text!r}")


# -- convergents --------------------------------------------------------------


@dataclass(frozen=True)
class Convergent:
    k: int
    a: mpz
    p: mpz
    q: mpz


class CFNumber:
    """Lazily expanded continued fraction with a convergent cache.

    Extension is single-writer; reading an already extended prefix is safe.
    """

    def __init__(self, rule, max_digits=None):
        if isinstance(rule, str):
            rule = parse_rule(rule)
        self.rule = rule
        self.max_digits = default_max_digits() if max_digits is None else int(max_digits)
        self.a = []
        self.p = []
        self.q = []
        self.terminated = False
        self._euclid = None
        if isinstance(rule, Rational):
            self._euclid = (mpz(rule.num), mpz(rule.den))
        self._quadratic = None

    def __repr__(self):
        return f"CFNumber({self.rule.spec()!r}, computed={len(self.a)})"

    @property
    def is_rational(self):
        return isinstance(self.rule, (Explicit, Rational))

    @property
    def last_index(self):
        """Index of the final convergent for a rational number, else None."""
        if not self.is_rational:
            return None
        while not self.terminated:
            self.next_quotient()
        return len(self.a) - 1

    def _produce(self):
        k = len(self.a)  # index of the quotient being produced
        rule = self.rule
        if isinstance(rule, Explicit):
            if k >= len(rule.quotients):
                return None
            return mpz(rule.quotients[k])
        if isinstance(rule, Periodic):
            return rule.quotient(k)
        if isinstance(rule, Rational):
            num, den = self._euclid
            if den == 0:
                return None
            a, r = divmod(num, den)
            self._euclid = (den, r)
            return a
        if k == 0:
            return mpz(1)
        if isinstance(rule, PowerGrowth):
            return floor_pow(self.q[k - 1], rule.gamma) + 1
        if isinstance(rule, SuperGrowth):
            # q_0 ** 0 = 1, so a_1 = 2
            e = k - 1
            return (floor_pow(self.q[k - 1], e) if e else mpz(1)) + 1
        raise TypeError(f"unsupported rule {rule!r}")

    def next_quotient(self):
        """Append the next partial quotient; returns it, or None once a rational is exhausted."""
        if self.terminated:
            return None
        a = self._produce()
        if a is None:
            self.terminated = True
            return None
        k = len(self.a)
        if k == 0:
            p, q = a, mpz(1)
        else:
            p_prev2 = self.p[k - 2] if k >= 2 else mpz(1)
            q_prev2 = self.q[k - 2] if k >= 2 else mpz(0)
            p = a * self.p[k - 1] + p_prev2
            q = a * self.q[k - 1] + q_prev2
        digits = int(q.bit_length() * LOG10_2) + 1
        if digits > self.max_digits:
            raise BudgetExceeded("digits", digits, self.max_digits)
        self.a.append(a)
        self.p.append(p)
        self.q.append(q)
        if isinstance(self.rule, Explicit) and k + 1 == len(self.rule.quotients):
            self.terminated = True
        if isinstance(self.rule, Rational) and self._euclid[1] == 0:
            self.terminated = True
        return a

    def ensure(self, k):
        """Compute convergents up to index k; False if the expansion ends earlier."""
        while len(self.a) <= k:
            if self.next_quotient() is None:
                return False
        return True

    def convergent(self, k):
        if not self.ensure(k):
            raise IndexError(f"convergent {k} does not exist (expansion ends at {len(self.a) - 1})")
        return Convergent(k, self.a[k], self.p[k], self.q[k])

    def extend_convergents(self, depth):
        """Convergents 0..depth (fewer if a rational expansion ends first)."""
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.ensure(depth)
        n = min(depth + 1, len(self.a))
        return [Convergent(k, self.a[k], self.p[k], self.q[k]) for k in range(n)]

    def is_exact_at(self, j):
        """True when the convergent j equals theta (final convergent of a rational)."""
        return self.is_rational and not self.ensure(j + 1) and j == len(self.a) - 1

    # -- structural facts used for certification --------------------------

    def bounded_quotient_max(self):
        """Certified max of a_1, a_2, ... when the rule guarantees bounded quotients."""
        if isinstance(self.rule, Periodic):
            return max(self.rule.prefix[1:] + self.rule.period)
        return None

    def quadratic(self):
        """Integer coefficients (A, B, C), A > 0, with A*t^2 + B*t + C = 0 at t = theta.

        Only available for periodic rules (quadratic irrationals); None otherwise.
        """
        if not isinstance(self.rule, Periodic):
            return None
        if self._quadratic is None:
            self._quadratic = _periodic_quadratic(self.rule.prefix, self.rule.period)
        return self._quadratic

    def theta_gt_one(self):
        a0 = self.convergent(0).a
        return a0 >= 2 or not self.is_exact_at(0)

    def theta_in_one_two(self):
        """Decide 1 < theta < 2 exactly from the quotient structure."""
        if self.convergent(0).a != 1 or self.is_exact_at(0):
            return False
        # theta = 1 + 1/alpha_1 < 2 unless the expansion is exactly [1; 1]
        return not (self.convergent(1).a == 1 and self.is_exact_at(1))

    # -- serialization -------------------------------------------------------

    def to_json(self):
        return {
            "schema": 1,
            "rule": self.rule.spec(),
            "quotients": [str(a) for a in self.a],
            "p": [str(p) for p in self.p],
            "q": [str(q) for q in self.q],
            "terminated": self.terminated,
        }

    @classmethod
    def from_json(cls, data, max_digits=None):
        cf = cls(parse_rule(data["rule"]), max_digits=max_digits)
        quotients = [mpz(s) for s in data["quotients"]]
        ps = [mpz(s) for s in data["p"]]
        qs = [mpz(s) for s in data["q"]]
        if not (len(quotients) == len(ps) == len(qs)):
            raise ValueError("cache lists have different lengths")
        if isinstance(cf.rule, (PowerGrowth, SuperGrowth)):
            # the next quotient only depends on the last q, so trust the cache
            # after checking the recurrence
            for k, a in enumerate(quotients):
                pp = ps[k - 2] if k >= 2 else mpz(1)
                qq = qs[k - 2] if k >= 2 else mpz(0)
                if k == 0:
                    ok = ps[0] == a and qs[0] == 1
                else:
                    ok = ps[k] == a * ps[k - 1] + pp and qs[k] == a * qs[k - 1] + qq
                if not ok:
                    raise ValueError(f"cache violates the convergent recurrence at k={k}")
            cf.a, cf.p, cf.q = quotients, ps, qs
            cf.terminated = False
            return cf
        # cheap rules: replay and compare
        cf.ensure(len(quotients) - 1)
        if cf.a[: len(quotients)] != quotients or cf.q[: len(qs)] != qs:
            raise ValueError("cache does not match its rule")
        return cf

    def save(self, path):
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            json.dump(self.to_json(), fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path, max_digits=None):
        with open(path) as fh:
            return cls.from_json(json.load(fh), max_digits=max_digits)


def _periodic_quadratic(prefix, period):
    # tail beta = [b0; b1, ..., b_{m-1}, beta]  =>  beta = (P beta + P') / (Q beta + Q')
    P, Pp, Q, Qp = mpz(1), mpz(0), mpz(0), mpz(1)  # identity matrix [[P, Pp], [Q, Qp]]
    for b in period:
        P, Pp, Q, Qp = b * P + Pp, P, b * Q + Qp, Q
    # Q beta^2 + (Qp - P) beta - Pp = 0
    c2, c1, c0 = Q, Qp - P, -Pp
    # theta = (R beta + Rp) / (S beta + Sp)
    R, Rp, S, Sp = mpz(1), mpz(0), mpz(0), mpz(1)
    for a in prefix:
        R, Rp, S, Sp = a * R + Rp, R, a * S + Sp, S
    # beta = (Sp theta - Rp) / (R - S theta); substitute and clear denominators
    # c2 (Sp t - Rp)^2 + c1 (Sp t - Rp)(R - S t) + c0 (R - S t)^2 = 0
    A = c2 * Sp * Sp - c1 * Sp * S + c0 * S * S
    B = -2 * c2 * Sp * Rp + c1 * (Sp * R + Rp * S) - 2 * c0 * R * S
    C = c2 * Rp * Rp - c1 * Rp * R + c0 * R * R
    g = math.gcd(math.gcd(int(A), int(B)), int(C))
    A, B, C = A // g, B // g, C // g
    if A < 0:
        A, B, C = -A, -B, -C
    return (A, B, C)


# -- enclosures of theta ------------------------------------------------------


def enclose_theta(cf, k, refine=2):
    """Theta bracketed by the convergents k+refine and k+refine+1.

    Width is 1/(q_j q_{j+1}) with j = k+refine; for a rational number whose
    expansion ends earlier the interval collapses to theta itself.
    """
    j = k + refine
    if not cf.ensure(j + 1):
        last = len(cf.a) - 1
        t = mpq(cf.p[last], cf.q[last])
        return RatInterval(t, t)
    return RatInterval.hull(mpq(cf.p[j], cf.q[j]), mpq(cf.p[j + 1], cf.q[j + 1]))


def theta_bracket(cf, j):
    """Bracket of theta known from a_0..a_j alone.

    Theta lies between p_j/q_j (tail -> infinity) and the mediant
    (p_j + p_{j-1})/(q_j + q_{j-1}) (tail -> 1).  Returns a pair of exact
    fractions (P_lo, Q_lo), (P_hi, Q_hi) as integer tuples with lo <= hi.
    """
    if not cf.ensure(j):
        raise IndexError(f"convergent {j} does not exist")
    p, q = cf.p[j], cf.q[j]
    if cf.is_exact_at(j):
        return (p, q), (p, q)
    pm = cf.p[j - 1] if j >= 1 else mpz(1)
    qm = cf.q[j - 1] if j >= 1 else mpz(0)
    a, b = (p, q), (p + pm, q + qm)
    # even j: convergent below theta
    return (a, b) if j % 2 == 0 else (b, a)


def _affine_at(c1, c0, P, Q):
    # numerator of c1 * (P/Q) + c0 over Q
    return c1 * P + c0 * Q


def enclose_affine(cf, c1, c0, bits=96, start=None, max_level=None):
    """Enclose c1*theta + c0 (integers c1, c0) to relative width ~2**-bits.

    Walks the bracket level j upward from ``start`` until the enclosure is
    tight enough or exact; endpoints are rounded outward to dyadics so values
    stay small even when the convergents are huge.  Stops early (returning the
    best enclosure so far) at ``max_level``.
    """
    c1, c0 = mpz(c1), mpz(c0)
    if c1 == 0:
        return RatInterval.point(c0)
    if start is None:
        start = 0
        while ((max_level is None or start < max_level) and cf.ensure(start)
               and cf.q[start] <= abs(c1) and not cf.is_exact_at(start)):
            start += 1
        start = min(start, len(cf.a) - 1)
    if max_level is not None:
        start = min(start, max_level)
    j = start
    while True:
        if not cf.ensure(j):
            j = len(cf.a) - 1
        (P1, Q1), (P2, Q2) = theta_bracket(cf, j)
        N1, N2 = _affine_at(c1, c0, P1, Q1), _affine_at(c1, c0, P2, Q2)
        if (P1, Q1) == (P2, Q2):
            return RatInterval.point(mpq(N1, Q1))
        if N1 != 0 and N2 != 0 and (N1 > 0) == (N2 > 0):
            mag = min(N1.bit_length() - Q1.bit_length(), N2.bit_length() - Q2.bit_length())
            s = bits + 8 - mag
            v1 = (_floor_scaled(N1, Q1, s), _ceil_scaled(N1, Q1, s))
            v2 = (_floor_scaled(N2, Q2, s), _ceil_scaled(N2, Q2, s))
            lo, hi = min(v1[0], v2[0]), max(v1[1], v2[1])
            small = min(abs(lo), abs(hi))
            if (hi - lo) << bits <= small or (max_level is not None and j >= max_level):
                return RatInterval(_dyadic(lo, s), _dyadic(hi, s))
        elif max_level is not None and j >= max_level:
            return RatInterval.hull(mpq(N1, Q1), mpq(N2, Q2))
        j += 1


def approx_defect(cf, k, refine=2):
    """Exact enclosure of D_k = q_k |q_k theta - p_k| from enclose_theta(k, refine)."""
    c = cf.convergent(k)
    th = enclose_theta(cf, k, refine)
    z = th * c.q - c.p
    return abs(z) * c.q


def defect_enclosure(cf, k, bits=96, max_level=None):
    """Adaptive outward-rounded enclosure of D_k with relative width ~2**-bits.

    ``max_level`` caps the convergent index consulted (useful when the next
    denominator would be too large to compute).
    """
    c = cf.convergent(k)
    if cf.is_exact_at(k):
        return RatInterval.point(0)
    start = k + 1 if max_level is None else min(k + 1, max_level)
    z = enclose_affine(cf, c.q, -c.p, bits=bits, start=start, max_level=max_level)
    return abs(z) * c.q
