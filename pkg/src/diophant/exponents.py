"""Certified estimates of Diophantine exponents and verifiers for the inequalities
behind the construction.

Every estimate is a trace of log-ratio enclosures; finite-depth limits are
replaced by extrema over a trailing window of the trace.  Verifiers return a
:class:`VerificationReport` whose status is "certified" only when every
comparison it relies on was decided by disjoint enclosures.
"""

import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Optional

from gmpy2 import mpq, mpz

from .cf import CFNumber, PowerGrowth, SuperGrowth, defect_enclosure
from .errors import BudgetExceeded, DomainError, FormulaInapplicable
from .exact import (
    RatInterval,
    fmt_dec,
    log_enclose,
    pow_compare,
    rat_str,
    round_out,
    sqrt_enclose,
    to_rat,
)
from .lattice import (
    MinimaSequence,
    _sup_le,
    brute_minima,
    check_empty_parallelogram,
    hyperbolic_from_relative,
    relative_minima_convergent,
    v_representative,
    v_point,
)

LAMBDA_WIDTH = mpq(1, 10**4)
LOG_BITS = 64


def _num_json(x, digits=20):
    return {"dec": fmt_dec(x, digits), "exact": rat_str(x)}


@dataclass
class ExponentEstimate:
    name: str
    trace: list = field(default_factory=list)  # [(k, RatInterval)]
    tail: Optional[RatInterval] = None
    target: Optional[mpq] = None
    infinite: bool = False
    provenance: str = "trace"
    window: Optional[int] = None
    notes: dict = field(default_factory=dict)

    def to_json(self, digits=20):
        return {
            "name": self.name,
            "infinite": self.infinite,
            "provenance": self.provenance,
            "window": self.window,
            "target": None if self.target is None else _num_json(self.target, digits),
            "tail": None if self.tail is None else self.tail.to_json(digits),
            "trace": [{"k": k, **iv.to_json(digits)} for k, iv in self.trace],
            "notes": self.notes,
        }


@dataclass
class VerificationReport:
    claim: str
    rows: list = field(default_factory=list)  # dicts with "k" and "holds"
    first_index: Optional[int] = None
    verdict: bool = False
    status: str = "false"  # certified | false | inconclusive
    notes: dict = field(default_factory=dict)
    estimate: Optional[ExponentEstimate] = field(default=None, repr=False)

    def to_json(self, digits=20):
        rows = []
        for r in self.rows:
            out = {}
            for key, val in r.items():
                if isinstance(val, RatInterval):
                    out[key] = val.to_json(digits)
                elif isinstance(val, (type(mpq(0)), type(mpz(0)))):
                    out[key] = str(val)
                else:
                    out[key] = val
            rows.append(out)
        return {
            "claim": self.claim,
            "verdict": self.verdict,
            "status": self.status,
            "first_index": self.first_index,
            "rows": rows,
            "notes": self.notes,
        }


def _status_all(rows):
    """Status when a claim must hold on every row."""
    if rows and all(r["holds"] is True for r in rows):
        return True, "certified"
    if any(r["holds"] is False for r in rows):
        return False, "false"
    return False, "inconclusive"


def default_window(n):
    return max(1, math.ceil(n / 2))


def _window(n, window):
    if window is None:
        return default_window(n)
    return max(1, min(int(window), n))


def _tail_max(ivs):
    return RatInterval(max(i.lo for i in ivs), max(i.hi for i in ivs))


def _tail_min(ivs):
    return RatInterval(min(i.lo for i in ivs), min(i.hi for i in ivs))


def _log_ratio(num, den):
    """Enclosure of ln(num)/ln(den), tightened until the width is small."""
    bits = LOG_BITS
    while True:
        a, b = log_enclose(num, bits), log_enclose(den, bits)
        if b.lo <= 0:
            raise DomainError("log-ratio denominator must exceed 1")
        r = a / b
        if r.width <= LAMBDA_WIDTH or bits >= 1024:
            return round_out(r, 96)
        bits *= 2


def _decide_defect(cf, k, depth, test):
    """Evaluate ``test`` on enclosures of D_k, doubling precision while undecided."""
    bits = 96
    cap = 4 * int(cf.q[min(depth, len(cf.q) - 1)].bit_length()) + 256
    while True:
        D = defect_enclosure(cf, k, bits=bits, max_level=depth)
        holds = test(D)
        if holds is not None or bits >= cap:
            return holds, D
        bits *= 2


def _as_iv(x):
    return x if isinstance(x, RatInterval) else RatInterval.point(x)


def _target_regular(cf):
    if isinstance(cf.rule, PowerGrowth):
        return 1 + cf.rule.gamma
    if cf.bounded_quotient_max() is not None:
        return mpq(1)
    return None


def _target_lattice(cf):
    if isinstance(cf.rule, PowerGrowth):
        g = cf.rule.gamma
        return g / (2 + 2 * g)
    if isinstance(cf.rule, SuperGrowth):
        return mpq(1, 2)
    if cf.bounded_quotient_max() is not None:
        return mpq(0)
    return None


# -- number exponents -----------------------------------------------------------


def omega_regular(cf, depth, window=None):
    """Trace 1 + ln a_{k+1} / ln q_k; the tail is the max over the trailing window."""
    if depth < 2:
        raise ValueError("depth must be >= 2")
    if cf.is_rational:
        return ExponentEstimate("omega", infinite=True, provenance="rational")
    cf.ensure(depth)
    trace = []
    for k in range(1, depth):
        q, a = cf.q[k], cf.a[k + 1]
        if q < 2:
            continue
        trace.append((k, 1 + _log_ratio(_as_iv(a), _as_iv(q))))
    if not trace:
        raise ValueError("no usable indices; increase depth")
    w = _window(len(trace), window)
    return ExponentEstimate("omega", trace, _tail_max([iv for _, iv in trace[-w:]]),
                            _target_regular(cf), window=w)


def omega_hat_uniform(cf, depth, max_preimages=10**6):
    """The uniform exponent equals 1 for irrationals, certified by empty parallelograms."""
    if depth < 2:
        raise ValueError("depth must be >= 2")
    if cf.is_rational:
        return ExponentEstimate("omega_hat", infinite=True, provenance="rational")
    certified, failed = [], []
    for k in range(0, depth):
        try:
            ok = check_empty_parallelogram(cf, k, max_preimages=max_preimages)
        except BudgetExceeded:
            break
        (certified if ok else failed).append(k)
    if not certified and not failed:
        raise BudgetExceeded("preimages", 2 * int(cf.q[1]) + 1, max_preimages)
    est = ExponentEstimate("omega_hat", [], RatInterval.point(1), mpq(1),
                           provenance="empty-parallelogram")
    est.notes = {"certified_k": certified, "failed_k": failed}
    if failed:
        est.tail = None
    return est


# -- lattice exponent -------------------------------------------------------------


def pi2_floor(cf):
    """Certified positive lower bound of the squared hyperbolic norm, or None.

    For bounded quotients (max M over a_1, a_2, ...) every nonzero point has
    pi2 >= min(theta, 1/(M+2)).
    """
    M = cf.bounded_quotient_max()
    if M is None:
        return None
    theta_lo = mpq(cf.p[0], cf.q[0]) if cf.ensure(0) else None
    return min(theta_lo, mpq(1, M + 2))


def _direct_zero(cf, name):
    est = ExponentEstimate(name, [], RatInterval.point(0), mpq(0), provenance="direct-profile")
    est.notes = {"pi2_floor": rat_str(pi2_floor(cf)),
                 "reason": "squared hyperbolic norm bounded below on the whole lattice"}
    return est


def lattice_trace(seq):
    """[(k, lambda_k)] with lambda_k = -ln pi2(z_k) / (2 ln sup(z_{k+1}))."""
    pts = seq.points
    use_k = all(p.k is not None for p in pts)
    trace = []
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        label = a.k if use_k else i + 1
        if a.pi2.lo <= 0:
            raise DomainError("zero hyperbolic norm in the sequence")
        trace.append((label, -_log_ratio(a.pi2, b.sup) / 2))
    return trace


def omega_hat_hat_lattice(seq, window=None):
    """Weak uniform exponent of the lattice from its hyperbolic minima."""
    cf = seq.cf
    if cf is not None and cf.is_rational:
        return ExponentEstimate("omega_hat_hat_lattice", infinite=True, provenance="rational")
    if cf is not None and cf.bounded_quotient_max() is not None:
        return _direct_zero(cf, "omega_hat_hat_lattice")
    if len(seq.points) < 3:
        raise ValueError("need at least three hyperbolic minima")
    trace = lattice_trace(seq)
    w = _window(len(trace), window)
    est = ExponentEstimate("omega_hat_hat_lattice", trace,
                           _tail_min([iv for _, iv in trace[-w:]]),
                           None if cf is None else _target_lattice(cf), window=w)
    est.notes = {"sequence": seq.source}
    return est


def v_sequence(cf, start, depth):
    """The images v_start..v_depth as a hyperbolic minima sequence."""
    pts = [v_representative(v_point(cf, k, max_level=depth)) for k in range(start, depth + 1)]
    return MinimaSequence(pts, "hyperbolic", None, True, source=f"v[{start}..{depth}]", cf=cf)


def transfer(est):
    """Map a lattice estimate e to the number estimate 1 + 2e."""
    out = ExponentEstimate("omega_hat_hat", infinite=est.infinite, provenance=est.provenance,
                           window=est.window, notes=dict(est.notes))
    out.trace = [(k, 1 + 2 * iv) for k, iv in est.trace]
    out.tail = None if est.tail is None else 1 + 2 * est.tail
    out.target = None if est.target is None else 1 + 2 * est.target
    return out


def omega_hat_hat_number(cf, depth, window=None):
    """Weak uniform exponent of theta through the lattice route."""
    if cf.is_rational:
        return ExponentEstimate("omega_hat_hat", infinite=True, provenance="rational")
    if cf.bounded_quotient_max() is not None:
        return transfer(_direct_zero(cf, "omega_hat_hat_lattice"))
    try:
        premise = verify_lemma2_premise(cf, depth)
    except DomainError as exc:
        raise FormulaInapplicable(str(exc)) from exc
    if not premise.verdict:
        raise FormulaInapplicable("decay premise not certified", premise)
    est = transfer(omega_hat_hat_lattice(v_sequence(cf, premise.first_index, depth), window))
    est.notes["premise_from"] = premise.first_index
    return est


# -- profile ------------------------------------------------------------------------


ProfileEntry = namedtuple("ProfileEntry", "t value pi2 preimage")


def direct_weak_profile(cf, t_list, max_preimages=10**8):
    """f(t) = min of the hyperbolic norm over nonzero points with sup <= t.

    Computed by one exhaustive sweep up to max(t); f(t) is None when the ball
    holds no nonzero point.
    """
    ts = [to_rat(t) for t in t_list]
    if not ts:
        return []
    if any(t <= 0 for t in ts):
        raise ValueError("t must be positive")
    seq = brute_minima(cf, max(ts), "hyperbolic", max_preimages=max_preimages)
    out = []
    for t in ts:
        best = None
        for pt in seq.points:
            if _sup_le(cf, pt, t):
                best = pt
            else:
                break
        if best is None:
            out.append(ProfileEntry(t, None, None, None))
        else:
            out.append(ProfileEntry(t, sqrt_enclose(best.pi2, 96), best.pi2, best.preimage))
    return out


# -- verifiers ------------------------------------------------------------------------


def _require_irrational(cf):
    if cf.is_rational:
        raise DomainError("this check needs an irrational theta")


def verify_lemma2_premise(cf, depth, window=None):
    """Certify D_k > 3 D_{k+1} for k = 1..depth-2.

    Only convergents up to ``depth`` are consulted.  The verdict is true when
    the inequality holds from some K through the end and K is no later than the
    trailing window.
    """
    _require_irrational(cf)
    if not cf.theta_in_one_two():
        raise DomainError("the decay premise is only used for 1 < theta < 2")
    if depth < 3:
        raise ValueError("depth must be >= 3")
    cf.ensure(depth)
    D = {k: defect_enclosure(cf, k, max_level=depth) for k in range(1, depth)}
    rows = []
    for k in range(1, depth - 1):
        lhs, rhs = D[k], 3 * D[k + 1]
        if lhs.lo > rhs.hi:
            holds = True
        elif lhs.hi < rhs.lo:
            holds = False
        else:
            holds = None
        rows.append({"k": k, "holds": holds, "D_k": D[k], "D_k1": D[k + 1]})
    K = None
    for r in reversed(rows):
        if r["holds"] is True:
            K = r["k"]
        else:
            break
    w = _window(len(rows), window)
    wstart = rows[-w]["k"]
    rep = VerificationReport("lemma2-premise", rows, K)
    rep.notes = {"depth": depth, "window_start": wstart}
    if K is not None and K <= wstart:
        rep.verdict, rep.status = True, "certified"
    elif any(r["holds"] is None for r in rows[-w:]) and not any(
        r["holds"] is False for r in rows[-w:]
    ):
        rep.status = "inconclusive"
    return rep


def phi_enclosure():
    return (1 + sqrt_enclose(RatInterval.point(5), 64)) / 2


def verify_lemma3_growth(seq):
    """Certify sup(z_{k+1}) * pi2(z_k) > (4/3) phi^(k-2) for k >= 2.

    Sequence positions are numbered from 1.  The weaker consequence
    pi2(z_k) * sup(z_{k+1}) > 1 is reported alongside.
    """
    pts = seq.points
    if len(pts) < 3:
        raise ValueError("need at least three hyperbolic minima")
    ph = phi_enclosure()
    rows = []
    for k in range(2, len(pts)):
        zk, zn = pts[k - 1], pts[k]
        prod = zk.pi2 * zn.sup
        # strict inequality needs the upper end of phi; refutation the lower end
        rhs = mpq(4, 3) * ph.hi ** (k - 2)
        rhs_lo = mpq(4, 3) * ph.lo ** (k - 2)
        holds = True if prod.lo > rhs else (False if prod.hi <= rhs_lo else None)
        cor = True if prod.lo > 1 else (False if prod.hi <= 1 else None)
        rows.append({"k": k, "holds": holds, "corollary": cor, "product": prod,
                     "bound": rhs, "convergent_index": zk.k})
    verdict, status = _status_all(rows)
    rep = VerificationReport("lemma3-growth", rows, 2, verdict, status)
    rep.notes = {
        "indexing": "position 1 is the smallest sup-norm minimum",
        "offsets": [p.k for p in pts],
        "corollary_all": all(r["corollary"] is True for r in rows),
    }
    return rep


def hyperbolic_sequence(cf, depth):
    """All hyperbolic minima with sup-norm up to that of v_{depth-1} (convergent route).

    The norm of v_depth is not determined by the quotients up to ``depth``,
    so it is left out; every comparison then stays within that level.
    """
    rel = relative_minima_convergent(cf, depth=depth - 1, max_level=depth)
    return hyperbolic_from_relative(rel)


def verify_classical_sandwich(cf, depth):
    """1/(a_{k+1}+2) < D_k < 1/a_{k+1} for k = 0..depth-1."""
    _require_irrational(cf)
    cf.ensure(depth)
    rows = []
    for k in range(depth):
        a = cf.a[k + 1]
        lo_b, hi_b = mpq(1, a + 2), mpq(1, a)

        def test(D):
            if D.lo > lo_b and D.hi < hi_b:
                return True
            if D.hi <= lo_b or D.lo >= hi_b:
                return False
            return None

        holds, D = _decide_defect(cf, k, depth, test)
        rows.append({"k": k, "holds": holds, "D_k": D, "a_next": a})
    verdict, status = _status_all(rows)
    return VerificationReport("classical-sandwich", rows, 0, verdict, status)


def _require_power(cf):
    if not isinstance(cf.rule, PowerGrowth):
        raise DomainError("this check is stated for the power-growth rule")
    return cf.rule.gamma.numerator, cf.rule.gamma.denominator


def verify_product_bounds(cf, depth):
    """1/(q_k^g + 3) < D_k < 1/q_k^g for k = 1..depth-1, compared exactly."""
    u, v = _require_power(cf)
    cf.ensure(depth)
    rows = []
    for k in range(1, depth):
        q = cf.q[k]

        def test(D):
            # D < q^-g  <=>  D^v < (1/q)^u
            upper = D.hi == 0 or pow_compare(D.hi, v, mpq(1, q), u) < 0
            upper_fail = D.lo > 0 and pow_compare(D.lo, v, mpq(1, q), u) >= 0
            # D > 1/(q^g + 3)  <=>  1/D - 3 < q^g
            lower = False
            if D.lo > 0:
                c = 1 / D.lo - 3
                lower = c <= 0 or pow_compare(c, v, q, u) < 0
            lower_fail = D.hi == 0
            if D.hi > 0:
                c2 = 1 / D.hi - 3
                lower_fail = c2 > 0 and pow_compare(c2, v, q, u) >= 0
            if upper and lower:
                return True
            if upper_fail or lower_fail:
                return False
            return None

        holds, D = _decide_defect(cf, k, depth, test)
        rows.append({"k": k, "holds": holds, "D_k": D})
    verdict, status = _status_all(rows)
    return VerificationReport("product-bounds", rows, 1, verdict, status)


def verify_denominator_sandwich(cf, depth):
    """q_k^(1+g) < q_{k+1} < 3 q_k^(1+g) for k = 1..depth-1, in integers."""
    u, v = _require_power(cf)
    cf.ensure(depth)
    rows = []
    for k in range(1, depth):
        q, qn = cf.q[k], cf.q[k + 1]
        lhs, mid = q ** (u + v), qn ** v
        holds = lhs < mid < 3**v * lhs
        rows.append({"k": k, "holds": bool(holds)})
    verdict, status = _status_all(rows)
    return VerificationReport("denominator-sandwich", rows, 1, verdict, status)


def verify_empty_parallelograms(cf, depth, max_preimages=10**6):
    rows = []
    for k in range(depth):
        try:
            ok = check_empty_parallelogram(cf, k, max_preimages=max_preimages)
        except BudgetExceeded:
            rows.append({"k": k, "holds": None})
            break
        except IndexError:
            break
        rows.append({"k": k, "holds": ok})
    verdict, status = _status_all(rows)
    return VerificationReport("empty-parallelogram", rows, 0, verdict, status)


def dirichlet_check(cf, t, gamma=1):
    """Nonzero (x, y) with |x| <= t and |theta x - y| <= t^-gamma found among convergents.

    For gamma = 1 the largest q_k <= t always works.  Returns None when no
    convergent qualifies (for gamma > 1 solutions need not exist).
    """
    t, g = to_rat(t), to_rat(gamma)
    if t < 1:
        raise ValueError("t must be >= 1")
    if g <= 0:
        raise ValueError("gamma must be positive")
    u, v = int(g.numerator), int(g.denominator)
    ks = []
    k = 0
    while cf.ensure(k) and cf.q[k] <= t:
        ks.append(k)
        k += 1
    for k in reversed(ks):
        q, p = cf.q[k], cf.p[k]
        if _solves(cf, k, q, p, t, u, v):
            return (int(q), int(p))
    return None


def _solves(cf, k, q, p, t, u, v):
    if cf.is_exact_at(k):
        return True
    bits = 96
    while True:
        z = defect_enclosure(cf, k, bits=bits) / q
        # |z| <= t^-g  <=>  |z|^v * t^u <= 1
        if z.hi ** v * t**u <= 1:
            return True
        if z.lo ** v * t**u > 1:
            return False
        if bits > 1024:
            return False
        bits *= 2


def dirichlet_report(cf, t_list, gamma=1):
    rows = []
    for t in t_list:
        sol = dirichlet_check(cf, t, gamma)
        rows.append({"k": str(to_rat(t)), "holds": sol is not None,
                     "solution": None if sol is None else [str(sol[0]), str(sol[1])]})
    verdict, status = _status_all(rows)
    rep = VerificationReport("dirichlet", rows, None, verdict, status)
    rep.notes = {"gamma": rat_str(to_rat(gamma))}
    return rep


def verify_spectrum_point(gamma, depth, tol, window=None, max_digits=None):
    """Build the power-growth number for gamma and compare its lattice exponent with gamma/(2+2gamma)."""
    g, tol = to_rat(gamma), to_rat(tol)
    if g <= 0 or tol <= 0:
        raise ValueError("gamma and tol must be positive")
    cf = CFNumber(PowerGrowth(g), max_digits=max_digits)
    target = g / (2 + 2 * g)
    premise = verify_lemma2_premise(cf, depth)
    rep = VerificationReport("spectrum-point")
    rep.notes = {"gamma": rat_str(g), "depth": depth, "tol": rat_str(tol),
                 "target": _num_json(target), "premise_status": premise.status}
    if not premise.verdict:
        rep.status = premise.status
        return rep
    K = premise.first_index
    est = omega_hat_hat_lattice(v_sequence(cf, K, depth), window)
    rep.first_index = K
    rep.rows = [{"k": k, "holds": None, "lambda": iv} for k, iv in est.trace]
    lo, hi = target - tol, target + tol
    tail = est.tail
    rep.notes["tail"] = tail.to_json()
    rep.notes["window"] = est.window
    rep.notes["distance"] = fmt_dec(max(abs(tail.lo - target), abs(tail.hi - target)), 12, "up")
    if lo <= tail.lo and tail.hi <= hi:
        rep.verdict, rep.status = True, "certified"
    elif tail.hi < lo or tail.lo > hi:
        rep.status = "false"
    else:
        rep.status = "inconclusive"
    rep.estimate = est
    return rep
