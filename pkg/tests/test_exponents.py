import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from diophant.cf import CFNumber
from diophant.errors import DomainError, FormulaInapplicable
from diophant.exact import RatInterval
from diophant.exponents import (
    default_window,
    direct_weak_profile,
    dirichlet_check,
    dirichlet_report,
    hyperbolic_sequence,
    lattice_trace,
    omega_hat_hat_lattice,
    omega_hat_hat_number,
    omega_hat_uniform,
    omega_regular,
    phi_enclosure,
    pi2_floor,
    transfer,
    v_sequence,
    verify_classical_sandwich,
    verify_denominator_sandwich,
    verify_lemma2_premise,
    verify_lemma3_growth,
    verify_product_bounds,
    verify_spectrum_point,
)
from diophant.lattice import brute_minima, class_key, pi2_key

import oracles

GOLDEN = "quotients:1,1..."
SQRT2 = "periodic:1;2"
HALF = mpq(1, 2)


def within(iv, target, tol):
    return target - tol <= iv.lo and iv.hi <= target + tol


# -- regular and uniform exponents ------------------------------------------------


def test_omega_golden_is_one():
    est = omega_regular(CFNumber(GOLDEN), 12)
    assert est.trace
    assert all(1 in iv for _, iv in est.trace)


def test_omega_power_one():
    est = omega_regular(CFNumber("power:1"), 10)
    assert within(est.tail, 2, mpq(1, 100))
    assert est.target == 2


def test_omega_tail_is_window_max():
    est = omega_regular(CFNumber("power:1/2"), 12, window=4)
    tail = [iv for _, iv in est.trace[-4:]]
    assert est.tail.hi == max(iv.hi for iv in tail)
    assert est.window == 4


@pytest.mark.parametrize("fn", [omega_regular, omega_hat_uniform])
def test_rational_infinite(fn):
    est = fn(CFNumber("rational:10/7"), 6)
    assert est.infinite and est.tail is None


def test_omega_depth_check():
    with pytest.raises(ValueError):
        omega_regular(CFNumber(GOLDEN), 1)


@pytest.mark.parametrize("rule", [GOLDEN, SQRT2])
def test_omega_hat_is_one(rule):
    est = omega_hat_uniform(CFNumber(rule), 8)
    assert est.tail == RatInterval.point(1)
    assert est.notes["failed_k"] == []
    assert set(range(6)) <= set(est.notes["certified_k"])


def test_default_window():
    assert [default_window(n) for n in (1, 3, 4, 9, 10)] == [1, 2, 2, 5, 5]


# -- lattice exponent -------------------------------------------------------------


def test_lattice_exponent_power_one():
    cf = CFNumber("power:1")
    premise = verify_lemma2_premise(cf, 14)
    est = omega_hat_hat_lattice(v_sequence(cf, premise.first_index, 14))
    assert within(est.tail, mpq(1, 4), mpq(1, 100))
    assert est.target == mpq(1, 4)


def test_lattice_exponent_golden_zero():
    cf = CFNumber(GOLDEN)
    est = omega_hat_hat_lattice(hyperbolic_sequence(cf, 12))
    assert est.tail == RatInterval.point(0)
    assert est.provenance == "direct-profile"
    assert pi2_floor(cf) == mpq(1, 3)


def test_lattice_exponent_super_trace():
    cf = CFNumber("super", max_digits=2 * 10**6)
    trace = dict(lattice_trace(v_sequence(cf, 1, 10)))
    values = [trace[k] for k in range(5, 10)]
    for k, iv in zip(range(5, 10), values):
        assert within(iv, mpq(k, 2 * k + 2), mpq(2, 100))
    for a, b in zip(values, values[1:]):
        assert a.hi < b.lo


def test_lattice_exponent_too_short():
    cf = CFNumber("power:1")
    with pytest.raises(ValueError):
        omega_hat_hat_lattice(v_sequence(cf, 0, 1))


def test_lattice_trace_values_against_mpmath():
    cf = CFNumber("power:1")
    seq = v_sequence(cf, 1, 6)
    cf.ensure(9)
    with mpmath.workdps(200):
        theta = oracles.cf_value([int(a) for a in cf.a[:10]], 200)
        for (k, iv), nxt in zip(lattice_trace(seq), seq.points[1:]):
            q, p = int(cf.q[k]), int(cf.p[k])
            qn, pn = int(cf.q[k + 1]), int(cf.p[k + 1])
            pi2 = abs(q * theta - p) * (q + p * theta)
            lam = -mpmath.log(pi2) / (2 * mpmath.log(qn + pn * theta))
            assert iv.lo <= mpq(str(mpmath.nstr(lam, 60))) + mpq(1, 10**50)
            assert mpq(str(mpmath.nstr(lam, 60))) - mpq(1, 10**50) <= iv.hi
            assert iv.width <= mpq(1, 10**4)


# -- number exponent via transfer ---------------------------------------------------


def test_number_exponent_power_one():
    est = omega_hat_hat_number(CFNumber("power:1"), 14)
    assert within(est.tail, mpq(3, 2), mpq(2, 100))
    assert est.target == mpq(3, 2)


def test_number_exponent_golden():
    est = omega_hat_hat_number(CFNumber(GOLDEN), 12)
    assert est.tail == RatInterval.point(1)


def test_number_exponent_rational():
    assert omega_hat_hat_number(CFNumber("rational:10/7"), 8).infinite


def test_number_exponent_premise_missing():
    # slow growth: D_k > 3 D_{k+1} is not yet visible at this depth
    with pytest.raises(FormulaInapplicable) as info:
        omega_hat_hat_number(CFNumber("power:1/10"), 6)
    assert info.value.report.claim == "lemma2-premise"


@pytest.mark.parametrize("rule,depth", [("power:1", 12), ("power:1/2", 16), ("power:2", 9)])
def test_transfer_consistency(rule, depth):
    cf = CFNumber(rule)
    number = omega_hat_hat_number(cf, depth)
    K = number.notes["premise_from"]
    lattice = omega_hat_hat_lattice(v_sequence(cf, K, depth))
    assert number.tail == 1 + 2 * lattice.tail
    assert number.trace == [(k, 1 + 2 * iv) for k, iv in lattice.trace]
    assert transfer(lattice).tail == number.tail


@pytest.mark.parametrize("gamma,depth", [("1/2", 18), ("1", 14), ("2", 10), ("1/3", 20)])
def test_ordering_chain(gamma, depth):
    cf = CFNumber(f"power:{gamma}")
    slack = mpq(1, 100)
    omega = omega_regular(cf, depth)
    weak = omega_hat_hat_number(cf, depth)
    assert weak.tail.lo <= omega.tail.hi + slack
    assert weak.tail.hi >= 1 - slack


@pytest.mark.parametrize("rule,depth", [("power:1/2", 16), ("power:1", 12), ("power:3", 8),
                                        ("super", 8), (SQRT2, 20), ("periodic:1;1,5", 20)])
def test_trace_never_above_half(rule, depth):
    cf = CFNumber(rule)
    for _, iv in lattice_trace(hyperbolic_sequence(cf, depth)):
        assert iv.lo < HALF + mpq(1, 10**6)


# -- profile ------------------------------------------------------------------------


def test_profile_sqrt2_constant():
    for entry in direct_weak_profile(CFNumber(SQRT2), [10, 50, 100]):
        assert 1 in entry.value and 1 in entry.pi2


def test_profile_power_step():
    cf = CFNumber("power:1")
    seq = v_sequence(cf, 0, 4)
    v2, v3 = seq.points[2], seq.points[3]
    t = (v2.sup.hi + v3.sup.lo) / 2
    (entry,) = direct_weak_profile(cf, [t])
    assert entry.pi2.overlaps(v2.pi2)
    assert class_key(*entry.preimage) == class_key(v2.x, v2.y)


def test_profile_below_first_minimum():
    (entry,) = direct_weak_profile(CFNumber(SQRT2), [mpq(1, 2)])
    assert entry.value is None


def test_profile_rejects_nonpositive():
    with pytest.raises(ValueError):
        direct_weak_profile(CFNumber(SQRT2), [0])


@given(st.sampled_from(["power:1", "power:1/2", GOLDEN, "super"]),
       st.lists(st.fractions(min_value=2, max_value=2000, max_denominator=7), min_size=1, max_size=6))
@settings(max_examples=25, deadline=None)
def test_step_function_identity(rule, ts):
    cf = CFNumber(rule)
    hyp = brute_minima(cf, max(ts), "hyperbolic")
    profile = direct_weak_profile(cf, ts)
    pts = hyp.points
    for entry in profile:
        idx = [i for i, p in enumerate(pts) if p.sup.hi <= entry.t]
        if not idx:
            assert entry.value is None
            continue
        k = idx[-1]
        assert entry.pi2.overlaps(pts[k].pi2)
        prev = pts[k - 1] if k > 0 else None
        # disjoint from the previous step unless the two norms are exactly equal
        if prev is not None and pi2_key(cf, *entry.preimage) != pi2_key(cf, prev.x, prev.y):
            assert not entry.pi2.overlaps(prev.pi2)


@given(st.fractions(min_value=1, max_value=5000, max_denominator=9))
@settings(max_examples=30, deadline=None)
def test_profile_non_increasing(t):
    cf = CFNumber("power:1/2")
    a, b = direct_weak_profile(cf, [t, t + 7])
    if a.value is not None:
        assert b.pi2.hi <= a.pi2.hi


# -- verifiers ----------------------------------------------------------------------


def test_lemma2_power_one():
    cf = CFNumber("power:1")
    rep = verify_lemma2_premise(cf, 10)
    assert rep.verdict and rep.first_index == 2
    assert all(r["holds"] for r in rep.rows[1:])
    # k = 1 genuinely fails: 2|2 theta - 3| < 3 * 7|7 theta - 10|
    assert rep.rows[0]["holds"] is False
    cf.ensure(8)
    with mpmath.workdps(60):
        theta = oracles.cf_value([int(a) for a in cf.a[:9]], 60)
        assert 2 * abs(2 * theta - 3) < 3 * 7 * abs(7 * theta - 10)


def test_lemma2_golden_fails_everywhere():
    rep = verify_lemma2_premise(CFNumber(GOLDEN), 12)
    assert not rep.verdict and rep.status == "false"
    assert all(r["holds"] is False for r in rep.rows)


def test_lemma2_super():
    rep = verify_lemma2_premise(CFNumber("super"), 7)
    assert rep.verdict and rep.first_index == 1


def test_lemma2_domain():
    with pytest.raises(DomainError):
        verify_lemma2_premise(CFNumber("periodic:2;1"), 8)
    with pytest.raises(DomainError):
        verify_lemma2_premise(CFNumber("rational:10/7"), 8)


def test_lemma3_power_one():
    rep = verify_lemma3_growth(hyperbolic_sequence(CFNumber("power:1"), 12))
    assert rep.verdict and rep.status == "certified"
    assert rep.notes["corollary_all"]


def test_lemma3_super():
    rep = verify_lemma3_growth(hyperbolic_sequence(CFNumber("super"), 7))
    assert rep.verdict


def test_lemma3_too_short():
    seq = hyperbolic_sequence(CFNumber("power:1"), 1)
    with pytest.raises(ValueError):
        verify_lemma3_growth(seq)


def test_phi_enclosure():
    ph = phi_enclosure()
    assert mpq(16180339887, 10**10) <= ph.lo and ph.hi <= mpq(16180339888, 10**10)
    assert ph.width < mpq(1, 10**15)


@pytest.mark.parametrize("rule,depth", [(GOLDEN, 25), (SQRT2, 25), ("power:1", 12), ("super", 7)])
def test_classical_sandwich(rule, depth):
    assert verify_classical_sandwich(CFNumber(rule), depth).status == "certified"


@pytest.mark.parametrize("gamma,depth", [("1/2", 18), ("1", 14), ("2", 10)])
def test_power_sandwiches(gamma, depth):
    cf = CFNumber(f"power:{gamma}")
    assert verify_product_bounds(cf, depth).status == "certified"
    assert verify_denominator_sandwich(cf, depth).status == "certified"


def test_sandwich_rule_check():
    with pytest.raises(DomainError):
        verify_product_bounds(CFNumber(GOLDEN), 5)


@pytest.mark.parametrize(
    "rule,t,expected",
    [(GOLDEN, 10, (8, 13)), (GOLDEN, 1, (1, 2)), (SQRT2, 1, (1, 1)), ("power:1", 58, (58, 83))],
)
def test_dirichlet_examples(rule, t, expected):
    assert dirichlet_check(CFNumber(rule), t) == expected


def test_dirichlet_golden_residual():
    phi = oracles.golden()
    assert abs(8 * phi - 13) <= mpmath.mpf("0.1")
    assert abs(abs(8 * phi - 13) - mpmath.mpf("0.0557")) < 1e-4


@given(st.sampled_from([GOLDEN, SQRT2, "power:1", "super"]),
       st.fractions(min_value=1, max_value=10**4, max_denominator=50))
@settings(max_examples=40, deadline=None)
def test_dirichlet_always_solvable(rule, t):
    sol = dirichlet_check(CFNumber(rule), t)
    assert sol is not None
    x, y = sol
    assert 1 <= x <= t


def test_dirichlet_large_gamma_may_fail():
    rep = dirichlet_report(CFNumber(GOLDEN), [10, 100, 1000], gamma=3)
    assert rep.status == "false"


def test_dirichlet_rejects():
    with pytest.raises(ValueError):
        dirichlet_check(CFNumber(GOLDEN), mpq(1, 2))
    with pytest.raises(ValueError):
        dirichlet_check(CFNumber(GOLDEN), 5, gamma=0)


# -- spectrum points ----------------------------------------------------------------


@pytest.mark.parametrize("gamma,depth,target", [("1", 14, mpq(1, 4)), ("2", 10, mpq(1, 3)),
                                                ("1/2", 18, mpq(1, 6))])
def test_spectrum_point_examples(gamma, depth, target):
    rep = verify_spectrum_point(gamma, depth, "1/100")
    assert rep.verdict and rep.status == "certified"
    assert within(rep.estimate.tail, target, mpq(1, 100))


def test_spectrum_point_too_shallow():
    rep = verify_spectrum_point("1", 7, "1/100")
    assert not rep.verdict


@pytest.mark.parametrize("gamma,depths", [("1/2", (12, 15, 18, 20)), ("1", (8, 10, 12, 14)),
                                          ("2", (6, 8, 10)), ("1/3", (16, 20, 24))])
def test_spectrum_refinement_monotone(gamma, depths):
    target = mpq(gamma) / (2 + 2 * mpq(gamma))
    dist = []
    for d in depths:
        rep = verify_spectrum_point(gamma, d, "1/100")
        tail = rep.estimate.tail
        dist.append(max(abs(tail.lo - target), abs(tail.hi - target)))
    assert all(b <= a for a, b in zip(dist, dist[1:]))


def test_spectrum_point_rejects():
    with pytest.raises(ValueError):
        verify_spectrum_point("0", 10, "1/100")
