import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from diophant.cf import (
    CFNumber,
    Explicit,
    Periodic,
    PowerGrowth,
    Rational,
    SuperGrowth,
    approx_defect,
    defect_enclosure,
    enclose_affine,
    enclose_theta,
    parse_rule,
    theta_bracket,
)
from diophant.errors import BudgetExceeded, DomainError
from diophant.exact import RatInterval, pow_compare, to_rat

import oracles

GOLDEN = "quotients:1,1..."
SQRT2 = "periodic:1;2"


def mp(x):
    return mpmath.mpf(int(x.numerator)) / int(x.denominator)


# -- rule parsing -------------------------------------------------------------


@pytest.mark.parametrize(
    "text,rule",
    [
        ("power:1/1", PowerGrowth(1)),
        ("power:1/2", PowerGrowth(mpq(1, 2))),
        ("super", SuperGrowth()),
        ("quotients:1,2,3", Explicit((1, 2, 3))),
        ("quotients:1,1,1,…", Periodic((1, 1), (1,))),
        ("periodic:1;2", Periodic((1,), (2,))),
        ("rational:10/7", Rational(10, 7)),
    ],
)
def test_parse_rule(text, rule):
    assert parse_rule(text) == rule


@pytest.mark.parametrize(
    "text", ["power:0", "power:-1/2", "quotients:", "quotients:1,0", "periodic:1;", "rational:1/0", "nope:1", ""]
)
def test_parse_rule_rejects(text):
    with pytest.raises(DomainError):
        parse_rule(text)


@pytest.mark.parametrize("text", ["power:3/2", "super", "quotients:2,1,5", "periodic:1,3;2,4", "rational:22/7"])
def test_spec_round_trip(text):
    assert parse_rule(parse_rule(text).spec()) == parse_rule(text)


# -- quotients and convergents ----------------------------------------------------


def test_power_next_quotient_examples():
    cf = CFNumber("power:1")
    cf.ensure(0)
    assert cf.next_quotient() == 2 == oracles.int_root_floor(1, 1) + 1
    cf.ensure(2)
    assert cf.q[2] == 7
    assert cf.next_quotient() == 8


def test_super_next_quotient_example():
    cf = CFNumber("super")
    cf.ensure(1)
    assert (cf.a[1], cf.q[1]) == (2, 2)
    assert cf.next_quotient() == 3


def test_golden_convergents_fibonacci():
    conv = CFNumber(GOLDEN).extend_convergents(4)
    assert [(c.p, c.q) for c in conv] == [(1, 1), (2, 1), (3, 2), (5, 3), (8, 5)]


def test_power_one_convergents():
    quotients = oracles.power_quotients(1, 4)
    assert quotients == [1, 2, 3, 8, 59]
    expected = oracles.convergents(quotients)
    assert expected == [(1, 1), (3, 2), (10, 7), (83, 58), (4907, 3429)]
    conv = CFNumber("power:1").extend_convergents(4)
    assert [c.a for c in conv] == quotients
    assert [(c.p, c.q) for c in conv] == expected


@pytest.mark.parametrize("gamma", ["1/2", "1", "2", "3/2", "1/3"])
def test_power_matches_oracle(gamma):
    cf = CFNumber(f"power:{gamma}")
    quotients = oracles.power_quotients(gamma, 8)
    conv = cf.extend_convergents(8)
    assert [c.a for c in conv] == quotients
    assert [(c.p, c.q) for c in conv] == oracles.convergents(quotients)


def test_super_matches_oracle():
    quotients = oracles.super_quotients(6)
    conv = CFNumber("super").extend_convergents(6)
    assert [c.a for c in conv] == quotients


def test_rational_euclid():
    cf = CFNumber("rational:10/7")
    conv = cf.extend_convergents(10)
    assert [c.a for c in conv] == oracles.euclid(10, 7) == [1, 2, 3]
    assert (conv[-1].p, conv[-1].q) == (10, 7)
    assert cf.terminated
    assert cf.next_quotient() is None
    assert cf.last_index == 2


def test_convergent_missing_index():
    cf = CFNumber("rational:10/7")
    with pytest.raises(IndexError):
        cf.convergent(5)


def test_extend_idempotent():
    cf = CFNumber("power:1/2")
    first = cf.extend_convergents(6)
    assert cf.extend_convergents(6) == first
    assert cf.extend_convergents(3) == first[:4]


def test_digit_budget():
    cf = CFNumber("super", max_digits=50)
    with pytest.raises(BudgetExceeded):
        cf.ensure(8)


def test_digit_budget_env(monkeypatch):
    monkeypatch.setenv("DIOPHANT_MAX_DIGITS", "20")
    cf = CFNumber("power:2")
    with pytest.raises(BudgetExceeded):
        cf.ensure(10)


# -- enclosures -------------------------------------------------------------------


def test_enclose_theta_power_example():
    assert enclose_theta(CFNumber("power:1"), 2, refine=1) == RatInterval(mpq(4907, 3429), mpq(83, 58))


def test_enclose_theta_golden_example():
    iv = enclose_theta(CFNumber(GOLDEN), 0, refine=0)
    assert (iv.lo, iv.hi) == (1, 2)


@pytest.mark.parametrize("k", [0, 1, 5])
def test_enclose_theta_rational(k):
    iv = enclose_theta(CFNumber("rational:10/7"), k)
    assert iv.lo == iv.hi == mpq(10, 7)


def test_enclose_theta_contains_golden():
    phi = oracles.golden()
    for k in range(12):
        iv = enclose_theta(CFNumber(GOLDEN), k)
        assert mp(iv.lo) <= phi <= mp(iv.hi)


def test_defect_golden_k1():
    cf = CFNumber(GOLDEN)
    phi = oracles.golden()
    for D in (approx_defect(cf, 1), approx_defect(cf, 1, refine=6), defect_enclosure(cf, 1)):
        assert mp(D.lo) <= 2 - phi <= mp(D.hi)
    D = defect_enclosure(cf, 1)
    assert mpq(1, 3) < D.lo and D.hi < 1


def test_defect_power_k3():
    D = approx_defect(CFNumber("power:1"), 3)
    assert mpq(1, 61) < D.lo and D.hi < mpq(1, 59)


def test_defect_rational_last():
    D = approx_defect(CFNumber("rational:10/7"), 2)
    assert D.lo == D.hi == 0
    assert defect_enclosure(CFNumber("rational:10/7"), 2).hi == 0


def test_theta_bracket_uses_prefix_only():
    cf = CFNumber("super")
    cf.ensure(3)
    (P1, Q1), (P2, Q2) = theta_bracket(cf, 3)
    assert len(cf.a) == 4
    values = oracles.super_quotients(8)
    with mpmath.workdps(80):
        theta = oracles.cf_value(values, 80)
        assert mpmath.mpf(P1) / Q1 <= theta <= mpmath.mpf(P2) / Q2


def test_enclose_affine_against_mpmath():
    cf = CFNumber(SQRT2)
    with mpmath.workdps(80):
        exact = 41 * mpmath.sqrt(2) - 58
        iv = enclose_affine(cf, 41, -58, bits=120)
        assert mp(iv.lo) <= exact <= mp(iv.hi)
        assert iv.width <= abs(iv.lo) / 2**119


def test_quadratic_polynomials():
    assert CFNumber(SQRT2).quadratic() == (1, 0, -2)
    assert CFNumber(GOLDEN).quadratic() == (1, -1, -1)
    assert CFNumber("power:1").quadratic() is None


@given(st.lists(st.integers(1, 6), max_size=3), st.lists(st.integers(1, 6), min_size=1, max_size=3))
@settings(max_examples=50)
def test_quadratic_root_is_theta(prefix, period):
    cf = CFNumber(Periodic(tuple(prefix), tuple(period)))
    A, B, C = cf.quadratic()
    quotients = [int(cf.rule.quotient(k)) for k in range(60)]
    with mpmath.workdps(60):
        t = oracles.cf_value(quotients, 60)
        assert abs(A * t * t + B * t + C) < mpmath.mpf(10) ** -20


def test_theta_range_predicates():
    assert CFNumber("power:1").theta_in_one_two()
    assert not CFNumber("quotients:2,1...").theta_in_one_two()
    assert CFNumber("quotients:2,1...").theta_gt_one()
    assert not CFNumber("rational:1/1").theta_gt_one()
    assert not CFNumber("quotients:1,1").theta_in_one_two()


# -- cache ------------------------------------------------------------------------


@pytest.mark.parametrize("rule", ["power:1", "super", SQRT2, "rational:355/113"])
def test_cache_round_trip(tmp_path, rule):
    cf = CFNumber(rule)
    cf.ensure(5)
    path = tmp_path / "cache.json"
    cf.save(str(path))
    back = CFNumber.load(str(path))
    assert back.a == cf.a[: len(back.a)]
    back.ensure(7)
    fresh = CFNumber(rule)
    fresh.ensure(7)
    assert back.q == fresh.q and back.p == fresh.p


def test_cache_rejects_tampering():
    cf = CFNumber("power:1")
    cf.ensure(4)
    data = cf.to_json()
    data["q"][3] = "59"
    with pytest.raises(ValueError):
        CFNumber.from_json(data)


# -- properties -------------------------------------------------------------------

rules = st.one_of(
    st.builds(lambda u, v: f"power:{u}/{v}", st.integers(1, 3), st.integers(1, 3)),
    st.just("super"),
    st.builds(lambda a, b: f"periodic:{a};{b}", st.integers(1, 4), st.integers(1, 5)),
    st.builds(lambda p, q: f"rational:{p + q}/{q}", st.integers(0, 10**6), st.integers(1, 10**6)),
)


@given(rules, st.integers(1, 7))
@settings(max_examples=60, deadline=None)
def test_determinant_identity(rule, depth):
    conv = CFNumber(rule).extend_convergents(depth)
    for k in range(len(conv) - 1):
        assert abs(conv[k].p * conv[k + 1].q - conv[k].q * conv[k + 1].p) == 1
        assert conv[k + 1].q > conv[k].q or k == 0


@given(st.sampled_from(["power:1/2", "power:1", "power:2", "super", GOLDEN, SQRT2,
                        "periodic:1,4;1,2,3"]), st.integers(0, 6))
@settings(max_examples=40, deadline=None)
def test_classical_sandwich(rule, k):
    cf = CFNumber(rule)
    cf.ensure(k + 1)
    D = defect_enclosure(cf, k, bits=4 * int(cf.q[k + 1].bit_length()) + 64)
    a = cf.a[k + 1]
    assert D.lo > mpq(1, a + 2) and D.hi < mpq(1, a)


@given(st.sampled_from(["1/2", "1", "2", "2/3"]), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_product_bounds(gamma, k):
    cf = CFNumber(f"power:{gamma}")
    g = to_rat(gamma)
    u, v = int(g.numerator), int(g.denominator)
    cf.ensure(k + 1)
    D = defect_enclosure(cf, k, bits=4 * int(cf.q[k + 1].bit_length()) + 64)
    q = cf.q[k]
    assert pow_compare(D.hi, v, mpq(1, q), u) < 0
    c = 1 / D.lo - 3
    assert c <= 0 or pow_compare(c, v, q, u) < 0


@given(st.sampled_from(["1/2", "1", "2", "3/4"]), st.integers(1, 7))
@settings(max_examples=30, deadline=None)
def test_denominator_sandwich(gamma, k):
    cf = CFNumber(f"power:{gamma}")
    cf.ensure(k + 1)
    g = to_rat(gamma)
    u, v = int(g.numerator), int(g.denominator)
    lhs = cf.q[k] ** (u + v)
    assert lhs < cf.q[k + 1] ** v < 3**v * lhs


@given(rules, st.integers(0, 5), st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_enclose_theta_nesting(rule, k, refine):
    cf = CFNumber(rule)
    outer, inner = enclose_theta(cf, k, refine), enclose_theta(cf, k, refine + 1)
    assert outer.lo <= inner.lo and inner.hi <= outer.hi
