"""Command-line front end: ``diophant <construct|exponents|minima|verify|profile>``.

Every command writes one deterministic JSON document (``"schema": 1``) or a flat
CSV table.  Exact numbers are written twice: a decimal string and "p/q".

Exit codes: 0 success (for ``verify``: certified), 1 claim false or routes
differ, 2 inconclusive (budget exhausted, undecided comparison), 3 invalid
input.
"""

import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import click

from . import exponents as ex
from .cf import CFNumber, PowerGrowth, parse_rule
from .errors import BudgetExceeded, DiophantError, DomainError, FormulaInapplicable, TieError
from .exact import fmt_dec, rat_str, to_rat
from .lattice import (
    DEFAULT_MAX_PREIMAGES,
    brute_minima,
    hyperbolic_from_relative,
    relative_minima_convergent,
)

SCHEMA = 1
EXIT_OK, EXIT_FALSE, EXIT_INCONCLUSIVE, EXIT_INVALID = 0, 1, 2, 3
CLAIMS = (
    "lemma2-premise",
    "lemma3-growth",
    "product-bounds",
    "denominator-sandwich",
    "classical-sandwich",
    "dirichlet",
    "spectrum-point",
    "empty-parallelogram",
)
STATUS_EXIT = {"certified": EXIT_OK, "false": EXIT_FALSE, "inconclusive": EXIT_INCONCLUSIVE}
DEFAULT_T = ("1", "2", "5", "10", "37", "100", "512", "1000", "4321", "10000")


class Rational(click.ParamType):
    name = "rational"

    def convert(self, value, param, ctx):
        try:
            return to_rat(value)
        except (ValueError, ZeroDivisionError, TypeError):
            self.fail(f"{value!r} is not a rational number (use p/q or a decimal)", param, ctx)


RAT = Rational()


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
        return
    tmp = f"{out}.tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, out)


def _json_text(doc):
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fail(exc):
    if isinstance(exc, (BudgetExceeded, TieError)):
        code = EXIT_INCONCLUSIVE
    elif isinstance(exc, FormulaInapplicable):
        code = EXIT_FALSE
    else:
        code = EXIT_INVALID
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _make_cf(rule, max_digits, cache=None):
    rule_obj = parse_rule(rule)
    if cache and os.path.exists(cache):
        cf = CFNumber.load(cache, max_digits=max_digits)
        if cf.rule.spec() != rule_obj.spec():
            raise DomainError(f"cache {cache} holds rule {cf.rule.spec()}, not {rule_obj.spec()}")
        return cf
    return CFNumber(rule_obj, max_digits=max_digits)


def _doc(command, config, result):
    return {"schema": SCHEMA, "command": command, "config": config, "result": result}


def common(f):
    f = click.option("--out", type=click.Path(dir_okay=False), default=None,
                     help="Write output here (atomically) instead of stdout.")(f)
    f = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")(f)
    f = click.option("--max-digits", type=int, default=None,
                     help="Digit budget for denominators (default: $DIOPHANT_MAX_DIGITS or 100000).")(f)
    f = click.option("--seed", type=int, default=None, hidden=True,
                     help="Accepted for harness compatibility; nothing is random.")(f)
    return f


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Continued fractions, lattice minima and certified Diophantine exponents."""


# -- construct ----------------------------------------------------------------------


@main.command()
@click.option("--rule", required=True, help="power:U/V | super | quotients:a0,a1,... | periodic:pre;per | rational:P/Q")
@click.option("--depth", type=click.IntRange(min=0), default=None,
              help="Last convergent index (default 10; rationals run to the end).")
@click.option("--cache", type=click.Path(dir_okay=False), default=None,
              help="JSON convergent cache to resume from and update.")
@common
def construct(rule, depth, cache, fmt, out, max_digits, seed):
    """Partial quotients and convergents of a quotient rule."""
    try:
        cf = _make_cf(rule, max_digits, cache)
        if depth is None:
            depth = cf.last_index if cf.is_rational else 10
        convs = cf.extend_convergents(depth)
        if cache:
            cf.save(cache)
    except DiophantError as exc:
        _fail(exc)
    if fmt == "csv":
        _emit(_csv_text(["k", "a", "p", "q"],
                        [[c.k, str(c.a), str(c.p), str(c.q)] for c in convs]), out)
        return
    result = {
        "terminated": cf.terminated,
        "quotients": [str(c.a) for c in convs],
        "convergents": [{"k": c.k, "a": str(c.a), "p": str(c.p), "q": str(c.q)} for c in convs],
    }
    _emit(_json_text(_doc("construct", {"rule": cf.rule.spec(), "depth": depth}, result)), out)


# -- exponents ----------------------------------------------------------------------


def _estimates(cf, depth, window):
    res = {}
    res["omega"] = ex.omega_regular(cf, depth, window)
    try:
        res["omega_hat"] = ex.omega_hat_uniform(cf, depth)
    except BudgetExceeded as exc:
        res["omega_hat"] = {"error": str(exc)}
    if cf.is_rational:
        res["omega_hat_hat"] = ex.omega_hat_hat_number(cf, depth)
        res["omega_hat_hat_lattice"] = ex.ExponentEstimate(
            "omega_hat_hat_lattice", infinite=True, provenance="rational")
        return res
    try:
        num = ex.omega_hat_hat_number(cf, depth, window)
        if cf.bounded_quotient_max() is not None:
            lat = ex._direct_zero(cf, "omega_hat_hat_lattice")
        else:
            lat = ex.omega_hat_hat_lattice(ex.v_sequence(cf, num.notes["premise_from"], depth), window)
    except FormulaInapplicable as exc:
        # fall back to the filtered sequence of all hyperbolic minima
        try:
            seq = ex.hyperbolic_sequence(cf, depth)
            lat = ex.omega_hat_hat_lattice(seq, window)
            num = ex.transfer(lat)
            num.notes["route"] = f"filtered minima ({exc})"
        except (DomainError, ValueError) as exc2:
            lat = num = {"error": str(exc2)}
    res["omega_hat_hat"] = num
    res["omega_hat_hat_lattice"] = lat
    return res


@main.command()
@click.option("--rule", required=True)
@click.option("--depth", type=click.IntRange(min=3), default=14)
@click.option("--window", type=click.IntRange(min=1), default=None,
              help="Trailing window length for limits (default: half of the trace).")
@common
def exponents(rule, depth, window, fmt, out, max_digits, seed):
    """Traces and tail estimates of the four exponents."""
    try:
        cf = _make_cf(rule, max_digits)
        res = _estimates(cf, depth, window)
    except (DiophantError, ValueError) as exc:
        _fail(exc)
    if fmt == "csv":
        rows = []
        for name, est in res.items():
            if isinstance(est, dict):
                continue
            target = "" if est.target is None else fmt_dec(est.target)
            if est.infinite:
                rows.append([name, "", "inf", "inf", target])
            for k, iv in est.trace:
                rows.append([name, k, fmt_dec(iv.lo, 20, "down"), fmt_dec(iv.hi, 20, "up"), target])
            if est.tail is not None:
                rows.append([name, "tail", fmt_dec(est.tail.lo, 20, "down"),
                             fmt_dec(est.tail.hi, 20, "up"), target])
        _emit(_csv_text(["name", "k", "lo", "hi", "target"], rows), out)
        return
    result = {k: (v if isinstance(v, dict) else v.to_json()) for k, v in res.items()}
    config = {"rule": cf.rule.spec(), "depth": depth, "window": window}
    _emit(_json_text(_doc("exponents", config, result)), out)


# -- minima -------------------------------------------------------------------------


def _minima_seq(cf, bound, kind, mode, max_preimages):
    if mode == "brute":
        return brute_minima(cf, bound, kind, max_preimages=max_preimages)
    seq = relative_minima_convergent(cf, T=bound)
    return hyperbolic_from_relative(seq) if kind == "hyperbolic" else seq


@main.command()
@click.option("--rule", required=True)
@click.option("--bound", type=RAT, required=True, help="Sup-norm bound T.")
@click.option("--kind", type=click.Choice(["relative", "hyperbolic"]), default="relative")
@click.option("--mode", type=click.Choice(["brute", "convergent"]), default="convergent")
@click.option("--diff", is_flag=True, help="Run both routes and compare class sets.")
@click.option("--max-preimages", type=int, default=DEFAULT_MAX_PREIMAGES)
@common
def minima(rule, bound, kind, mode, diff, max_preimages, fmt, out, max_digits, seed):
    """Relative or hyperbolic minima with sup-norm up to a bound."""
    if bound <= 0:
        _fail(DomainError("bound must be positive"))
    try:
        cf = _make_cf(rule, max_digits)
        seq = _minima_seq(cf, bound, kind, mode, max_preimages)
        other = None
        if diff:
            other = _minima_seq(cf, bound, kind, "convergent" if mode == "brute" else "brute",
                                max_preimages)
    except DiophantError as exc:
        _fail(exc)
    equal = None if other is None else seq.class_set() == other.class_set()
    if fmt == "csv":
        rows = [[p.k if p.k is not None else "", str(p.x), str(p.y),
                 fmt_dec(p.sup.lo, 20, "down"), fmt_dec(p.sup.hi, 20, "up"),
                 fmt_dec(p.pi2.lo, 20, "down"), fmt_dec(p.pi2.hi, 20, "up")] for p in seq.points]
        _emit(_csv_text(["k", "x", "y", "sup_lo", "sup_hi", "pi2_lo", "pi2_hi"], rows), out)
    else:
        result = {"count": len(seq), **seq.to_json()}
        if diff:
            result["diff"] = "equal" if equal else "different"
        config = {"rule": cf.rule.spec(), "bound": rat_str(bound), "kind": kind, "mode": mode}
        _emit(_json_text(_doc("minima", config, result)), out)
    if equal is False:
        sys.exit(EXIT_FALSE)


# -- profile ------------------------------------------------------------------------


@main.command()
@click.option("--rule", required=True)
@click.option("--t", "ts", type=RAT, multiple=True, help="Radius t (repeatable).")
@click.option("--max-preimages", type=int, default=DEFAULT_MAX_PREIMAGES)
@common
def profile(rule, ts, max_preimages, fmt, out, max_digits, seed):
    """Smallest hyperbolic norm over the sup-norm ball of radius t."""
    ts = ts or tuple(to_rat(t) for t in DEFAULT_T)
    try:
        cf = _make_cf(rule, max_digits)
        entries = ex.direct_weak_profile(cf, ts, max_preimages=max_preimages)
    except (DiophantError, ValueError) as exc:
        _fail(exc)
    if fmt == "csv":
        rows = []
        for e in entries:
            if e.value is None:
                rows.append([rat_str(e.t), "", ""])
            else:
                rows.append([rat_str(e.t), fmt_dec(e.value.lo, 20, "down"), fmt_dec(e.value.hi, 20, "up")])
        _emit(_csv_text(["t", "lo", "hi"], rows), out)
        return
    result = [{
        "t": {"dec": fmt_dec(e.t), "exact": rat_str(e.t)},
        "value": None if e.value is None else e.value.to_json(),
        "pi2": None if e.pi2 is None else e.pi2.to_json(),
        "preimage": None if e.preimage is None else [str(v) for v in e.preimage],
    } for e in entries]
    _emit(_json_text(_doc("profile", {"rule": cf.rule.spec()}, result)), out)


# -- verify -------------------------------------------------------------------------


def _spectrum_job(args):
    gamma, depth, tol, window, max_digits = args
    try:
        rep = ex.verify_spectrum_point(gamma, depth, tol, window, max_digits)
        return rep.to_json()
    except (BudgetExceeded, TieError) as exc:
        return {"claim": "spectrum-point", "verdict": False, "status": "inconclusive",
                "first_index": None, "rows": [], "notes": {"gamma": rat_str(gamma), "error": str(exc)}}


def _run_claim(claim, cf, depth, ts, gamma):
    if claim == "lemma2-premise":
        return ex.verify_lemma2_premise(cf, depth)
    if claim == "lemma3-growth":
        return ex.verify_lemma3_growth(ex.hyperbolic_sequence(cf, depth))
    if claim == "product-bounds":
        return ex.verify_product_bounds(cf, depth)
    if claim == "denominator-sandwich":
        return ex.verify_denominator_sandwich(cf, depth)
    if claim == "classical-sandwich":
        return ex.verify_classical_sandwich(cf, depth)
    if claim == "empty-parallelogram":
        return ex.verify_empty_parallelograms(cf, depth)
    if claim == "dirichlet":
        return ex.dirichlet_report(cf, ts or [to_rat(t) for t in DEFAULT_T], gamma or 1)
    raise DomainError(f"unknown claim {claim!r}")


@main.command()
@click.argument("claim")
@click.option("--rule", default=None)
@click.option("--depth", "depths", type=click.IntRange(min=3), multiple=True,
              help="Depth (repeatable for spectrum-point, paired with --gamma).")
@click.option("--tol", type=RAT, default="1/100")
@click.option("--gamma", "gammas", type=RAT, multiple=True,
              help="Exponent gamma (spectrum-point: repeatable; dirichlet: the target exponent).")
@click.option("--t", "ts", type=RAT, multiple=True, help="Dirichlet radius t (repeatable).")
@click.option("--window", type=click.IntRange(min=1), default=None)
@click.option("--workers", type=click.IntRange(min=1), default=1)
@common
def verify(claim, rule, depths, tol, gammas, ts, window, workers, fmt, out, max_digits, seed):
    """Certify one claim; exit 0 only when certified."""
    if claim not in CLAIMS:
        click.echo(f"error: unknown claim {claim!r}; choose from {', '.join(CLAIMS)}", err=True)
        sys.exit(EXIT_INVALID)
    try:
        if claim == "spectrum-point":
            if not gammas:
                if rule is None:
                    raise DomainError("spectrum-point needs --gamma or a power:U/V rule")
                r = parse_rule(rule)
                if not isinstance(r, PowerGrowth):
                    raise DomainError("spectrum-point needs a power:U/V rule")
                gammas = (r.gamma,)
            depths = depths or (14,)
            if len(depths) == 1:
                depths = depths * len(gammas)
            if len(depths) != len(gammas):
                raise DomainError("give one --depth or one per --gamma")
            if tol <= 0:
                raise DomainError("tol must be positive")
            jobs = [(g, d, tol, window, max_digits) for g, d in zip(gammas, depths)]
            if workers > 1 and len(jobs) > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    reports = list(pool.map(_spectrum_job, jobs))
            else:
                reports = [_spectrum_job(j) for j in jobs]
        else:
            if rule is None:
                raise DomainError(f"{claim} needs --rule")
            cf = _make_cf(rule, max_digits)
            gamma = gammas[0] if gammas else None
            reports = [_run_claim(claim, cf, depths[0] if depths else 10, ts, gamma).to_json()]
    except (DiophantError, ValueError) as exc:
        _fail(exc)
    statuses = [r["status"] for r in reports]
    if all(s == "certified" for s in statuses):
        overall = "certified"
    elif "false" in statuses:
        overall = "false"
    else:
        overall = "inconclusive"
    if fmt == "csv":
        rows = []
        for r in reports:
            for row in r["rows"]:
                iv = row.get("lambda")
                lo = iv["dec"][0] if iv else ""
                hi = iv["dec"][1] if iv else ""
                target = r["notes"].get("target") or {}
                target = target.get("dec", "") if isinstance(target, dict) else ""
                rows.append([r["claim"], row["k"], lo, hi, target, row.get("holds")])
        _emit(_csv_text(["claim", "k", "lo", "hi", "target", "holds"], rows), out)
    else:
        config = {"claim": claim, "rule": rule, "tol": rat_str(tol)}
        result = reports[0] if len(reports) == 1 else {"status": overall, "reports": reports}
        _emit(_json_text(_doc("verify", config, result)), out)
    sys.exit(STATUS_EXIT[overall])


if __name__ == "__main__":
    main()
