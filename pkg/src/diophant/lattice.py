"""The rotation-invariant planar lattice generated by theta.

A lattice point is the image of an integer preimage (x, y) under
(x, y) -> (theta*x - y, x + theta*y).  Coordinates, sup-norm and the squared
hyperbolic norm are carried as exact rational enclosures.

Two routes to the minima are provided: the convergent route (vertex images
read off the continued fraction) and an exhaustive brute-force sweep over
preimages that never looks at the continued fraction beyond an enclosure of
theta.  They are meant to be compared against each other.
"""

from dataclasses import dataclass, field
from typing import Optional

from gmpy2 import mpq, mpz

from .cf import CFNumber, PowerGrowth, SuperGrowth, enclose_affine
from .errors import BudgetExceeded, DomainError, TieError
from .exact import RatInterval, ceil_rat, floor_rat, imax, to_rat

DEFAULT_MAX_PREIMAGES = 10**8
POINT_BITS = 96
GRID_SCHEDULE = (64, 128, 256)


@dataclass(frozen=True)
class LatticePoint:
    x: mpz
    y: mpz
    z1: RatInterval
    z2: RatInterval
    sup: RatInterval
    pi2: RatInterval
    k: Optional[int] = None

    @property
    def preimage(self):
        return (int(self.x), int(self.y))

    def to_json(self, digits=20):
        return {
            "k": self.k,
            "x": str(self.x),
            "y": str(self.y),
            "z1": self.z1.to_json(digits),
            "z2": self.z2.to_json(digits),
            "sup": self.sup.to_json(digits),
            "pi2": self.pi2.to_json(digits),
        }


def _require_gt_one(cf):
    if not cf.theta_gt_one():
        raise DomainError("the lattice needs theta > 1")


def _from_coords(x, y, z1, z2, k=None):
    a1, a2 = abs(z1), abs(z2)
    return LatticePoint(mpz(x), mpz(y), z1, z2, imax(a1, a2), a1 * a2, k)


def make_point(cf, x, y, k=None, bits=POINT_BITS):
    """Lattice point with preimage (x, y); enclosures tightened to ~2**-bits relative width."""
    z1 = enclose_affine(cf, x, -y, bits=bits)
    z2 = enclose_affine(cf, y, x, bits=bits)
    return _from_coords(x, y, z1, z2, k)


def v_point(cf, k, bits=POINT_BITS, max_level=None):
    """Image of the convergent preimage (q_k, p_k)."""
    _require_gt_one(cf)
    c = cf.convergent(k)
    if cf.is_exact_at(k):
        z1 = RatInterval.point(0)
    else:
        z1 = enclose_affine(cf, c.q, -c.p, bits=bits, start=k + 1, max_level=max_level)
    z2 = enclose_affine(cf, c.p, c.q, bits=bits, max_level=max_level)
    return _from_coords(c.q, c.p, z1, z2, k)


def rotate(pt):
    """Quarter turn: preimage (x, y) -> (-y, x), coordinates (z1, z2) -> (-z2, z1)."""
    return LatticePoint(-pt.y, pt.x, -pt.z2, pt.z1, pt.sup, pt.pi2, pt.k)


def negate(pt):
    return LatticePoint(-pt.x, -pt.y, -pt.z1, -pt.z2, pt.sup, pt.pi2, pt.k)


def class_members(x, y):
    return [(x, y), (-y, x), (-x, -y), (y, -x)]


def class_key(x, y):
    """Canonical label of the {+-, rotation} class of a preimage."""
    return min((int(a), int(b)) for a, b in class_members(x, y))


def quadrant_rep(x, y):
    """The unique class member with x > 0 and y >= 0."""
    for a, b in class_members(x, y):
        if a > 0 and b >= 0:
            return (a, b)
    raise ValueError("zero vector has no class")


def representative(cf, pt):
    """Class member with z2 > 0 and the lexicographically smallest preimage."""
    cands = [pt, rotate(pt), negate(pt), negate(rotate(pt))]
    bits = POINT_BITS
    while True:
        good = [c for c in cands if c.z2.lo > 0]
        undecided = [c for c in cands if c.z2.lo <= 0 < c.z2.hi]
        if not undecided:
            break
        if bits > 4 * POINT_BITS:
            raise TieError("cannot decide the sign of a coordinate", [pt.preimage])
        bits *= 2
        cands = [make_point(cf, c.x, c.y, c.k, bits) for c in cands]
    return min(good, key=lambda c: c.preimage)


def v_representative(pt):
    """Representative of the class of v_k without any refinement.

    q_k theta - p_k is positive for even k and negative for odd k, and
    p_k >= q_k when theta > 1, so the parity of k decides.
    """
    if pt.z1.lo == pt.z1.hi == 0 or pt.k % 2 == 1:
        return pt
    return rotate(pt)


def pi2_key(cf, x, y):
    """Hashable key with key(u) == key(w) exactly when the squared hyperbolic norms agree.

    theta*(x^2 - y^2) + (theta^2 - 1)*x*y is the signed product z1*z2.  For a
    rational theta it is evaluated exactly; for a quadratic irrational theta^2 is
    reduced with the minimal polynomial; for rules with unbounded quotients theta
    is neither rational nor quadratic (Lagrange), so 1, theta, theta^2 are
    linearly independent and the integer pair itself decides.
    """
    x, y = mpz(x), mpz(y)
    X, Y = x * x - y * y, x * y
    if cf.is_rational:
        j = cf.last_index
        t = mpq(cf.p[j], cf.q[j])
        return abs(t * X + (t * t - 1) * Y)
    quad = cf.quadratic()
    if quad is not None:
        a, b, c = quad
        key = (a * X - b * Y, -(c + a) * Y)
    elif isinstance(cf.rule, (PowerGrowth, SuperGrowth)):
        key = (X, Y)
    else:
        raise DomainError(f"no exact norm key for rule {cf.rule.spec()}")
    if key < (0, 0):
        key = (-key[0], -key[1])
    return (int(key[0]), int(key[1]))


# -- minima sequences ---------------------------------------------------------


@dataclass
class MinimaSequence:
    points: list
    kind: str
    bound: Optional[mpq]
    complete: bool = True
    provisional_last: bool = False
    source: str = ""
    cf: Optional[CFNumber] = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.points)

    def class_set(self):
        return {class_key(p.x, p.y) for p in self.points}

    def to_json(self, digits=20):
        rows = []
        for p in self.points:
            row = p.to_json(digits)
            row["kind"] = self.kind
            rows.append(row)
        return {
            "kind": self.kind,
            "bound": None if self.bound is None else str(self.bound),
            "complete": self.complete,
            "provisional_last": self.provisional_last,
            "source": self.source,
            "points": rows,
        }


def _sup_le(cf, pt, T):
    """Certified decision of sup(pt) <= T (refining the point if needed)."""
    bits = POINT_BITS
    while True:
        if pt.sup.hi <= T:
            return True
        if pt.sup.lo > T:
            return False
        if bits > 8 * POINT_BITS:
            raise TieError("sup-norm too close to the bound", [pt.preimage])
        bits *= 2
        pt = make_point(cf, pt.x, pt.y, pt.k, bits)


def convergent_vertices(cf, T=None, depth=None, max_level=None):
    """A(1,0) followed by v_0, v_1, ... in increasing sup-norm.

    Stops at sup > T, at index ``depth`` or at the end of the expansion.
    """
    _require_gt_one(cf)
    if T is None and depth is None:
        raise ValueError("need a bound T or a depth")
    T = None if T is None else to_rat(T)
    first = make_point(cf, 1, 0)
    out = []
    if T is None or _sup_le(cf, first, T):
        out.append(first)
    else:
        return out
    k = 0
    while depth is None or k <= depth:
        if not cf.ensure(k):
            break
        pt = v_point(cf, k, max_level=max_level)
        if T is not None and not _sup_le(cf, pt, T):
            break
        out.append(pt)
        k += 1
    return out


def relative_minima_convergent(cf, T=None, depth=None, max_level=None):
    """Relative minima from the vertex characterization, one per class."""
    _require_gt_one(cf)
    if cf.is_rational:
        raise DomainError("vertex characterization needs an irrational theta")
    pts = convergent_vertices(cf, T=T, depth=depth, max_level=max_level)
    if pts:
        pts = [representative(cf, pts[0])] + [v_representative(p) for p in pts[1:]]
    return MinimaSequence(pts, "relative", None if T is None else to_rat(T), True,
                          source="convergent", cf=cf)


def _pi2_cmp(cf, a, b, key_a=None, key_b=None):
    """Compare pi2(a) with pi2(b): -1, 0 or 1, refining enclosures if needed."""
    bits = POINT_BITS
    while True:
        if a.pi2.hi < b.pi2.lo:
            return -1
        if a.pi2.lo > b.pi2.hi:
            return 1
        ka = key_a if key_a is not None else pi2_key(cf, a.x, a.y)
        kb = key_b if key_b is not None else pi2_key(cf, b.x, b.y)
        if ka == kb:
            return 0
        if bits > 8 * POINT_BITS:
            raise TieError("hyperbolic norms not separated after refinement",
                           [a.preimage, b.preimage])
        bits *= 2
        a = make_point(cf, a.x, a.y, a.k, bits)
        b = make_point(cf, b.x, b.y, b.k, bits)


def hyperbolic_from_relative(seq):
    """Filter relative minima (ordered by sup-norm) down to hyperbolic minima.

    A point survives when no earlier point has a smaller squared hyperbolic
    norm; exact equality (certified through pi2_key) counts as surviving.  The
    last survivor is flagged provisional unless a later relative minimum with
    a larger norm is present.
    """
    cf = seq.cf
    pts = seq.points
    kept = []
    best = None
    trailing_larger = False
    for pt in pts:
        if best is None:
            kept.append(pt)
            best = pt
            trailing_larger = False
            continue
        c = _pi2_cmp(cf, pt, best)
        if c <= 0:
            kept.append(pt)
            if c < 0:
                best = pt
            trailing_larger = False
        else:
            trailing_larger = True
    out = MinimaSequence(kept, "hyperbolic", seq.bound, seq.complete,
                         source=f"filter({seq.source})", cf=cf)
    out.provisional_last = bool(kept) and not trailing_larger
    return out


# -- brute force ----------------------------------------------------------------


class _Ambiguous(Exception):
    pass


def _theta_grid(cf, W):
    """Integers (Nlo, Nhi, D) with Nlo/D <= theta <= Nhi/D; exact for rationals."""
    if cf.is_rational:
        j = cf.last_index
        return cf.p[j], cf.p[j], cf.q[j]
    iv = enclose_affine(cf, 1, 0, bits=W + 4)
    D = mpz(1) << W
    return floor_rat(iv.lo * D), ceil_rat(iv.hi * D), D


def _abs_iv(lo, hi):
    if lo >= 0:
        return lo, hi
    if hi <= 0:
        return -hi, -lo
    return 0, max(-lo, hi)


class _Grid:
    """Scaled integer enclosures of lattice coordinates at one precision."""

    def __init__(self, cf, W):
        self.Nlo, self.Nhi, self.D = _theta_grid(cf, W)

    def coords(self, x, y):
        D = self.D
        if x >= 0:
            a = (x * self.Nlo - y * D, x * self.Nhi - y * D)
        else:
            a = (x * self.Nhi - y * D, x * self.Nlo - y * D)
        if y >= 0:
            b = (x * D + y * self.Nlo, x * D + y * self.Nhi)
        else:
            b = (x * D + y * self.Nhi, x * D + y * self.Nlo)
        return a, b

    def measures(self, x, y):
        """(|z1|, |z2|, sup, pi2) scaled by D, D, D, D^2 as integer pairs."""
        a, b = self.coords(x, y)
        a1, a2 = _abs_iv(*a), _abs_iv(*b)
        sup = (max(a1[0], a2[0]), max(a1[1], a2[1]))
        return a1, a2, sup, (a1[0] * a2[0], a1[1] * a2[1])


def _quadrant_candidates(cf, grid, T, prune, max_preimages):
    """Quadrant preimages (x >= 1, y >= 0) that may have sup <= T.

    With ``prune`` only points with pi2 <= 1 + theta^2 are kept; by Minkowski's
    theorem no relative minimum lies outside that region.
    """
    D = grid.D
    tlo, thi = mpq(grid.Nlo, D), mpq(grid.Nhi, D)
    if tlo <= 0:
        raise DomainError("theta enclosure must be positive")
    c = 1 + thi * thi
    xmax = floor_rat(T)
    budget = 0
    out = []
    for x in range(1, int(xmax) + 1):
        y_hi = floor_rat((T - x) / tlo)
        y_lo = max(0, ceil_rat(tlo * x - T))
        if prune:
            y_lo = max(y_lo, ceil_rat(tlo * x - c / x))
            y_hi = min(y_hi, floor_rat(thi * x + c / x))
        if y_hi < y_lo:
            continue
        budget += int(y_hi - y_lo + 1)
        if budget > max_preimages:
            raise BudgetExceeded("preimages", budget, max_preimages)
        for y in range(int(y_lo), int(y_hi) + 1):
            out.append((x, y))
    return out


def _certified_sort(items, keyfn, exact):
    """Sort by an integer-interval key and check adjacent items are separated.

    Items with exactly equal degenerate keys are allowed (rational theta);
    anything else overlapping triggers refinement.
    """
    items = sorted(items, key=lambda it: (keyfn(it)[0], keyfn(it)[1]))
    for u, w in zip(items, items[1:]):
        ku, kw = keyfn(u), keyfn(w)
        if ku[1] < kw[0]:
            continue
        if exact and ku == kw and ku[0] == ku[1]:
            continue
        raise _Ambiguous()
    return items


def _brute_once(cf, T, kind, W, prune, max_preimages):
    grid = _Grid(cf, W)
    exact = cf.is_rational
    TD = T * grid.D
    rows = []
    for x, y in _quadrant_candidates(cf, grid, T, prune, max_preimages):
        a1, a2, sup, pi2 = grid.measures(x, y)
        if sup[1] <= TD:
            rows.append((x, y, a1, a2, sup, pi2))
        elif sup[0] <= TD:
            raise _Ambiguous()
    if kind == "relative":
        # pairs of absolute coordinates for both members of the rotation orbit
        pairs = []
        for r in rows:
            pairs.append((r[2], r[3], (r[0], r[1])))
            pairs.append((r[3], r[2], (r[0], r[1])))
        pairs = _certified_sort(pairs, lambda p: p[0], exact)
        found = []
        m = None  # running min of second coordinate, as an interval
        i = 0
        while i < len(pairs):
            # group exactly equal first coordinates (rational theta only)
            j = i + 1
            while j < len(pairs) and exact and pairs[j][0] == pairs[i][0]:
                j += 1
            group = pairs[i:j]
            gmin = min(g[1][0] for g in group)
            for a, b, pre in group:
                if exact:
                    ok = (m is None or b[0] < m[0]) and b[0] == gmin
                elif m is None or b[1] < m[0]:
                    ok = True
                elif b[0] > m[1]:
                    ok = False
                else:
                    raise _Ambiguous()
                if ok:
                    found.append(pre)
            for a, b, pre in group:
                m = b if m is None else (min(m[0], b[0]), min(m[1], b[1]))
            i = j
        keys = []
        seen = set()
        for pre in found:
            if pre not in seen:
                seen.add(pre)
                keys.append(pre)
        order = {r[:2]: r[4] for r in rows}
        keys.sort(key=lambda pre: order[pre][0])
        return keys
    # hyperbolic: prefix minimum of pi2 along increasing sup
    rows = _certified_sort(rows, lambda r: r[4], exact)
    out = []
    best = None  # (pi2 interval, key)
    i = 0
    while i < len(rows):
        j = i + 1
        while j < len(rows) and exact and rows[j][4] == rows[i][4]:
            j += 1
        group = rows[i:j]
        if exact:
            gmin = min(r[5][0] for r in group)
            cur = gmin if best is None else min(best[0][0], gmin)
            for r in group:
                if r[5][0] == cur:
                    out.append((r[0], r[1]))
            best = ((cur, cur), None)
        else:
            (r,) = group
            if best is None or r[5][1] < best[0][0]:
                out.append((r[0], r[1]))
                best = (r[5], pi2_key(cf, r[0], r[1]))
            elif r[5][0] > best[0][1]:
                pass
            elif pi2_key(cf, r[0], r[1]) == best[1]:
                out.append((r[0], r[1]))
            else:
                raise _Ambiguous()
        i = j
    return out


def brute_preimages(cf, T, kind, prune=True, max_preimages=DEFAULT_MAX_PREIMAGES):
    """Quadrant preimages of the brute-force minima with sup <= T, by sup-norm."""
    _require_gt_one(cf)
    if kind not in ("relative", "hyperbolic"):
        raise ValueError(f"unknown minima kind {kind!r}")
    T = to_rat(T)
    for W in GRID_SCHEDULE:
        try:
            return _brute_once(cf, T, kind, W, prune, max_preimages)
        except _Ambiguous:
            continue
    raise TieError(f"comparisons undecided at 2^-{GRID_SCHEDULE[-1]} precision")


def brute_minima(cf, T, kind, prune=True, max_preimages=DEFAULT_MAX_PREIMAGES):
    """Exhaustive minima with sup-norm <= T (one representative per class)."""
    pres = brute_preimages(cf, T, kind, prune=prune, max_preimages=max_preimages)
    pts = [representative(cf, make_point(cf, x, y)) for x, y in pres]
    seq = MinimaSequence(pts, kind, to_rat(T), True, source="brute", cf=cf)
    if kind == "hyperbolic" and pts:
        # the last member is provisional unless a larger relative minimum
        # inside the bound has a larger norm
        rel = brute_preimages(cf, T, "relative", prune=prune, max_preimages=max_preimages)
        last = class_key(pts[-1].x, pts[-1].y)
        keys = [class_key(x, y) for x, y in rel]
        after = keys[keys.index(last) + 1:] if last in keys else []
        seq.provisional_last = not after
    return seq


def enumerate_box(cf, lambda1, lambda2, max_preimages=DEFAULT_MAX_PREIMAGES):
    """All nonzero lattice points with |z1| <= lambda1 and |z2| <= lambda2."""
    _require_gt_one(cf)
    l1, l2 = to_rat(lambda1), to_rat(lambda2)
    if l1 <= 0 or l2 <= 0:
        raise ValueError("box half-widths must be positive")
    for W in GRID_SCHEDULE:
        try:
            pres = _box_once(cf, l1, l2, W, max_preimages)
            break
        except _Ambiguous:
            continue
    else:
        raise TieError("box membership undecided after refinement")
    return [make_point(cf, x, y) for x, y in pres]


def _box_once(cf, l1, l2, W, max_preimages):
    grid = _Grid(cf, W)
    D = grid.D
    tlo, thi = mpq(grid.Nlo, D), mpq(grid.Nhi, D)
    # preimage = (theta*z1 + z2, theta*z2 - z1) / (1 + theta^2)
    xmax = floor_rat((thi * l1 + l2) / (1 + tlo * tlo))
    count = 0
    out = []
    L1, L2 = l1 * D, l2 * D
    for x in range(-int(xmax), int(xmax) + 1):
        if x >= 0:
            y_lo, y_hi = ceil_rat(tlo * x - l1), floor_rat(thi * x + l1)
        else:
            y_lo, y_hi = ceil_rat(thi * x - l1), floor_rat(tlo * x + l1)
        count += max(0, int(y_hi - y_lo + 1))
        if count > max_preimages:
            raise BudgetExceeded("preimages", count, max_preimages)
        for y in range(int(y_lo), int(y_hi) + 1):
            if x == 0 and y == 0:
                continue
            a1, a2, _, _ = grid.measures(x, y)
            if a1[1] <= L1 and a2[1] <= L2:
                out.append((x, y))
            elif a1[0] > L1 or a2[0] > L2:
                continue
            else:
                raise _Ambiguous()
    return out


def check_empty_parallelogram(cf, k, max_preimages=10**6):
    """True iff |x theta - y| <= |q_k theta - p_k|, |x| <= q_{k+1} has only the trivial points."""
    if not cf.ensure(k + 1):
        raise IndexError(f"convergent {k + 1} does not exist")
    q, p = cf.q[k], cf.p[k]
    q1, p1 = cf.q[k + 1], cf.p[k + 1]
    allowed = {(0, 0), (q, p), (-q, -p), (q1, p1), (-q1, -p1)}
    n = 2 * int(q1) + 1
    if n > max_preimages:
        raise BudgetExceeded("preimages", n, max_preimages)
    for W in GRID_SCHEDULE:
        try:
            return _parallelogram_once(cf, k, W, allowed)
        except _Ambiguous:
            continue
    raise TieError("parallelogram membership undecided after refinement")


def _parallelogram_once(cf, k, W, allowed):
    grid = _Grid(cf, W)
    D = grid.D
    q, p, q1 = cf.q[k], cf.p[k], cf.q[k + 1]
    delta = _abs_iv(*grid.coords(q, p)[0])
    tlo, thi = mpq(grid.Nlo, D), mpq(grid.Nhi, D)
    for x in range(-int(q1), int(q1) + 1):
        lo, hi = (tlo * x, thi * x) if x >= 0 else (thi * x, tlo * x)
        for y in range(int(floor_rat(lo)) - 1, int(ceil_rat(hi)) + 2):
            if (x, y) in allowed:
                continue
            a = _abs_iv(*grid.coords(x, y)[0])
            if a[1] <= delta[0]:
                return False
            if a[0] > delta[1]:
                continue
            if cf.is_rational:
                continue
            raise _Ambiguous()
    return True
