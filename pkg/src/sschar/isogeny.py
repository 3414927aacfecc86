"""Elliptic curves over tower levels: supersingularity, cyclic subgroups,
quotient isogenies, automorphisms.

Curves are short Weierstrass ``y^2 = x^3 + ax + b`` with ``p >= 5``.  The
engine enumerates the ``n+1`` cyclic subgroups of order ``n`` by factoring the
``n``-division polynomial over the curve's level and then grouping roots into
subgroups with the group law.  Torsion points live in quotient rings
``F_{p^k}[x]/(g)`` built directly from division-polynomial factors (with a
quadratic extension for the ``y``-coordinate when needed), so no large tower
levels are ever constructed.

Quotient maps are evaluated through their numerator/denominator polynomials,
whose coefficients always descend to the curve's level; this is what lets a
subgroup enumerated in one quotient ring be pushed through an isogeny whose
kernel lives in a different one.
"""

from __future__ import annotations

import random

from .galois import (
    DegreeCapExceeded,
    FPoly,
    FieldLevel,
    _derive_seed,
    _poly_squarefree_parts,
    _poly_factor_squarefree_monic,
    padd,
    pdivmod,
    peval,
    pgcd,
    pmonic,
    pmul,
    ppowmod,
    pscale,
    psub,
    ptrim,
)


class Curve:
    """Short Weierstrass curve over a tower level."""

    __slots__ = ("level", "a", "b")

    def __init__(self, level: FieldLevel, a, b):
        a = a if isinstance(a, tuple) else level.scalar(a)
        b = b if isinstance(b, tuple) else level.scalar(b)
        disc = level.add(
            level.mul_scalar(level.mul(a, level.mul(a, a)), 4),
            level.mul_scalar(level.mul(b, b), 27),
        )
        if level.is_zero(disc):
            raise ValueError("singular curve: 4a^3 + 27b^2 = 0")
        self.level = level
        self.a = a
        self.b = b

    def __eq__(self, other):
        return (
            isinstance(other, Curve)
            and self.level is other.level
            and self.a == other.a
            and self.b == other.b
        )

    def __hash__(self):
        return hash((self.level.k, self.a, self.b))

    def __repr__(self):
        return f"Curve(y^2 = x^3 + {self.a}x + {self.b} over {self.level!r})"

    def rhs(self, x):
        lv = self.level
        return lv.add(lv.add(lv.mul(x, lv.mul(x, x)), lv.mul(self.a, x)), self.b)


def j_invariant(e: Curve):
    """j = 1728 * 4a^3 / (4a^3 + 27b^2)."""
    lv = e.level
    a3 = lv.mul_scalar(lv.mul(e.a, lv.mul(e.a, e.a)), 4)
    disc = lv.add(a3, lv.mul_scalar(lv.mul(e.b, e.b), 27))
    return lv.mul(lv.mul_scalar(a3, 1728), lv.inv(disc))


def curve_from_j(level: FieldLevel, j) -> Curve:
    """The pinned canonical model for a given j-invariant.

    j not in {0, 1728}: (a, b) = (3j(1728-j), 2j(1728-j)^2); j = 0 gives
    (0, 1) and j = 1728 gives (1, 0).  All bookkeeping upstream happens on
    these models so isomorphism testing reduces to automorphism orbits.
    """
    j = j if isinstance(j, tuple) else level.scalar(j)
    if level.is_zero(j):
        return Curve(level, level.scalar(0), level.scalar(1))
    if j == level.scalar(1728):
        return Curve(level, level.scalar(1), level.scalar(0))
    t = level.sub(level.scalar(1728), j)
    a = level.mul_scalar(level.mul(j, t), 3)
    b = level.mul_scalar(level.mul(j, level.mul(t, t)), 2)
    return Curve(level, a, b)


def is_supersingular(e: Curve) -> bool:
    """Hasse-invariant test: x^(p-1) coefficient of (x^3+ax+b)^((p-1)/2)."""
    lv = e.level
    if lv.k > 2:
        raise ValueError("supersingularity test expects a curve over level <= 2")
    p = lv.p
    f = [e.b, e.a, lv.zero, lv.one]
    power = [lv.one]
    for _ in range((p - 1) // 2):
        power = pmul(power, f, lv)
    return len(power) <= p - 1 or lv.is_zero(power[p - 1])


# ---------------------------------------------------------------------------
# division polynomials
# ---------------------------------------------------------------------------


def division_kernel_poly(e: Curve, n: int) -> FPoly:
    """Monic polynomial whose roots are the x-coordinates of E[n] - {0}.

    Degree 3 for n = 2, degree (n^2-1)/2 for odd n (n must be prime to p).
    """
    lv = e.level
    if n % lv.p == 0:
        raise ValueError("n must be prime to the characteristic")
    if n == 2:
        return FPoly(lv, [e.b, e.a, lv.zero, lv.one])
    s = _division_poly_table(e, n)
    return FPoly(lv, pmonic(s[n], lv))


def _division_poly_table(e: Curve, n: int):
    """Division polynomials with the 2y factor of even indices stripped.

    Returns s with psi_m = s[m] * (2y)^(m even); the recurrences below follow
    from the classical ones after substituting (2y)^2 = 4(x^3+ax+b).
    """
    lv = e.level
    a, b = e.a, e.b
    f4 = [lv.mul_scalar(c, 4) for c in (b, a, lv.zero, lv.one)]  # (2y)^2
    s = {0: [], 1: [lv.one], 2: [lv.one]}
    s[3] = ptrim(
        [
            lv.neg(lv.mul(a, a)),
            lv.mul_scalar(b, 12),
            lv.mul_scalar(a, 6),
            lv.zero,
            lv.scalar(3),
        ],
        lv,
    )
    a2 = lv.mul(a, a)
    a3 = lv.mul(a2, a)
    b2 = lv.mul(b, b)
    s[4] = ptrim(
        [
            lv.mul_scalar(lv.add(lv.mul_scalar(b2, 8), a3), -2),
            lv.mul_scalar(lv.mul(a, b), -8),
            lv.mul_scalar(a2, -10),
            lv.mul_scalar(b, 40),
            lv.mul_scalar(a, 10),
            lv.zero,
            lv.scalar(2),
        ],
        lv,
    )

    def get(m):
        if m in s:
            return s[m]
        if m % 2:
            k = (m - 1) // 2
            t1 = pmul(get(k + 2), pmul(get(k), pmul(get(k), get(k), lv), lv), lv)
            t2 = pmul(get(k - 1), pmul(get(k + 1), pmul(get(k + 1), get(k + 1), lv), lv), lv)
            ff = pmul(f4, f4, lv)
            if k % 2 == 0:
                val = psub(pmul(t1, ff, lv), t2, lv)
            else:
                val = psub(t1, pmul(t2, ff, lv), lv)
        else:
            k = m // 2
            t1 = pmul(get(k + 2), pmul(get(k - 1), get(k - 1), lv), lv)
            t2 = pmul(get(k - 2), pmul(get(k + 1), get(k + 1), lv), lv)
            val = pmul(get(k), psub(t1, t2, lv), lv)
        s[m] = val
        return val

    get(n)
    return s


# ---------------------------------------------------------------------------
# quotient rings hosting torsion points
# ---------------------------------------------------------------------------


class QuotientRing:
    """``level[x]/(g)`` for monic irreducible ``g``: the field F_{p^(k deg g)}.

    Elements are tuples of ``deg g`` level elements.  Implements the same
    arithmetic protocol as :class:`~sschar.galois.FieldLevel`, so the generic
    polynomial helpers work over it unchanged.
    """

    def __init__(self, base: FieldLevel, modulus):
        self.base = base
        self.tower = base.tower
        self.p = base.p
        self.m = len(modulus) - 1
        self.k = base.k * self.m
        self.modulus = tuple(modulus)
        self.zero = (base.zero,) * self.m
        self.one = (base.one,) + (base.zero,) * (self.m - 1) if self.m else ()
        self.gen = ((base.zero, base.one) + (base.zero,) * (self.m - 2)) if self.m >= 2 else self.one
        red = []
        cur = [base.neg(c) for c in modulus[: self.m]]
        for _ in range(max(0, self.m - 1)):
            red.append(tuple(cur))
            lead = cur[-1]
            cur = [base.zero] + cur[:-1]
            if not base.is_zero(lead):
                cur = [base.add(x, base.mul(lead, y)) for x, y in zip(cur, red[0])]
        self._red = red

    def scalar(self, c: int):
        return (self.base.scalar(c),) + (self.base.zero,) * (self.m - 1)

    def from_base(self, c):
        return (c,) + (self.base.zero,) * (self.m - 1)

    def to_base(self, z):
        """Project to the base level; None if z is not a constant."""
        if all(self.base.is_zero(c) for c in z[1:]):
            return z[0]
        return None

    def add(self, x, y):
        b = self.base
        return tuple(b.add(u, v) for u, v in zip(x, y))

    def sub(self, x, y):
        b = self.base
        return tuple(b.sub(u, v) for u, v in zip(x, y))

    def neg(self, x):
        b = self.base
        return tuple(b.neg(u) for u in x)

    def mul(self, x, y):
        b, m = self.base, self.m
        if m == 1:
            return (b.mul(x[0], y[0]),)
        conv = [b.zero] * (2 * m - 1)
        for i, xi in enumerate(x):
            if not b.is_zero(xi):
                for j, yj in enumerate(y):
                    conv[i + j] = b.add(conv[i + j], b.mul(xi, yj))
        out = list(conv[:m])
        for i in range(2 * m - 2, m - 1, -1):
            c = conv[i]
            if not b.is_zero(c):
                red = self._red[i - m]
                for j in range(m):
                    out[j] = b.add(out[j], b.mul(c, red[j]))
        return tuple(out)

    def mul_scalar(self, x, c: int):
        b = self.base
        return tuple(b.mul_scalar(u, c) for u in x)

    def square(self, x):
        return self.mul(x, x)

    def pow(self, x, n: int):
        if n < 0:
            return self.pow(self.inv(x), -n)
        result = self.one
        base = x
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def inv(self, x):
        if self.is_zero(x):
            raise ZeroDivisionError("inverse of zero")
        b = self.base
        if self.m == 1:
            return (b.inv(x[0]),)
        r0 = [c for c in self.modulus]
        r1 = list(x)
        while r1 and b.is_zero(r1[-1]):
            r1.pop()
        s0, s1 = [], [b.one]
        while len(r1) > 1:
            q, rem = pdivmod(r0, r1, b)
            r0, r1 = r1, rem
            s0, s1 = s1, psub(s0, pmul(q, s1, b), b)
        if not r1:
            raise ZeroDivisionError("not invertible (modulus not irreducible?)")
        c = b.inv(r1[0])
        out = [b.mul(u, c) for u in s1]
        out += [b.zero] * (self.m - len(out))
        return tuple(out[: self.m])

    def is_zero(self, x):
        b = self.base
        return all(b.is_zero(u) for u in x)

    def __repr__(self):
        return f"QuotientRing(deg {self.m} over {self.base!r})"


class QuadExt:
    """``ring[y]/(y^2 - s)`` for a non-square ``s``: a quadratic extension.

    Elements are pairs ``(u, v)`` standing for ``u + v*y``.
    """

    def __init__(self, ring, s):
        self.ring = ring
        self.p = ring.p
        self.k = 2 * ring.k
        self.s = s
        self.zero = (ring.zero, ring.zero)
        self.one = (ring.one, ring.zero)
        self.y = (ring.zero, ring.one)

    def from_ring(self, u):
        return (u, self.ring.zero)

    def to_ring(self, z):
        return z[0] if self.ring.is_zero(z[1]) else None

    def add(self, x, y):
        r = self.ring
        return (r.add(x[0], y[0]), r.add(x[1], y[1]))

    def sub(self, x, y):
        r = self.ring
        return (r.sub(x[0], y[0]), r.sub(x[1], y[1]))

    def neg(self, x):
        r = self.ring
        return (r.neg(x[0]), r.neg(x[1]))

    def mul(self, x, y):
        r = self.ring
        u = r.add(r.mul(x[0], y[0]), r.mul(self.s, r.mul(x[1], y[1])))
        v = r.add(r.mul(x[0], y[1]), r.mul(x[1], y[0]))
        return (u, v)

    def mul_scalar(self, x, c: int):
        r = self.ring
        return (r.mul_scalar(x[0], c), r.mul_scalar(x[1], c))

    def square(self, x):
        return self.mul(x, x)

    def inv(self, x):
        r = self.ring
        norm = r.sub(r.mul(x[0], x[0]), r.mul(self.s, r.mul(x[1], x[1])))
        ninv = r.inv(norm)
        return (r.mul(x[0], ninv), r.neg(r.mul(x[1], ninv)))

    def is_zero(self, x):
        return self.ring.is_zero(x[0]) and self.ring.is_zero(x[1])


def _ring_sqrt(ring, s, seed_tag):
    """Square root of s in the ring (a finite field), or None."""
    if ring.is_zero(s):
        return ring.zero
    q = ring.p**ring.k
    if ring.pow(s, (q - 1) // 2) != ring.one:
        return None
    if q % 4 == 3:
        return ring.pow(s, (q + 1) // 4)
    # Tonelli-Shanks with a deterministic non-residue search
    qq = q - 1
    e = 0
    while qq % 2 == 0:
        qq //= 2
        e += 1
    rng = random.Random(_derive_seed("sqrt", seed_tag, ring.p, ring.k))
    while True:
        n = _ring_random(ring, rng)
        if not ring.is_zero(n) and ring.pow(n, (q - 1) // 2) != ring.one:
            break
    z = ring.pow(n, qq)
    x = ring.pow(s, (qq + 1) // 2)
    t = ring.pow(s, qq)
    m = e
    while t != ring.one:
        c, i = ring.square(t), 1
        while c != ring.one:
            c = ring.square(c)
            i += 1
        bpow = ring.pow(z, 1 << (m - i - 1))
        x = ring.mul(x, bpow)
        z = ring.square(bpow)
        t = ring.mul(t, z)
        m = i
    return x


def _ring_random(ring, rng):
    if isinstance(ring, FieldLevel):
        return tuple(rng.randrange(ring.p) for _ in range(ring.k))
    base = ring.base
    return tuple(tuple(rng.randrange(ring.p) for _ in range(base.k)) for _ in range(ring.m))


def _ring_poly_roots(ring, g, seed_tag):
    """All roots in the ring of a monic polynomial that splits completely."""
    g = pmonic(list(g), ring)
    if len(g) == 1:
        return []
    if len(g) == 2:
        return [ring.neg(g[0])]
    q = ring.p**ring.k
    rng = random.Random(_derive_seed("rroots", seed_tag, ring.p, ring.k, len(g)))
    # Cantor-Zassenhaus splitting straight to linear factors.
    while True:
        r = [_ring_random(ring, rng) for _ in range(len(g) - 1)]
        r = ptrim(r, ring)
        if len(r) < 1:
            continue
        t = ppowmod(r, (q - 1) // 2, g, ring)
        h = pgcd(psub(t, [ring.one], ring), g, ring)
        if 0 < len(h) - 1 < len(g) - 1:
            return _ring_poly_roots(ring, h, seed_tag + 1) + _ring_poly_roots(
                ring, pdivmod(g, h, ring)[0], seed_tag + 2
            )


# -- affine point arithmetic over any ring-like field -----------------------


def _pt_add(ring, a_coeff, P, Q):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if ring.is_zero(ring.add(y1, y2)):
            return None
        num = ring.add(ring.mul_scalar(ring.mul(x1, x1), 3), a_coeff)
        lam = ring.mul(num, ring.inv(ring.mul_scalar(y1, 2)))
    else:
        lam = ring.mul(ring.sub(y2, y1), ring.inv(ring.sub(x2, x1)))
    x3 = ring.sub(ring.sub(ring.mul(lam, lam), x1), x2)
    y3 = ring.sub(ring.mul(lam, ring.sub(x1, x3)), y1)
    return (x3, y3)


def _pt_mul(ring, a_coeff, P, k):
    R = None
    Q = P
    while k:
        if k & 1:
            R = _pt_add(ring, a_coeff, R, Q)
        Q = _pt_add(ring, a_coeff, Q, Q)
        k >>= 1
    return R


# ---------------------------------------------------------------------------
# cyclic subgroups
# ---------------------------------------------------------------------------


class CyclicSubgroup:
    """Order-n cyclic subgroup with its kernel polynomial.

    ``kernel_poly`` is monic of degree (n-1)/2 for odd n (one root per
    point pair) and degree 1 for n = 2.  ``ring`` and ``roots`` record where
    the x-coordinates actually live, for later isogeny evaluation.
    """

    __slots__ = ("curve", "order", "kernel_poly", "ring", "roots")

    def __init__(self, curve: Curve, order: int, kernel_poly: FPoly, ring=None, roots=None):
        self.curve = curve
        self.order = order
        self.kernel_poly = kernel_poly
        self.ring = ring
        self.roots = roots

    def __repr__(self):
        return f"CyclicSubgroup(order {self.order} on j={j_invariant(self.curve)})"

    def ensure_roots(self):
        """Recompute the root list in a quotient ring if it was not retained."""
        if self.roots is not None:
            return self
        lv = self.kernel_poly.level
        coeffs = list(self.kernel_poly.coeffs)
        fac = sorted(
            (g for g, _ in _split_into_irreducibles(coeffs, lv)),
            key=lambda g: (len(g), [lv.sort_key(c) for c in g]),
        )
        host = max(fac, key=len)
        if any((len(host) - 1) % (len(g) - 1) for g in fac):
            raise ArithmeticError("kernel roots do not live in a single quotient ring")
        ring = QuotientRing(lv, host) if len(host) > 2 else lv
        roots = []
        for g in fac:
            gg = [ring.from_base(c) if isinstance(ring, QuotientRing) else c for c in g]
            roots.extend(_ring_poly_roots(ring, gg, seed_tag=len(g)))
        self.ring = ring
        self.roots = sorted(roots)
        return self


def _split_into_irreducibles(coeffs, lv):
    out = []
    for g, mult in _poly_squarefree_parts(list(coeffs), lv):
        for irr in _poly_factor_squarefree_monic(g, lv):
            out.append((irr, mult))
    out.sort(key=lambda pair: (len(pair[0]), [lv.sort_key(c) for c in pair[0]]))
    return out


def cyclic_subgroups(e: Curve, n: int):
    """All n+1 cyclic subgroups of order n (n prime, n != p).

    Factors the n-division polynomial over the curve's level, lifts one point
    per undiscovered subgroup into a quotient ring (extending quadratically
    for y when needed), and closes each subgroup under the group law.
    """
    lv = e.level
    if n == 2:
        return _two_subgroups(e)
    psi = division_kernel_poly(e, n)
    fac = _split_into_irreducibles(list(psi.coeffs), lv)
    if any(m != 1 for _, m in fac):
        raise ArithmeticError("division polynomial is not squarefree")
    degs = sorted({len(g) - 1 for g, _ in fac})
    dmax = max(degs)
    if any(dmax % d for d in degs):
        raise DegreeCapExceeded(
            f"torsion fields of degrees {degs} have no common host ring at level {lv.k}"
        )
    cap = lv.tower.degree_cap
    if cap is not None and 2 * lv.k * dmax > cap:
        raise DegreeCapExceeded(
            f"order-{n} torsion needs degree {2 * lv.k * dmax} > cap {cap} (p={lv.p})"
        )
    host = max((g for g, _ in fac), key=len)
    ring = QuotientRing(lv, host) if dmax > 1 else lv

    def lift(g):
        if isinstance(ring, QuotientRing):
            return [ring.from_base(c) for c in g]
        return list(g)

    remaining = [g for g, _ in fac]
    subgroups = []
    d = (n - 1) // 2
    while remaining:
        g = remaining.pop(0)
        if len(g) - 1 == dmax and isinstance(ring, QuotientRing) and g == list(host):
            roots_g = [ring.gen]
        else:
            roots_g = [_ring_poly_roots(ring, lift(g), seed_tag=len(subgroups))[0]]
        x0 = roots_g[0]
        s = peval([lift_scalar(ring, c) for c in (e.b, e.a, lv.zero, lv.one)], x0, ring)
        y0 = _ring_sqrt(ring, s, seed_tag=len(subgroups))
        if y0 is not None:
            pring, a_coeff = ring, lift_scalar(ring, e.a)
            P = (x0, y0)
            embed = lambda z: z
            unembed = lambda z: z
        else:
            ext = QuadExt(ring, s)
            pring = ext
            a_coeff = ext.from_ring(lift_scalar(ring, e.a))
            P = (ext.from_ring(x0), ext.y)
            embed = ext.from_ring
            unembed = ext.to_ring
        xs = [x0]
        Q = P
        for _ in range(2, d + 1):
            Q = _pt_add(pring, a_coeff, Q, P)
            xq = unembed(Q[0])
            if xq is None:
                raise ArithmeticError("torsion multiple left the x-coordinate field")
            xs.append(xq)
        # kernel polynomial = prod (X - x_i) over the ring, then descend
        poly = [ring.one]
        for x in xs:
            poly = pmul(poly, [ring.neg(x), ring.one], ring)
        sub = CyclicSubgroup(
            e, n, _descend_poly(poly, ring, lv), ring=ring, roots=sorted(xs)
        )
        subgroups.append(sub)
        # retire every factor whose roots were just covered
        still = []
        for h in remaining:
            hh = lift(h)
            if not any(ring.is_zero(peval(hh, x, ring)) for x in xs):
                still.append(h)
        remaining = still
    if len(subgroups) != n + 1:
        raise ArithmeticError(f"found {len(subgroups)} subgroups of order {n}, expected {n + 1}")
    subgroups.sort(key=lambda s: s.kernel_poly.coeffs)
    return subgroups


def lift_scalar(ring, c):
    return ring.from_base(c) if isinstance(ring, QuotientRing) else c


def _descend_poly(poly, ring, lv) -> FPoly:
    """Project a ring polynomial with base-level coefficients down to lv."""
    if not isinstance(ring, QuotientRing):
        return FPoly(lv, list(poly))
    out = []
    for c in poly:
        base = ring.to_base(c)
        if base is None:
            # kernel not rational over the curve's level: realize it over the
            # tower level of matching degree instead.
            return _descend_poly_to_tower(poly, ring, lv)
        out.append(base)
    return FPoly(lv, out)


def _descend_poly_to_tower(poly, ring: QuotientRing, lv: FieldLevel) -> FPoly:
    big = lv.tower.build_level(lv.k * ring.m)
    from .galois import _poly_roots

    mod = [big.embed_from(lv, c) for c in ring.modulus]
    roots = _poly_roots(mod, big)
    root = roots[0][0]
    out = []
    for c in poly:
        img = big.zero
        for coeff in reversed(c):
            img = big.add(big.mul(img, root), big.embed_from(lv, coeff))
        out.append(img)
    return FPoly(big, out)


def _two_subgroups(e: Curve):
    lv = e.level
    cubic = [e.b, e.a, lv.zero, lv.one]
    fac = _split_into_irreducibles(cubic, lv)
    subs = []
    for g, _ in fac:
        d = len(g) - 1
        if d == 1:
            root = lv.neg(g[0])
            subs.append(
                CyclicSubgroup(e, 2, FPoly(lv, [lv.neg(root), lv.one]), ring=lv, roots=[root])
            )
        else:
            cap = lv.tower.degree_cap
            if cap is not None and lv.k * d > cap:
                raise DegreeCapExceeded(f"2-torsion needs degree {lv.k * d} > cap {cap}")
            big = lv.tower.build_level(lv.k * d)
            from .galois import _poly_roots

            gg = [big.embed_from(lv, c) for c in g]
            for root, _ in _poly_roots(gg, big):
                subs.append(
                    CyclicSubgroup(
                        e, 2, FPoly(big, [big.neg(root), big.one]), ring=big, roots=[root]
                    )
                )
    if len(subs) != 3:
        raise ArithmeticError("expected exactly three 2-subgroups")
    subs.sort(key=lambda s: (s.kernel_poly.level.k, s.kernel_poly.coeffs))
    return subs


# ---------------------------------------------------------------------------
# quotient isogenies
# ---------------------------------------------------------------------------


class RationalMap:
    """x-coordinate map of an isogeny, as numerator/denominator polynomials."""

    __slots__ = ("level", "num", "den")

    def __init__(self, level: FieldLevel, num: FPoly, den: FPoly):
        self.level = level
        self.num = num
        self.den = den

    @property
    def degree(self) -> int:
        return max(self.num.degree, self.den.degree)

    def evaluate(self, x):
        lv = self.level
        d = self.den.evaluate(x)
        if lv.is_zero(d):
            raise ZeroDivisionError("evaluation at a kernel point")
        return lv.mul(self.num.evaluate(x), lv.inv(d))

    def evaluate_in_ring(self, ring, x):
        num = [lift_scalar(ring, c) for c in self.num.coeffs]
        den = [lift_scalar(ring, c) for c in self.den.coeffs]
        dv = peval(den, x, ring)
        if ring.is_zero(dv):
            raise ZeroDivisionError("evaluation at a kernel point")
        return ring.mul(peval(num, x, ring), ring.inv(dv))

    def compose(self, inner: "RationalMap") -> "RationalMap":
        """self o inner, reduced by the gcd of numerator and denominator."""
        lv = self.level
        n_in, d_in = list(inner.num.coeffs), list(inner.den.coeffs)
        deg = max(self.num.degree, self.den.degree)
        pow_d = [[lv.one]]
        for _ in range(deg):
            pow_d.append(pmul(pow_d[-1], d_in, lv))
        # f(n/d) * d^deg is a polynomial for both f = num and f = den; the
        # common d^deg factor cancels in the quotient.
        expanded = []
        for coeffs in (self.num.coeffs, self.den.coeffs):
            acc = []
            npow = [lv.one]
            for i, c in enumerate(coeffs):
                acc = padd(acc, pscale(pmul(npow, pow_d[deg - i], lv), c, lv), lv)
                npow = pmul(npow, n_in, lv)
            expanded.append(acc)
        num, den = expanded
        g = pgcd(num, den, lv)
        if len(g) > 1:
            num = pdivmod(num, g, lv)[0]
            den = pdivmod(den, g, lv)[0]
        return RationalMap(lv, FPoly(lv, num), FPoly(lv, den))

    def __repr__(self):
        return f"RationalMap(deg {self.degree} over {self.level!r})"


def velu(e: Curve, c: CyclicSubgroup):
    """Quotient curve E/C and the degree-n x-coordinate map.

    The image coefficients come from the power sums of the kernel roots
    (Velu's formulas in short Weierstrass form); the x-map is

        x' = x + sum over kernel x-coords of [2t_i/(x-x_i) + 2u_i/(x-x_i)^2]

    with t_i = 3x_i^2 + a and u_i = 2(x_i^3 + a x_i + b), the order-2 point
    entering once with u = 0.
    """
    lv = c.kernel_poly.level
    a = lv.embed_from(e.level, e.a) if lv is not e.level else e.a
    b = lv.embed_from(e.level, e.b) if lv is not e.level else e.b
    h = c.kernel_poly
    d = h.degree
    if c.order == 2:
        x0 = lv.neg(h.coeffs[0])
        t = lv.add(lv.mul_scalar(lv.mul(x0, x0), 3), a)
        w = lv.mul(t, x0)
        a2 = lv.sub(a, lv.mul_scalar(t, 5))
        b2 = lv.sub(b, lv.mul_scalar(w, 7))
        # x' = (x^2 - x0 x + t) / (x - x0)
        num = FPoly(lv, [t, lv.neg(x0), lv.one])
        den = FPoly(lv, [lv.neg(x0), lv.one])
        return Curve(lv, a2, b2), RationalMap(lv, num, den)
    # power sums from the monic kernel polynomial (Newton's identities)
    es = [lv.one] + [lv.zero] * max(d, 3)
    for i in range(1, d + 1):
        es[i] = lv.mul_scalar(h.coeffs[d - i], (-1) ** i)
    p1 = es[1]
    p2 = lv.sub(lv.mul(es[1], es[1]), lv.mul_scalar(es[2], 2))
    p3 = lv.add(
        lv.sub(lv.mul(es[1], lv.mul(es[1], es[1])), lv.mul_scalar(lv.mul(es[1], es[2]), 3)),
        lv.mul_scalar(es[3], 3),
    )
    t_sum = lv.add(lv.mul_scalar(p2, 6), lv.mul_scalar(a, 2 * d))  # sum over C* of t_Q
    w_sum = lv.add(
        lv.add(lv.mul_scalar(p3, 10), lv.mul_scalar(lv.mul(a, p1), 6)),
        lv.mul_scalar(b, 4 * d),
    )  # sum over C* of (u_Q + t_Q x_Q)
    a2 = lv.sub(a, lv.mul_scalar(t_sum, 5))
    b2 = lv.sub(b, lv.mul_scalar(w_sum, 7))
    image = Curve(lv, a2, b2)
    num, den = _velu_xmap(e, c, a, b)
    return image, RationalMap(lv, num, den)


def _velu_xmap(e: Curve, c: CyclicSubgroup, a, b):
    """Numerator/denominator of the x-map, via the kernel roots."""
    c.ensure_roots()
    ring = c.ring
    lv = c.kernel_poly.level
    if isinstance(ring, QuotientRing):
        aa, bb = ring.from_base(a), ring.from_base(b)
        h = [ring.from_base(cc) for cc in c.kernel_poly.coeffs]
    else:
        aa, bb = a, b
        h = list(c.kernel_poly.coeffs)
    h2 = pmul(h, h, ring)
    num = pmul([ring.zero, ring.one], h2, ring)  # x * h^2
    for x in c.roots:
        t = ring.add(ring.mul_scalar(ring.mul(x, x), 3), aa)
        u = ring.mul_scalar(
            ring.add(ring.add(ring.mul(x, ring.mul(x, x)), ring.mul(aa, x)), bb), 2
        )
        lin = [ring.neg(x), ring.one]
        h_over = pdivmod(h, lin, ring)[0]
        num = padd(num, pscale(pmul(h_over, h, ring), ring.mul_scalar(t, 2), ring), ring)
        num = padd(num, pscale(pmul(h_over, h_over, ring), ring.mul_scalar(u, 2), ring), ring)
    if isinstance(ring, QuotientRing):
        num_lv = []
        for cc in num:
            base = ring.to_base(cc)
            if base is None:
                raise ArithmeticError("x-map coefficients failed to descend")
            num_lv.append(base)
        num = num_lv
        den = [cc for cc in pmul(list(c.kernel_poly.coeffs), list(c.kernel_poly.coeffs), lv)]
    else:
        den = pmul(h, h, ring)
    return FPoly(lv, num), FPoly(lv, den)


def push_subgroup(x_map: RationalMap, c: CyclicSubgroup, target: Curve) -> CyclicSubgroup:
    """Image of ``c`` under an isogeny of degree coprime to its order.

    The kernel roots of ``c`` are mapped through the x-map inside their own
    quotient ring; the image polynomial descends to the target's level.
    """
    c.ensure_roots()
    ring = c.ring
    images = sorted(x_map.evaluate_in_ring(ring, x) for x in c.roots)
    poly = [ring.one]
    for w in images:
        poly = pmul(poly, [ring.neg(w), ring.one], ring)
    lv = c.kernel_poly.level
    kp = _descend_poly(poly, ring, lv) if isinstance(ring, QuotientRing) else FPoly(lv, poly)
    return CyclicSubgroup(target, c.order, kp, ring=ring, roots=images)


def automorphism_count(e: Curve, c: CyclicSubgroup | None = None) -> int:
    """|Aut| of the curve, or of the pair (curve, subgroup): 6, 4 or 2.

    For p >= 5 the extra automorphisms exist only at j = 0 (order 6, acting
    on x by cube roots of unity) and j = 1728 (order 4, acting by x -> -x);
    with a subgroup present only those automorphisms preserving it count.
    """
    lv = e.level
    j = j_invariant(e)
    if lv.is_zero(j):
        if c is None:
            return 6
        return 6 if _kernel_stable_under_scaling(c, _zeta3(lv)) else 2
    if j == lv.scalar(1728):
        if c is None:
            return 4
        return 4 if _kernel_stable_under_scaling(c, lv.scalar(-1)) else 2
    return 2


def _zeta3(lv: FieldLevel):
    """A primitive cube root of unity; lives in level 2 for every p >= 5."""
    if lv.p % 3 == 1:
        base = lv
    else:
        base = lv if lv.k % 2 == 0 else lv.tower.build_level(2 * lv.k)
    from .galois import _poly_roots

    roots = _poly_roots([base.one, base.one, base.one], base)  # x^2 + x + 1
    if not roots:
        raise ArithmeticError("no cube root of unity found")
    zeta = roots[0][0]
    if base is not lv:
        proj = None  # caller's level lacks zeta3; scaling test happens upstairs
        return (base, zeta)
    return (lv, zeta)


def _kernel_stable_under_scaling(c: CyclicSubgroup, scale) -> bool:
    """Does x -> s*x map the kernel polynomial's root set to itself?"""
    kp = c.kernel_poly
    lv = kp.level
    if isinstance(scale, tuple) and len(scale) == 2 and isinstance(scale[0], FieldLevel):
        big, s = scale
        coeffs = [big.embed_from(lv, cc) for cc in kp.coeffs]
        lv = big
    else:
        s, coeffs = scale, list(kp.coeffs)
    d = len(coeffs) - 1
    # f(s^-1 X) * s^d must equal f up to the monic normalization
    sinv = lv.inv(s)
    scaled = [lv.mul(cc, lv.pow(sinv, i)) for i, cc in enumerate(coeffs)]
    scaled = pscale(scaled, lv.pow(s, d), lv)
    return ptrim(scaled, lv) == ptrim(list(coeffs), lv)


def scale_kernel_poly(kp: FPoly, u2) -> FPoly:
    """Kernel polynomial after the model change x -> u2 * x."""
    lv = kp.level
    d = kp.degree
    out = [lv.mul(c, lv.pow(u2, d - i)) for i, c in enumerate(kp.coeffs)]
    return FPoly(lv, out)


def isomorphism_scaling(src: Curve, dst: Curve):
    """u^2 with (dst.a, dst.b) = (u^4 src.a, u^6 src.b); same j required.

    For j = 0 and j = 1728 the value may live in a degree-3 or degree-2
    extension; the returned element then belongs to that bigger level (any
    choice differs from the others by an automorphism of dst).
    """
    lv = src.level
    if lv is not dst.level:
        raise ValueError("curves must share a level")
    ja, jb = j_invariant(src), j_invariant(dst)
    if ja != jb:
        raise ValueError("curves are not isomorphic over the algebraic closure")
    if lv.is_zero(src.a):  # j = 0
        t = lv.mul(dst.b, lv.inv(src.b))
        from .galois import nth_root_in_tower

        u2, lvl = nth_root_in_tower(t, 3, lv)
        return u2, lvl
    if lv.is_zero(src.b):  # j = 1728
        t = lv.mul(dst.a, lv.inv(src.a))
        from .galois import sqrt_in_tower

        u2, lvl = sqrt_in_tower(t, lv)
        return u2, lvl
    u2 = lv.mul(lv.mul(dst.b, src.a), lv.inv(lv.mul(src.b, dst.a)))
    if lv.mul(u2, u2) != lv.mul(dst.a, lv.inv(src.a)):
        raise ArithmeticError("scaling consistency check failed")
    if lv.mul(u2, lv.mul(u2, u2)) != lv.mul(dst.b, lv.inv(src.b)):
        raise ArithmeticError("scaling consistency check failed")
    return u2, lv


def transport_subgroup(c: CyclicSubgroup, dst: Curve) -> CyclicSubgroup:
    """Re-express a subgroup on an isomorphic model ``dst``.

    Only the kernel polynomial is transported (root data does not move
    between rings); the result is suitable for canonicalization and identity
    tests, not for further pushing.
    """
    src = c.curve
    lv = src.level
    u2, lvl = isomorphism_scaling(src, dst)
    kp = c.kernel_poly
    if lvl is lv:
        return CyclicSubgroup(dst, c.order, scale_kernel_poly(kp, u2))
    # u^2 lives upstairs: scale there and project back down.
    coeffs = [lvl.embed_from(lv, cc) for cc in kp.coeffs]
    d = len(coeffs) - 1
    scaled = [lvl.mul(cc, lvl.pow(u2, d - i)) for i, cc in enumerate(coeffs)]
    out = []
    for cc in scaled:
        low = lvl.project_to(lv, cc)
        if low is None:
            raise ArithmeticError("transported kernel failed to descend")
        out.append(low)
    return CyclicSubgroup(dst, c.order, FPoly(lv, out))


def canonical_kernel_poly(e: Curve, kp: FPoly) -> FPoly:
    """Lexicographically least polynomial in the Aut(e)-orbit of ``kp``."""
    lv = kp.level
    j = j_invariant(e)
    candidates = [kp]
    if lv.is_zero(j):
        zl, zeta = _zeta3(lv)
        if zl is lv:
            z2 = lv.mul(zeta, zeta)
            candidates.append(scale_kernel_poly(kp, zeta))
            candidates.append(scale_kernel_poly(kp, z2))
    elif j == lv.scalar(1728):
        candidates.append(scale_kernel_poly(kp, lv.scalar(-1)))
    key = lambda f: tuple(lv.sort_key(c) for c in f.coeffs)
    return min(candidates, key=key)
