"""Finite prime fields and extension towers, with polynomial factorization.

A :class:`FieldTower` over a prime ``p`` holds one level per extension degree
``k`` actually built; level ``k`` is ``F_p[x]/(f_k)`` for the lexicographically
least monic irreducible ``f_k`` of degree ``k``, so towers are reproducible
across runs.  Elements of level ``k`` are plain tuples of ``k`` ints in
``[0, p)`` (coefficients in the power basis of the generator); tuples hash and
compare for free, which the isogeny layer leans on heavily.

Embeddings between comparable levels are chosen compatibly: when a level is
created, the embedding from each existing divisor level is picked as the
lexicographically least root of the sub-level's modulus that agrees with all
embeddings already fixed, so composites along any chain coincide.

Equal-degree splitting uses a deterministic pseudo-random element stream
seeded from the tower seed and the polynomial being split; the seed is part of
the cache metadata upstream.
"""

from __future__ import annotations

import hashlib
import itertools
import random


class DegreeCapExceeded(Exception):
    """An extension beyond the configured degree cap was requested."""


def _derive_seed(*parts) -> int:
    h = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(h[:8], "big")


class FieldLevel:
    """One level of a tower: the field with p^k elements."""

    def __init__(self, tower: "FieldTower", k: int, modulus):
        self.tower = tower
        self.p = tower.p
        self.k = k
        self.modulus = tuple(modulus)  # length k+1, monic, over F_p
        self.zero = (0,) * k
        self.one = (1,) + (0,) * (k - 1) if k else ()
        self.gen = ((0, 1) + (0,) * (k - 2)) if k >= 2 else self.one
        # reduction table: x^(k+i) mod modulus for i = 0..k-2
        self._red = []
        cur = [(-c) % self.p for c in self.modulus[:k]]
        for _ in range(max(0, k - 1)):
            self._red.append(tuple(cur))
            cur = [0] + cur
            lead = cur[k]
            cur = cur[:k]
            if lead:
                top = self._red[0]
                cur = [(a + lead * b) % self.p for a, b in zip(cur, top)]
        self._embed_images = {}  # src degree -> image of src generator here
        self._project_cache = {}

    # -- element arithmetic -------------------------------------------------

    def scalar(self, c: int):
        return ((c % self.p),) + (0,) * (self.k - 1)

    def add(self, a, b):
        p = self.p
        return tuple((x + y) % p for x, y in zip(a, b))

    def sub(self, a, b):
        p = self.p
        return tuple((x - y) % p for x, y in zip(a, b))

    def neg(self, a):
        p = self.p
        return tuple((-x) % p for x in a)

    def mul(self, a, b):
        p, k = self.p, self.k
        if k == 1:
            return ((a[0] * b[0]) % p,)
        conv = [0] * (2 * k - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    conv[i + j] += ai * bj
        out = [c % p for c in conv[:k]]
        for i in range(2 * k - 2, k - 1, -1):
            c = conv[i] % p
            if c:
                red = self._red[i - k]
                for j in range(k):
                    out[j] = (out[j] + c * red[j]) % p
        return tuple(out)

    def mul_scalar(self, a, c: int):
        c %= self.p
        return tuple((x * c) % self.p for x in a)

    def square(self, a):
        return self.mul(a, a)

    def pow(self, a, n: int):
        if n < 0:
            return self.pow(self.inv(a), -n)
        result = self.one
        base = a
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def inv(self, a):
        if all(x == 0 for x in a):
            raise ZeroDivisionError("inverse of zero")
        p = self.p
        if self.k == 1:
            return (pow(a[0], p - 2, p),)
        # extended Euclid in F_p[x] against the modulus:
        # invariant r_i = s_i * a (mod modulus)
        r0, r1 = list(self.modulus), _fp_trim(list(a))
        s0, s1 = [], [1]
        while len(r1) > 1:
            q, rem = _fp_divmod(r0, r1, p)
            r0, r1 = r1, rem
            s0, s1 = s1, _fp_sub(s0, _fp_mul(q, s1, p), p)
        if not r1:
            raise ZeroDivisionError("not invertible")
        c = pow(r1[0], p - 2, p)
        inv = [(x * c) % p for x in s1]
        inv += [0] * (self.k - len(inv))
        return tuple(inv[: self.k])

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def frob(self, a):
        """The p-power map; a field automorphism fixing the prime field."""
        return self.pow(a, self.p)

    def is_zero(self, a):
        return all(x == 0 for x in a)

    def equal_scalar(self, a, c: int):
        return a == self.scalar(c)

    # -- embeddings ----------------------------------------------------------

    def embed_from(self, src: "FieldLevel", a):
        """Image of level-``src`` element ``a`` in this level."""
        if src.k == self.k:
            return a
        if self.k % src.k:
            raise ValueError(f"level {src.k} does not embed in level {self.k}")
        if src.k == 1:
            return self.scalar(a[0])
        img_gen = self._embed_images[src.k]
        out = self.zero
        for c in reversed(a):
            out = self.add(self.mul(out, img_gen), self.scalar(c))
        return out

    def project_to(self, dst: "FieldLevel", a):
        """Preimage of ``a`` under the embedding of ``dst``; None if outside."""
        if dst.k == self.k:
            return a
        key = dst.k
        if key not in self._project_cache:
            cols = []
            x = self.one
            img_gen = self.scalar(0) if dst.k == 1 else self._embed_images[dst.k]
            for i in range(dst.k):
                cols.append(x)
                x = self.mul(x, img_gen) if dst.k > 1 else x
            self._project_cache[key] = cols
        cols = self._project_cache[key]
        if dst.k == 1:
            cand = (a[0],)
            return cand if self.embed_from(dst, cand) == a else None
        sol = _fp_solve(cols, a, self.p)
        if sol is None:
            return None
        cand = tuple(sol)
        return cand if self.embed_from(dst, cand) == a else None

    def elements(self):
        """All p^k elements; only for small levels (exhaustive oracles)."""
        for tup in itertools.product(range(self.p), repeat=self.k):
            yield tup

    def sort_key(self, a):
        return tuple(a)

    def __repr__(self):
        return f"F_{self.p}^{self.k}"


def _fp_trim(f):
    while f and f[-1] == 0:
        f.pop()
    return f


def _fp_sub(a, b, p):
    n = max(len(a), len(b))
    out = [0] * n
    for i in range(n):
        x = a[i] if i < len(a) else 0
        y = b[i] if i < len(b) else 0
        out[i] = (x - y) % p
    return _fp_trim(out)


def _fp_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _fp_trim(out)


def _fp_divmod(a, b, p):
    a = list(a)
    _fp_trim(a)
    binv = pow(b[-1], p - 2, p)
    q = [0] * max(0, len(a) - len(b) + 1)
    while len(a) >= len(b) and a:
        c = (a[-1] * binv) % p
        d = len(a) - len(b)
        q[d] = c
        for i in range(len(b)):
            a[d + i] = (a[d + i] - c * b[i]) % p
        _fp_trim(a)
    return q, a


def _fp_solve(cols, target, p):
    """Solve sum_i x_i cols[i] = target over F_p (cols, target are tuples)."""
    n = len(target)
    m = len(cols)
    aug = [[cols[j][i] % p for j in range(m)] + [target[i] % p] for i in range(n)]
    piv_cols = []
    r = 0
    for c in range(m):
        piv = next((i for i in range(r, n) if aug[i][c]), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = pow(aug[r][c], p - 2, p)
        aug[r] = [(x * inv) % p for x in aug[r]]
        for i in range(n):
            if i != r and aug[i][c]:
                f = aug[i][c]
                aug[i] = [(x - f * y) % p for x, y in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
    for i in range(r, n):
        if aug[i][m]:
            return None
    sol = [0] * m
    for row, c in zip(range(r), piv_cols):
        sol[c] = aug[row][m]
    return sol


class FieldTower:
    """A compatible system of extensions of F_p.

    ``degree_cap`` bounds the largest extension degree that may be built;
    exceeding it raises :class:`DegreeCapExceeded` instead of thrashing.
    """

    def __init__(self, p: int, degree_cap: int | None = None, seed: int = 0):
        if p < 5 or not _is_prime(p):
            raise ValueError("p must be a prime >= 5")
        self.p = p
        self.degree_cap = degree_cap
        self.seed = seed
        self.levels: dict[int, FieldLevel] = {}
        self.build_level(1)

    def level(self, k: int) -> FieldLevel:
        return self.levels[k] if k in self.levels else self.build_level(k)

    def build_level(self, k: int) -> FieldLevel:
        if k in self.levels:
            return self.levels[k]
        if k < 1:
            raise ValueError("degree must be >= 1")
        if self.degree_cap is not None and k > self.degree_cap:
            raise DegreeCapExceeded(f"degree {k} exceeds cap {self.degree_cap} (p={self.p})")
        modulus = self._lex_least_irreducible(k)
        lvl = FieldLevel(self, k, modulus)
        self.levels[k] = lvl
        # embeddings from existing divisor levels into the new one,
        # then from the new one into existing multiples, all compatibly.
        for a in sorted(d for d in self.levels if d != k and k % d == 0):
            self._choose_embedding(self.levels[a], lvl)
        for b in sorted(d for d in self.levels if d != k and d % k == 0):
            self._choose_embedding(lvl, self.levels[b])
        return lvl

    def _lex_least_irreducible(self, k: int):
        p = self.p
        if k == 1:
            return (0, 1)  # x itself; level 1 is F_p
        # constant term 0 would make the polynomial divisible by x, so the
        # lex-least irreducible always has c_0 >= 1; skip that block outright.
        for c0 in range(1, p):
            for tail in itertools.product(range(p), repeat=k - 1):
                f = [c0] + list(tail) + [1]
                if _fp_is_irreducible(f, p, k):
                    return tuple(f)
        raise AssertionError("no irreducible polynomial found")  # unreachable

    def _choose_embedding(self, src: FieldLevel, dst: FieldLevel):
        if src.k == 1 or src.k in dst._embed_images:
            return
        f = [dst.scalar(c) for c in src.modulus]
        roots = sorted(r for r, _ in _poly_roots(f, dst))
        chosen = None
        for r in roots:
            ok = True
            for b in sorted(d for d in self.levels if d < src.k and src.k % d == 0 and d > 1):
                if b not in src._embed_images or b not in dst._embed_images:
                    continue
                blevel = self.levels[b]
                via_src = src._embed_images[b]
                # evaluate the polynomial expression of via_src at r
                img = dst.zero
                for c in reversed(via_src):
                    img = dst.add(dst.mul(img, r), dst.scalar(c))
                if img != dst._embed_images[b]:
                    ok = False
                    break
            if ok:
                chosen = r
                break
        if chosen is None:
            raise AssertionError("no compatible embedding root")  # unreachable
        dst._embed_images[src.k] = chosen


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _prime_factors(n: int):
    out = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            if d not in out:
                out.append(d)
            n //= d
        d += 1
    if n > 1 and n not in out:
        out.append(n)
    return out


def _fp_is_irreducible(f, p, k):
    # Rabin test with eager rejection: a factor of degree d < k shows up as a
    # nontrivial gcd(x^(p^d) - x, f), so test every step on the way up.
    if f[0] == 0:
        return False
    for a in range(p):  # cheap linear-factor scan
        acc = 0
        for c in reversed(f):
            acc = (acc * a + c) % p
        if acc == 0:
            return False
    x = [0, 1]
    cur = x
    for i in range(1, k):
        cur = _fpoly_powmod_scalar(cur, p, f, p)
        if len(_fp_gcd(_fp_sub(cur, x, p), f, p)) != 1:
            return False
    cur = _fpoly_powmod_scalar(cur, p, f, p)
    return not _fp_sub(cur, x, p)


def _fp_gcd(a, b, p):
    a, b = list(a), list(b)
    _fp_trim(a)
    _fp_trim(b)
    while b:
        _, r = _fp_divmod(a, b, p)
        a, b = b, r
    if a:
        c = pow(a[-1], p - 2, p)
        a = [(x * c) % p for x in a]
    return a


def _fpoly_powmod_scalar(g, n, f, p):
    """g^n mod f for polynomials with int (F_p) coefficients."""
    result = [1]
    base = _fp_divmod(list(g), f, p)[1] if len(g) >= len(f) else list(g)
    while n:
        if n & 1:
            result = _fp_divmod(_fp_mul(result, base, p), f, p)[1]
        base = _fp_divmod(_fp_mul(base, base, p), f, p)[1]
        n >>= 1
    return result


# ---------------------------------------------------------------------------
# polynomials over a tower level (coefficients are level elements)
# ---------------------------------------------------------------------------


def ptrim(f, lv):
    while f and lv.is_zero(f[-1]):
        f.pop()
    return f


def padd(f, g, lv):
    n = max(len(f), len(g))
    out = []
    for i in range(n):
        a = f[i] if i < len(f) else lv.zero
        b = g[i] if i < len(g) else lv.zero
        out.append(lv.add(a, b))
    return ptrim(out, lv)


def psub(f, g, lv):
    n = max(len(f), len(g))
    out = []
    for i in range(n):
        a = f[i] if i < len(f) else lv.zero
        b = g[i] if i < len(g) else lv.zero
        out.append(lv.sub(a, b))
    return ptrim(out, lv)


def pmul(f, g, lv):
    if not f or not g:
        return []
    out = [lv.zero] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if not lv.is_zero(a):
            for j, b in enumerate(g):
                out[i + j] = lv.add(out[i + j], lv.mul(a, b))
    return ptrim(out, lv)


def pscale(f, c, lv):
    return ptrim([lv.mul(x, c) for x in f], lv)


def pdivmod(f, g, lv):
    f = list(f)
    ptrim(f, lv)
    g = list(g)
    ptrim(g, lv)
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    ginv = lv.inv(g[-1])
    q = [lv.zero] * max(0, len(f) - len(g) + 1)
    while len(f) >= len(g) and f:
        c = lv.mul(f[-1], ginv)
        d = len(f) - len(g)
        q[d] = c
        for i in range(len(g)):
            f[d + i] = lv.sub(f[d + i], lv.mul(c, g[i]))
        ptrim(f, lv)
    return ptrim(q, lv), f


def pgcd(f, g, lv):
    f, g = list(f), list(g)
    ptrim(f, lv)
    ptrim(g, lv)
    while g:
        _, r = pdivmod(f, g, lv)
        f, g = g, r
    return pmonic(f, lv)


def pmonic(f, lv):
    if not f:
        return []
    c = lv.inv(f[-1])
    return [lv.mul(x, c) for x in f]


def ppowmod(g, n, f, lv):
    result = [lv.one]
    _, base = pdivmod(list(g), f, lv)
    while n:
        if n & 1:
            _, result = pdivmod(pmul(result, base, lv), f, lv)
        base = pdivmod(pmul(base, base, lv), f, lv)[1]
        n >>= 1
    return result


def peval(f, x, lv):
    out = lv.zero
    for c in reversed(f):
        out = lv.add(lv.mul(out, x), c)
    return out


def pderiv(f, lv):
    return ptrim([lv.mul_scalar(c, i) for i, c in enumerate(f)][1:], lv)


def _poly_squarefree_parts(f, lv):
    """Squarefree decomposition [(g_i, i)] with f = prod g_i^i up to a unit."""
    p = lv.p
    f = pmonic(list(f), lv)
    out = []
    if len(f) <= 1:
        return out

    def rec(f, mult):
        if len(f) <= 1:
            return
        d = pderiv(f, lv)
        if not d:
            # f = g(x^p); take p-th roots of coefficients
            g = []
            for i in range(0, len(f), p):
                c = f[i]
                # coefficient p-th root: c^(p^(k-1)) since c^(p^k) = c
                root = c
                for _ in range(lv.k - 1):
                    root = lv.frob(root)
                g.append(root)
            rec(ptrim(g, lv), mult * p)
            return
        a = pgcd(f, d, lv)
        b = pdivmod(f, a, lv)[0]  # squarefree part
        i = 1
        while len(b) > 1:
            c = pgcd(a, b, lv)
            piece = pdivmod(b, c, lv)[0]
            if len(piece) > 1:
                out.append((pmonic(piece, lv), mult * i))
            b = c
            a = pdivmod(a, c, lv)[0]
            i += 1
        if len(a) > 1:
            rec(a, mult * p)

    rec(f, 1)
    return out


def _poly_factor_squarefree_monic(f, lv):
    """Factor a squarefree monic polynomial into irreducibles (DDF + EDF)."""
    p, k = lv.p, lv.k
    q = p**k
    factors = []
    rem = list(f)
    x = [lv.zero, lv.one]
    h = x
    d = 0
    while len(rem) - 1 > 2 * d:
        d += 1
        h = ppowmod(h, q, rem, lv)
        g = pgcd(psub(h, x, lv), rem, lv)
        if len(g) > 1:
            factors.extend(_equal_degree_split(g, d, lv))
            rem = pdivmod(rem, g, lv)[0]
            _, h = pdivmod(h, rem, lv)
    if len(rem) > 1:
        factors.append(pmonic(rem, lv))
    return factors


def _equal_degree_split(f, d, lv):
    """Cantor-Zassenhaus with a deterministic seeded element stream."""
    n = len(f) - 1
    if n == d:
        return [pmonic(f, lv)]
    p, k = lv.p, lv.k
    q = p**k
    seed = _derive_seed("edf", lv.tower.seed, p, k, tuple(map(tuple, f)), d)
    rng = random.Random(seed)
    exponent = (q**d - 1) // 2
    while True:
        r = [tuple(rng.randrange(p) for _ in range(k)) for _ in range(n)]
        r = ptrim(r, lv)
        if len(r) <= 1:
            continue
        t = ppowmod(r, exponent, f, lv)
        g = pgcd(psub(t, [lv.one], lv), f, lv)
        if 1 < len(g) < len(f):
            left = _equal_degree_split(g, d, lv)
            right = _equal_degree_split(pdivmod(f, g, lv)[0], d, lv)
            return left + right


def _poly_roots(f, lv):
    """Roots of f in the level, with multiplicities, as [(element, mult)]."""
    out = []
    for g, mult in _poly_squarefree_parts(f, lv) or ([(pmonic(list(f), lv), 1)] if len(f) > 1 else []):
        # isolate the part splitting in this field
        x = [lv.zero, lv.one]
        xq = ppowmod(x, lv.p**lv.k, g, lv)
        lin = pgcd(psub(xq, x, lv), g, lv)
        if len(lin) <= 1:
            continue
        for fac in _equal_degree_split(lin, 1, lv):
            root = lv.neg(fac[0])
            out.append((root, mult))
    return sorted(out)


# ---------------------------------------------------------------------------
# public wrappers
# ---------------------------------------------------------------------------


class FPoly:
    """A univariate polynomial over a tower level.

    Coefficients are stored constant-first; the zero polynomial has no
    coefficients.  Instances are value-like: arithmetic returns new objects.
    """

    __slots__ = ("level", "coeffs")

    def __init__(self, level: FieldLevel, coeffs):
        cs = [c if isinstance(c, tuple) else level.scalar(c) for c in coeffs]
        while cs and level.is_zero(cs[-1]):
            cs.pop()
        self.level = level
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == self.level.one

    def __eq__(self, other):
        return (
            isinstance(other, FPoly)
            and self.level is other.level
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.level.k, self.coeffs))

    def __add__(self, other):
        return FPoly(self.level, padd(list(self.coeffs), list(other.coeffs), self.level))

    def __sub__(self, other):
        return FPoly(self.level, psub(list(self.coeffs), list(other.coeffs), self.level))

    def __mul__(self, other):
        return FPoly(self.level, pmul(list(self.coeffs), list(other.coeffs), self.level))

    def __divmod__(self, other):
        q, r = pdivmod(list(self.coeffs), list(other.coeffs), self.level)
        return FPoly(self.level, q), FPoly(self.level, r)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def monic(self) -> "FPoly":
        return FPoly(self.level, pmonic(list(self.coeffs), self.level))

    def gcd(self, other: "FPoly") -> "FPoly":
        return FPoly(self.level, pgcd(list(self.coeffs), list(other.coeffs), self.level))

    def evaluate(self, x):
        return peval(list(self.coeffs), x, self.level)

    def derivative(self) -> "FPoly":
        return FPoly(self.level, pderiv(list(self.coeffs), self.level))

    def __repr__(self):
        return f"FPoly(deg {self.degree} over {self.level!r})"


def build_level(tower: FieldTower, k: int) -> FieldLevel:
    """Ensure the field with p^k elements exists in the tower."""
    return tower.build_level(k)


def factor_squarefree(f: FPoly):
    """Full factorization ``[(irreducible FPoly, multiplicity), ...]``.

    The product of the factors with multiplicities equals ``f`` up to the
    leading unit.
    """
    if f.is_zero():
        raise ValueError("cannot factor the zero polynomial")
    lv = f.level
    out = []
    for g, mult in _poly_squarefree_parts(list(f.coeffs), lv):
        for irr in _poly_factor_squarefree_monic(g, lv):
            out.append((FPoly(lv, irr), mult))
    out.sort(key=lambda pair: (pair[0].degree, pair[0].coeffs))
    return out


def roots_in_level(f: FPoly, level: FieldLevel):
    """All roots of ``f`` in ``level`` with multiplicities.

    ``f`` may live on a sub-level; its coefficients are embedded first.
    """
    if f.is_zero():
        raise ValueError("zero polynomial")
    coeffs = [level.embed_from(f.level, c) for c in f.coeffs]
    return _poly_roots(coeffs, level)


def frobenius(e, level: FieldLevel):
    """The p-power automorphism applied to ``e``."""
    return level.frob(e)


def sqrt_in_tower(z, level: FieldLevel):
    """A square root of ``z``, extending to the quadratic level if needed.

    Returns ``(root, level_of_root)``; picks the lexicographically smaller of
    the two roots for determinism.
    """
    if level.is_zero(z):
        return z, level
    f = [level.neg(z), level.zero, level.one]
    roots = _poly_roots(f, level)
    if roots:
        return roots[0][0], level
    big = level.tower.build_level(2 * level.k)
    zz = big.embed_from(level, z)
    roots = _poly_roots([big.neg(zz), big.zero, big.one], big)
    if not roots:
        raise ArithmeticError("no square root in the quadratic extension")
    return roots[0][0], big


def nth_root_in_tower(z, n: int, level: FieldLevel):
    """A root of ``x^n = z``, extending the tower by degree n if needed."""
    f = [level.neg(z)] + [level.zero] * (n - 1) + [level.one]
    roots = _poly_roots(f, level)
    if roots:
        return roots[0][0], level
    big = level.tower.build_level(n * level.k)
    zz = big.embed_from(level, z)
    roots = _poly_roots([big.neg(zz)] + [big.zero] * (n - 1) + [big.one], big)
    if not roots:
        raise ArithmeticError(f"no {n}-th root in degree-{n} extension")
    return roots[0][0], big
