"""Exact integer linear algebra: normal forms, kernels, saturation, quotients.

Everything here works over Z with arbitrary-precision integers; there is no
floating point anywhere.  Matrices are small (a few hundred rows at most), so
the algorithms favour simplicity and verifiability over asymptotics: plain
extended-gcd elimination for the Hermite form and Kannan--Bachem style
elimination for the Smith form.

Conventions, pinned so that equal lattices have equal representations:

* ``hnf`` is the *row* Hermite normal form: pivots positive, entries above a
  pivot reduced into ``[0, pivot)``, zero rows dropped.
* Lattices are stored as HNF row bases inside an ambient ``Z^n``.
* Operator matrices act on column vectors: ``A[i][j]`` is the coefficient of
  basis vector ``i`` in the image of basis vector ``j``.

All values are immutable after construction (by discipline; the underlying
lists are never mutated once an object is returned), so everything in this
module can be shared freely.
"""

from __future__ import annotations

from fractions import Fraction


class NotSublattice(Exception):
    """Raised when a claimed sublattice is not contained in the outer one."""


class InfiniteIndex(Exception):
    """Raised when a quotient of lattices is not finite."""


class IntegerMatrix:
    """A dense matrix of Python ints, row-major.

    >>> m = IntegerMatrix([[1, 2], [3, 4]])
    >>> m.rows, m.cols
    (2, 2)
    >>> print(m * m.transpose())
    2 2
    5 11
    11 25
    """

    __slots__ = ("rows", "cols", "data")

    def __init__(self, data, cols=None):
        data = [list(map(int, row)) for row in data]
        if data:
            width = len(data[0])
            if any(len(row) != width for row in data):
                raise ValueError("ragged rows")
        else:
            width = 0 if cols is None else cols
        if cols is not None and data and width != cols:
            raise ValueError("explicit cols disagrees with row width")
        self.rows = len(data)
        self.cols = width
        self.data = data

    @staticmethod
    def identity(n: int) -> "IntegerMatrix":
        return IntegerMatrix([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @staticmethod
    def zero(rows: int, cols: int) -> "IntegerMatrix":
        return IntegerMatrix([[0] * cols for _ in range(rows)], cols=cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.data[i][j]

    def __eq__(self, other):
        return (
            isinstance(other, IntegerMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.data == other.data
        )

    def __hash__(self):
        return hash((self.rows, self.cols, tuple(tuple(r) for r in self.data)))

    def __mul__(self, other):
        if isinstance(other, int):
            return IntegerMatrix([[x * other for x in row] for row in self.data], cols=self.cols)
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} * {other.rows}x{other.cols}")
        bt = list(zip(*other.data)) if other.data else []
        out = []
        for row in self.data:
            out.append([sum(a * b for a, b in zip(row, col)) for col in bt])
        return IntegerMatrix(out, cols=other.cols)

    __rmul__ = __mul__

    def __add__(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return IntegerMatrix(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.data, other.data)],
            cols=self.cols,
        )

    def __sub__(self, other):
        return self + (other * -1)

    def __neg__(self):
        return self * -1

    def transpose(self) -> "IntegerMatrix":
        return IntegerMatrix([list(r) for r in zip(*self.data)] if self.data else [], cols=self.rows)

    def row(self, i):
        return list(self.data[i])

    def column(self, j):
        return [row[j] for row in self.data]

    def apply(self, vec):
        """Matrix times column vector, returned as a list."""
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        return [sum(a * x for a, x in zip(row, vec)) for row in self.data]

    def stack(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if self.cols != other.cols and self.rows and other.rows:
            raise ValueError("column mismatch in stack")
        cols = self.cols if self.rows else other.cols
        return IntegerMatrix([list(r) for r in self.data] + [list(r) for r in other.data], cols=cols)

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.data for x in row)

    def __str__(self):
        lines = [f"{self.rows} {self.cols}"]
        lines += [" ".join(str(x) for x in row) for row in self.data]
        return "\n".join(lines)

    __repr__ = __str__

    @staticmethod
    def from_text(text: str) -> "IntegerMatrix":
        """Parse the cache/debug text format: header ``rows cols``, then rows."""
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        rows, cols = map(int, lines[0].split())
        data = [[int(x) for x in ln.split()] for ln in lines[1 : 1 + rows]]
        if len(data) != rows or any(len(r) != cols for r in data):
            raise ValueError("bad matrix text")
        return IntegerMatrix(data, cols=cols)


def _hnf_in_place(data, transform=None):
    """Row-reduce ``data`` to Hermite form; optionally track a left transform."""
    rows = len(data)
    cols = len(data[0]) if rows else 0
    r = 0
    for c in range(cols):
        # find a pivot row with nonzero entry in column c
        pivot = None
        for i in range(r, rows):
            if data[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        data[r], data[pivot] = data[pivot], data[r]
        if transform is not None:
            transform[r], transform[pivot] = transform[pivot], transform[r]
        # clear below with gcd steps
        for i in range(r + 1, rows):
            while data[i][c] != 0:
                q = data[r][c] // data[i][c]
                data[r] = [a - q * b for a, b in zip(data[r], data[i])]
                if transform is not None:
                    transform[r] = [a - q * b for a, b in zip(transform[r], transform[i])]
                data[r], data[i] = data[i], data[r]
                if transform is not None:
                    transform[r], transform[i] = transform[i], transform[r]
        if data[r][c] < 0:
            data[r] = [-a for a in data[r]]
            if transform is not None:
                transform[r] = [-a for a in transform[r]]
        # reduce entries above the pivot
        for i in range(r):
            q = data[i][c] // data[r][c]
            if q:
                data[i] = [a - q * b for a, b in zip(data[i], data[r])]
                if transform is not None:
                    transform[i] = [a - q * b for a, b in zip(transform[i], transform[r])]
        r += 1
        if r == rows:
            break
    return r


def hnf(m: IntegerMatrix) -> IntegerMatrix:
    """Row Hermite normal form with zero rows dropped.

    The row span is preserved exactly; the result is the canonical
    representative of that span (positive pivots, reduced entries above).
    """
    data = [list(row) for row in m.data]
    rank = _hnf_in_place(data)
    return IntegerMatrix(data[:rank], cols=m.cols)


def hnf_with_transform(m: IntegerMatrix):
    """Return ``(h, u, rank)`` with ``u`` unimodular, ``u * m`` = full HNF.

    Unlike :func:`hnf`, zero rows are kept so that ``u`` stays square.
    """
    data = [list(row) for row in m.data]
    transform = [[1 if i == j else 0 for j in range(m.rows)] for i in range(m.rows)]
    rank = _hnf_in_place(data, transform)
    return IntegerMatrix(data, cols=m.cols), IntegerMatrix(transform, cols=m.rows), rank


def snf(m: IntegerMatrix):
    """Smith normal form: ``(d, left, right)`` with ``left*m*right = d``.

    ``d`` is diagonal with a divisibility chain, ``left`` and ``right`` are
    unimodular; dimensions match ``m`` exactly (zero rows are kept).
    """
    a = [list(row) for row in m.data]
    rows, cols = m.rows, m.cols
    left = [[1 if i == j else 0 for j in range(rows)] for i in range(rows)]
    right = [[1 if i == j else 0 for j in range(cols)] for i in range(cols)]

    def row_op(i, j, q):  # row i -= q * row j
        a[i] = [x - q * y for x, y in zip(a[i], a[j])]
        left[i] = [x - q * y for x, y in zip(left[i], left[j])]

    def col_op(i, j, q):  # col i -= q * col j
        for row in a:
            row[i] -= q * row[j]
        for row in right:
            row[i] -= q * row[j]

    def row_swap(i, j):
        a[i], a[j] = a[j], a[i]
        left[i], left[j] = left[j], left[i]

    def col_swap(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in right:
            row[i], row[j] = row[j], row[i]

    n = min(rows, cols)
    for s in range(n):
        # move the smallest nonzero entry of the trailing block to (s, s)
        while True:
            pi, pj, best = -1, -1, None
            for i in range(s, rows):
                for j in range(s, cols):
                    v = abs(a[i][j])
                    if v and (best is None or v < best):
                        pi, pj, best = i, j, v
            if best is None:
                break
            if pi != s:
                row_swap(s, pi)
            if pj != s:
                col_swap(s, pj)
            dirty = False
            for i in range(s + 1, rows):
                if a[i][s]:
                    row_op(i, s, a[i][s] // a[s][s])
                    if a[i][s]:
                        dirty = True
            for j in range(s + 1, cols):
                if a[s][j]:
                    col_op(j, s, a[s][j] // a[s][s])
                    if a[s][j]:
                        dirty = True
            if dirty:
                continue
            # pivot must divide the rest of the block
            offender = None
            for i in range(s + 1, rows):
                for j in range(s + 1, cols):
                    if a[i][j] % a[s][s]:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_op(s, offender, -1)  # add the offending row, then re-reduce
        if s < rows and s < cols and a[s][s] < 0:
            a[s] = [-x for x in a[s]]
            left[s] = [-x for x in left[s]]
    return (
        IntegerMatrix(a, cols=cols),
        IntegerMatrix(left, cols=rows),
        IntegerMatrix(right, cols=cols),
    )


def unimodular_inverse(u: IntegerMatrix) -> IntegerMatrix:
    """Exact inverse of a unimodular matrix."""
    n = u.rows
    if n != u.cols:
        raise ValueError("not square")
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(u.data)]
    for c in range(n):
        piv = next(i for i in range(c, n) if aug[i][c] != 0)
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [x * inv for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c]:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    out = []
    for row in aug:
        vals = row[n:]
        if any(v.denominator != 1 for v in vals):
            raise ValueError("matrix is not unimodular")
        out.append([int(v) for v in vals])
    return IntegerMatrix(out, cols=n)


def kernel_basis(m: IntegerMatrix) -> "Lattice":
    """Basis of the right integer kernel ``{v : m v = 0}``, as a lattice.

    The kernel of a map from a free module is saturated, so the returned
    basis generates the full lattice of integer solutions.
    """
    # HNF of the transpose with transform: rows of u mapping to zero rows of h
    # are a basis of the kernel.
    h, u, rank = hnf_with_transform(m.transpose())
    vecs = [u.row(i) for i in range(rank, m.cols)]
    return Lattice(m.cols, hnf(IntegerMatrix(vecs, cols=m.cols)))


class Lattice:
    """A subgroup of ``Z^n`` given by an HNF row basis.

    Equality of lattices is equality of representations, which the HNF
    convention makes canonical.
    """

    __slots__ = ("ambient_rank", "basis")

    def __init__(self, ambient_rank: int, basis: IntegerMatrix, normalize: bool = True):
        if basis.rows and basis.cols != ambient_rank:
            raise ValueError("basis width disagrees with ambient rank")
        if normalize:
            basis = hnf(basis)
        self.ambient_rank = ambient_rank
        self.basis = basis

    @staticmethod
    def full(n: int) -> "Lattice":
        return Lattice(n, IntegerMatrix.identity(n), normalize=False)

    @staticmethod
    def from_rows(n: int, rows) -> "Lattice":
        return Lattice(n, IntegerMatrix([list(r) for r in rows], cols=n))

    @property
    def rank(self) -> int:
        return self.basis.rows

    def __eq__(self, other):
        return (
            isinstance(other, Lattice)
            and self.ambient_rank == other.ambient_rank
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.ambient_rank, self.basis))

    def __repr__(self):
        return f"Lattice(rank {self.rank} in Z^{self.ambient_rank})"

    def contains(self, vec) -> bool:
        return self.coordinates_of(vec) is not None

    def coordinates_of(self, vec):
        """Coordinates of ``vec`` in this basis, or None if not in the lattice."""
        coords = _solve_in_rowspan(self.basis, list(vec))
        if coords is None:
            return None
        if any(c.denominator != 1 for c in coords):
            return None
        return [int(c) for c in coords]

    def rational_coordinates_of(self, vec):
        """Coordinates over Q, or None if outside the rational span."""
        return _solve_in_rowspan(self.basis, list(vec))


def _solve_in_rowspan(basis: IntegerMatrix, vec):
    """Solve ``x * basis = vec`` over Q; None if inconsistent."""
    k, n = basis.rows, basis.cols
    if len(vec) != n:
        raise ValueError("dimension mismatch")
    if k == 0:
        return [] if all(v == 0 for v in vec) else None
    # Gaussian elimination on the transposed system basis^T x^T = vec^T.
    aug = [[Fraction(basis.data[i][j]) for i in range(k)] + [Fraction(vec[j])] for j in range(n)]
    pivots = []
    r = 0
    for c in range(k):
        piv = next((i for i in range(r, n) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [x * inv for x in aug[r]]
        for i in range(n):
            if i != r and aug[i][c]:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
    for i in range(r, n):
        if aug[i][k] != 0:
            return None
    sol = [Fraction(0)] * k
    for row_idx, c in enumerate(pivots):
        sol[c] = aug[row_idx][k]
    return sol


def saturate(l: Lattice) -> "Lattice":
    """The saturation: all ambient vectors with an integer multiple in ``l``."""
    if l.rank == 0:
        return l
    ker = kernel_basis(l.basis)  # vectors orthogonal in the pairing sense
    if ker.rank == 0:
        return Lattice.full(l.ambient_rank)
    return kernel_basis(ker.basis)


def quotient_group(outer: Lattice, inner: Lattice) -> "FiniteAbelianGroup":
    """Structure of ``outer/inner`` as a finite abelian group.

    Raises :class:`NotSublattice` if ``inner`` is not contained in ``outer``
    and :class:`InfiniteIndex` if the ranks differ.
    """
    if inner.ambient_rank != outer.ambient_rank:
        raise NotSublattice("different ambient modules")
    coords = []
    for i in range(inner.rank):
        c = outer.coordinates_of(inner.basis.row(i))
        if c is None:
            raise NotSublattice(f"row {i} of inner lattice is outside the outer lattice")
        coords.append(c)
    if inner.rank < outer.rank:
        raise InfiniteIndex(f"rank {inner.rank} sublattice of rank {outer.rank} lattice")
    c = IntegerMatrix(coords, cols=outer.rank)
    d, left, right = snf(c)
    # inner = rowspan(D * R^-1 * outer_basis); generators are rows of R^-1 * B.
    rinv = unimodular_inverse(right)
    gen_rows = rinv * outer.basis
    factors = []
    lifts = []
    for i in range(outer.rank):
        di = abs(d.data[i][i]) if i < d.rows else 0
        if di == 0:
            raise InfiniteIndex("diagonal zero in quotient")
        if di > 1:
            factors.append(di)
            lifts.append(gen_rows.row(i))
    # SNF yields the chain d_1 | d_2 | ...; keep that order.
    return FiniteAbelianGroup(factors, IntegerMatrix(lifts, cols=outer.ambient_rank))


class FiniteAbelianGroup:
    """Invariant factors ``d_1 | d_2 | ... | d_k`` (each > 1) with generator lifts."""

    __slots__ = ("invariant_factors", "generator_lifts")

    def __init__(self, invariant_factors, generator_lifts: IntegerMatrix):
        factors = [int(d) for d in invariant_factors]
        for a, b in zip(factors, factors[1:]):
            if b % a:
                raise ValueError("invariant factors must form a divisibility chain")
        if any(d <= 1 for d in factors):
            raise ValueError("invariant factors must exceed 1")
        if generator_lifts.rows != len(factors):
            raise ValueError("one generator lift per invariant factor")
        self.invariant_factors = factors
        self.generator_lifts = generator_lifts

    @property
    def order(self) -> int:
        n = 1
        for d in self.invariant_factors:
            n *= d
        return n

    def is_trivial(self) -> bool:
        return not self.invariant_factors

    def __eq__(self, other):
        return (
            isinstance(other, FiniteAbelianGroup)
            and self.invariant_factors == other.invariant_factors
        )

    def __repr__(self):
        if not self.invariant_factors:
            return "FiniteAbelianGroup(trivial)"
        return "FiniteAbelianGroup(%s)" % " x ".join(f"Z/{d}" for d in self.invariant_factors)


def invariant_factors_of(m: IntegerMatrix):
    """Invariant factors of coker(Z^cols --m--> Z^rows), infinite parts excluded."""
    d, _, _ = snf(m)
    out = [abs(d.data[i][i]) for i in range(min(d.rows, d.cols))]
    return [x for x in out if x not in (0, 1)], sum(1 for x in out if x == 0) + max(0, d.rows - d.cols)


def charpoly(m: IntegerMatrix):
    """Characteristic polynomial det(xI - m), constant coefficient first.

    Faddeev--LeVerrier with exact integer divisions; returns the monic
    polynomial's coefficients ``[c_0, c_1, ..., c_n]``.
    """
    n = m.rows
    if n != m.cols:
        raise ValueError("not square")
    if n == 0:
        return [1]
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    mk = m  # M_1 = A
    for k in range(1, n + 1):
        tr = sum(mk.data[i][i] for i in range(n))
        if tr % k:
            raise ArithmeticError("inexact division in charpoly")
        c = -(tr // k)
        coeffs[n - k] = c
        if k < n:
            shifted = IntegerMatrix(
                [[mk.data[i][j] + (c if i == j else 0) for j in range(n)] for i in range(n)],
                cols=n,
            )
            mk = m * shifted
    return coeffs


def det(m: IntegerMatrix) -> int:
    """Exact determinant (via Bareiss elimination)."""
    n = m.rows
    if n != m.cols:
        raise ValueError("not square")
    if n == 0:
        return 1
    a = [list(row) for row in m.data]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if piv is None:
                return 0
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def solve_exact(a: IntegerMatrix, b):
    """Solve ``a x = b`` over Q for column vector b; None if inconsistent."""
    sol = _solve_in_rowspan(a.transpose(), list(b))
    return sol


def solve_integer(a: IntegerMatrix, b):
    """Solve ``a x = b`` over Z; None if no rational or no integral solution.

    Only valid when the solution is unique (full column rank); the callers
    here all satisfy that.
    """
    sol = solve_exact(a, b)
    if sol is None or any(c.denominator != 1 for c in sol):
        return None
    return [int(c) for c in sol]


def restrict_operator(op: IntegerMatrix, basis: IntegerMatrix) -> IntegerMatrix:
    """Matrix of ``op`` on the sublattice with the given row basis.

    ``op`` acts on column vectors of the ambient space; the result acts on
    column vectors of basis coordinates.  Raises ValueError when the
    sublattice is not stable.
    """
    k = basis.rows
    cols = []
    for j in range(k):
        img = op.apply(basis.row(j))
        c = solve_integer(basis.transpose(), img)
        if c is None:
            raise ValueError("operator does not restrict to the sublattice")
        cols.append(c)
    return IntegerMatrix([[cols[j][i] for j in range(k)] for i in range(k)], cols=k)


def complement_projection(relations: Lattice):
    """Free quotient ``Z^n / sat(relations)`` as a (projection, lift) pair.

    Returns ``(proj, lift)`` where ``proj`` is (n-k) x n mapping ambient
    column vectors to quotient coordinates and ``lift`` is n x (n-k) with
    ``proj * lift = I``.  The relation lattice is saturated first, so the
    quotient is torsion-free.
    """
    n = relations.ambient_rank
    sat = saturate(relations)
    k = sat.rank
    if k == 0:
        eye = IntegerMatrix.identity(n)
        return eye, eye
    d, left, right = snf(sat.basis)
    for i in range(k):
        if abs(d.data[i][i]) != 1:
            raise ValueError("saturation failed")  # cannot happen
    rinv = unimodular_inverse(right)
    # rows of rinv form a basis of Z^n whose first k rows span sat.
    # Quotient coordinates of v = last n-k entries of (coords of v in rinv-rows)
    # = last n-k entries of v * right ... as column convention: proj = (right^T) rows k..n.
    rt = right.transpose()
    proj = IntegerMatrix([rt.row(i) for i in range(k, n)], cols=n)
    rinv_t = rinv.transpose()
    lift = IntegerMatrix([[rinv_t.data[i][j] for j in range(k, n)] for i in range(n)], cols=n - k)
    return proj, lift


def kronecker(a: IntegerMatrix, b: IntegerMatrix) -> IntegerMatrix:
    """Kronecker product a (x) b."""
    out = []
    for i in range(a.rows):
        for k in range(b.rows):
            row = []
            for j in range(a.cols):
                aij = a.data[i][j]
                row.extend(aij * x for x in b.data[k])
            out.append(row)
    return IntegerMatrix(out, cols=a.cols * b.cols)
