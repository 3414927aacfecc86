"""Supersingular vertex and edge modules with their Hecke structure.

The vertex module is the free Z-module on supersingular j-invariants in
characteristic p; the edge module is the free Z-module on pairs (E, C) of a
supersingular curve with a cyclic order-q subgroup, up to geometric
isomorphism.  Together with the degeneracy maps and the diagonal weight
pairing these realize the character groups of the Jacobians of X_0(p) and
X_0(pq) at p and carry the whole Hecke action used downstream.

Completeness of every enumeration is certified by the Eichler mass formula;
a violation raises :class:`MassFormulaViolation` rather than warning.
"""

from __future__ import annotations

import hashlib
import os
from fractions import Fraction

from .exactlin import IntegerMatrix, Lattice, kernel_basis, restrict_operator
from .galois import FieldTower, FPoly
from .isogeny import (
    Curve,
    CyclicSubgroup,
    automorphism_count,
    canonical_kernel_poly,
    curve_from_j,
    cyclic_subgroups,
    is_supersingular,
    j_invariant,
    push_subgroup,
    transport_subgroup,
    velu,
)


class MassFormulaViolation(Exception):
    """Enumeration failed its Eichler mass certification."""


class ParseError(Exception):
    """A data file could not be parsed."""


class AsymmetryError(Exception):
    """A modular polynomial file is not symmetric."""


class OperatorDoesNotRestrict(Exception):
    """An operator fails to stabilize a claimed stable sublattice."""


def _primes_upto(n: int):
    out = []
    for m in range(2, n + 1):
        if all(m % r for r in out if r * r <= m):
            out.append(m)
    return out


class VertexPoint:
    """A supersingular j-invariant with its automorphism weight |Aut|/2."""

    __slots__ = ("j", "weight")

    def __init__(self, j, weight: int):
        self.j = j
        self.weight = weight

    def key(self):
        return tuple(self.j)

    def __repr__(self):
        return f"VertexPoint(j={self.j}, w={self.weight})"


class EdgePoint:
    """A pair (supersingular E, order-q subgroup) on the canonical model.

    ``kernel`` is the canonicalized kernel polynomial (least in its orbit
    under Aut(E) acting by x-scalings), so equality of keys is equality of
    geometric isomorphism classes.  ``rep_sub`` keeps one concrete subgroup
    of the orbit, with its root data, for isogeny evaluation.
    """

    __slots__ = ("j", "kernel", "weight", "rep_sub")

    def __init__(self, j, kernel: FPoly, weight: int, rep_sub: CyclicSubgroup | None = None):
        self.j = j
        self.kernel = kernel
        self.weight = weight
        self.rep_sub = rep_sub

    def key(self):
        return (tuple(self.j), self.kernel.coeffs)

    def __repr__(self):
        return f"EdgePoint(j={self.j}, deg {self.kernel.degree}, w={self.weight})"


class GraphModule:
    """A free Z-module on vertex or edge points with its operator family."""

    def __init__(self, kind, p, q, tower, basis, operators, gram, hecke_upto):
        self.kind = kind  # "vertex" | "edge"
        self.p = p
        self.q = q
        self.tower = tower
        self.basis = basis
        self.operators = operators  # label -> IntegerMatrix
        self.gram = gram
        self.hecke_upto = hecke_upto

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def weights(self):
        return [b.weight for b in self.basis]

    def mass(self) -> Fraction:
        return sum(Fraction(1, b.weight) for b in self.basis)

    def __repr__(self):
        return f"GraphModule({self.kind}, p={self.p}, q={self.q}, rank {self.rank})"


def enumerate_ss(p: int, tower: FieldTower | None = None):
    """All supersingular j-invariants in characteristic p, with weights.

    A Hasse-invariant scan of F_p finds a seed; the rest is the closure under
    2-isogeny (the 2-isogeny graph on supersingular points is connected).
    Completeness is certified by the mass formula sum 1/w = (p-1)/12.
    """
    tower = tower or FieldTower(p)
    lv2 = tower.build_level(2)
    lv1 = tower.level(1)
    seeds = []
    for j in range(p):
        e = curve_from_j(lv1, j)
        if is_supersingular(e):
            seeds.append(lv2.embed_from(lv1, lv1.scalar(j)))
    if not seeds:
        raise MassFormulaViolation(f"no supersingular seed found in F_{p}")
    found = {}
    queue = list(seeds)
    while queue:
        j = queue.pop()
        if tuple(j) in found:
            continue
        e = curve_from_j(lv2, j)
        found[tuple(j)] = e
        for c in cyclic_subgroups(e, 2):
            img, _ = velu(e, c)
            jq = j_invariant(img)
            lv = c.kernel_poly.level
            if lv is not lv2:
                jq = lv.project_to(lv2, jq)
                if jq is None:
                    raise MassFormulaViolation("2-isogenous j left the quadratic level")
            if tuple(jq) not in found:
                queue.append(jq)
    points = []
    for key in sorted(found):
        w = automorphism_count(found[key]) // 2
        points.append(VertexPoint(tuple_to_elt(key), w))
    mass = sum(Fraction(1, pt.weight) for pt in points)
    if mass != Fraction(p - 1, 12):
        raise MassFormulaViolation(f"vertex mass {mass} != ({p}-1)/12 for p={p}")
    return points


def tuple_to_elt(key):
    return tuple(key)


def _vertex_index(points):
    return {pt.key(): i for i, pt in enumerate(points)}


def build_vertex_module(p: int, hecke_upto: int, tower: FieldTower | None = None) -> GraphModule:
    """The module Z[SS_p] with T_ell for primes ell <= hecke_upto, ell != p."""
    tower = tower or FieldTower(p)
    lv2 = tower.build_level(2)
    points = enumerate_ss(p, tower)
    index = _vertex_index(points)
    n = len(points)
    ops = {}
    for ell in _primes_upto(hecke_upto):
        if ell == p:
            continue
        mat = [[0] * n for _ in range(n)]
        for col, pt in enumerate(points):
            e = curve_from_j(lv2, pt.j)
            for c in cyclic_subgroups(e, ell):
                img, _ = velu(e, c)
                jq = j_invariant(img)
                lv = c.kernel_poly.level
                if lv is not lv2:
                    jq = lv.project_to(lv2, jq)
                mat[index[tuple(jq)]][col] += 1
        ops[f"T{ell}"] = IntegerMatrix(mat, cols=n)
    # Frobenius-twist permutation on the basis
    mat = [[0] * n for _ in range(n)]
    for col, pt in enumerate(points):
        jp = lv2.frob(pt.j)
        mat[index[tuple(jp)]][col] = 1
    ops["wp"] = IntegerMatrix(mat, cols=n)
    return GraphModule("vertex", p, None, tower, points, ops, None, hecke_upto)


def build_edge_module(
    p: int,
    q: int,
    hecke_upto: int,
    tower: FieldTower | None = None,
    vertex_module: GraphModule | None = None,
) -> GraphModule:
    """The edge module for (p, q): supersingular points of X_0(q) in char p.

    Operators: T_ell for primes ell <= hecke_upto with ell not in {p, q},
    the involutions wq (edge reversal) and wp (Frobenius twist), and the two
    degeneracy matrices alpha ((E,C) -> E) and beta ((E,C) -> E/C) into the
    vertex module.  T_q itself is not built by correspondence; on new parts
    it acts as -wq by the Atkin-Lehner convention.
    """
    if p == q:
        raise ValueError("p and q must be distinct")
    tower = tower or FieldTower(p)
    lv2 = tower.build_level(2)
    vm = vertex_module or build_vertex_module(p, hecke_upto, tower)
    vindex = _vertex_index(vm.basis)

    # enumerate edges: orbits of order-q subgroups under Aut(E)
    edges = []
    subs_at = {}
    for pt in vm.basis:
        e = curve_from_j(lv2, pt.j)
        subs = cyclic_subgroups(e, q)
        subs_at[pt.key()] = (e, subs)
        orbits = {}
        for s in subs:
            ck = canonical_kernel_poly(e, s.kernel_poly)
            orbits.setdefault(ck.coeffs, [ck, s, 0])
            orbits[ck.coeffs][2] += 1
        for coeffs in sorted(orbits):
            ck, rep, count = orbits[coeffs]
            w = automorphism_count(e, rep) // 2
            if count * w * 2 != automorphism_count(e):
                raise MassFormulaViolation(
                    f"orbit size {count} inconsistent with stabilizer weight {w} at j={pt.j}"
                )
            edges.append(EdgePoint(pt.j, ck, w, rep))
    edges.sort(key=lambda ed: ed.key())
    mass = sum(Fraction(1, ed.weight) for ed in edges)
    if mass != Fraction((p - 1) * (q + 1), 12):
        raise MassFormulaViolation(
            f"edge mass {mass} != ({p}-1)({q}+1)/12 for (p,q)=({p},{q})"
        )
    eindex = {ed.key(): i for i, ed in enumerate(edges)}
    n = len(edges)

    def canonical_edge_key(image_curve: Curve, sub: CyclicSubgroup):
        """Key of the edge (image_curve, sub) after moving to canonical form."""
        j = j_invariant(image_curve)
        canon = curve_from_j(lv2, j)
        moved = transport_subgroup(sub, canon) if image_curve != canon else sub
        ck = canonical_kernel_poly(canon, moved.kernel_poly)
        return (tuple(j), ck.coeffs)

    ops = {}
    # degeneracy maps into the vertex module
    alpha = [[0] * n for _ in range(len(vm.basis))]
    beta = [[0] * n for _ in range(len(vm.basis))]
    wq = [[0] * n for _ in range(n)]
    velu_of_edge = {}
    for col, ed in enumerate(edges):
        e, subs = subs_at[tuple(ed.j)]
        alpha[vindex[tuple(ed.j)]][col] = 1
        img, xmap = velu(e, ed.rep_sub)
        velu_of_edge[col] = (img, xmap)
        jq = j_invariant(img)
        beta[vindex[tuple(jq)]][col] = 1
        other = next(s for s in subs if s.kernel_poly.coeffs != ed.rep_sub.kernel_poly.coeffs)
        dual = push_subgroup(xmap, other, img)
        wq[eindex[canonical_edge_key(img, dual)]][col] = 1
    ops["alpha"] = IntegerMatrix(alpha, cols=n)
    ops["beta"] = IntegerMatrix(beta, cols=n)
    ops["wq"] = IntegerMatrix(wq, cols=n)

    # Frobenius twist
    wp = [[0] * n for _ in range(n)]
    for col, ed in enumerate(edges):
        jp = lv2.frob(ed.j)
        canon = curve_from_j(lv2, jp)
        kp = FPoly(lv2, [lv2.frob(c) for c in ed.kernel.coeffs])
        ck = canonical_kernel_poly(canon, kp)
        wp[eindex[(tuple(jp), ck.coeffs)]][col] = 1
    ops["wp"] = IntegerMatrix(wp, cols=n)

    for ell in _primes_upto(hecke_upto):
        if ell in (p, q):
            continue
        mat = [[0] * n for _ in range(n)]
        quotients_at = {}
        for pt in vm.basis:
            e, _ = subs_at[pt.key()]
            quotients_at[pt.key()] = [(d, *velu(e, d)) for d in cyclic_subgroups(e, ell)]
        for col, ed in enumerate(edges):
            for d, img, xmap in quotients_at[tuple(ed.j)]:
                pushed = push_subgroup(xmap, ed.rep_sub, img)
                mat[eindex[canonical_edge_key(img, pushed)]][col] += 1
        ops[f"T{ell}"] = IntegerMatrix(mat, cols=n)

    gram = IntegerMatrix(
        [[edges[i].weight if i == j else 0 for j in range(n)] for i in range(n)], cols=n
    )
    return GraphModule("edge", p, q, tower, edges, ops, gram, hecke_upto)


def hecke_operator(m: GraphModule, ell: int) -> IntegerMatrix:
    """The stored matrix of T_ell; ell must be within the configured bound."""
    label = f"T{ell}"
    if label not in m.operators:
        raise ValueError(f"T_{ell} not configured on this module (bound {m.hecke_upto})")
    return m.operators[label]


def atkin_lehner(m: GraphModule, which: str) -> IntegerMatrix:
    """wq is edge reversal; wp is the Frobenius twist of the basis."""
    label = {"p": "wp", "q": "wq"}[which]
    if label not in m.operators:
        raise ValueError(f"{label} not available on this {m.kind} module")
    return m.operators[label]


def degree_zero_submodule(m: GraphModule):
    """The coordinate-sum-zero sublattice with all square operators restricted.

    Returns ``(lattice, restricted)`` where ``restricted`` maps each square
    operator label to its matrix in the lattice basis.
    """
    n = m.rank
    lat = kernel_basis(IntegerMatrix([[1] * n], cols=n))
    restricted = {}
    for label, op in m.operators.items():
        if op.rows != op.cols:
            continue
        try:
            restricted[label] = restrict_operator(op, lat.basis)
        except ValueError as exc:
            raise OperatorDoesNotRestrict(f"{label}: {exc}") from exc
    return lat, restricted


def restrict_degeneracy(m: GraphModule, vm: GraphModule, label: str, edge_lat: Lattice, vertex_lat: Lattice) -> IntegerMatrix:
    """Degeneracy map restricted to the degree-zero sublattices."""
    op = m.operators[label]
    cols = []
    for i in range(edge_lat.rank):
        img = op.apply(edge_lat.basis.row(i))
        c = vertex_lat.coordinates_of(img)
        if c is None:
            raise OperatorDoesNotRestrict(f"{label} does not preserve degree zero")
        cols.append(c)
    rows = vertex_lat.rank
    return IntegerMatrix([[cols[j][i] for j in range(edge_lat.rank)] for i in range(rows)], cols=edge_lat.rank)


def monodromy_gram(m: GraphModule, sub: Lattice) -> IntegerMatrix:
    """Gram matrix of the diagonal weight pairing restricted to ``sub``."""
    if m.gram is None:
        raise ValueError("module carries no weight pairing")
    b = sub.basis
    return b * m.gram * b.transpose()


# ---------------------------------------------------------------------------
# modular polynomial files (cross-check data only)
# ---------------------------------------------------------------------------


def load_modular_polynomial(path: str):
    """Parse a symmetric modular polynomial file.

    Format: header line ``ell <l>``, then lines ``<i> <j> <coeff>`` for the
    monomial X^i Y^j with i >= j (symmetry implied).  Returns ``(ell, dict)``
    with the dict holding both (i, j) and (j, i).
    """
    if not os.path.exists(path):
        raise ParseError(f"no such modular polynomial file: {path}")
    coeffs = {}
    ell = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if ell is None:
                if parts[0] != "ell" or len(parts) != 2:
                    raise ParseError(f"{path}:{lineno}: expected 'ell <l>' header")
                ell = int(parts[1])
                continue
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected '<i> <j> <coeff>'")
            i, j, c = int(parts[0]), int(parts[1]), int(parts[2])
            if i < j:
                raise AsymmetryError(f"{path}:{lineno}: entries must have i >= j")
            for key in ((i, j), (j, i)):
                if key in coeffs and coeffs[key] != c:
                    raise AsymmetryError(f"{path}:{lineno}: conflicting coefficient at {key}")
                coeffs[key] = c
    if ell is None:
        raise ParseError(f"{path}: empty file")
    deg = max(i for i, _ in coeffs)
    if deg != ell + 1:
        raise ParseError(f"{path}: degree {deg} != ell+1 = {ell + 1}")
    if coeffs.get((ell + 1, 0)) != 1:
        raise ParseError(f"{path}: not monic in X^{ell + 1}")
    return ell, coeffs


def modular_polynomial_roots(ell, coeffs, j, level):
    """Roots in ``level`` of Phi_ell(j, Y), with multiplicity."""
    from .galois import roots_in_level

    maxdeg = ell + 1
    poly = [level.zero] * (maxdeg + 1)
    for (i, k), c in coeffs.items():
        if c == 0:
            continue
        poly[k] = level.add(poly[k], level.mul_scalar(level.pow(j, i), c))
    return roots_in_level(FPoly(level, poly), level)


def fast_path_agrees(m: GraphModule, modpoly_path: str):
    """Compare the explicit-kernel edge basis with j-only counting.

    Uses Phi_q(j, Y) root multiplicities to count edges between j-classes;
    returns True/False, or None when a root multiplicity exceeds 1 (the
    shortcut is only valid in the multiplicity-free case).
    """
    ell, coeffs = load_modular_polynomial(modpoly_path)
    if ell != m.q:
        raise ValueError(f"modular polynomial is for {ell}, module has q={m.q}")
    lv2 = m.tower.build_level(2)
    vertex_js = sorted({tuple(ed.j) for ed in m.basis})
    for j in vertex_js:
        roots = modular_polynomial_roots(ell, coeffs, tuple_to_elt(j), lv2)
        if any(mult > 1 for _, mult in roots):
            return None
        explicit = {}
        for ed in m.basis:
            if tuple(ed.j) != j:
                continue
            e = curve_from_j(lv2, ed.j)
            img, _ = velu(e, ed.rep_sub)
            jq = tuple(j_invariant(img))
            orbit = automorphism_count(e) // (2 * ed.weight)
            explicit[jq] = explicit.get(jq, 0) + orbit
        counted = {}
        for r, mult in roots:
            counted[tuple(r)] = counted.get(tuple(r), 0) + mult
        if explicit != counted:
            return False
    return True


# ---------------------------------------------------------------------------
# cache artifacts
# ---------------------------------------------------------------------------

CACHE_FORMAT = 1


def _serialize_elt(e):
    return ",".join(str(x) for x in e)


def _parse_elt(s):
    return tuple(int(x) for x in s.split(","))


def serialize_module(m: GraphModule) -> str:
    """Text form of a module: basis, weights, operators, tower modulus."""
    lv2 = m.tower.build_level(2)
    lines = [f"format {CACHE_FORMAT}"]
    lines.append(f"kind {m.kind}")
    lines.append(f"p {m.p}")
    lines.append(f"q {m.q if m.q is not None else '-'}")
    lines.append(f"hecke_upto {m.hecke_upto}")
    lines.append(f"seed {m.tower.seed}")
    lines.append("modulus " + _serialize_elt(lv2.modulus))
    lines.append(f"basis {m.rank}")
    for b in m.basis:
        if m.kind == "vertex":
            lines.append("v %s %d" % (_serialize_elt(b.j), b.weight))
        else:
            kp = ";".join(_serialize_elt(c) for c in b.kernel.coeffs)
            lines.append("e %s %d %s" % (_serialize_elt(b.j), b.weight, kp))
    for label in sorted(m.operators):
        lines.append(f"operator {label}")
        lines.append(str(m.operators[label]))
    if m.gram is not None:
        lines.append("gram")
        lines.append(str(m.gram))
    return "\n".join(lines) + "\n"


def content_hash(payload: str) -> str:
    return hashlib.sha256(payload.encode()).hexdigest()


def save_module(m: GraphModule, path: str):
    payload = serialize_module(m)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(f"hash {content_hash(payload)}\n")
        fh.write(payload)
    os.replace(tmp, path)


def load_module(path: str, tower: FieldTower):
    """Load a cached module; returns None on any mismatch or corruption."""
    try:
        with open(path) as fh:
            first = fh.readline()
            payload = fh.read()
    except OSError:
        return None
    if not first.startswith("hash "):
        return None
    if content_hash(payload) != first.split()[1]:
        return None
    lines = payload.splitlines()
    pos = 0

    def take():
        nonlocal pos
        line = lines[pos]
        pos += 1
        return line

    try:
        if take() != f"format {CACHE_FORMAT}":
            return None
        kind = take().split()[1]
        p = int(take().split()[1])
        qs = take().split()[1]
        q = None if qs == "-" else int(qs)
        hecke_upto = int(take().split()[1])
        seed = int(take().split()[1])
        modulus = _parse_elt(take().split()[1])
        lv2 = tower.build_level(2)
        if tower.p != p or tower.seed != seed or lv2.modulus != modulus:
            return None
        nbasis = int(take().split()[1])
        basis = []
        for _ in range(nbasis):
            parts = take().split()
            if parts[0] == "v":
                basis.append(VertexPoint(_parse_elt(parts[1]), int(parts[2])))
            else:
                j = _parse_elt(parts[1])
                w = int(parts[2])
                coeffs = [_parse_elt(c) for c in parts[3].split(";")]
                basis.append(EdgePoint(j, FPoly(lv2, coeffs), w, None))
        operators = {}
        gram = None
        while pos < len(lines):
            header = take()
            if header.startswith("operator "):
                label = header.split()[1]
                rows, cols = map(int, take().split())
                data = [[int(x) for x in take().split()] for _ in range(rows)]
                operators[label] = IntegerMatrix(data, cols=cols)
            elif header == "gram":
                rows, cols = map(int, take().split())
                data = [[int(x) for x in take().split()] for _ in range(rows)]
                gram = IntegerMatrix(data, cols=cols)
            else:
                return None
    except (IndexError, ValueError):
        return None
    m = GraphModule(kind, p, q, tower, basis, operators, gram, hecke_upto)
    if kind == "edge":
        _rehydrate_edge_subgroups(m)
    return m


def _rehydrate_edge_subgroups(m: GraphModule):
    """Reattach representative subgroups to cached edges (for cross-checks)."""
    lv2 = m.tower.build_level(2)
    for ed in m.basis:
        e = curve_from_j(lv2, ed.j)
        ed.rep_sub = CyclicSubgroup(e, m.q, ed.kernel)
