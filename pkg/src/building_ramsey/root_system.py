"""Exact root data for types A-G (rank <= 8), Weyl groups, and sphere counts.

All vectors live in the Bourbaki ambient coordinates of the chosen type and are
tuples of Fraction; the ambient inner product is the standard dot product.
Coweights are stored in fundamental-coweight coordinates (integer tuples), so
lattice questions reduce to exact integer linear algebra.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import ConsistencyError, InputError

Vector = tuple[Fraction, ...]

#: enumerate_weyl refuses larger ranks unless allow_large is passed.
ENUMERATION_RANK_CAP = 6

_SUPPORTED = {
    "A": range(1, 9),
    "B": range(2, 9),
    "C": range(2, 9),
    "D": range(4, 9),
    "E": range(6, 9),
    "F": range(4, 5),
    "G": range(2, 3),
}


def supported_labels() -> tuple[str, ...]:
    """Every irreducible type label this module can build, in family order."""
    return tuple(
        f"{family}{rank}" for family, ranks in _SUPPORTED.items() for rank in ranks
    )


def _vec(values: Iterable) -> Vector:
    return tuple(Fraction(v) for v in values)


def dot(x: Vector, y: Vector) -> Fraction:
    return sum((a * b for a, b in zip(x, y, strict=True)), Fraction(0))


def vec_add(x: Vector, y: Vector) -> Vector:
    return tuple(a + b for a, b in zip(x, y, strict=True))


def vec_sub(x: Vector, y: Vector) -> Vector:
    return tuple(a - b for a, b in zip(x, y, strict=True))


def vec_scale(c, x: Vector) -> Vector:
    c = Fraction(c)
    return tuple(c * a for a in x)


def vec_neg(x: Vector) -> Vector:
    return tuple(-a for a in x)


@dataclass(frozen=True)
class Coweight:
    """Integer coordinates with respect to the fundamental coweights."""

    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        if not all(isinstance(c, int) for c in self.coords):
            raise InputError("coweight coordinates must be integers")

    @property
    def rank(self) -> int:
        return len(self.coords)

    @property
    def is_dominant(self) -> bool:
        return all(c >= 0 for c in self.coords)

    @property
    def is_strongly_dominant(self) -> bool:
        return all(c > 0 for c in self.coords)

    def __add__(self, other: "Coweight") -> "Coweight":
        return Coweight(tuple(a + b for a, b in zip(self.coords, other.coords, strict=True)))

    def __sub__(self, other: "Coweight") -> "Coweight":
        return Coweight(tuple(a - b for a, b in zip(self.coords, other.coords, strict=True)))

    def scale(self, k: int) -> "Coweight":
        return Coweight(tuple(k * c for c in self.coords))


def rho_coweight(rank: int) -> Coweight:
    """Sum of the fundamental coweights: all coordinates equal to 1."""
    return Coweight((1,) * rank)


def dominates(lam: Coweight, mu: Coweight) -> bool:
    """True iff mu <= lam, i.e. lam - mu is dominant."""
    return (lam - mu).is_dominant


def strongly_dominates(lam: Coweight, mu: Coweight) -> bool:
    """True iff mu << lam, i.e. lam - mu is strongly dominant."""
    return (lam - mu).is_strongly_dominant


@dataclass(frozen=True)
class WeylElement:
    """Orthogonal ambient matrix together with a word in the simple reflections.

    Words are 1-based generator indices, leftmost factor applied last:
    w = s_{word[0]} s_{word[1]} ... s_{word[-1]}.
    """

    word: tuple[int, ...]
    matrix: tuple[Vector, ...]

    @property
    def length(self) -> int:
        return len(self.word)

    def apply(self, v: Vector) -> Vector:
        return tuple(dot(row, v) for row in self.matrix)

    def __hash__(self) -> int:
        return hash(self.matrix)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeylElement):
            return NotImplemented
        return self.matrix == other.matrix


def _simple_root_table(family: str, rank: int) -> tuple[int, list[Vector]]:
    """Bourbaki simple roots; returns (ambient dimension, roots)."""
    h = Fraction(1, 2)
    if family == "A":
        dim = rank + 1
        roots = [_unit(dim, i) for i in range(rank)]
        return dim, [vec_sub(_unit(dim, i), _unit(dim, i + 1)) for i in range(rank)]
    if family in ("B", "C", "D"):
        dim = rank
        roots = [vec_sub(_unit(dim, i), _unit(dim, i + 1)) for i in range(rank - 1)]
        if family == "B":
            roots.append(_unit(dim, rank - 1))
        elif family == "C":
            roots.append(vec_scale(2, _unit(dim, rank - 1)))
        else:
            roots.append(vec_add(_unit(dim, rank - 2), _unit(dim, rank - 1)))
        return dim, roots
    if family == "E":
        dim = 8
        alpha1 = _vec([h, -h, -h, -h, -h, -h, -h, h])
        alpha2 = vec_add(_unit(8, 0), _unit(8, 1))
        chain = [vec_sub(_unit(8, i), _unit(8, i - 1)) for i in range(1, 7)]
        roots = [alpha1, alpha2] + chain
        return dim, roots[:rank]
    if family == "F":
        dim = 4
        return dim, [
            vec_sub(_unit(4, 1), _unit(4, 2)),
            vec_sub(_unit(4, 2), _unit(4, 3)),
            _unit(4, 3),
            _vec([h, -h, -h, -h]),
        ]
    if family == "G":
        dim = 3
        return dim, [
            vec_sub(_unit(3, 0), _unit(3, 1)),
            _vec([-2, 1, 1]),
        ]
    raise InputError(f"unknown family {family!r}")


def _unit(dim: int, i: int) -> Vector:
    return tuple(Fraction(1 if j == i else 0) for j in range(dim))


def _invert(matrix: list[list[Fraction]]) -> list[list[Fraction]]:
    """Exact Gauss-Jordan inverse of a small square matrix."""
    n = len(matrix)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [a * inv for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@dataclass(frozen=True)
class RootDatum:
    """Immutable root datum in Bourbaki ambient coordinates."""

    label: str
    family: str
    rank: int
    ambient_dim: int
    simple_roots: tuple[Vector, ...]
    simple_coroots: tuple[Vector, ...]
    positive_roots: tuple[Vector, ...]
    highest_root: Vector
    marks: tuple[int, ...]
    fundamental_coweights: tuple[Vector, ...]
    cartan_matrix: tuple[tuple[int, ...], ...]
    cartan_inverse: tuple[tuple[Fraction, ...], ...]

    @property
    def num_positive_roots(self) -> int:
        """Equals the length of the longest Weyl element."""
        return len(self.positive_roots)

    def coroot(self, alpha: Vector) -> Vector:
        return vec_scale(Fraction(2, 1) / dot(alpha, alpha), alpha)

    def reflect(self, i: int, v: Vector) -> Vector:
        """Apply the simple reflection s_i (1-based) to an ambient vector."""
        alpha = self.simple_roots[i - 1]
        return vec_sub(v, vec_scale(dot(v, alpha), self.simple_coroots[i - 1]))

    def reflect_in_root(self, alpha: Vector, v: Vector) -> Vector:
        return vec_sub(v, vec_scale(dot(v, alpha), self.coroot(alpha)))

    def simple_reflection_matrix(self, i: int) -> tuple[Vector, ...]:
        alpha = self.simple_roots[i - 1]
        cov = self.simple_coroots[i - 1]
        n = self.ambient_dim
        return tuple(
            tuple(Fraction(int(a == b)) - cov[a] * alpha[b] for b in range(n)) for a in range(n)
        )

    def coweight_vector(self, cw: Coweight) -> Vector:
        if cw.rank != self.rank:
            raise InputError(f"coweight rank {cw.rank} != datum rank {self.rank}")
        v = (Fraction(0),) * self.ambient_dim
        for c, omega in zip(cw.coords, self.fundamental_coweights):
            v = vec_add(v, vec_scale(c, omega))
        return v

    def coweight_from_vector(self, vec: Vector) -> Coweight:
        """Inverse of coweight_vector; rejects vectors off the coweight lattice."""
        if len(vec) != self.ambient_dim:
            raise InputError("vector has wrong ambient dimension")
        pairings = [dot(vec, alpha) for alpha in self.simple_roots]
        if not all(p.denominator == 1 for p in pairings):
            raise InputError("vector pairs non-integrally with a simple root")
        cw = Coweight(tuple(int(p) for p in pairings))
        if self.coweight_vector(cw) != tuple(vec):
            raise InputError("vector is not in the span of the coweights")
        return cw

    def rho_vector(self) -> Vector:
        return self.coweight_vector(rho_coweight(self.rank))


def _root_coefficients(coweights: Sequence[Vector], root: Vector) -> tuple[int, ...]:
    coeffs = [dot(omega, root) for omega in coweights]
    if not all(c.denominator == 1 for c in coeffs):
        raise ConsistencyError(f"non-integral simple-root coefficients for {root}")
    return tuple(int(c) for c in coeffs)


@lru_cache(maxsize=None)
def build_root_datum(label: str) -> RootDatum:
    """Construct the root datum named by a label like "C2" or "E8"."""
    if not label or label[0] not in _SUPPORTED or not label[1:].isdigit():
        raise InputError(f"unrecognized type label {label!r}")
    family, rank = label[0], int(label[1:])
    if rank not in _SUPPORTED[family]:
        supported = ", ".join(f"{f}{min(r)}-{f}{max(r)}" if len(r) > 1 else f"{f}{min(r)}"
                              for f, r in _SUPPORTED.items())
        raise InputError(f"rank {rank} unsupported for family {family} (supported: {supported})")

    dim, simples = _simple_root_table(family, rank)
    coroots = [vec_scale(Fraction(2, 1) / dot(a, a), a) for a in simples]

    cartan = [[dot(simples[i], coroots[j]) for j in range(rank)] for i in range(rank)]
    if any(c.denominator != 1 for row in cartan for c in row):
        raise ConsistencyError("non-integral Cartan matrix")
    cartan_int = tuple(tuple(int(c) for c in row) for row in cartan)
    cartan_inv = _invert([[Fraction(c) for c in row] for row in cartan_int])

    # omega_i = sum_k (A^{-1})_{ki} alpha_k-vee satisfies <omega_i, alpha_j> = delta_ij.
    coweights = []
    for i in range(rank):
        omega = (Fraction(0),) * dim
        for k in range(rank):
            omega = vec_add(omega, vec_scale(cartan_inv[k][i], coroots[k]))
        coweights.append(omega)
    for i in range(rank):
        for j in range(rank):
            if dot(coweights[i], simples[j]) != int(i == j):
                raise ConsistencyError("coweight pairing failed")

    # Close the simple roots under simple reflections to get the full system.
    all_roots: set[Vector] = set(simples)
    frontier = list(simples)
    while frontier:
        new = []
        for beta in frontier:
            for i in range(1, rank + 1):
                alpha = simples[i - 1]
                image = vec_sub(beta, vec_scale(dot(beta, alpha), coroots[i - 1]))
                if image not in all_roots:
                    all_roots.add(image)
                    new.append(image)
        frontier = new
    coeff_of = {r: _root_coefficients(coweights, r) for r in all_roots}
    positive = [r for r in all_roots if all(c >= 0 for c in coeff_of[r])]
    if 2 * len(positive) != len(all_roots):
        raise ConsistencyError("root system is not symmetric")
    positive.sort(key=lambda r: (sum(coeff_of[r]), coeff_of[r]))

    heights = [sum(coeff_of[r]) for r in positive]
    top = max(heights)
    if heights.count(top) != 1:
        raise ConsistencyError("highest root is not unique")
    highest = positive[heights.index(top)]

    datum = RootDatum(
        label=label,
        family=family,
        rank=rank,
        ambient_dim=dim,
        simple_roots=tuple(simples),
        simple_coroots=tuple(coroots),
        positive_roots=tuple(positive),
        highest_root=highest,
        marks=coeff_of[highest],
        fundamental_coweights=tuple(coweights),
        cartan_matrix=cartan_int,
        cartan_inverse=tuple(tuple(row) for row in cartan_inv),
    )
    _check_datum(datum, all_roots)
    return datum


def _check_datum(datum: RootDatum, all_roots: set[Vector]) -> None:
    # Reflection in any positive root must permute the root set.
    for alpha in datum.positive_roots:
        for beta in datum.positive_roots:
            if datum.reflect_in_root(alpha, beta) not in all_roots:
                raise ConsistencyError("reflection does not preserve the root set")
        covee = datum.coroot(alpha)
        if datum.coroot(covee) != alpha:
            raise ConsistencyError("coroot is not an involution")


def _left_multiply_reflection(datum: RootDatum, i: int, matrix: tuple[Vector, ...]) -> tuple[Vector, ...]:
    """Compute s_i @ matrix with a rank-one update."""
    alpha = datum.simple_roots[i - 1]
    cov = datum.simple_coroots[i - 1]
    n = datum.ambient_dim
    t = tuple(sum((alpha[a] * matrix[a][b] for a in range(n)), Fraction(0)) for b in range(n))
    return tuple(
        tuple(matrix[a][b] - cov[a] * t[b] for b in range(n)) for a in range(n)
    )


def _identity_matrix(dim: int) -> tuple[Vector, ...]:
    return tuple(tuple(Fraction(int(i == j)) for j in range(dim)) for i in range(dim))


def matrix_from_word(datum: RootDatum, word: Sequence[int]) -> tuple[Vector, ...]:
    """Product matrix of a word, leftmost factor first."""
    m = _identity_matrix(datum.ambient_dim)
    for i in reversed(word):
        m = _left_multiply_reflection(datum, i, m)
    return m


def apply_word(datum: RootDatum, word: Sequence[int], v: Vector) -> Vector:
    """Apply a word to a vector, rightmost (first-applied) generator first."""
    for i in reversed(word):
        v = datum.reflect(i, v)
    return v


def inversion_count(datum: RootDatum, matrix: tuple[Vector, ...]) -> int:
    """Number of positive roots sent to negative roots."""
    neg = {vec_neg(r) for r in datum.positive_roots}
    count = 0
    for alpha in datum.positive_roots:
        image = tuple(dot(row, alpha) for row in matrix)
        if image in neg:
            count += 1
    return count


_WEYL_CACHE: dict[str, tuple[WeylElement, ...]] = {}


def enumerate_weyl(datum: RootDatum, allow_large: bool = False) -> tuple[WeylElement, ...]:
    """All Weyl elements with reduced words, ordered by (length, word).

    Breadth-first search of the Cayley graph under left multiplication by the
    simple reflections, deduplicated by the image of the regular vector rho.
    Refuses rank > 6 unless allow_large is set; the larger groups enumerate
    correctly but slowly.
    """
    if datum.rank > ENUMERATION_RANK_CAP and not allow_large:
        raise InputError(
            f"rank {datum.rank} > {ENUMERATION_RANK_CAP}: pass allow_large=True to enumerate anyway"
        )
    cached = _WEYL_CACHE.get(datum.label)
    if cached is not None:
        return cached

    rho = datum.rho_vector()
    identity = WeylElement(word=(), matrix=_identity_matrix(datum.ambient_dim))
    seen: dict[Vector, WeylElement] = {rho: identity}
    queue = deque([(rho, identity)])
    while queue:
        image, elem = queue.popleft()
        for i in range(1, datum.rank + 1):
            new_image = datum.reflect(i, image)
            if new_image in seen:
                continue
            new_elem = WeylElement(
                word=(i,) + elem.word,
                matrix=_left_multiply_reflection(datum, i, elem.matrix),
            )
            seen[new_image] = new_elem
            queue.append((new_image, new_elem))

    elements = sorted(seen.values(), key=lambda e: (e.length, e.word))
    top_length = datum.num_positive_roots
    longest = [e for e in elements if e.length == top_length]
    if len(longest) != 1 or any(e.length > top_length for e in elements):
        raise ConsistencyError("longest element is not unique of length |Phi+|")
    result = tuple(elements)
    _WEYL_CACHE[datum.label] = result
    return result


def weyl_order(datum: RootDatum, allow_large: bool = False) -> int:
    return len(enumerate_weyl(datum, allow_large=allow_large))


@lru_cache(maxsize=None)
def longest_element(label: str) -> WeylElement:
    """Longest Weyl element via descent from -rho; no group enumeration."""
    datum = build_root_datum(label)
    v = vec_neg(datum.rho_vector())
    applied: list[int] = []
    while True:
        i = next((j for j in range(1, datum.rank + 1) if dot(v, datum.simple_roots[j - 1]) < 0), None)
        if i is None:
            break
        v = datum.reflect(i, v)
        applied.append(i)
    word = tuple(reversed(applied))
    if len(word) != datum.num_positive_roots:
        raise ConsistencyError("descent to the dominant chamber has wrong length")
    elem = WeylElement(word=word, matrix=matrix_from_word(datum, word))
    if elem.apply(vec_neg(datum.rho_vector())) != datum.rho_vector():
        raise ConsistencyError("longest element does not send -rho to rho")
    return elem


def is_minus_one_type(datum: RootDatum) -> bool:
    """True iff the longest element acts as -identity on the span of the roots."""
    w0 = longest_element(datum.label)
    return all(
        w0.apply(alpha) == vec_neg(alpha) for alpha in datum.simple_roots
    )


def poincare_value(
    datum: RootDatum,
    q: int,
    stabilizer_of: Coweight | None = None,
    allow_large: bool = False,
) -> Fraction:
    """Sum of q^{-length} over the Weyl group or over a coweight stabilizer."""
    if q < 2:
        raise InputError("q must be at least 2")
    elements = enumerate_weyl(datum, allow_large=allow_large)
    if stabilizer_of is None:
        return sum((Fraction(1, q**e.length) for e in elements), Fraction(0))
    lam = datum.coweight_vector(stabilizer_of)
    total = Fraction(0)
    for e in elements:
        if apply_word(datum, e.word, lam) == lam:
            total += Fraction(1, q**e.length)
    return total


def dominant_rep(datum: RootDatum, vector: Sequence) -> tuple[Coweight, WeylElement]:
    """Dominant representative of a coweight-lattice vector plus a certificate.

    The returned element w satisfies w(vector) == output vector.
    """
    vec = _vec(vector)
    datum.coweight_from_vector(vec)  # validates lattice membership
    applied: list[int] = []
    v = vec
    while True:
        i = next((j for j in range(1, datum.rank + 1) if dot(v, datum.simple_roots[j - 1]) < 0), None)
        if i is None:
            break
        v = datum.reflect(i, v)
        applied.append(i)
    word = tuple(reversed(applied))
    elem = WeylElement(word=word, matrix=matrix_from_word(datum, word))
    if elem.apply(vec) != v:
        raise ConsistencyError("dominant_rep certificate does not map input to output")
    if inversion_count(datum, elem.matrix) != elem.length:
        raise ConsistencyError("dominant_rep certificate word is not reduced")
    return datum.coweight_from_vector(v), elem


def star_involution(datum: RootDatum, lam: Coweight) -> Coweight:
    """lam* = -w0(lam); fixes every dominant coweight exactly when w0 = -1."""
    if not lam.is_dominant:
        raise InputError("star involution expects a dominant coweight")
    w0 = longest_element(datum.label)
    image = vec_neg(w0.apply(datum.coweight_vector(lam)))
    out = datum.coweight_from_vector(image)
    if not out.is_dominant:
        raise ConsistencyError("star involution left the dominant cone")
    return out


def height_two_rho(datum: RootDatum, lam: Coweight) -> int:
    """Sum over positive roots alpha of <lam, alpha>.

    Counts the reflection hyperplanes separating a generic point from its
    translate by lam; equivalently the pairing of lam with the sum of the
    positive roots. This is the exponent governing sphere and atom sizes.
    """
    if not lam.is_dominant:
        raise InputError("height expects a dominant coweight")
    vec = datum.coweight_vector(lam)
    total = sum((dot(vec, alpha) for alpha in datum.positive_roots), Fraction(0))
    if total.denominator != 1:
        raise ConsistencyError("non-integral height")
    return int(total)


def sphere_size(datum: RootDatum, lam: Coweight, q: int, allow_large: bool = False) -> int:
    """Number of ambient vertices at coweight distance lam from a base vertex.

    Equals W(q^{-1}) / W_lam(q^{-1}) * q^{height_two_rho(lam)} where W_lam is
    the stabilizer of lam; always an integer.
    """
    if q < 2:
        raise InputError("q must be at least 2")
    if not lam.is_dominant:
        raise InputError("sphere_size expects a dominant coweight")
    full = poincare_value(datum, q, allow_large=allow_large)
    stab = poincare_value(datum, q, stabilizer_of=lam, allow_large=allow_large)
    value = full / stab * Fraction(q) ** height_two_rho(datum, lam)
    if value.denominator != 1:
        raise ConsistencyError(f"sphere size {value} is not an integer")
    return int(value)


def coroot_coefficients(datum: RootDatum, lam: Coweight) -> tuple[Fraction, ...]:
    """Coefficients expressing lam in the simple coroots (exact rationals)."""
    if lam.rank != datum.rank:
        raise InputError("coweight rank mismatch")
    inv = datum.cartan_inverse
    return tuple(
        sum((inv[k][j] * lam.coords[j] for j in range(datum.rank)), Fraction(0))
        for k in range(datum.rank)
    )


def in_coroot_lattice(datum: RootDatum, lam: Coweight) -> bool:
    """True iff lam lies in the lattice spanned by the coroots."""
    return all(c.denominator == 1 for c in coroot_coefficients(datum, lam))


def datum_to_dict(datum: RootDatum, include_weyl_order: bool = True) -> dict:
    """JSON-ready description with exact rationals as strings."""
    def vecs(rows):
        return [[str(x) for x in row] for row in rows]

    out = {
        "label": datum.label,
        "family": datum.family,
        "rank": datum.rank,
        "ambient_dim": datum.ambient_dim,
        "simple_roots": vecs(datum.simple_roots),
        "simple_coroots": vecs(datum.simple_coroots),
        "positive_roots": vecs(datum.positive_roots),
        "num_positive_roots": datum.num_positive_roots,
        "highest_root": [str(x) for x in datum.highest_root],
        "marks": list(datum.marks),
        "fundamental_coweights": vecs(datum.fundamental_coweights),
        "cartan_matrix": [list(row) for row in datum.cartan_matrix],
        "minus_one_type": is_minus_one_type(datum),
        "longest_length": datum.num_positive_roots,
    }
    if include_weyl_order and datum.rank <= ENUMERATION_RANK_CAP:
        out["weyl_order"] = weyl_order(datum)
    return out
