"""Cartan coordinates of invertible rational matrices over a prime p.

The primary algorithm is Gaussian elimination with valuation-minimal pivoting,
whose row/column multipliers are p-integral and hence preserve the elementary
divisors; the independent cross-check is the minimal-valuation-of-minors
profile. Coordinates are reported in non-increasing order, so the identity
matrix maps to (0, ..., 0) and diag(p, 1) over p maps to (1, 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .building_calc import BuildingStarSpec, validate_building_star_spec
from .errors import ConsistencyError, InputError
from .root_system import Coweight, RootDatum, rho_coweight, strongly_dominates

Matrix = tuple[tuple[Fraction, ...], ...]

_SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
                 71, 73, 79, 83, 89, 97]
_MR_BASES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
_MR_LIMIT = 3_317_044_064_679_887_385_961_981


def is_probable_prime(p: int) -> bool:
    """Trial division, then Miller-Rabin (deterministic below 3.3e24)."""
    if p < 2:
        return False
    for sp in _SMALL_PRIMES:
        if p == sp:
            return True
        if p % sp == 0:
            return False
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(s - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    # Deterministic below _MR_LIMIT; a strong probabilistic certificate beyond.
    return True


def valuation(x: Fraction | int, p: int) -> int | None:
    """p-adic valuation; None encodes +infinity for zero."""
    x = Fraction(x)
    if x == 0:
        return None
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def parse_matrix(payload) -> Matrix:
    """Rows of ints or "num/den" strings, either bare or under a "matrix" key."""
    if isinstance(payload, dict):
        if "matrix" not in payload:
            raise InputError("matrix JSON missing field 'matrix'")
        payload = payload["matrix"]
    if not isinstance(payload, list) or not payload:
        raise InputError("matrix must be a nonempty list of rows")
    rows = []
    for row in payload:
        if not isinstance(row, list) or len(row) != len(payload):
            raise InputError("matrix must be square (rows of equal length)")
        parsed = []
        for entry in row:
            if isinstance(entry, bool) or not isinstance(entry, (int, str)):
                raise InputError(f"matrix entry {entry!r} must be an int or 'num/den' string")
            try:
                parsed.append(Fraction(entry))
            except (ValueError, ZeroDivisionError) as exc:
                raise InputError(f"matrix entry {entry!r} is not a rational") from exc
        rows.append(tuple(parsed))
    return tuple(rows)


def matrix_to_json(m: Matrix) -> list[list[str]]:
    return [[str(x) for x in row] for row in m]


def determinant(m: Matrix) -> Fraction:
    work = [list(row) for row in m]
    n = len(work)
    det = Fraction(1)
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot_row is None:
            return Fraction(0)
        if pivot_row != col:
            work[col], work[pivot_row] = work[pivot_row], work[col]
            det = -det
        det *= work[col][col]
        inv = 1 / work[col][col]
        for r in range(col + 1, n):
            if work[r][col] != 0:
                f = work[r][col] * inv
                work[r] = [a - f * b for a, b in zip(work[r], work[col])]
    return det


def invert(m: Matrix) -> Matrix:
    n = len(m)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot_row is None:
            raise InputError("matrix is singular")
        aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [a * inv for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def _validate(m: Matrix, p: int) -> Matrix:
    m = tuple(tuple(Fraction(x) for x in row) for row in m)
    n = len(m)
    if n == 0 or any(len(row) != n for row in m):
        raise InputError("matrix must be square and nonempty")
    if not is_probable_prime(p):
        raise InputError(f"p = {p} is not prime")
    if determinant(m) == 0:
        raise InputError("matrix is singular")
    return m


def cartan_coordinates(m: Matrix, p: int) -> tuple[int, ...]:
    """Non-increasing valuations of the elementary divisors of m over Z_(p).

    Valuation-minimal pivoting keeps every elimination multiplier p-integral,
    so each step is unimodular over the local ring and the pivot valuations
    are exactly the divisor valuations, produced in non-decreasing order.
    """
    m = _validate(m, p)
    n = len(m)
    work = [list(row) for row in m]
    diag: list[int] = []
    for k in range(n):
        best: tuple[int, int] | None = None
        best_v: int | None = None
        for i in range(k, n):
            for j in range(k, n):
                v = valuation(work[i][j], p)
                if v is not None and (best_v is None or v < best_v):
                    best, best_v = (i, j), v
        if best is None:
            raise ConsistencyError("elimination block vanished for a nonsingular matrix")
        bi, bj = best
        if bi != k:
            work[k], work[bi] = work[bi], work[k]
        if bj != k:
            for row in work:
                row[k], row[bj] = row[bj], row[k]
        pivot = work[k][k]
        for i in range(k + 1, n):
            if work[i][k] != 0:
                f = work[i][k] / pivot
                if valuation(f, p) < 0:  # pivot minimality guarantees this never fires
                    raise ConsistencyError("non-integral row multiplier")
                work[i] = [a - f * b for a, b in zip(work[i], work[k])]
        for j in range(k + 1, n):
            # The column operation only touches row k here; rows below are zero.
            work[k][j] = Fraction(0)
        diag.append(best_v)
    if any(diag[i] > diag[i + 1] for i in range(n - 1)):
        raise ConsistencyError("pivot valuations are not non-decreasing")
    det_v = valuation(determinant(m), p)
    if sum(diag) != det_v:
        raise ConsistencyError("divisor valuations do not sum to det valuation")
    return tuple(reversed(diag))


def minors_min_valuations(m: Matrix, p: int) -> tuple[int, ...]:
    """Minimal p-valuation over all k x k minors, for k = 1..n."""
    m = _validate(m, p)
    n = len(m)
    out = []
    for k in range(1, n + 1):
        best: int | None = None
        for rows in combinations(range(n), k):
            for cols in combinations(range(n), k):
                sub = tuple(tuple(m[i][j] for j in cols) for i in rows)
                v = valuation(determinant(sub), p)
                if v is not None and (best is None or v < best):
                    best = v
        if best is None:
            raise ConsistencyError("all minors of some size vanish for a nonsingular matrix")
        out.append(best)
    return tuple(out)


def cartan_from_minors(m: Matrix, p: int) -> tuple[int, ...]:
    """Independent oracle: successive differences of the minor valuations."""
    mins = minors_min_valuations(m, p)
    divisors = [mins[0]] + [mins[k] - mins[k - 1] for k in range(1, len(mins))]
    if any(divisors[i] > divisors[i + 1] for i in range(len(divisors) - 1)):
        raise ConsistencyError("minor-profile divisors are not non-decreasing")
    return tuple(reversed(divisors))


def vector_distance_cosets(g: Matrix, h: Matrix, p: int) -> tuple[int, ...]:
    """Cartan coordinates of g^{-1} h: the coset distance between gK and hK."""
    g = _validate(g, p)
    h = _validate(h, p)
    if len(g) != len(h):
        raise InputError("matrices must have equal size")
    product = tuple(
        tuple(
            sum((gi[k] * h[k][j] for k in range(len(h))), Fraction(0))
            for j in range(len(h))
        )
        for gi in invert(g)
    )
    return cartan_coordinates(product, p)


def gl_cartan_to_coweight(datum: RootDatum, cartan: Sequence[int]) -> Coweight:
    """Successive differences of a GL-style valuation vector, for family A."""
    if datum.family != "A":
        raise InputError("GL Cartan vectors convert only for family A")
    if len(cartan) != datum.rank + 1:
        raise InputError(f"expected {datum.rank + 1} valuations, got {len(cartan)}")
    return Coweight(tuple(int(cartan[i]) - int(cartan[i + 1]) for i in range(datum.rank)))


@dataclass(frozen=True)
class ChainCheck:
    """Hypothesis diagnostics for a doubled star chain of coweights."""

    even_ok: tuple[bool, ...]
    chain_ok: bool
    floor_ok: bool
    messages: tuple[str, ...]
    halved: tuple[Coweight, ...] | None
    induced_valid: bool
    valid: bool


def check_star_chain_hypotheses(
    datum: RootDatum,
    coweights: Sequence[Coweight],
    floor_scale: int | None = None,
    multiplicities: Sequence[int] | None = None,
) -> ChainCheck:
    """Check lambda_j in 2P and N rho << lambda_1 << ... << lambda_r.

    On success the halved coweights form a strongly dominant chain and the
    induced star spec diagnostics are included; nothing is asserted, failures
    are reported.
    """
    if not coweights:
        raise InputError("need at least one coweight")
    messages: list[str] = []
    even_ok = tuple(all(c % 2 == 0 for c in lam.coords) for lam in coweights)
    for idx, ok in enumerate(even_ok, start=1):
        if not ok:
            messages.append(f"lambda_{idx} is not in the doubled coweight lattice")
    floor_ok = True
    if floor_scale is not None:
        if floor_scale < 1:
            raise InputError("floor scale must be at least 1")
        floor_ok = strongly_dominates(coweights[0], rho_coweight(datum.rank).scale(floor_scale))
        if not floor_ok:
            messages.append(f"lambda_1 does not strongly dominate {floor_scale} rho")
    chain_ok = True
    for idx in range(len(coweights) - 1):
        if not strongly_dominates(coweights[idx + 1], coweights[idx]):
            chain_ok = False
            messages.append(f"lambda_{idx + 2} does not strongly dominate lambda_{idx + 1}")
    halved = None
    induced_valid = False
    if all(even_ok) and chain_ok and floor_ok:
        halved = tuple(Coweight(tuple(c // 2 for c in lam.coords)) for lam in coweights)
        mults = tuple(multiplicities) if multiplicities else (1,) * len(halved)
        diag = validate_building_star_spec(
            datum, BuildingStarSpec(lambdas=halved, multiplicities=mults)
        )
        induced_valid = diag.valid
        if not diag.valid:
            messages.extend(diag.messages)
    return ChainCheck(
        even_ok=even_ok,
        chain_ok=chain_ok,
        floor_ok=floor_ok,
        messages=tuple(messages),
        halved=halved,
        induced_valid=induced_valid,
        valid=all(even_ok) and chain_ok and floor_ok and induced_valid,
    )
