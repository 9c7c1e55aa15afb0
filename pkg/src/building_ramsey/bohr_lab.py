"""Bohr sets along sqrt(d), their double-difference sumsets, and pruned trees.

All membership decisions are certified in integer arithmetic: theta = sqrt(d)
is scaled to T = floor(theta * 2^128), so n * theta * 2^128 lies in the open
band (v, v + n) with v = n*T mod 2^128, and a decision is recorded only when
the whole band falls on one side of the cutoff. Entries whose band straddles a
cutoff (or wraps) are marked uncertain and excluded from densities.

Sumsets are computed as supports of big-integer products: 0/1 arrays are
packed into 32-bit coefficient slots, multiplied once (GMP via gmpy2), and the
product's slots are the convolution counts. Two passes give (A - A) and then
(A - A) + (A - A) exactly on the requested window.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product

import gmpy2
import numpy as np

from .errors import ConsistencyError, InputError

SCALE_BITS = 128
_SCALE = 1 << SCALE_BITS


@lru_cache(maxsize=None)
def scaled_theta(theta_square: int) -> int:
    """floor(sqrt(theta_square) * 2^128), exact via integer square root."""
    if theta_square < 2:
        raise InputError("theta_square must be at least 2")
    root = math.isqrt(theta_square)
    if root * root == theta_square:
        raise InputError("theta_square must not be a perfect square")
    return math.isqrt(theta_square << (2 * SCALE_BITS))


def _bit(buf: bytes, i: int) -> bool:
    return bool(buf[i >> 3] & (1 << (i & 7)))


def _bits_to_array(buf: bytes, length: int) -> np.ndarray:
    raw = np.frombuffer(buf, dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:length].astype(bool)


@dataclass(frozen=True)
class BohrSet:
    """Certified indicator of {n : {n theta} < epsilon} on [-horizon, horizon]."""

    epsilon: Fraction
    theta_square: int
    horizon: int
    pos_members: bytes     # bit n <-> n in A, 0 <= n <= horizon
    pos_uncertain: bytes
    neg_members: bytes     # bit n <-> -n in A, 1 <= n <= horizon
    neg_uncertain: bytes

    def contains(self, n: int) -> bool | None:
        """True/False when certified, None when uncertain."""
        if abs(n) > self.horizon:
            raise InputError(f"{n} outside horizon {self.horizon}")
        members, uncertain = (
            (self.pos_members, self.pos_uncertain)
            if n >= 0
            else (self.neg_members, self.neg_uncertain)
        )
        if _bit(uncertain, abs(n)):
            return None
        return _bit(members, abs(n))

    def member_levels(self, limit: int) -> tuple[int, ...]:
        """Certified nonnegative members up to limit."""
        if limit > self.horizon:
            raise InputError("limit beyond horizon")
        arr = _bits_to_array(self.pos_members, limit + 1)
        return tuple(int(i) for i in np.nonzero(arr)[0])

    @property
    def uncertain_count(self) -> int:
        pos = _bits_to_array(self.pos_uncertain, self.horizon + 1)
        neg = _bits_to_array(self.neg_uncertain, self.horizon + 1)
        return int(pos.sum()) + int(neg[1:].sum())

    def window(self) -> "IndicatorWindow":
        """Symmetric indicator over [-horizon, horizon]."""
        n = self.horizon
        pos_m = _bits_to_array(self.pos_members, n + 1)
        pos_u = _bits_to_array(self.pos_uncertain, n + 1)
        neg_m = _bits_to_array(self.neg_members, n + 1)
        neg_u = _bits_to_array(self.neg_uncertain, n + 1)
        bits = np.concatenate([neg_m[1:][::-1], pos_m])
        uncertain = np.concatenate([neg_u[1:][::-1], pos_u])
        return IndicatorWindow(lo=-n, hi=n, bits=bits, uncertain=uncertain)


@dataclass(frozen=True)
class IndicatorWindow:
    """Three-valued 0/1 indicator on the integer interval [lo, hi]."""

    lo: int
    hi: int
    bits: np.ndarray
    uncertain: np.ndarray

    def __post_init__(self) -> None:
        length = self.hi - self.lo + 1
        if self.bits.shape != (length,) or self.uncertain.shape != (length,):
            raise InputError("indicator arrays do not match the window")

    def contains(self, i: int) -> bool | None:
        if not self.lo <= i <= self.hi:
            raise InputError(f"{i} outside window [{self.lo}, {self.hi}]")
        if self.uncertain[i - self.lo]:
            return None
        return bool(self.bits[i - self.lo])

    @property
    def certain_count(self) -> int:
        return int((self.bits & ~self.uncertain).sum())

    @property
    def uncertain_count(self) -> int:
        return int(self.uncertain.sum())

    def clip(self, lo: int, hi: int) -> "IndicatorWindow":
        if lo < self.lo or hi > self.hi or lo > hi:
            raise InputError("clip window out of range")
        a, b = lo - self.lo, hi - self.lo + 1
        return IndicatorWindow(lo=lo, hi=hi, bits=self.bits[a:b], uncertain=self.uncertain[a:b])

    def rle(self) -> dict:
        """Run-length encoding of the certain members: [[start, length], ...]."""
        runs = []
        arr = (self.bits & ~self.uncertain).astype(np.int8)
        changes = np.nonzero(np.diff(arr))[0]
        starts = [0] + [int(c) + 1 for c in changes]
        ends = [int(c) for c in changes] + [len(arr) - 1]
        for s, e in zip(starts, ends):
            if arr[s]:
                runs.append([self.lo + s, e - s + 1])
        return {"lo": self.lo, "hi": self.hi, "runs": runs}


def bohr_membership(epsilon: Fraction, horizon: int, theta_square: int = 2) -> BohrSet:
    """Certified membership of {n theta} < epsilon for |n| <= horizon."""
    epsilon = Fraction(epsilon)
    if not 0 < epsilon < 1:
        raise InputError("epsilon must lie strictly between 0 and 1")
    if horizon < 1:
        raise InputError("horizon must be at least 1")
    t = scaled_theta(theta_square) % _SCALE  # the integer part of theta drops out
    a, b = epsilon.numerator, epsilon.denominator
    cut = a * _SCALE  # compare value*b against cut

    nbytes = (horizon >> 3) + 1
    pos_m, pos_u = bytearray(nbytes), bytearray(nbytes)
    neg_m, neg_u = bytearray(nbytes), bytearray(nbytes)
    pos_m[0] |= 1  # n = 0: {0} = 0 < epsilon
    v = 0
    for n in range(1, horizon + 1):
        v += t
        if v >= _SCALE:
            v -= _SCALE
        byte, mask = n >> 3, 1 << (n & 7)
        # Positive n: value lies strictly inside (v, v + n).
        if v + n >= _SCALE:
            pos_u[byte] |= mask
        elif (v + n) * b <= cut:
            pos_m[byte] |= mask
        elif v * b < cut:
            pos_u[byte] |= mask
        # Negative n: value lies strictly inside (w - n, w), w = 2^128 - v.
        w = _SCALE - v
        if w < n:
            neg_u[byte] |= mask
        elif w * b <= cut:
            neg_m[byte] |= mask
        elif (w - n) * b < cut:
            neg_u[byte] |= mask
    return BohrSet(
        epsilon=epsilon,
        theta_square=theta_square,
        horizon=horizon,
        pos_members=bytes(pos_m),
        pos_uncertain=bytes(pos_u),
        neg_members=bytes(neg_m),
        neg_uncertain=bytes(neg_u),
    )


@dataclass(frozen=True)
class WindowDensityReport:
    """Certified density on a symmetric window and its dyadic subwindows."""

    half_width: int
    density: Fraction
    uncertain: int
    dyadic: tuple[tuple[int, Fraction], ...]


def natural_density(window: IndicatorWindow) -> WindowDensityReport:
    """Density of certain members over certified entries, window plus dyadic."""
    if window.lo != -window.hi:
        raise InputError("density wants a symmetric window")
    levels = []
    half = window.hi
    while half >= 1:
        sub = window.clip(-half, half)
        denom = (2 * half + 1) - sub.uncertain_count
        levels.append((half, Fraction(sub.certain_count, denom)))
        if half < 16:
            break
        half //= 2
    return WindowDensityReport(
        half_width=window.hi,
        density=levels[0][1],
        uncertain=window.uncertain_count,
        dyadic=tuple(levels),
    )


_SLOT_BITS = 32


def _encode_slots(arr: np.ndarray) -> gmpy2.mpz:
    return gmpy2.mpz(int.from_bytes(arr.astype(np.uint32).tobytes(), "little"))


def _decode_support(value: gmpy2.mpz, slots: int) -> np.ndarray:
    raw = int(value).to_bytes(4 * slots, "little")
    return np.frombuffer(raw, dtype=np.uint32) > 0


def _convolution_support(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Support of the integer convolution of two 0/1 arrays."""
    # Each product slot counts at most min(len(a), len(b)) overlaps.
    if min(len(a), len(b)) >= 1 << _SLOT_BITS:
        raise InputError("arrays too long for 32-bit coefficient slots")
    product = _encode_slots(a) * _encode_slots(b)
    return _decode_support(product, len(a) + len(b) - 1)


def double_difference_sumset(source: BohrSet | IndicatorWindow, window: int) -> IndicatorWindow:
    """Exact (A - A) + (A - A) of the windowed set A, on [-window, window].

    Certain bits use only certified members; uncertain bits mark values
    reachable when uncertain entries are allowed but not otherwise. The
    requested window must stay within 4x the source half-width, which is
    the reach of elements representable inside the source window.
    """
    base = source.window() if isinstance(source, BohrSet) else source
    if base.lo != -base.hi:
        raise InputError("sumset wants a symmetric source window")
    n = base.hi
    if not 1 <= window <= 4 * n:
        raise InputError(f"window must lie in [1, {4 * n}]")

    certain = base.bits & ~base.uncertain
    possible = base.bits | base.uncertain

    def double_diff(arr: np.ndarray) -> np.ndarray:
        diff = _convolution_support(arr, arr[::-1])  # support of A - A on [-2n, 2n]
        return _convolution_support(diff, diff)      # support of D + D on [-4n, 4n]

    definite = double_diff(certain)
    reachable = double_diff(possible)
    full = IndicatorWindow(
        lo=-4 * n, hi=4 * n, bits=definite, uncertain=reachable & ~definite
    )
    return full.clip(-window, window)


@dataclass(frozen=True)
class PrunedTree:
    """Rooted binary-or-unary tree: a level-n vertex has 2 children iff n in A.

    Vertices are (level, bits) with one bit per branching level strictly below
    the vertex; sphere n has exactly 2^{#branching levels < n} vertices.
    """

    depth: int
    branching_levels: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise InputError("depth must be at least 1")
        lv = self.branching_levels
        if list(lv) != sorted(set(lv)) or (lv and (lv[0] < 0 or lv[-1] >= self.depth)):
            raise InputError("branching levels must be sorted, distinct, inside [0, depth)")

    def branch_count(self, n: int) -> int:
        if not 0 <= n <= self.depth:
            raise InputError(f"level {n} outside tree")
        return bisect_left(self.branching_levels, n)

    def sphere_size(self, n: int) -> int:
        return 1 << self.branch_count(n)

    def vertices(self, n: int, limit: int = 1 << 16) -> tuple[tuple[int, tuple[int, ...]], ...]:
        if self.sphere_size(n) > limit:
            raise InputError(f"sphere at level {n} larger than limit {limit}")
        k = self.branch_count(n)
        return tuple((n, bits) for bits in product((0, 1), repeat=k))

    def distance(self, u: tuple[int, tuple[int, ...]], v: tuple[int, tuple[int, ...]]) -> int:
        (a, abits), (b, bbits) = u, v
        for vertex, bits in ((u, abits), (v, bbits)):
            if len(bits) != self.branch_count(vertex[0]):
                raise InputError(f"vertex {vertex} has malformed branch bits")
        meet = min(a, b)
        for idx in range(min(len(abits), len(bbits))):
            if abits[idx] != bbits[idx]:
                meet = self.branching_levels[idx]
                break
        return (a - meet) + (b - meet)

    def random_vertex(self, n: int, rng: random.Random) -> tuple[int, tuple[int, ...]]:
        k = self.branch_count(n)
        return (n, tuple(rng.randint(0, 1) for _ in range(k)))


@dataclass(frozen=True)
class CounterexampleReport:
    """Pruned tree carrying X = union of spheres at member levels."""

    epsilon: Fraction
    theta_square: int
    tree: PrunedTree
    member_levels: tuple[int, ...]
    uncertain_below_depth: int
    cesaro_density: Fraction
    cesaro_sequence: tuple[tuple[int, Fraction], ...]
    epsilon_gap: Fraction  # |cesaro - epsilon|


def build_counterexample(
    epsilon: Fraction, tree_depth: int, theta_square: int = 2
) -> CounterexampleReport:
    """Pruned tree whose vertex set X has positive density but bounded geometry.

    Branches exactly at the certified member levels of the Bohr set; X is the
    union of the spheres at those levels, so every pairwise distance of X lies
    in the double-difference sumset of the member levels. The Cesaro density
    |A intersect [1, N]| / N tracks epsilon.
    """
    bohr = bohr_membership(epsilon, tree_depth, theta_square)
    members = bohr.member_levels(tree_depth - 1)
    uncertain = sum(
        1 for n in range(tree_depth) if bohr.contains(n) is None
    )
    tree = PrunedTree(depth=tree_depth, branching_levels=members)
    checkpoints = []
    count = 0
    member_set = set(members)
    step = max(1, tree_depth // 8)
    for n in range(1, tree_depth + 1):
        if n in member_set:
            count += 1
        if n % step == 0 or n == tree_depth:
            checkpoints.append((n, Fraction(count, n)))
    cesaro = checkpoints[-1][1]
    return CounterexampleReport(
        epsilon=Fraction(epsilon),
        theta_square=theta_square,
        tree=tree,
        member_levels=members,
        uncertain_below_depth=uncertain,
        cesaro_density=cesaro,
        cesaro_sequence=tuple(checkpoints),
        epsilon_gap=abs(cesaro - Fraction(epsilon)),
    )


def certified_avoided(m: int, epsilon: Fraction, theta_square: int = 2) -> bool:
    """True when {m theta} provably lies in [2 eps, 1 - 2 eps] for m > 0.

    Every element s of (A - A) + (A - A) has {s theta} within 2 eps of 0
    (mod 1), so certification here proves m is not in the sumset of the full,
    un-windowed Bohr set.
    """
    if m <= 0:
        raise InputError("certificate defined for positive integers")
    epsilon = Fraction(epsilon)
    if epsilon >= Fraction(1, 4):
        raise InputError("avoidance band is empty unless epsilon < 1/4")
    t = scaled_theta(theta_square)
    a, b = epsilon.numerator, epsilon.denominator
    v = m * t % _SCALE
    if v + m >= _SCALE:
        return False
    lower_ok = v * b >= 2 * a * _SCALE
    upper_ok = (v + m) * b <= (b - 2 * a) * _SCALE
    return bool(lower_ok and upper_ok)


@dataclass(frozen=True)
class AvoidanceWitness:
    k: int
    t: int
    value: int           # k * t
    window_state: str    # "absent" | "beyond-window"


@dataclass(frozen=True)
class AvoidanceReport:
    epsilon: Fraction
    theta_square: int
    horizon: int
    density_members: Fraction
    density_sumset: Fraction
    uncertain_members: int
    uncertain_sumset: int
    witnesses: tuple[AvoidanceWitness, ...]
    missing_k: tuple[int, ...]
    sampled_pairs: int
    sampled_distance_failures: int
    uniformity: tuple[tuple[int, int, Fraction], ...]  # (modulus, residue, density)


def verify_avoidance(
    epsilon: Fraction,
    horizon: int,
    k_max: int,
    floor_t: int,
    sample_pairs: int = 0,
    tree_depth: int = 0,
    seed: int = 0,
    theta_square: int = 2,
    scan_limit: int = 20000,
) -> AvoidanceReport:
    """Arithmetic-progression avoidance and distance membership, certified.

    For each multiplier k <= k_max, scans t >= floor_t for the first k*t whose
    fractional-part certificate proves k*t outside the sumset; cross-checks the
    windowed sumset where it reaches. Sampled pairwise distances of the pruned
    tree's vertex set must land inside the sumset (these use certified member
    levels only, so failures would be real violations).
    """
    bohr = bohr_membership(epsilon, horizon, theta_square)
    window = bohr.window()
    sumset = double_difference_sumset(bohr, 4 * horizon)
    members_report = natural_density(window)
    sumset_report = natural_density(sumset)

    witnesses = []
    missing = []
    for k in range(1, k_max + 1):
        found = None
        for t in range(floor_t, floor_t + scan_limit):
            m = k * t
            if certified_avoided(m, epsilon, theta_square):
                state = "beyond-window"
                if m <= sumset.hi:
                    if sumset.contains(m) is True:
                        raise ConsistencyError(
                            f"certificate and windowed sumset disagree at {m}"
                        )
                    state = "absent"
                found = AvoidanceWitness(k=k, t=t, value=m, window_state=state)
                break
        if found is None:
            missing.append(k)
        else:
            witnesses.append(found)

    failures = 0
    sampled = 0
    if sample_pairs > 0 and tree_depth > 0:
        rng = random.Random(seed)
        report = build_counterexample(epsilon, tree_depth, theta_square)
        levels = [n for n in report.member_levels if n >= 1]
        if 2 * tree_depth > sumset.hi:
            raise InputError("tree depth too large for the sumset window")
        for _ in range(sample_pairs):
            x = report.tree.random_vertex(rng.choice(levels), rng)
            y = report.tree.random_vertex(rng.choice(levels), rng)
            dist = report.tree.distance(x, y)
            sampled += 1
            if sumset.contains(dist) is not True:
                failures += 1

    uniformity = []
    idx = np.arange(sumset.lo, sumset.hi + 1)
    for modulus in range(1, 5):
        for residue in range(modulus):
            sel = (idx % modulus) == residue
            bits = sumset.bits[sel] & ~sumset.uncertain[sel]
            denom = int(sel.sum()) - int(sumset.uncertain[sel].sum())
            uniformity.append((modulus, residue, Fraction(int(bits.sum()), denom)))

    return AvoidanceReport(
        epsilon=Fraction(epsilon),
        theta_square=theta_square,
        horizon=horizon,
        density_members=members_report.density,
        density_sumset=sumset_report.density,
        uncertain_members=members_report.uncertain,
        uncertain_sumset=sumset_report.uncertain,
        witnesses=tuple(witnesses),
        missing_k=tuple(missing),
        sampled_pairs=sampled,
        sampled_distance_failures=failures,
        uniformity=tuple(uniformity),
    )
