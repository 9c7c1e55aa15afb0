"""Exact cardinalities and density bounds for sphere atoms in affine buildings.

Everything here is arithmetic on top of root_system: opposite-chamber counts,
atom sizes, the noise constant kappa, the star-free density bound, and the
doubled-coweight witnesses outside the coroot lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ConsistencyError, InputError
from .root_system import (
    Coweight,
    RootDatum,
    coroot_coefficients,
    dot,
    enumerate_weyl,
    height_two_rho,
    in_coroot_lattice,
    is_minus_one_type,
    rho_coweight,
    sphere_size,
    star_involution,
    strongly_dominates,
)


@dataclass(frozen=True)
class BuildingStarSpec:
    """Coweight profile (lambda_1 << ... << lambda_k) with tier multiplicities."""

    lambdas: tuple[Coweight, ...]
    multiplicities: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.lambdas or len(self.lambdas) != len(self.multiplicities):
            raise InputError("lambdas and multiplicities must be nonempty and of equal length")
        if any(r < 1 for r in self.multiplicities):
            raise InputError("multiplicities must be positive")

    @property
    def k(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class SpecDiagnostics:
    """Hypothesis report for a building star spec."""

    valid: bool
    messages: tuple[str, ...]
    minus_one_type: bool
    star_fixed: tuple[bool, ...]


def validate_building_star_spec(datum: RootDatum, spec: BuildingStarSpec) -> SpecDiagnostics:
    """Check the strict dominance chain 0 << lambda_1 << ... << lambda_k.

    Also reports whether each lambda is fixed by the star involution and
    whether the ambient type acts by -1 (in which case fixedness is automatic).
    """
    messages: list[str] = []
    for idx, lam in enumerate(spec.lambdas, start=1):
        if lam.rank != datum.rank:
            raise InputError(f"lambda_{idx} has rank {lam.rank}, expected {datum.rank}")
        if not lam.is_strongly_dominant:
            messages.append(f"lambda_{idx} is not strongly dominant")
    for idx in range(len(spec.lambdas) - 1):
        if not strongly_dominates(spec.lambdas[idx + 1], spec.lambdas[idx]):
            messages.append(
                f"lambda_{idx + 2} - lambda_{idx + 1} is not strongly dominant"
            )
    fixed = tuple(
        lam.is_dominant and star_involution(datum, lam) == lam for lam in spec.lambdas
    )
    minus_one = is_minus_one_type(datum)
    if minus_one and not all(fixed):
        raise ConsistencyError("star involution moved a coweight in a -1 type")
    return SpecDiagnostics(
        valid=not messages,
        messages=tuple(messages),
        minus_one_type=minus_one,
        star_fixed=fixed,
    )


@dataclass(frozen=True)
class AtomCounts:
    """Opposite-chamber count and atom size over one residue sphere."""

    opposite_exponent: int
    atom_exponent: int
    opposite: int
    atom: int


def atom_cardinalities(datum: RootDatum, q: int, lam: Coweight) -> AtomCounts:
    """Counts q^{l(w0)} and q^{h(lam) - l(w0)} for strongly dominant lam.

    The first counts chambers opposite a fixed chamber in a residue; the
    second is the size of each atom cut out by an opposite-chamber pair on
    the sphere at lam. Their product with |S_mu| recovers |S_{lam + mu}|.
    """
    if q < 2:
        raise InputError("q must be at least 2")
    if not lam.is_strongly_dominant:
        raise InputError("atom cardinalities need a strongly dominant coweight")
    ell = datum.num_positive_roots
    h = height_two_rho(datum, lam)
    if h < ell:
        raise ConsistencyError("height below longest length for strongly dominant coweight")
    return AtomCounts(
        opposite_exponent=ell,
        atom_exponent=h - ell,
        opposite=q**ell,
        atom=q ** (h - ell),
    )


def atom_partition_identity(
    datum: RootDatum, q: int, lam: Coweight, mu: Coweight, allow_large: bool = False
) -> bool:
    """Check |S_mu| * q^{l(w0)} * atom == |S_{lam + mu}| exactly."""
    if not mu.is_strongly_dominant:
        raise InputError("partition identity needs a strongly dominant mu")
    counts = atom_cardinalities(datum, q, lam)
    lhs = sphere_size(datum, mu, q, allow_large=allow_large) * counts.opposite * counts.atom
    rhs = sphere_size(datum, lam + mu, q, allow_large=allow_large)
    return lhs == rhs


def sphere_size_thickness_vector(
    datum: RootDatum,
    qs: Sequence[int],
    lam: Coweight,
    allow_large: bool = False,
) -> int:
    """Sphere size with one thickness parameter per simple-root type.

    A wall carries the parameter of the simple reflection its reflection is
    conjugate to; conjugacy classes are root-length classes, so qs must agree
    on simple roots of equal squared length. The value is the multiparameter
    Poincare ratio W(q^-1)/W_lam(q^-1), summed over reduced words, times one
    factor q_alpha per separating wall. With a constant vector this equals
    sphere_size; only that case is pinned to a closed-form anchor.
    """
    if len(qs) != datum.rank:
        raise InputError(f"need {datum.rank} thickness entries for {datum.label}")
    if any(q < 2 for q in qs):
        raise InputError("thickness entries must be at least 2")
    if not lam.is_dominant:
        raise InputError("sphere sizes need a dominant coweight")
    norms = [dot(alpha, alpha) for alpha in datum.simple_roots]
    by_norm: dict[Fraction, int] = {}
    for norm, q in zip(norms, qs):
        if by_norm.setdefault(norm, q) != q:
            raise InputError("thickness entries must agree on simple roots of equal length")

    vec = datum.coweight_vector(lam)
    wall_product = 1
    for alpha in datum.positive_roots:
        wall_product *= by_norm[dot(alpha, alpha)] ** int(dot(vec, alpha))

    total = Fraction(0)
    stabilizer = Fraction(0)
    for w in enumerate_weyl(datum, allow_large=allow_large):
        term = Fraction(1)
        for letter in w.word:
            term /= qs[letter - 1]
        total += term
        if w.apply(vec) == vec:
            stabilizer += term
    value = total / stabilizer * wall_product
    if value.denominator != 1:
        raise ConsistencyError("thickness-vector sphere size came out non-integral")
    if len(set(qs)) == 1 and value != sphere_size(datum, lam, qs[0], allow_large=allow_large):
        raise ConsistencyError("uniform thickness vector disagrees with sphere_size")
    return int(value)


@dataclass(frozen=True)
class KappaResult:
    """Noise constant and the matching end-chamber lower bound."""

    kappa: Fraction
    end_chamber_bound: int


def kappa(datum: RootDatum, q: int) -> KappaResult:
    """kappa = (1 - 1/q)^{l(w0)}; at least (q-1)^{l(w0)} opposite end chambers."""
    if q < 2:
        raise InputError("q must be at least 2")
    ell = datum.num_positive_roots
    return KappaResult(
        kappa=(1 - Fraction(1, q)) ** ell,
        end_chamber_bound=(q - 1) ** ell,
    )


def density_bound_rhs(
    datum: RootDatum, q: int, ell: int, r: int, lam11: Coweight
) -> Fraction:
    """(1 - kappa)^ell + r * q^{l(w0) - h(lam11)}, exact.

    lam11 is the smallest coweight of the first chain; it must be strongly
    dominant, which makes the correction exponent nonpositive.
    """
    if ell < 1 or r < 1:
        raise InputError("need ell >= 1 and r >= 1")
    if not lam11.is_strongly_dominant:
        raise InputError("lam11 must be strongly dominant")
    kap = kappa(datum, q).kappa
    correction = Fraction(q) ** (datum.num_positive_roots - height_two_rho(datum, lam11))
    return (1 - kap) ** ell + r * correction


@dataclass(frozen=True)
class WitnessEntry:
    """One doubled coweight with its coroot-lattice membership."""

    n_scale: int
    coords: tuple[int, ...]
    coroot_coords: tuple[str, ...]
    in_coroot_lattice: bool


@dataclass(frozen=True)
class WitnessReport:
    """Doubled coweights 2(omega_1 + N rho) tested against the coroot lattice."""

    label: str
    entries: tuple[WitnessEntry, ...]
    all_outside: bool
    control_two_rho_inside: bool
    residue: int | None  # common image in P/Q for family A, else None


def conjecture_witness(datum: RootDatum, n_max: int) -> WitnessReport:
    """Check that 2(omega_1 + N rho) misses the coroot lattice for 0 <= N <= n_max.

    For family A the quotient of coweights by coroots is cyclic of order
    rank + 1 and the common residue class of the witnesses is reported; for A1
    the witnesses all land inside the lattice and all_outside is False.
    """
    if n_max < 0:
        raise InputError("n_max must be nonnegative")
    rho = rho_coweight(datum.rank)
    omega1 = Coweight((1,) + (0,) * (datum.rank - 1))
    entries = []
    residues = set()
    for n_scale in range(n_max + 1):
        doubled = (omega1 + rho.scale(n_scale)).scale(2)
        coords = coroot_coefficients(datum, doubled)
        inside = all(c.denominator == 1 for c in coords)
        if datum.family == "A":
            residues.add(sum(i * c for i, c in enumerate(doubled.coords, start=1)) % (datum.rank + 1))
        entries.append(
            WitnessEntry(
                n_scale=n_scale,
                coords=doubled.coords,
                coroot_coords=tuple(str(c) for c in coords),
                in_coroot_lattice=inside,
            )
        )
    control = in_coroot_lattice(datum, rho.scale(2))
    residue = residues.pop() if len(residues) == 1 else None
    return WitnessReport(
        label=datum.label,
        entries=tuple(entries),
        all_outside=all(not e.in_coroot_lattice for e in entries),
        control_two_rho_inside=control,
        residue=residue,
    )
