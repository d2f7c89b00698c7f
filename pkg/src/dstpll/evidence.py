"""Dempster-Shafer algebra over label subsets.

Masses live on subsets of a finite label space {1, ..., width}. Subsets are
bit vectors (LabelSet), mass functions are sparse maps from focal set to
mass (BPA). Combination follows the conflict-reallocating rule: evidence is
intersected across all sources simultaneously and whatever ends up on the
empty set is moved to the designated sink set instead of being renormalized
away.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Iterator

from .errors import (
    CombinatorialBlowup,
    DuplicateFocalSet,
    EmptyFocalSet,
    EmptySourceList,
    MassNotNormalized,
    NonPositiveMass,
    UniverseMismatch,
)

#: tolerance on |sum of masses - 1| accepted (and repaired) by construction
MASS_TOL = 1e-9

#: combined focal sets below this mass are dropped as numerical dust
DUST = 1e-15


class LabelSet:
    """An immutable subset of the label space {1, ..., width}.

    Stored as an arbitrary-precision bit vector, so widths beyond 64 labels
    cost nothing special. Labels are 1-based; bit (label - 1) set means the
    label is a member.
    """

    __slots__ = ("width", "bits")

    def __init__(self, width: int, bits: int = 0):
        if width < 1:
            raise ValueError(f"label-space width must be >= 1, got {width}")
        if not 0 <= bits < (1 << width):
            raise ValueError(f"bits 0x{bits:x} out of range for width {width}")
        self.width = width
        self.bits = bits

    @classmethod
    def from_labels(cls, width: int, labels: Iterable[int]) -> "LabelSet":
        bits = 0
        for label in labels:
            if not 1 <= label <= width:
                raise ValueError(f"label {label} outside 1..{width}")
            bits |= 1 << (label - 1)
        return cls(width, bits)

    @classmethod
    def full(cls, width: int) -> "LabelSet":
        return cls(width, (1 << width) - 1)

    @classmethod
    def empty(cls, width: int) -> "LabelSet":
        return cls(width, 0)

    @classmethod
    def singleton(cls, width: int, label: int) -> "LabelSet":
        if not 1 <= label <= width:
            raise ValueError(f"label {label} outside 1..{width}")
        return cls(width, 1 << (label - 1))

    def labels(self) -> tuple[int, ...]:
        """Members in ascending order, 1-based."""
        return tuple(self)

    def __iter__(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length()
            bits ^= low

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, label: int) -> bool:
        return 1 <= label <= self.width and bool(self.bits >> (label - 1) & 1)

    def __bool__(self) -> bool:
        return self.bits != 0

    @property
    def is_empty(self) -> bool:
        return self.bits == 0

    @property
    def is_full(self) -> bool:
        return self.bits == (1 << self.width) - 1

    def _check_width(self, other: "LabelSet") -> None:
        if self.width != other.width:
            raise UniverseMismatch(
                f"label-space widths differ: {self.width} vs {other.width}"
            )

    def issubset(self, other: "LabelSet") -> bool:
        self._check_width(other)
        return self.bits & ~other.bits == 0

    def isdisjoint(self, other: "LabelSet") -> bool:
        self._check_width(other)
        return self.bits & other.bits == 0

    def intersection(self, other: "LabelSet") -> "LabelSet":
        self._check_width(other)
        return LabelSet(self.width, self.bits & other.bits)

    __and__ = intersection

    def union(self, other: "LabelSet") -> "LabelSet":
        self._check_width(other)
        return LabelSet(self.width, self.bits | other.bits)

    __or__ = union

    def complement(self) -> "LabelSet":
        return LabelSet(self.width, ~self.bits & ((1 << self.width) - 1))

    def difference(self, other: "LabelSet") -> "LabelSet":
        self._check_width(other)
        return LabelSet(self.width, self.bits & ~other.bits)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, LabelSet)
            and self.width == other.width
            and self.bits == other.bits
        )

    def __hash__(self) -> int:
        return hash((self.width, self.bits))

    def __repr__(self) -> str:
        return f"LabelSet(width={self.width}, labels={self.labels()})"


class BPA:
    """Sparse mass function: focal sets (LabelSet) mapped to mass in (0, 1].

    Treat instances as immutable once built; use :func:`bpa_from_focal` to
    construct one with full validation. ``focal`` never contains the empty
    set and the stored masses sum to one.
    """

    __slots__ = ("universe_size", "focal")

    def __init__(self, universe_size: int, focal: dict[LabelSet, float]):
        self.universe_size = universe_size
        self.focal = focal

    def mass(self, a: LabelSet) -> float:
        if a.width != self.universe_size:
            raise UniverseMismatch(
                f"set width {a.width} vs universe {self.universe_size}"
            )
        return self.focal.get(a, 0.0)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BPA)
            and self.universe_size == other.universe_size
            and self.focal == other.focal
        )

    def __repr__(self) -> str:
        items = ", ".join(
            f"{ls.labels()}: {m:.6g}"
            for ls, m in sorted(self.focal.items(), key=lambda kv: kv[0].bits)
        )
        return f"BPA(universe_size={self.universe_size}, {{{items}}})"


def bpa_from_focal(
    universe_size: int, entries: Iterable[tuple[LabelSet, float]]
) -> BPA:
    """Build a validated BPA from (focal set, mass) pairs.

    Rejects empty-set keys, duplicate keys, non-positive masses, and mass
    totals off by more than MASS_TOL. Totals within tolerance are
    renormalized to exactly one so that long combination chains do not
    accumulate drift.
    """
    focal: dict[LabelSet, float] = {}
    total = 0.0
    for ls, mass in entries:
        if ls.width != universe_size:
            raise UniverseMismatch(
                f"focal set width {ls.width} vs universe {universe_size}"
            )
        if ls.is_empty:
            raise EmptyFocalSet("the empty set cannot carry mass")
        mass = float(mass)
        if not mass > 0.0:
            raise NonPositiveMass(f"mass {mass!r} for {ls.labels()} must be > 0")
        if ls in focal:
            raise DuplicateFocalSet(f"focal set {ls.labels()} listed twice")
        focal[ls] = mass
        total += mass
    if not focal:
        raise MassNotNormalized("no focal sets given, masses sum to 0")
    if abs(total - 1.0) > MASS_TOL:
        raise MassNotNormalized(f"masses sum to {total!r}, expected 1")
    if total != 1.0:
        focal = {ls: m / total for ls, m in focal.items()}
    return BPA(universe_size, focal)


def vacuous(universe_size: int) -> BPA:
    """Total ignorance: all mass on the full label space."""
    return BPA(universe_size, {LabelSet.full(universe_size): 1.0})


def belief(bpa: BPA, a: LabelSet) -> float:
    """Total mass of focal sets contained in ``a`` (provable support)."""
    if a.width != bpa.universe_size:
        raise UniverseMismatch(f"set width {a.width} vs universe {bpa.universe_size}")
    abits = a.bits
    return sum(m for ls, m in bpa.focal.items() if ls.bits & ~abits == 0)


def plausibility(bpa: BPA, a: LabelSet) -> float:
    """Total mass of focal sets intersecting ``a`` (non-refuted support)."""
    if a.width != bpa.universe_size:
        raise UniverseMismatch(f"set width {a.width} vs universe {bpa.universe_size}")
    abits = a.bits
    return sum(m for ls, m in bpa.focal.items() if ls.bits & abits)


def singleton_plausibilities(bpa: BPA) -> list[float]:
    """Plausibility of every singleton {1}, ..., {width} in one sweep."""
    pl = [0.0] * bpa.universe_size
    for ls, m in bpa.focal.items():
        for label in ls:
            pl[label - 1] += m
    return pl


def _source_key(bpa: BPA) -> tuple:
    return tuple(sorted((ls.bits, m) for ls, m in bpa.focal.items()))


def _finish(universe: LabelSet, acc: dict[int, float]) -> BPA:
    """Move conflict to the sink, drop dust, renormalize."""
    conflict = acc.pop(0, 0.0)
    if conflict:
        acc[universe.bits] = acc.get(universe.bits, 0.0) + conflict
    total = 0.0
    kept: dict[int, float] = {}
    for bits, m in acc.items():
        if m >= DUST:
            kept[bits] = m
            total += m
    width = universe.width
    # division by an exact 1.0 is the identity, so this never perturbs
    # already-normalized results
    focal = {LabelSet(width, bits): m / total for bits, m in kept.items()}
    return BPA(width, focal)


def yager_combine(universe: LabelSet, sources: list[BPA]) -> BPA:
    """Combine evidence sources simultaneously, sending conflict to ``universe``.

    This is the k-ary rule: the combined mass of set A sums the products of
    source masses over every tuple of focal sets whose intersection is A,
    and the mass that lands on the empty set is reassigned to ``universe``
    (plus whatever the intersection itself put there). It is not an iterated
    pairwise rule; conflict is only reassigned once, at the end.

    ``universe`` is the frame the evidence lives in, the full label space in
    the general rule. The classifier passes the query's candidate frame,
    whose subsets carry all of the neighbors' focal mass.

    Implemented as a streaming fold over a sparse intersection map. Sources
    are folded in a canonical order so the result is exactly identical (same
    floats) under any permutation of ``sources``.
    """
    if not sources:
        raise EmptySourceList("need at least one evidence source")
    if universe.is_empty:
        raise EmptyFocalSet("conflict sink must be a non-empty set")
    width = universe.width
    for src in sources:
        if src.universe_size != width:
            raise UniverseMismatch(
                f"source universe {src.universe_size} vs sink width {width}"
            )
    ordered = sorted(sources, key=_source_key)
    acc: dict[int, float] = {(1 << width) - 1: 1.0}
    for src in ordered:
        pairs = sorted((ls.bits, m) for ls, m in src.focal.items())
        new: dict[int, float] = {}
        get = new.get
        for abits, amass in acc.items():
            for bbits, bmass in pairs:
                key = abits & bbits
                prev = get(key)
                new[key] = amass * bmass if prev is None else prev + amass * bmass
        acc = new
    return _finish(universe, acc)


def naive_combine_oracle(universe: LabelSet, sources: list[BPA]) -> BPA:
    """Reference combination by exhaustive enumeration of focal tuples.

    Definitionally the same sum as :func:`yager_combine`, computed the slow
    way for differential testing. Refuses inputs whose focal-count product
    exceeds 10**7 tuples.
    """
    if not sources:
        raise EmptySourceList("need at least one evidence source")
    if universe.is_empty:
        raise EmptyFocalSet("conflict sink must be a non-empty set")
    width = universe.width
    n_tuples = 1
    for src in sources:
        if src.universe_size != width:
            raise UniverseMismatch(
                f"source universe {src.universe_size} vs sink width {width}"
            )
        n_tuples *= len(src.focal)
        if n_tuples > 10**7:
            raise CombinatorialBlowup(
                "focal-count product exceeds 10^7 tuples; refusing enumeration"
            )
    full = (1 << width) - 1
    per_source = [
        sorted((ls.bits, m) for ls, m in src.focal.items()) for src in sources
    ]
    acc: dict[int, float] = {}
    for combo in product(*per_source):
        bits = full
        mass = 1.0
        for b, m in combo:
            bits &= b
            mass *= m
        acc[bits] = acc.get(bits, 0.0) + mass
    return _finish(universe, acc)
