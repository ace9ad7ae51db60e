"""Formulas, annotations, multisets and annotated sequents of the K+ language.

The language has falsum, atoms, implication and the two modalities: the
ordinary box (truth at all successors) and the master modality (truth at
all strictly reachable worlds).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Imp:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Box:
    body: "Formula"


@dataclass(frozen=True)
class BoxP:
    body: "Formula"


Formula = Bot | Atom | Imp | Box | BoxP

# The annotation of a sequent: None means unfocused, a formula puts that
# formula in focus (and then its BoxP must occur on the right-hand side).
Annotation = Optional[Formula]

BOT = Bot()


def size(phi: Formula) -> int:
    """Connective count: atoms and falsum weigh 1, each connective adds 1."""
    match phi:
        case Bot() | Atom():
            return 1
        case Imp(lhs, rhs):
            return size(lhs) + size(rhs) + 1
        case Box(body) | BoxP(body):
            return size(body) + 1
    raise TypeError(f"not a formula: {phi!r}")


def formula_key(phi: Formula) -> tuple:
    """Total structural order on formulas, used for canonical multiset order."""
    match phi:
        case Bot():
            return (0,)
        case Atom(name):
            return (1, name)
        case Imp(lhs, rhs):
            return (2, formula_key(lhs), formula_key(rhs))
        case Box(body):
            return (3, formula_key(body))
        case BoxP(body):
            return (4, formula_key(body))
    raise TypeError(f"not a formula: {phi!r}")


def atoms_of(phi: Formula) -> set[str]:
    match phi:
        case Bot():
            return set()
        case Atom(name):
            return {name}
        case Imp(lhs, rhs):
            return atoms_of(lhs) | atoms_of(rhs)
        case Box(body) | BoxP(body):
            return atoms_of(body)
    raise TypeError(f"not a formula: {phi!r}")


class MultisetError(ValueError):
    pass


class FormulaMultiset:
    """Finite multiset of formulas with deterministic iteration order."""

    __slots__ = ("_counts", "_items", "_hash")

    def __init__(self, items: Iterable[Formula] = ()):
        counts: dict[Formula, int] = {}
        for phi in items:
            counts[phi] = counts.get(phi, 0) + 1
        self._init_from(counts)

    def _init_from(self, counts: dict[Formula, int]) -> None:
        self._counts = counts
        self._items = tuple(
            sorted(counts.items(), key=lambda kv: formula_key(kv[0]))
        )
        self._hash = hash(self._items)

    @classmethod
    def _from_counts(cls, counts: dict[Formula, int]) -> "FormulaMultiset":
        ms = cls.__new__(cls)
        ms._init_from({k: v for k, v in counts.items() if v > 0})
        return ms

    def count(self, phi: Formula) -> int:
        return self._counts.get(phi, 0)

    def __contains__(self, phi: Formula) -> bool:
        return phi in self._counts

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __iter__(self) -> Iterator[Formula]:
        for phi, n in self._items:
            for _ in range(n):
                yield phi

    def items(self) -> tuple[tuple[Formula, int], ...]:
        return self._items

    def support(self) -> tuple[Formula, ...]:
        return tuple(phi for phi, _ in self._items)

    def add(self, phi: Formula, n: int = 1) -> "FormulaMultiset":
        counts = dict(self._counts)
        counts[phi] = counts.get(phi, 0) + n
        return FormulaMultiset._from_counts(counts)

    def remove(self, phi: Formula, n: int = 1) -> "FormulaMultiset":
        """Strict removal: taking out more copies than present is an error."""
        have = self._counts.get(phi, 0)
        if have < n:
            raise MultisetError(f"cannot remove {n} of {phi!r}: only {have} present")
        counts = dict(self._counts)
        counts[phi] = have - n
        return FormulaMultiset._from_counts(counts)

    def __add__(self, other: "FormulaMultiset") -> "FormulaMultiset":
        counts = dict(self._counts)
        for phi, n in other._counts.items():
            counts[phi] = counts.get(phi, 0) + n
        return FormulaMultiset._from_counts(counts)

    def minus(self, other: "FormulaMultiset") -> "FormulaMultiset":
        """Saturating multiset difference."""
        counts = dict(self._counts)
        for phi, n in other._counts.items():
            counts[phi] = counts.get(phi, 0) - n
        return FormulaMultiset._from_counts(counts)

    def minus_strict(self, other: "FormulaMultiset") -> "FormulaMultiset":
        if not other.issubset(self):
            raise MultisetError(f"{other} is not a sub-multiset of {self}")
        return self.minus(other)

    def issubset(self, other: "FormulaMultiset") -> bool:
        return all(other.count(phi) >= n for phi, n in self._counts.items())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FormulaMultiset) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"FormulaMultiset({list(self)!r})"


EMPTY = FormulaMultiset()


def ms(*formulas: Formula) -> FormulaMultiset:
    return FormulaMultiset(formulas)


def box_all(gamma: FormulaMultiset) -> FormulaMultiset:
    return FormulaMultiset(Box(phi) for phi in gamma)


def boxp_all(pi: FormulaMultiset) -> FormulaMultiset:
    return FormulaMultiset(BoxP(phi) for phi in pi)


def dnecm(gamma: FormulaMultiset) -> FormulaMultiset:
    """The closure Gamma, BoxP(Gamma), respecting multiplicities."""
    return gamma + boxp_all(gamma)


class FocusError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotatedSequent:
    left: FormulaMultiset
    ann: Annotation
    right: FormulaMultiset

    def focus_ok(self) -> bool:
        return self.ann is None or BoxP(self.ann) in self.right

    def with_ann(self, ann: Annotation) -> "AnnotatedSequent":
        return AnnotatedSequent(self.left, ann, self.right)


def mk_sequent(left: FormulaMultiset, ann: Annotation, right: FormulaMultiset) -> AnnotatedSequent:
    """Build a sequent, rejecting focus annotations whose BoxP is absent on the right."""
    seq = AnnotatedSequent(left, ann, right)
    if not seq.focus_ok():
        raise FocusError(f"focused formula {ann!r} has no BoxP occurrence on the right")
    return seq


class MergeError(ValueError):
    pass


def merge_modal_contexts(
    sigma0: FormulaMultiset,
    gamma0: FormulaMultiset,
    pi0: FormulaMultiset,
    sigma1: FormulaMultiset,
    gamma1: FormulaMultiset,
    pi1: FormulaMultiset,
) -> tuple[FormulaMultiset, FormulaMultiset, FormulaMultiset]:
    """Merge two splits of one modal context into a common refinement.

    Both splits must present the same multiset Sigma, Box(Gamma), BoxP(Pi);
    the result uses the largest Gamma and Pi compatible with both.
    """
    whole0 = sigma0 + box_all(gamma0) + boxp_all(pi0)
    whole1 = sigma1 + box_all(gamma1) + boxp_all(pi1)
    if whole0 != whole1:
        raise MergeError(f"contexts disagree: {whole0} vs {whole1}")
    gamma2 = gamma0 + gamma1.minus(gamma0)
    pi2 = pi0 + pi1.minus(pi0)
    try:
        sigma2 = whole0.minus_strict(box_all(gamma2)).minus_strict(boxp_all(pi2))
    except MultisetError as exc:
        raise MergeError(f"splits incompatible with shared context: {exc}") from exc
    return sigma2, gamma2, pi2
