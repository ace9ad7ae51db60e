"""Kripke-model evaluation for the K+ language: the independent soundness oracle.

The master modality quantifies over the transitive closure of the
accessibility relation.  Worlds are 0..n-1 and world sets are bitmasks, so
evaluation over thousands of random models stays cheap.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .formulas import (
    AnnotatedSequent,
    Atom,
    Bot,
    Box,
    BoxP,
    Formula,
    Imp,
    atoms_of,
)
from .proofs import Proof


def closure_masks(succ: list[int]) -> list[int]:
    """Transitive closure by chaotic iteration to a fixpoint."""
    n = len(succ)
    plus = list(succ)
    changed = True
    while changed:
        changed = False
        for w in range(n):
            m = plus[w]
            acc = m
            v = m
            while v:
                low = v & -v
                acc |= plus[low.bit_length() - 1]
                v ^= low
            if acc != m:
                plus[w] = acc
                changed = True
    return plus


def closure_masks_squaring(succ: list[int]) -> list[int]:
    """Iterative-squaring closure; cross-check implementation."""
    n = len(succ)
    reach = list(succ)
    for _ in range(max(1, n.bit_length())):
        nxt = []
        for w in range(n):
            acc = reach[w]
            v = reach[w]
            while v:
                low = v & -v
                acc |= reach[low.bit_length() - 1]
                v ^= low
            nxt.append(acc)
        if nxt == reach:
            break
        reach = nxt
    return reach


def closure_masks_floyd_warshall(succ: list[int]) -> list[int]:
    """Floyd-Warshall closure; cross-check implementation."""
    n = len(succ)
    reach = list(succ)
    for k in range(n):
        bit = 1 << k
        for w in range(n):
            if reach[w] & bit:
                reach[w] |= reach[k]
    return reach


@dataclass
class KripkeModel:
    size: int
    rel: frozenset[tuple[int, int]]
    val: dict[str, frozenset[int]]
    _succ: list[int] = field(init=False, repr=False)
    _plus: list[int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        succ = [0] * self.size
        for w, v in self.rel:
            succ[w] |= 1 << v
        self._succ = succ
        self._plus = closure_masks(succ)

    @property
    def worlds(self) -> range:
        return range(self.size)

    def rel_plus(self) -> frozenset[tuple[int, int]]:
        pairs = set()
        for w in self.worlds:
            m = self._plus[w]
            for v in self.worlds:
                if m & (1 << v):
                    pairs.add((w, v))
        return frozenset(pairs)

    def truth_mask(self, phi: Formula, memo: dict | None = None) -> int:
        if memo is None:
            memo = {}
        if phi in memo:
            return memo[phi]
        full = (1 << self.size) - 1
        match phi:
            case Bot():
                out = 0
            case Atom(name):
                out = 0
                for w in self.val.get(name, frozenset()):
                    out |= 1 << w
            case Imp(lhs, rhs):
                out = (full & ~self.truth_mask(lhs, memo)) | self.truth_mask(rhs, memo)
            case Box(body):
                m = self.truth_mask(body, memo)
                out = 0
                for w in self.worlds:
                    if self._succ[w] & ~m == 0:
                        out |= 1 << w
            case BoxP(body):
                m = self.truth_mask(body, memo)
                out = 0
                for w in self.worlds:
                    if self._plus[w] & ~m == 0:
                        out |= 1 << w
            case _:
                raise TypeError(f"not a formula: {phi!r}")
        memo[phi] = out
        return out


def eval_formula(model: KripkeModel, world: int, phi: Formula) -> bool:
    if world not in model.worlds:
        raise ValueError(f"unknown world {world}")
    return bool(model.truth_mask(phi) & (1 << world))


def sequent_valid(model: KripkeModel, seq: AnnotatedSequent) -> bool:
    """The annotation is semantically inert: read the sequent as and(left) -> or(right)."""
    memo: dict = {}
    full = (1 << model.size) - 1
    hold = full
    for phi in seq.left.support():
        hold &= model.truth_mask(phi, memo)
    some = 0
    for phi in seq.right.support():
        some |= model.truth_mask(phi, memo)
    return hold & ~some == 0


def random_model(rng: random.Random, max_worlds: int, atom_names: list[str]) -> KripkeModel:
    n = rng.randint(1, max_worlds)
    rel = frozenset(
        (w, v) for w in range(n) for v in range(n) if rng.random() < 0.5
    )
    val = {
        name: frozenset(w for w in range(n) if rng.random() < 0.5)
        for name in atom_names
    }
    return KripkeModel(n, rel, val)


@dataclass
class FuzzReport:
    sequent: AnnotatedSequent
    models_checked: int
    counterexamples: list[tuple[int, KripkeModel]]

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def fuzz_sequent(
    seq: AnnotatedSequent,
    models: int = 1000,
    max_worlds: int = 6,
    seed: int = 0,
) -> FuzzReport:
    names = set()
    for phi in list(seq.left.support()) + list(seq.right.support()):
        names |= atoms_of(phi)
    ordered = sorted(names) or ["p"]
    rng = random.Random(seed)
    bad: list[tuple[int, KripkeModel]] = []
    for i in range(models):
        model = random_model(rng, max_worlds, ordered)
        if not sequent_valid(model, seq):
            bad.append((i, model))
    return FuzzReport(seq, models, bad)


def fuzz_soundness(proof: Proof, models: int = 1000, max_worlds: int = 6, seed: int = 0) -> FuzzReport:
    """Sample models and hunt for a countermodel to the proof's endsequent.

    A hit would falsify this implementation, not the calculus.
    """
    return fuzz_sequent(proof.endsequent, models, max_worlds, seed)
