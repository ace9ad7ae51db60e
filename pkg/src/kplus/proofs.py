"""Finite cyclic representation of non-wellfounded K+ proofs with witnesses.

A proof is an arena of rule-labelled nodes forming a tree plus back-edges to
ancestors (encoding regular infinite branches), together with a table of
witness proofs attached to modal rule instances.  Witnesses live one level
lower in the stratified hierarchy and are not subproofs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

from .formulas import (
    AnnotatedSequent,
    Formula,
    FormulaMultiset,
    Imp,
    box_all,
    boxp_all,
    dnecm,
    size,
)


class ProofError(ValueError):
    pass


@dataclass(frozen=True)
class ModalSplit:
    """Explicit split of a modal conclusion, since it is not determined by it.

    The conclusion left side is sigma + Box(gamma) + BoxP(pi); the right side
    is the principal modal formula plus delta_wk.  sigma and delta_wk form the
    weakening part of the rule instance.
    """

    sigma: FormulaMultiset
    gamma: FormulaMultiset
    pi: FormulaMultiset
    delta_wk: FormulaMultiset

    def conclusion_left(self) -> FormulaMultiset:
        return self.sigma + box_all(self.gamma) + boxp_all(self.pi)

    def premise_left(self) -> FormulaMultiset:
        return self.gamma + dnecm(self.pi)


@dataclass(frozen=True)
class Ax:
    pass


@dataclass(frozen=True)
class AxBot:
    pass


@dataclass(frozen=True)
class ImpL:
    principal: Imp


@dataclass(frozen=True)
class ImpR:
    principal: Imp


@dataclass(frozen=True)
class BoxR:
    principal: Formula  # the body phi of the introduced Box(phi)
    split: ModalSplit


@dataclass(frozen=True)
class BoxPF:
    principal: Formula  # the body phi of the introduced BoxP(phi); requires focus on phi
    split: ModalSplit


@dataclass(frozen=True)
class BoxPU:
    principal: Formula  # the body phi; requires focus different from phi
    split: ModalSplit


@dataclass(frozen=True)
class CutRule:
    formula: Formula


RuleTag = Ax | AxBot | ImpL | ImpR | BoxR | BoxPF | BoxPU | CutRule

# children / witnesses required per tag
ARITY: dict[type, tuple[int, int]] = {
    Ax: (0, 0),
    AxBot: (0, 0),
    ImpL: (2, 0),
    ImpR: (1, 0),
    BoxR: (0, 1),
    BoxPF: (1, 1),
    BoxPU: (0, 2),
    CutRule: (2, 0),
}


@dataclass(frozen=True)
class Rule:
    tag: RuleTag
    children: tuple[int, ...] = ()
    witnesses: tuple[int, ...] = ()


@dataclass(frozen=True)
class BackEdge:
    target: int


Step = Rule | BackEdge


@dataclass(frozen=True)
class ProofNode:
    id: int
    sequent: AnnotatedSequent
    step: Step


class Proof:
    """Immutable proof value: node arena, root id and witness table."""

    __slots__ = ("nodes", "root", "witnesses", "_ckey", "_parents")

    def __init__(self, nodes: dict[int, ProofNode], root: int, witnesses: dict[int, "Proof"]):
        self.nodes = nodes
        self.root = root
        self.witnesses = witnesses
        self._ckey = None
        self._parents: Optional[dict[int, int]] = None

    def node(self, nid: int) -> ProofNode:
        return self.nodes[nid]

    @property
    def root_node(self) -> ProofNode:
        return self.nodes[self.root]

    @property
    def endsequent(self) -> AnnotatedSequent:
        return self.nodes[self.root].sequent

    def parent_map(self) -> dict[int, int]:
        if self._parents is None:
            parents: dict[int, int] = {}
            for node in self.nodes.values():
                if isinstance(node.step, Rule):
                    for c in node.step.children:
                        parents[c] = node.id
            self._parents = parents
        return self._parents

    def ancestors(self, nid: int) -> Iterator[int]:
        """Strict ancestors of nid along child edges, nearest first."""
        parents = self.parent_map()
        cur = nid
        while cur in parents:
            cur = parents[cur]
            yield cur

    def path_from(self, ancestor: int, nid: int) -> list[int]:
        """Node ids from ancestor down to nid inclusive; error if not related."""
        chain = [nid]
        for a in self.ancestors(nid):
            chain.append(a)
            if a == ancestor:
                return list(reversed(chain))
        raise ProofError(f"{ancestor} is not an ancestor of {nid}")

    def __repr__(self) -> str:
        return f"<Proof root={self.root} nodes={len(self.nodes)} witnesses={len(self.witnesses)}>"


def structural_violations(proof: Proof) -> list[tuple[int, str, str]]:
    """Arena-shape problems: bad references, non-tree child graph, bad back-edges.

    Rule-instance and progress checking live in the checker; this guards only
    what the data structure itself promises.
    """
    out: list[tuple[int, str, str]] = []
    if proof.root not in proof.nodes:
        return [(proof.root, "structure", "root id missing from arena")]
    seen_child: dict[int, int] = {}
    for node in proof.nodes.values():
        if isinstance(node.step, Rule):
            want_c, want_w = ARITY[type(node.step.tag)]
            if len(node.step.children) != want_c:
                out.append((node.id, "arity", f"{type(node.step.tag).__name__} expects {want_c} children, has {len(node.step.children)}"))
            if len(node.step.witnesses) != want_w:
                out.append((node.id, "arity", f"{type(node.step.tag).__name__} expects {want_w} witnesses, has {len(node.step.witnesses)}"))
            for c in node.step.children:
                if c not in proof.nodes:
                    out.append((node.id, "structure", f"child {c} missing from arena"))
                elif c in seen_child:
                    out.append((node.id, "structure", f"node {c} has two parents"))
                else:
                    seen_child[c] = node.id
            for w in node.step.witnesses:
                if w not in proof.witnesses:
                    out.append((node.id, "structure", f"witness {w} missing from table"))
    # reachability and back-edge targets
    reachable: set[int] = set()
    stack = [proof.root]
    while stack:
        nid = stack.pop()
        if nid in reachable or nid not in proof.nodes:
            continue
        reachable.add(nid)
        step = proof.nodes[nid].step
        if isinstance(step, Rule):
            stack.extend(step.children)
    for nid in proof.nodes:
        if nid not in reachable:
            out.append((nid, "structure", "node unreachable from root"))
    for node in proof.nodes.values():
        if isinstance(node.step, BackEdge):
            tgt = node.step.target
            if tgt not in proof.nodes:
                out.append((node.id, "backedge", f"target {tgt} missing from arena"))
                continue
            if tgt not in proof.ancestors(node.id):
                out.append((node.id, "backedge", f"target {tgt} is not a strict ancestor"))
            elif proof.nodes[tgt].sequent != node.sequent:
                out.append((node.id, "backedge", "target sequent differs from back-edge sequent"))
    return out


class ProofBuilder:
    """Accumulates an arena; node and witness ids are allocated sequentially."""

    def __init__(self) -> None:
        self.nodes: dict[int, ProofNode] = {}
        self.witness_table: dict[int, Proof] = {}
        self._next = 0
        self._next_wit = 0

    def reserve(self) -> int:
        nid = self._next
        self._next += 1
        return nid

    def fill(self, nid: int, sequent: AnnotatedSequent, step: Step) -> int:
        self.nodes[nid] = ProofNode(nid, sequent, step)
        return nid

    def node(
        self,
        sequent: AnnotatedSequent,
        tag: RuleTag,
        children: tuple[int, ...] = (),
        witnesses: tuple[int, ...] = (),
    ) -> int:
        return self.fill(self.reserve(), sequent, Rule(tag, children, witnesses))

    def backedge(self, sequent: AnnotatedSequent, target: int) -> int:
        return self.fill(self.reserve(), sequent, BackEdge(target))

    def witness(self, proof: Proof) -> int:
        wid = self._next_wit
        self._next_wit += 1
        self.witness_table[wid] = proof
        return wid

    def graft(self, proof: Proof) -> int:
        """Copy a whole proof into this arena with fresh ids; returns new root."""
        mapping: dict[int, int] = {nid: self.reserve() for nid in sorted(proof.nodes)}
        for nid in sorted(proof.nodes):
            node = proof.nodes[nid]
            if isinstance(node.step, BackEdge):
                self.fill(mapping[nid], node.sequent, BackEdge(mapping[node.step.target]))
            else:
                step = Rule(
                    node.step.tag,
                    tuple(mapping[c] for c in node.step.children),
                    tuple(self.witness(proof.witnesses[w]) for w in node.step.witnesses),
                )
                self.fill(mapping[nid], node.sequent, step)
        return mapping[proof.root]

    def finish(self, root: int) -> Proof:
        return Proof(dict(self.nodes), root, dict(self.witness_table))


def single_node(sequent: AnnotatedSequent, tag: RuleTag) -> Proof:
    b = ProofBuilder()
    return b.finish(b.node(sequent, tag))


def extract(proof: Proof, start: int) -> Proof:
    """Materialize the subproof rooted at a node.

    Back-edges to targets at or below `start` are kept (re-tied); back-edges
    escaping above `start` are unfolded, re-tying a cycle as soon as an arena
    node repeats on the current path.  Regularity keeps this finite.
    """
    b = ProofBuilder()

    def copy(nid: int, path: dict[int, int]) -> int:
        node = proof.nodes[nid]
        if isinstance(node.step, BackEdge):
            tgt = node.step.target
            if tgt in path:
                return b.backedge(node.sequent, path[tgt])
            return copy(tgt, path)
        if nid in path:
            return b.backedge(node.sequent, path[nid])
        my = b.reserve()
        sub = dict(path)
        sub[nid] = my
        children = tuple(copy(c, sub) for c in node.step.children)
        wits = tuple(b.witness(proof.witnesses[w]) for w in node.step.witnesses)
        b.fill(my, node.sequent, Rule(node.step.tag, children, wits))
        return my

    return b.finish(copy(start, {}))


def replace_subtree(proof: Proof, at: int, replacement: Proof) -> Proof:
    """Rebuild the proof with the subtree at `at` swapped for `replacement`."""
    if proof.nodes[at].sequent != replacement.endsequent:
        raise ProofError("replacement endsequent differs from the replaced node")
    b = ProofBuilder()
    mapping: dict[int, int] = {}

    def copy(nid: int) -> int:
        if nid == at:
            return b.graft(replacement)
        node = proof.nodes[nid]
        if isinstance(node.step, BackEdge):
            return b.backedge(node.sequent, mapping[node.step.target])
        my = b.reserve()
        mapping[nid] = my
        children = tuple(copy(c) for c in node.step.children)
        wits = tuple(b.witness(proof.witnesses[w]) for w in node.step.witnesses)
        b.fill(my, node.sequent, Rule(node.step.tag, children, wits))
        return my

    return b.finish(copy(proof.root))


def replace_witnesses(proof: Proof, table: dict[int, Proof]) -> Proof:
    """Swap witness proofs wholesale; endsequents of replacements must agree."""
    new_table = dict(proof.witnesses)
    for wid, repl in table.items():
        if proof.witnesses[wid].endsequent != repl.endsequent:
            raise ProofError(f"witness {wid} replacement proves a different sequent")
        new_table[wid] = repl
    return Proof(dict(proof.nodes), proof.root, new_table)


def _is_progress_parent(tag: RuleTag) -> bool:
    # progress happens exactly on the (single) child edge of a focused
    # master-modality introduction
    return isinstance(tag, BoxPF)


def local_fragments(proof: Proof) -> list[set[int]]:
    """Partition of the arena into progress-free regions; main fragment first."""
    frag_of: dict[int, int] = {}
    frags: list[set[int]] = []

    def grow(start: int) -> None:
        fid = len(frags)
        frags.append(set())
        stack = [start]
        while stack:
            nid = stack.pop()
            if nid in frag_of:
                continue
            frag_of[nid] = fid
            frags[fid].add(nid)
            node = proof.nodes[nid]
            if isinstance(node.step, Rule):
                for c in node.step.children:
                    if _is_progress_parent(node.step.tag):
                        if c not in frag_of:
                            grow(c)
                    else:
                        stack.append(c)

    grow(proof.root)
    return frags


def main_local_fragment(proof: Proof) -> set[int]:
    return local_fragments(proof)[0]


def local_height(proof: Proof) -> int:
    """Height (edge count) of the main local fragment."""
    main = main_local_fragment(proof)

    def depth(nid: int) -> int:
        node = proof.nodes[nid]
        if isinstance(node.step, BackEdge):
            return 0
        best = 0
        for c in node.step.children:
            if c in main:
                best = max(best, 1 + depth(c))
        return best

    return depth(proof.root)


def iter_witness_proofs(proof: Proof) -> Iterator[Proof]:
    for wid in sorted(proof.witnesses):
        yield proof.witnesses[wid]


def ordinal_height(proof: Proof) -> int:
    """Witness-nesting depth; the paper's ordinal heights collapse to naturals here."""
    memo: dict[int, int] = {}

    def go(p: Proof) -> int:
        key = id(p)
        if key in memo:
            return memo[key]
        hs = [go(w) for w in iter_witness_proofs(p)]
        memo[key] = 1 + max(hs) if hs else 0
        return memo[key]

    return go(proof)


class CutClass(Enum):
    CUT_FREE = "CutFree"
    LOCAL_ONLY = "LocalOnly"
    MAIN_ONLY = "MainOnly"
    WITNESS_ONLY = "WitnessOnly"
    MIXED = "Mixed"


@dataclass(frozen=True)
class CutCensus:
    main_local_cuts: int
    main_global_cuts: int
    witness_cuts_transitive: int
    classification: CutClass

    @property
    def total(self) -> int:
        return self.main_global_cuts + self.witness_cuts_transitive


def _arena_cuts(proof: Proof) -> list[int]:
    return [
        n.id
        for n in proof.nodes.values()
        if isinstance(n.step, Rule) and isinstance(n.step.tag, CutRule)
    ]


def cut_census(proof: Proof) -> CutCensus:
    main = main_local_fragment(proof)
    arena = _arena_cuts(proof)
    local = sum(1 for nid in arena if nid in main)
    wit = sum(cut_census(w).total for w in iter_witness_proofs(proof))
    glob = len(arena)
    if glob == 0 and wit == 0:
        cls = CutClass.CUT_FREE
    elif wit == 0 and glob == local:
        cls = CutClass.LOCAL_ONLY
    elif wit == 0:
        cls = CutClass.MAIN_ONLY
    elif glob == 0:
        cls = CutClass.WITNESS_ONLY
    else:
        cls = CutClass.MIXED
    return CutCensus(local, glob, wit, cls)


def max_cut_size(proof: Proof) -> int:
    """Largest cut-formula size anywhere (witnesses included); 0 when cut-free."""
    best = 0
    for node in proof.nodes.values():
        if isinstance(node.step, Rule) and isinstance(node.step.tag, CutRule):
            best = max(best, size(node.step.tag.formula))
    for w in iter_witness_proofs(proof):
        best = max(best, max_cut_size(w))
    return best


def canonical_key(proof: Proof):
    """Structural identity key, invariant under node/witness renumbering."""
    if proof._ckey is not None:
        return proof._ckey

    def key(nid: int, depth: dict[int, int]):
        node = proof.nodes[nid]
        seq = node.sequent
        seq_key = (seq.left, seq.ann, seq.right)
        if isinstance(node.step, BackEdge):
            return ("be", seq_key, len(depth) - depth[node.step.target] - 1)
        sub = dict(depth)
        sub[nid] = len(depth)
        return (
            "n",
            seq_key,
            node.step.tag,
            tuple(key(c, sub) for c in node.step.children),
            tuple(canonical_key(proof.witnesses[w]) for w in node.step.witnesses),
        )

    proof._ckey = key(proof.root, {})
    return proof._ckey


def proofs_equal(a: Proof, b: Proof) -> bool:
    return canonical_key(a) == canonical_key(b)
