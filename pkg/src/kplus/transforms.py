"""Weakening, contraction, inversion and change of annotation.

Each function recurses over the main local fragment only; premises of modal
rules are never entered (their subtrees are re-materialized verbatim, which
also re-ties any cycle that ran through a rewritten ancestor).  All eight
auxiliary functions are strongly preserving; change of annotation is weakly
preserving and may raise the witness-nesting height by one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formulas import (
    AnnotatedSequent,
    Annotation,
    Atom,
    BOT,
    BoxP,
    Formula,
    FormulaMultiset,
    Imp,
    MultisetError,
)
from .proofs import (
    Ax,
    AxBot,
    BackEdge,
    BoxPF,
    BoxPU,
    BoxR,
    CutRule,
    ImpL,
    ImpR,
    ModalSplit,
    Proof,
    ProofBuilder,
    ProofNode,
    extract,
)


class TransformError(ValueError):
    pass


@dataclass(frozen=True)
class PreservationProfile:
    ordinal_height: bool
    local_height: bool
    cut_sizes: bool
    main_local_cut_freeness: bool
    cut_locality: bool
    witness_cut_locality: bool

    @property
    def strong(self) -> bool:
        return all(
            (
                self.ordinal_height,
                self.local_height,
                self.cut_sizes,
                self.main_local_cut_freeness,
                self.cut_locality,
                self.witness_cut_locality,
            )
        )

    @property
    def weak(self) -> bool:
        return all(
            (self.local_height, self.cut_sizes, self.main_local_cut_freeness, self.cut_locality)
        )


STRONG = PreservationProfile(True, True, True, True, True, True)
CHANGE_ANNOTATION_PROFILE = PreservationProfile(False, True, True, True, True, False)

PROFILES: dict[str, PreservationProfile] = {
    "wk": STRONG,
    "lctr": STRONG,
    "rctr": STRONG,
    "rctr_boxp": STRONG,
    "inv_bot": STRONG,
    "linv0": STRONG,
    "linv1": STRONG,
    "rinv": STRONG,
    "change_annotation": CHANGE_ANNOTATION_PROFILE,
}


def _rule_node(proof: Proof, nid: int) -> ProofNode:
    node = proof.nodes[nid]
    if isinstance(node.step, BackEdge):
        raise TransformError("back-edge inside a main local fragment: input proof is not valid")
    return node


def _modal_children(b: ProofBuilder, proof: Proof, node: ProofNode) -> tuple[tuple[int, ...], tuple[int, ...]]:
    kids = tuple(b.graft(extract(proof, c)) for c in node.step.children)
    wits = tuple(b.witness(proof.witnesses[w]) for w in node.step.witnesses)
    return kids, wits


def _retag(tag, split: ModalSplit):
    return type(tag)(tag.principal, split)


def weaken(proof: Proof, extra_left: FormulaMultiset, extra_right: FormulaMultiset) -> Proof:
    """Conclude G, extra_left => D, extra_right; modal weakening parts absorb the additions."""
    b = ProofBuilder()

    def go(nid: int) -> int:
        node = _rule_node(proof, nid)
        seq = node.sequent
        new_seq = AnnotatedSequent(seq.left + extra_left, seq.ann, seq.right + extra_right)
        tag = node.step.tag
        if isinstance(tag, (Ax, AxBot)):
            return b.node(new_seq, tag)
        if isinstance(tag, (ImpL, ImpR, CutRule)):
            return b.node(new_seq, tag, tuple(go(c) for c in node.step.children))
        split = ModalSplit(tag.split.sigma + extra_left, tag.split.gamma, tag.split.pi, tag.split.delta_wk + extra_right)
        kids, wits = _modal_children(b, proof, node)
        return b.node(new_seq, _retag(tag, split), kids, wits)

    return b.finish(go(proof.root))


def _contract(proof: Proof, target: Formula, side: str, on_modal, minimum: int = 2) -> Proof:
    root_seq = proof.endsequent
    pool = root_seq.left if side == "left" else root_seq.right
    if pool.count(target) < minimum:
        raise TransformError(f"need {minimum} occurrence(s) of {target!r} on the {side}")
    b = ProofBuilder()

    def go(nid: int) -> int:
        node = _rule_node(proof, nid)
        seq = node.sequent
        if side == "left":
            new_seq = AnnotatedSequent(seq.left.remove(target), seq.ann, seq.right)
        else:
            new_seq = AnnotatedSequent(seq.left, seq.ann, seq.right.remove(target))
        tag = node.step.tag
        if isinstance(tag, (Ax, AxBot)):
            return b.node(new_seq, tag)
        if isinstance(tag, (ImpL, ImpR, CutRule)):
            return b.node(new_seq, tag, tuple(go(c) for c in node.step.children))
        split = on_modal(tag.split)
        kids, wits = _modal_children(b, proof, node)
        return b.node(new_seq, _retag(tag, split), kids, wits)

    try:
        return b.finish(go(proof.root))
    except MultisetError as exc:
        raise TransformError(str(exc)) from exc


def contract_left_atom(proof: Proof, p: Atom) -> Proof:
    """G, p, p => D becomes G, p => D."""
    return _contract(
        proof,
        p,
        "left",
        lambda sp: ModalSplit(sp.sigma.remove(p), sp.gamma, sp.pi, sp.delta_wk),
    )


def contract_right_atom(proof: Proof, p: Atom) -> Proof:
    """G => D, p, p becomes G => D, p."""
    return _contract(
        proof,
        p,
        "right",
        lambda sp: ModalSplit(sp.sigma, sp.gamma, sp.pi, sp.delta_wk.remove(p)),
    )


def contract_right_boxp(proof: Proof, chi: Formula) -> Proof:
    """G => D, BoxP(chi), BoxP(chi) becomes G => D, BoxP(chi).

    When a modal node introduces BoxP(chi) itself, the duplicate necessarily
    sits in its weakening part and is deleted there.
    """
    return _contract(
        proof,
        BoxP(chi),
        "right",
        lambda sp: ModalSplit(sp.sigma, sp.gamma, sp.pi, sp.delta_wk.remove(BoxP(chi))),
    )


def invert_bot(proof: Proof) -> Proof:
    """G => D, bot becomes G => D."""
    return _contract(
        proof,
        BOT,
        "right",
        lambda sp: ModalSplit(sp.sigma, sp.gamma, sp.pi, sp.delta_wk.remove(BOT)),
        minimum=1,
    )


def _linv(proof: Proof, imp: Imp, piece: int) -> Proof:
    root_seq = proof.endsequent
    if imp not in root_seq.left:
        raise TransformError(f"{imp!r} does not occur on the left")
    b = ProofBuilder()

    def adjust(seq: AnnotatedSequent) -> AnnotatedSequent:
        if piece == 0:
            return AnnotatedSequent(seq.left.remove(imp), seq.ann, seq.right.add(imp.lhs))
        return AnnotatedSequent(seq.left.remove(imp).add(imp.rhs), seq.ann, seq.right)

    def go(nid: int) -> int:
        node = _rule_node(proof, nid)
        tag = node.step.tag
        if isinstance(tag, ImpL) and tag.principal == imp:
            # the rule already provides exactly the inverted premise
            return b.graft(extract(proof, node.step.children[piece]))
        new_seq = adjust(node.sequent)
        if isinstance(tag, (Ax, AxBot)):
            return b.node(new_seq, tag)
        if isinstance(tag, (ImpL, ImpR, CutRule)):
            return b.node(new_seq, tag, tuple(go(c) for c in node.step.children))
        if piece == 0:
            split = ModalSplit(tag.split.sigma.remove(imp), tag.split.gamma, tag.split.pi, tag.split.delta_wk.add(imp.lhs))
        else:
            split = ModalSplit(tag.split.sigma.remove(imp).add(imp.rhs), tag.split.gamma, tag.split.pi, tag.split.delta_wk)
        kids, wits = _modal_children(b, proof, node)
        return b.node(new_seq, _retag(tag, split), kids, wits)

    try:
        return b.finish(go(proof.root))
    except MultisetError as exc:
        raise TransformError(str(exc)) from exc


def invert_left_antecedent(proof: Proof, imp: Imp) -> Proof:
    """G, a->c => D becomes G => D, a."""
    return _linv(proof, imp, 0)


def invert_left_consequent(proof: Proof, imp: Imp) -> Proof:
    """G, a->c => D becomes G, c => D."""
    return _linv(proof, imp, 1)


def invert_right(proof: Proof, imp: Imp) -> Proof:
    """G => D, a->c becomes G, a => D, c."""
    root_seq = proof.endsequent
    if imp not in root_seq.right:
        raise TransformError(f"{imp!r} does not occur on the right")
    b = ProofBuilder()

    def go(nid: int) -> int:
        node = _rule_node(proof, nid)
        tag = node.step.tag
        if isinstance(tag, ImpR) and tag.principal == imp:
            return b.graft(extract(proof, node.step.children[0]))
        seq = node.sequent
        new_seq = AnnotatedSequent(seq.left.add(imp.lhs), seq.ann, seq.right.remove(imp).add(imp.rhs))
        if isinstance(tag, (Ax, AxBot)):
            return b.node(new_seq, tag)
        if isinstance(tag, (ImpL, ImpR, CutRule)):
            return b.node(new_seq, tag, tuple(go(c) for c in node.step.children))
        split = ModalSplit(
            tag.split.sigma.add(imp.lhs),
            tag.split.gamma,
            tag.split.pi,
            tag.split.delta_wk.remove(imp).add(imp.rhs),
        )
        kids, wits = _modal_children(b, proof, node)
        return b.node(new_seq, _retag(tag, split), kids, wits)

    try:
        return b.finish(go(proof.root))
    except MultisetError as exc:
        raise TransformError(str(exc)) from exc


def change_annotation(proof: Proof, new_ann: Annotation) -> Proof:
    """Re-annotate the main fragment; focused master steps flip between the
    focused and unfocused rule, exchanging a premise for a witness."""
    old = proof.endsequent.ann
    if old == new_ann:
        return proof
    if new_ann is not None and BoxP(new_ann) not in proof.endsequent.right:
        raise TransformError("target focus has no BoxP occurrence on the right of the endsequent")
    b = ProofBuilder()

    def go(nid: int) -> int:
        node = _rule_node(proof, nid)
        seq = node.sequent
        new_seq = AnnotatedSequent(seq.left, new_ann, seq.right)
        tag = node.step.tag
        if isinstance(tag, (Ax, AxBot)):
            return b.node(new_seq, tag)
        if isinstance(tag, (ImpL, ImpR, CutRule)):
            return b.node(new_seq, tag, tuple(go(c) for c in node.step.children))
        if isinstance(tag, BoxR):
            kids, wits = _modal_children(b, proof, node)
            return b.node(new_seq, tag, kids, wits)
        if isinstance(tag, BoxPF):
            # the focus leaves this formula, so the progressing premise
            # becomes a witness of the unfocused rule
            former_child = extract(proof, node.step.children[0])
            w0 = b.witness(proof.witnesses[node.step.witnesses[0]])
            w1 = b.witness(former_child)
            return b.node(new_seq, BoxPU(tag.principal, tag.split), (), (w0, w1))
        if isinstance(tag, BoxPU):
            if new_ann == tag.principal:
                # the focus arrives here: promote the focused witness to a premise
                w0 = b.witness(proof.witnesses[node.step.witnesses[0]])
                kid = b.graft(proof.witnesses[node.step.witnesses[1]])
                return b.node(new_seq, BoxPF(tag.principal, tag.split), (kid,), (w0,))
            kids, wits = _modal_children(b, proof, node)
            return b.node(new_seq, tag, kids, wits)
        raise TransformError(f"unknown tag {tag!r}")

    return b.finish(go(proof.root))


BY_NAME = {
    "wk": weaken,
    "lctr": contract_left_atom,
    "rctr": contract_right_atom,
    "rctr_boxp": contract_right_boxp,
    "inv_bot": invert_bot,
    "linv0": invert_left_antecedent,
    "linv1": invert_left_consequent,
    "rinv": invert_right,
    "change_annotation": change_annotation,
}
