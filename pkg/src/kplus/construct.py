"""Reusable proof constructions: identities, focused loops, literal cuts."""

from __future__ import annotations

from .formulas import (
    EMPTY,
    AnnotatedSequent,
    Annotation,
    Atom,
    BOT,
    Box,
    BoxP,
    Bot,
    Formula,
    FormulaMultiset,
    Imp,
    dnecm,
    ms,
)
from .proofs import (
    Ax,
    AxBot,
    BoxPF,
    BoxPU,
    BoxR,
    CutRule,
    ImpL,
    ImpR,
    ModalSplit,
    Proof,
    ProofBuilder,
    ProofError,
    Rule,
)


def master_loop(extra: FormulaMultiset, pi: FormulaMultiset, phi: Formula, witness: Proof) -> Proof:
    """Cyclic focused proof of extra, pi, BoxP(pi) => [phi] BoxP(phi).

    `witness` must prove pi, BoxP(pi) => [o] phi.  The cycle runs through the
    focused master rule, so progress holds on every unfolding.
    """
    want = AnnotatedSequent(dnecm(pi), None, ms(phi))
    if witness.endsequent != want:
        raise ProofError(f"loop witness proves {witness.endsequent}, expected {want}")
    b = ProofBuilder()
    inner_seq = AnnotatedSequent(dnecm(pi), phi, ms(BoxP(phi)))
    inner = b.reserve()
    back = b.backedge(inner_seq, inner)
    split = ModalSplit(pi, EMPTY, pi, EMPTY)
    b.fill(inner, inner_seq, Rule(BoxPF(phi, split), (back,), (b.witness(witness),)))
    if not extra:
        return b.finish(inner)
    outer_seq = AnnotatedSequent(extra + dnecm(pi), phi, ms(BoxP(phi)))
    outer = b.node(outer_seq, BoxPF(phi, ModalSplit(extra + pi, EMPTY, pi, EMPTY)), (inner,), (b.witness(witness),))
    return b.finish(outer)


def identity_proof(
    phi: Formula,
    ann: Annotation = None,
    left_ctx: FormulaMultiset = EMPTY,
    right_ctx: FormulaMultiset = EMPTY,
) -> Proof:
    """Cut-free proof of left_ctx, phi => [ann] phi, right_ctx."""
    seq = AnnotatedSequent(left_ctx.add(phi), ann, right_ctx.add(phi))
    b = ProofBuilder()

    def go(phi: Formula, ann: Annotation, lc: FormulaMultiset, rc: FormulaMultiset) -> int:
        seq = AnnotatedSequent(lc.add(phi), ann, rc.add(phi))
        match phi:
            case Atom():
                return b.node(seq, Ax())
            case Bot():
                return b.node(seq, AxBot())
            case Imp(lhs=a, rhs=c):
                # ImpR on the right copy, then ImpL on the left copy
                left = go(a, ann, lc, rc.add(c))
                right = go(c, ann, lc.add(a), rc)
                mid_seq = AnnotatedSequent(lc.add(phi).add(a), ann, rc.add(c))
                mid = b.node(mid_seq, ImpL(phi), (left, right))
                return b.node(seq, ImpR(phi), (mid,))
            case Box(body=a):
                split = ModalSplit(lc, ms(a), EMPTY, rc)
                w = b.witness(identity_proof(a))
                return b.node(seq, BoxR(a, split), (), (w,))
            case BoxP(body=a):
                split = ModalSplit(lc, EMPTY, ms(a), rc)
                w_inner = identity_proof(a, None, ms(BoxP(a)))
                loop = master_loop(EMPTY, ms(a), a, w_inner)
                if ann == a:
                    kid = b.graft(loop)
                    return b.node(seq, BoxPF(a, split), (kid,), (b.witness(w_inner),))
                return b.node(seq, BoxPU(a, split), (), (b.witness(w_inner), b.witness(loop)))
        raise TypeError(f"not a formula: {phi!r}")

    return b.finish(go(phi, ann, left_ctx, right_ctx))


def cut_proof(left: Proof, right: Proof, chi: Formula) -> Proof:
    """One literal cut joining left |- G => D, chi and right |- chi, G => D."""
    ls, rs = left.endsequent, right.endsequent
    if chi not in ls.right:
        raise ProofError("cut formula missing on the left premise's right side")
    delta = ls.right.remove(chi)
    gamma = ls.left
    if ls.ann != rs.ann or rs.left != gamma.add(chi) or rs.right != delta:
        raise ProofError("cut premises do not share contexts")
    b = ProofBuilder()
    root = b.reserve()
    kids = (b.graft(left), b.graft(right))
    b.fill(root, AnnotatedSequent(gamma, ls.ann, delta), Rule(CutRule(chi), kids))
    return b.finish(root)
