"""The cut-reduction catalog and the staged relocation of cuts.

`reduce_cut` fires exactly one catalog case per obligation, selected by a
fixed priority that encodes the side assumptions of the catalog: focus/cut
coincidence, axioms, principal implication, commutative implication,
modal weakening part, then the six modal reductions.  `push_top` and
`push_local` clear the main local fragment recursively; `push` clears the
whole main global fragment corecursively with structural memoization.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional

from .construct import cut_proof
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
    merge_modal_contexts,
    ms,
    size,
)
from .proofs import (
    Ax,
    AxBot,
    BackEdge,
    BoxPF,
    BoxPU,
    BoxR,
    CutCensus,
    CutRule,
    ImpL,
    ImpR,
    ModalSplit,
    Proof,
    ProofBuilder,
    Rule,
    canonical_key,
    cut_census,
    extract,
    main_local_fragment,
    replace_subtree,
)
from .transforms import (
    change_annotation,
    contract_right_boxp,
    contract_left_atom,
    contract_right_atom,
    invert_bot,
    invert_left_antecedent,
    invert_left_consequent,
    invert_right,
    weaken,
)

DEFAULT_MEMO_BUDGET = 1_000_000


def default_memo_budget() -> int:
    raw = os.environ.get("KPLUS_MEMO_BUDGET")
    if raw:
        try:
            value = int(raw)
            if value >= 1:
                return value
        except ValueError:
            pass
    return DEFAULT_MEMO_BUDGET


class ObligationError(ValueError):
    pass


class CatalogError(RuntimeError):
    pass


class MemoBudgetExceeded(RuntimeError):
    def __init__(self, states: int):
        super().__init__(f"memo budget exhausted after {states} fragment states")
        self.states = states


class Tracer:
    """Collects one event per catalog firing; optionally forwards each as it happens."""

    def __init__(self, sink: Optional[Callable[[dict], None]] = None):
        self.events: list[dict] = []
        self.sink = sink

    def emit(self, case: str, formula: Formula, residuals: list["Residual"]) -> None:
        event = {
            "case": case,
            "cutFormula": formula,
            "residuals": [(r.tag, r.formula) for r in residuals],
        }
        self.events.append(event)
        if self.sink:
            self.sink(event)


@dataclass
class CutObligation:
    left: Proof  # proves  G =>[s] D, chi
    right: Proof  # proves  chi, G =>[s] D
    formula: Formula
    tag: str = "cut"

    def __post_init__(self) -> None:
        ls, rs = self.left.endsequent, self.right.endsequent
        if self.formula not in ls.right:
            raise ObligationError("cut formula missing on the right of the left premise")
        if ls.ann != rs.ann:
            raise ObligationError("premises carry different annotations")
        if rs.left != ls.left.add(self.formula):
            raise ObligationError("left contexts disagree")
        if rs.right != ls.right.remove(self.formula):
            raise ObligationError("right contexts disagree")

    @property
    def gamma(self) -> FormulaMultiset:
        return self.left.endsequent.left

    @property
    def delta(self) -> FormulaMultiset:
        return self.right.endsequent.right

    @property
    def ann(self) -> Annotation:
        return self.left.endsequent.ann

    def conclusion(self) -> AnnotatedSequent:
        return AnnotatedSequent(self.gamma, self.ann, self.delta)


@dataclass(frozen=True)
class Residual:
    tag: str
    formula: Formula


Resolver = Callable[[str, CutObligation], Proof]


def literal_resolver(tag: str, ob: CutObligation) -> Proof:
    return cut_proof(ob.left, ob.right, ob.formula)


@dataclass
class ReductionResult:
    case: str
    residuals: tuple[Residual, ...]
    result: Proof  # residuals plugged as literal cuts
    _assemble: Callable[[Resolver], Proof] = field(repr=False)

    def rebuild(self, resolver: Resolver) -> Proof:
        return self._assemble(resolver)


MODAL_CASES = {
    "modal-box-box",
    "modal-box-boxpu",
    "modal-box-boxpf",
    "modal-boxpu-box",
    "modal-boxpu-boxpu",
    "modal-boxpu-boxpf",
}


def _root_tag(p: Proof):
    step = p.root_node.step
    if isinstance(step, BackEdge):
        raise CatalogError("proof root cannot be a back-edge")
    return step.tag


def _child(p: Proof, idx: int) -> Proof:
    return extract(p, p.root_node.step.children[idx])


def _witness(p: Proof, idx: int) -> Proof:
    return p.witnesses[p.root_node.step.witnesses[idx]]


def _single(seq: AnnotatedSequent, tag) -> Proof:
    b = ProofBuilder()
    return b.finish(b.node(seq, tag))


def _apply_rule(seq: AnnotatedSequent, tag, children: list[Proof]) -> Proof:
    b = ProofBuilder()
    root = b.reserve()
    kids = tuple(b.graft(c) for c in children)
    b.fill(root, seq, Rule(tag, kids))
    return b.finish(root)


def _modal_root(seq: AnnotatedSequent, tag, children: list[Proof], witnesses: list[Proof]) -> Proof:
    b = ProofBuilder()
    root = b.reserve()
    kids = tuple(b.graft(c) for c in children)
    wits = tuple(b.witness(w) for w in witnesses)
    b.fill(root, seq, Rule(tag, kids, wits))
    return b.finish(root)


def _wk_to(p: Proof, target_left: FormulaMultiset, extra_right: FormulaMultiset) -> Proof:
    """Weaken so the left side becomes exactly target_left and the right gains extra_right."""
    add_left = target_left.minus_strict(p.endsequent.left)
    if not add_left and not extra_right:
        return p
    return weaken(p, add_left, extra_right)


def _select(ob: CutObligation):
    chi = ob.formula
    ltag = _root_tag(ob.left)
    rtag = _root_tag(ob.right)
    if isinstance(ltag, CutRule) or isinstance(rtag, CutRule):
        raise CatalogError("catalog applies to premises without a cut at the root")

    # 1. the focus and the cut formula coincide
    if isinstance(chi, BoxP) and ob.ann == chi.body:
        def label(resolve: Resolver) -> Proof:
            return contract_right_boxp(ob.left, chi.body)
        return "label", label

    # 2. axiomatic premises
    if isinstance(ltag, AxBot):
        def ax_bot_left(resolve: Resolver) -> Proof:
            return _single(ob.conclusion(), AxBot())
        return "axiom-left-bot", ax_bot_left
    if isinstance(ltag, Ax):
        if any(isinstance(p, Atom) and p in ob.delta for p in ob.gamma.support()):
            def ax_side_l(resolve: Resolver) -> Proof:
                return _single(ob.conclusion(), Ax())
            return "axiom-left-side", ax_side_l
        if isinstance(chi, Atom) and chi in ob.gamma:
            def ax_cut_l(resolve: Resolver) -> Proof:
                return contract_left_atom(ob.right, chi)
            return "axiom-left-cut", ax_cut_l
        raise CatalogError("left premise tagged Ax without a usable atom pair")
    if isinstance(rtag, AxBot):
        if BOT in ob.gamma:
            def ax_bot_side(resolve: Resolver) -> Proof:
                return _single(ob.conclusion(), AxBot())
            return "axiom-right-bot-side", ax_bot_side
        if isinstance(chi, Bot):
            def ax_bot_cut(resolve: Resolver) -> Proof:
                return invert_bot(ob.left)
            return "axiom-right-bot-cut", ax_bot_cut
        raise CatalogError("right premise tagged Ax-bot without a falsum")
    if isinstance(rtag, Ax):
        if any(isinstance(p, Atom) and p in ob.delta for p in ob.gamma.support()):
            def ax_side_r(resolve: Resolver) -> Proof:
                return _single(ob.conclusion(), Ax())
            return "axiom-right-side", ax_side_r
        if isinstance(chi, Atom) and chi in ob.delta:
            def ax_cut_r(resolve: Resolver) -> Proof:
                return contract_right_atom(ob.left, chi)
            return "axiom-right-cut", ax_cut_r
        raise CatalogError("right premise tagged Ax without a usable atom pair")

    # 3. cut formula principal on both sides: an implication
    if (
        isinstance(chi, Imp)
        and isinstance(ltag, ImpR)
        and ltag.principal == chi
        and isinstance(rtag, ImpL)
        and rtag.principal == chi
    ):
        def principal(resolve: Resolver) -> Proof:
            pi0 = _child(ob.left, 0)  # chi0, G => D, chi1
            tau0 = _child(ob.right, 0)  # G => D, chi0
            tau1 = _child(ob.right, 1)  # chi1, G => D
            a = weaken(tau0, EMPTY, ms(chi.rhs))
            r1 = resolve("cut1", CutObligation(a, pi0, chi.lhs, "cut1"))
            r2 = resolve("cut2", CutObligation(r1, tau1, chi.rhs, "cut2"))
            return r2
        return "principal", principal

    # 4. commutative implication cases
    if isinstance(ltag, ImpR) and ltag.principal != chi:
        p = ltag.principal
        def commute_l_impr(resolve: Resolver) -> Proof:
            pi0 = _child(ob.left, 0)  # G, a => c, D0, chi
            tau = invert_right(ob.right, p)  # chi, G, a => D0, c
            r1 = resolve("cut1", CutObligation(pi0, tau, chi, "cut1"))
            return _apply_rule(ob.conclusion(), ImpR(p), [r1])
        return "commute-left-impr", commute_l_impr
    if isinstance(ltag, ImpL):
        p = ltag.principal
        def commute_l_impl(resolve: Resolver) -> Proof:
            pi0 = _child(ob.left, 0)  # G0 => D, chi, a
            pi1 = _child(ob.left, 1)  # G0, c => D, chi
            t0 = invert_left_antecedent(ob.right, p)  # chi, G0 => D, a
            t1 = invert_left_consequent(ob.right, p)  # chi, G0, c => D
            r1 = resolve("cut1", CutObligation(pi0, t0, chi, "cut1"))
            r2 = resolve("cut2", CutObligation(pi1, t1, chi, "cut2"))
            return _apply_rule(ob.conclusion(), ImpL(p), [r1, r2])
        return "commute-left-impl", commute_l_impl
    if isinstance(rtag, ImpR):
        p = rtag.principal
        def commute_r_impr(resolve: Resolver) -> Proof:
            tau0 = _child(ob.right, 0)  # chi, G, a => c, D0
            l0 = invert_right(ob.left, p)  # G, a => c, D0, chi
            r1 = resolve("cut1", CutObligation(l0, tau0, chi, "cut1"))
            return _apply_rule(ob.conclusion(), ImpR(p), [r1])
        return "commute-right-impr", commute_r_impr
    if isinstance(rtag, ImpL) and rtag.principal != chi:
        p = rtag.principal
        def commute_r_impl(resolve: Resolver) -> Proof:
            tau0 = _child(ob.right, 0)  # chi, G0 => D, a
            tau1 = _child(ob.right, 1)  # chi, G0, c => D
            l0 = invert_left_antecedent(ob.left, p)  # G0 => D, chi, a
            l1 = invert_left_consequent(ob.left, p)  # G0, c => D, chi
            r1 = resolve("cut1", CutObligation(l0, tau0, chi, "cut1"))
            r2 = resolve("cut2", CutObligation(l1, tau1, chi, "cut2"))
            return _apply_rule(ob.conclusion(), ImpL(p), [r1, r2])
        return "commute-right-impl", commute_r_impl

    # 5. cut formula inside a modal weakening part
    if isinstance(ltag, (BoxR, BoxPF, BoxPU)) and chi in ltag.split.delta_wk:
        def weak_left(resolve: Resolver) -> Proof:
            sp = ltag.split
            new = ModalSplit(sp.sigma, sp.gamma, sp.pi, sp.delta_wk.remove(chi))
            kids = [_child(ob.left, i) for i in range(len(ob.left.root_node.step.children))]
            wits = [_witness(ob.left, i) for i in range(len(ob.left.root_node.step.witnesses))]
            return _modal_root(ob.conclusion(), type(ltag)(ltag.principal, new), kids, wits)
        return "weakening-left", weak_left
    if isinstance(rtag, (BoxR, BoxPF, BoxPU)) and chi in rtag.split.sigma:
        def weak_right(resolve: Resolver) -> Proof:
            sp = rtag.split
            new = ModalSplit(sp.sigma.remove(chi), sp.gamma, sp.pi, sp.delta_wk)
            kids = [_child(ob.right, i) for i in range(len(ob.right.root_node.step.children))]
            wits = [_witness(ob.right, i) for i in range(len(ob.right.root_node.step.witnesses))]
            return _modal_root(ob.conclusion(), type(rtag)(rtag.principal, new), kids, wits)
        return "weakening-right", weak_right

    # 6. the six modal reductions
    return _select_modal(ob, ltag, rtag)


def _select_modal(ob: CutObligation, ltag, rtag):
    chi = ob.formula
    if isinstance(chi, Box) and isinstance(ltag, BoxR) and ltag.principal == chi.body:
        kind_l = "box"
    elif isinstance(chi, BoxP) and isinstance(ltag, BoxPU) and ltag.principal == chi.body:
        kind_l = "boxpu"
    else:
        raise CatalogError(f"no catalog case applies (left root {type(ltag).__name__}, cut {chi})")
    if not isinstance(rtag, (BoxR, BoxPF, BoxPU)):
        raise CatalogError(f"no catalog case applies (right root {type(rtag).__name__})")
    chi0 = chi.body
    rsplit = rtag.split
    if isinstance(chi, Box):
        if chi0 not in rsplit.gamma:
            raise CatalogError("boxed cut formula is in no usable part of the right premise")
        gamma1 = rsplit.gamma.remove(chi0)
        pi1 = rsplit.pi
    else:
        if chi0 not in rsplit.pi:
            raise CatalogError("master cut formula is in no usable part of the right premise")
        gamma1 = rsplit.gamma
        pi1 = rsplit.pi.remove(chi0)

    lsplit = ltag.split
    sigma2, gamma2, pi2 = merge_modal_contexts(
        lsplit.sigma, lsplit.gamma, lsplit.pi, rsplit.sigma, gamma1, pi1
    )
    prem2 = gamma2 + dnecm(pi2)
    phi = rtag.principal
    split2 = ModalSplit(sigma2, gamma2, pi2, rsplit.delta_wk)
    conclusion = ob.conclusion()

    if kind_l == "box":
        pi0 = _witness(ob.left, 0)  # G0, dpi0 =>[o] chi0

        def first_cut(resolve: Resolver, goal_right: Formula, ann: Annotation, other: Proof, tags: tuple[str, str]) -> Proof:
            a = _wk_to(pi0, prem2, ms(goal_right))
            if ann is not None:
                a = change_annotation(a, ann)
            b = _wk_to(other, prem2.add(chi0), EMPTY)
            return resolve(tags[0], CutObligation(a, b, chi0, tags[0]))

        if isinstance(rtag, BoxR):
            def box_box(resolve: Resolver) -> Proof:
                tau0 = _witness(ob.right, 0)
                w = first_cut(resolve, phi, None, tau0, ("cut1", ""))
                return _modal_root(conclusion, BoxR(phi, split2), [], [w])
            return "modal-box-box", box_box
        if isinstance(rtag, BoxPU):
            def box_boxpu(resolve: Resolver) -> Proof:
                tau0 = _witness(ob.right, 0)
                tau1 = _witness(ob.right, 1)
                w0 = first_cut(resolve, phi, None, tau0, ("cut1", ""))
                w1 = first_cut(resolve, BoxP(phi), phi, tau1, ("cut2", ""))
                return _modal_root(conclusion, BoxPU(phi, split2), [], [w0, w1])
            return "modal-box-boxpu", box_boxpu

        def box_boxpf(resolve: Resolver) -> Proof:
            tau0 = _witness(ob.right, 0)
            tauc = _child(ob.right, 0)
            w0 = first_cut(resolve, phi, None, tau0, ("cut1", ""))
            kid = first_cut(resolve, BoxP(phi), phi, tauc, ("cut2", ""))
            return _modal_root(conclusion, BoxPF(phi, split2), [kid], [w0])
        return "modal-box-boxpf", box_boxpf

    # left root introduces the master modality without focus
    pi0 = _witness(ob.left, 0)  # G0, dpi0 =>[o] chi0
    pi1w = _witness(ob.left, 1)  # G0, dpi0 =>[chi0] BoxP(chi0)

    def chain(resolve: Resolver, goal_right: Formula, ann: Annotation, other: Proof, tags: tuple[str, str]) -> Proof:
        # cut the master formula against `other`, then the body against pi0
        a1 = _wk_to(pi1w, prem2.add(chi0), ms(goal_right))
        a1 = change_annotation(a1, ann)
        b1 = _wk_to(other, prem2.add(chi0).add(BoxP(chi0)), EMPTY)
        inner = resolve(tags[0], CutObligation(a1, b1, BoxP(chi0), tags[0]))
        a0 = _wk_to(pi0, prem2, ms(goal_right))
        if ann is not None:
            a0 = change_annotation(a0, ann)
        return resolve(tags[1], CutObligation(a0, inner, chi0, tags[1]))

    if isinstance(rtag, BoxR):
        def boxpu_box(resolve: Resolver) -> Proof:
            tau0 = _witness(ob.right, 0)
            w = chain(resolve, phi, None, tau0, ("cut1", "cut2"))
            return _modal_root(conclusion, BoxR(phi, split2), [], [w])
        return "modal-boxpu-box", boxpu_box
    if isinstance(rtag, BoxPU):
        def boxpu_boxpu(resolve: Resolver) -> Proof:
            tau0 = _witness(ob.right, 0)
            tau1 = _witness(ob.right, 1)
            w0 = chain(resolve, phi, None, tau0, ("cut1", "cut2"))
            w1 = chain(resolve, BoxP(phi), phi, tau1, ("cut3", "cut4"))
            return _modal_root(conclusion, BoxPU(phi, split2), [], [w0, w1])
        return "modal-boxpu-boxpu", boxpu_boxpu

    def boxpu_boxpf(resolve: Resolver) -> Proof:
        tau0 = _witness(ob.right, 0)
        tauc = _child(ob.right, 0)
        w0 = chain(resolve, phi, None, tau0, ("cut1", "cut2"))
        kid = chain(resolve, BoxP(phi), phi, tauc, ("cut3", "cut4"))
        return _modal_root(conclusion, BoxPF(phi, split2), [kid], [w0])
    return "modal-boxpu-boxpf", boxpu_boxpf


def reduce_cut(ob: CutObligation, tracer: Optional[Tracer] = None) -> ReductionResult:
    """Fire the unique applicable catalog case; residuals appear as literal cuts."""
    case, assemble = _select(ob)
    residuals: list[Residual] = []

    def recording(tag: str, sub: CutObligation) -> Proof:
        residuals.append(Residual(tag, sub.formula))
        return literal_resolver(tag, sub)

    result = assemble(recording)
    if tracer:
        tracer.emit(case, ob.formula, residuals)
    return ReductionResult(case, tuple(residuals), result, assemble)


def push_top(ob: CutObligation, tracer: Optional[Tracer] = None) -> Proof:
    """Discharge one topmost cut, leaving no cut in the main local fragment.

    Recursion is on (cut-formula size, sum of local heights): principal
    residuals shrink the formula, commutative residuals shrink the heights,
    modal residuals are left as literal cuts beyond the fragment boundary.
    """
    rr = reduce_cut(ob, tracer)
    if rr.case in MODAL_CASES:
        return rr.result

    def resolver(tag: str, sub: CutObligation) -> Proof:
        return push_top(sub, tracer)

    return rr.rebuild(resolver)


def _main_cut_nodes(proof: Proof) -> list[int]:
    main = main_local_fragment(proof)
    order: list[int] = []

    def visit(nid: int) -> None:
        node = proof.nodes[nid]
        if not isinstance(node.step, Rule):
            return
        if isinstance(node.step.tag, CutRule):
            order.append(nid)
        for c in node.step.children:
            if c in main:
                visit(c)

    visit(proof.root)
    return order


def _subtree_has_cut(proof: Proof, nid: int) -> bool:
    stack = [nid]
    while stack:
        cur = stack.pop()
        node = proof.nodes[cur]
        if isinstance(node.step, Rule):
            if isinstance(node.step.tag, CutRule):
                return True
            stack.extend(node.step.children)
    return False


def push_local(proof: Proof, tracer: Optional[Tracer] = None) -> Proof:
    """Remove every cut from the main local fragment, one topmost cut at a time."""
    current = proof
    while True:
        cuts = _main_cut_nodes(current)
        if not cuts:
            return current
        chosen = None
        for nid in cuts:
            node = current.nodes[nid]
            if not any(_subtree_has_cut(current, c) for c in node.step.children):
                chosen = nid
                break
        if chosen is None:  # cuts nest, so some premise-minimal one always exists
            raise CatalogError("no topmost cut found in a fragment with cuts")
        node = current.nodes[chosen]
        ob = CutObligation(
            extract(current, node.step.children[0]),
            extract(current, node.step.children[1]),
            node.step.tag.formula,
        )
        current = replace_subtree(current, chosen, push_top(ob, tracer))


def corecurse_fragments(
    proof: Proof,
    localize: Callable[[Proof], Proof],
    memo_budget: Optional[int] = None,
    counter: Optional[list[int]] = None,
) -> Proof:
    """Rebuild fragment by fragment: localize the root fragment, then recurse
    into each progressing premise, tying a back-edge whenever a subproof
    structurally repeats along the current path."""
    budget = memo_budget if memo_budget is not None else default_memo_budget()
    b = ProofBuilder()
    stack: dict = {}
    states = counter if counter is not None else [0]

    def emit(p: Proof) -> int:
        key = canonical_key(p)
        if key in stack:
            return b.backedge(p.endsequent, stack[key])
        states[0] += 1
        if states[0] > budget:
            raise MemoBudgetExceeded(states[0])
        q = localize(p)
        rid = b.reserve()
        stack[key] = rid

        def walk(nid: int, at: Optional[int]) -> int:
            node = q.nodes[nid]
            if isinstance(node.step, BackEdge):
                raise CatalogError("back-edge inside a main local fragment")
            tag = node.step.tag
            my = b.reserve() if at is None else at
            if isinstance(tag, BoxPF):
                kid = emit(extract(q, node.step.children[0]))
                wits = tuple(b.witness(q.witnesses[w]) for w in node.step.witnesses)
                b.fill(my, node.sequent, Rule(tag, (kid,), wits))
            elif isinstance(tag, (BoxR, BoxPU)):
                wits = tuple(b.witness(q.witnesses[w]) for w in node.step.witnesses)
                b.fill(my, node.sequent, Rule(tag, (), wits))
            else:
                kids = tuple(walk(c, None) for c in node.step.children)
                b.fill(my, node.sequent, Rule(tag, kids, ()))
            return my

        walk(q.root, rid)
        del stack[key]
        return rid

    return b.finish(emit(proof))


def push(
    proof: Proof,
    memo_budget: Optional[int] = None,
    tracer: Optional[Tracer] = None,
) -> Proof:
    """Relocate all cuts of the main global fragment into witnesses."""
    return corecurse_fragments(
        proof, lambda p: push_local(p, tracer), memo_budget=memo_budget
    )
