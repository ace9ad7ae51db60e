"""Cut admissibility by formula shape, and full cut elimination.

The ladder: atoms and falsum first, then boxed formulas assuming
admissibility for the body, then the master modality through the
unblocked-cut machinery, then arbitrary formulas by size.  Elimination
runs the three-stage picture: clean witnesses recursively, push the
remaining cuts out of the main global fragment, then repair the finitely
many local cuts inside each witness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .construct import cut_proof
from .cutreduce import (
    CatalogError,
    CutObligation,
    MODAL_CASES,
    Tracer,
    corecurse_fragments,
    push,
    reduce_cut,
)
from .formulas import Atom, Bot, Box, BoxP, Formula, Imp, ms, size
from .proofs import (
    CutClass,
    CutRule,
    Proof,
    Rule,
    cut_census,
    extract,
    main_local_fragment,
    ordinal_height,
    replace_subtree,
    replace_witnesses,
)
from .transforms import (
    invert_bot,
    invert_left_antecedent,
    invert_left_consequent,
    invert_right,
    weaken,
)

Oracle = Callable[[Proof, Proof, Formula], Proof]


class AdmissibilityError(RuntimeError):
    pass


def _require_cut_free(p: Proof, what: str) -> None:
    if cut_census(p).classification is not CutClass.CUT_FREE:
        raise AdmissibilityError(f"{what} must be cut-free")


def admit_atomic(pi: Proof, tau: Proof, p: Atom, tracer: Optional[Tracer] = None) -> Proof:
    """Cut-free closure for an atomic cut formula; recursion on local heights."""
    _require_cut_free(pi, "left premise")
    _require_cut_free(tau, "right premise")

    def go(ob: CutObligation) -> Proof:
        rr = reduce_cut(ob, tracer)
        if rr.case in MODAL_CASES or rr.case == "principal":
            raise CatalogError(f"case {rr.case} cannot fire on an atomic cut")
        return rr.rebuild(lambda tag, sub: go(sub))

    return go(CutObligation(pi, tau, p))


def admit_box(pi: Proof, tau: Proof, box_chi: Box, inner: Oracle, tracer: Optional[Tracer] = None) -> Proof:
    """Cut-free closure for Box(chi), delegating body cuts to `inner`."""
    _require_cut_free(pi, "left premise")
    _require_cut_free(tau, "right premise")
    body = box_chi.body

    def go(ob: CutObligation) -> Proof:
        rr = reduce_cut(ob, tracer)

        def res(tag: str, sub: CutObligation) -> Proof:
            if sub.formula == box_chi:
                return go(sub)
            return inner(sub.left, sub.right, body)

        return rr.rebuild(res)

    return go(CutObligation(pi, tau, box_chi))


@dataclass(frozen=True)
class UnblockedWitnessData:
    chi: Formula
    alpha: int
    verified: bool


def unblocked_data(proof: Proof, chi: Formula, alpha: int) -> UnblockedWitnessData:
    """Verify: only chi / BoxP(chi) cuts; master cuts of height <= alpha with
    cut-free premises; witnesses transitively cut-free."""
    boxp_chi = BoxP(chi)
    ok = True
    for w in proof.witnesses.values():
        if cut_census(w).classification is not CutClass.CUT_FREE:
            ok = False
    for node in proof.nodes.values():
        if not isinstance(node.step, Rule) or not isinstance(node.step.tag, CutRule):
            continue
        formula = node.step.tag.formula
        if formula == chi:
            continue
        if formula != boxp_chi:
            ok = False
            continue
        left = extract(proof, node.step.children[0])
        right = extract(proof, node.step.children[1])
        if cut_census(left).classification is not CutClass.CUT_FREE:
            ok = False
        if cut_census(right).classification is not CutClass.CUT_FREE:
            ok = False
        if ordinal_height(left) + ordinal_height(right) > alpha:
            ok = False
    return UnblockedWitnessData(chi, alpha, ok)


def admit_master_top(
    pi: Proof,
    tau: Proof,
    chi: Formula,
    alpha: int,
    chi_oracle: Callable[[Proof, Proof], Proof],
    boxp_oracle: Callable[[Proof, Proof], Proof],
    tracer: Optional[Tracer] = None,
) -> Proof:
    """One master cut becomes an unblocked proof without main-local cuts.

    chi_oracle settles body cuts outright; boxp_oracle settles master cuts of
    height strictly below alpha.  In the focused-against-unfocused reduction
    two literal cuts survive beyond the fragment boundary, exactly within the
    unblocked discipline.
    """
    _require_cut_free(pi, "left premise")
    _require_cut_free(tau, "right premise")
    boxp_chi = BoxP(chi)
    if ordinal_height(pi) + ordinal_height(tau) > alpha:
        raise AdmissibilityError("height budget exceeded by the premises")

    def go(ob: CutObligation) -> Proof:
        rr = reduce_cut(ob, tracer)
        if rr.case == "principal" or rr.case.startswith("modal-box-"):
            raise CatalogError(f"case {rr.case} cannot fire on a master cut")

        def res(tag: str, sub: CutObligation) -> Proof:
            if rr.case.startswith("commute"):
                return go(sub)
            height = ordinal_height(sub.left) + ordinal_height(sub.right)
            if sub.formula == boxp_chi:
                if rr.case == "modal-boxpu-boxpf" and tag == "cut3":
                    # survives literally beyond the fragment boundary
                    if height > alpha:
                        raise AdmissibilityError("surviving master cut exceeds the height budget")
                    _require_cut_free(sub.left, "surviving cut's left premise")
                    _require_cut_free(sub.right, "surviving cut's right premise")
                    return cut_proof(sub.left, sub.right, sub.formula)
                if height >= alpha:
                    raise AdmissibilityError("master-cut residual is not below the height budget")
                return boxp_oracle(sub.left, sub.right)
            if rr.case == "modal-boxpu-boxpf" and tag == "cut4":
                return cut_proof(sub.left, sub.right, sub.formula)
            return chi_oracle(sub.left, sub.right)

        return rr.rebuild(res)

    return go(CutObligation(pi, tau, boxp_chi))


def _main_cuts_with_formula(proof: Proof, formula: Formula) -> list[int]:
    main = main_local_fragment(proof)
    return [
        nid
        for nid in sorted(main)
        if isinstance(proof.nodes[nid].step, Rule)
        and isinstance(proof.nodes[nid].step.tag, CutRule)
        and proof.nodes[nid].step.tag.formula == formula
    ]


def admit_master_local(
    proof: Proof,
    chi: Formula,
    alpha: int,
    chi_oracle: Callable[[Proof, Proof], Proof],
    boxp_oracle: Callable[[Proof, Proof], Proof],
    tracer: Optional[Tracer] = None,
) -> Proof:
    """Clear the main local fragment of master cuts, one at a time.

    Unblockedness makes every such cut eligible for admit_master_top: its
    premises are cut-free and its height fits the budget.
    """
    boxp_chi = BoxP(chi)
    current = proof
    while True:
        cuts = _main_cuts_with_formula(current, boxp_chi)
        if not cuts:
            return current
        nid = cuts[0]
        node = current.nodes[nid]
        left = extract(current, node.step.children[0])
        right = extract(current, node.step.children[1])
        repl = admit_master_top(left, right, chi, alpha, chi_oracle, boxp_oracle, tracer)
        current = replace_subtree(current, nid, repl)


def admit_master_aux(
    pi: Proof,
    tau: Proof,
    chi: Formula,
    alpha: int,
    chi_oracle: Callable[[Proof, Proof], Proof],
    boxp_oracle: Callable[[Proof, Proof], Proof],
    memo_budget: Optional[int] = None,
    tracer: Optional[Tracer] = None,
) -> Proof:
    """Corecursive sweep: after it, every remaining cut has the body as its formula."""
    start = cut_proof(pi, tau, BoxP(chi))
    localize = lambda p: admit_master_local(p, chi, alpha, chi_oracle, boxp_oracle, tracer)
    return corecurse_fragments(start, localize, memo_budget=memo_budget)


def _topmost_arena_cut(proof: Proof) -> Optional[int]:
    """An arena cut whose premise subtrees contain no further arena cuts."""
    cuts = [
        nid
        for nid in sorted(proof.nodes)
        if isinstance(proof.nodes[nid].step, Rule)
        and isinstance(proof.nodes[nid].step.tag, CutRule)
    ]
    for nid in cuts:
        node = proof.nodes[nid]
        clean = True
        for c in node.step.children:
            sub = extract(proof, c)
            if any(
                isinstance(n.step, Rule) and isinstance(n.step.tag, CutRule)
                for n in sub.nodes.values()
            ):
                clean = False
                break
        if clean:
            return nid
    return None


def _discharge_arena_cuts(proof: Proof, oracle: Oracle) -> Proof:
    """Remove finitely many arena cuts, topmost first; witnesses must already be clean."""
    current = proof
    while True:
        nid = _topmost_arena_cut(current)
        if nid is None:
            return current
        node = current.nodes[nid]
        left = extract(current, node.step.children[0])
        right = extract(current, node.step.children[1])
        repl = oracle(left, right, node.step.tag.formula)
        current = replace_subtree(current, nid, repl)


def admit_master(
    pi: Proof,
    tau: Proof,
    boxp_chi: BoxP,
    inner: Oracle,
    memo_budget: Optional[int] = None,
    tracer: Optional[Tracer] = None,
) -> Proof:
    """Cut-free closure for BoxP(chi); `inner` covers every smaller formula."""
    _require_cut_free(pi, "left premise")
    _require_cut_free(tau, "right premise")
    chi = boxp_chi.body

    def outer(left: Proof, right: Proof) -> Proof:
        alpha = ordinal_height(left) + ordinal_height(right)

        def chi_oracle(a: Proof, b: Proof) -> Proof:
            return inner(a, b, chi)

        def boxp_below(a: Proof, b: Proof) -> Proof:
            if ordinal_height(a) + ordinal_height(b) >= alpha:
                raise AdmissibilityError("master-cut recursion failed to descend in height")
            return outer(a, b)

        rho0 = admit_master_aux(left, right, chi, alpha, chi_oracle, boxp_below, memo_budget, tracer)
        rho1 = push(rho0, memo_budget, tracer)
        repaired = {}
        for wid, w in rho1.witnesses.items():
            if cut_census(w).total:
                repaired[wid] = _discharge_arena_cuts(w, inner)
        return replace_witnesses(rho1, repaired) if repaired else rho1

    return outer(pi, tau)


def admit_cut(
    pi: Proof,
    tau: Proof,
    chi: Formula,
    memo_budget: Optional[int] = None,
    tracer: Optional[Tracer] = None,
) -> Proof:
    """Cut admissibility for arbitrary formulas, by induction on their size."""
    _require_cut_free(pi, "left premise")
    _require_cut_free(tau, "right premise")

    def recur(a: Proof, b: Proof, f: Formula) -> Proof:
        return admit_cut(a, b, f, memo_budget, tracer)

    match chi:
        case Bot():
            return invert_bot(pi)
        case Atom():
            return admit_atomic(pi, tau, chi, tracer)
        case Box():
            return admit_box(pi, tau, chi, recur, tracer)
        case BoxP():
            return admit_master(pi, tau, chi, recur, memo_budget, tracer)
        case Imp(lhs=chi0, rhs=chi1):
            # invert both sides to cut on the strictly smaller pieces
            left_inv = invert_right(pi, chi)  # G, chi0 => D, chi1
            t0 = invert_left_antecedent(tau, chi)  # G => D, chi0
            t1 = weaken(invert_left_consequent(tau, chi), ms(chi0), ms())  # G, chi0, chi1 => D
            mid = recur(left_inv, t1, chi1)  # G, chi0 => D
            return recur(t0, mid, chi0)
    raise TypeError(f"not a formula: {chi!r}")


def eliminate_finite(proof: Proof, memo_budget: Optional[int] = None, tracer: Optional[Tracer] = None) -> Proof:
    """Eliminate finitely many cuts by admissibility, deepest witnesses first."""
    repaired = {}
    for wid, w in proof.witnesses.items():
        if cut_census(w).total:
            repaired[wid] = eliminate_finite(w, memo_budget, tracer)
    current = replace_witnesses(proof, repaired) if repaired else proof
    return _discharge_arena_cuts(
        current, lambda a, b, f: admit_cut(a, b, f, memo_budget, tracer)
    )


def eliminate_stages(
    proof: Proof,
    memo_budget: Optional[int] = None,
    tracer: Optional[Tracer] = None,
) -> tuple[Proof, Proof, Proof]:
    """The three-stage elimination; returns all intermediate proofs.

    Stage 1 replaces each witness by its recursively cut-eliminated version
    (main cuts only remain); stage 2 pushes main cuts into witnesses as local
    cuts; stage 3 repairs each witness by finite admissibility.
    """
    replaced = {}
    for wid, w in proof.witnesses.items():
        if cut_census(w).total:
            replaced[wid] = eliminate_cuts(w, memo_budget, tracer)
    p1 = replace_witnesses(proof, replaced) if replaced else proof
    if cut_census(p1).witness_cuts_transitive:
        raise AdmissibilityError("stage 1 left cuts inside witnesses")

    p2 = push(p1, memo_budget, tracer)
    census2 = cut_census(p2)
    if census2.main_global_cuts:
        raise AdmissibilityError("stage 2 left cuts in the main global fragment")
    for w in p2.witnesses.values():
        if cut_census(w).classification not in (CutClass.CUT_FREE, CutClass.LOCAL_ONLY):
            raise AdmissibilityError("stage 2 left a witness with non-local cuts")

    repaired = {}
    for wid, w in p2.witnesses.items():
        if cut_census(w).total:
            repaired[wid] = eliminate_finite(w, memo_budget, tracer)
    p3 = replace_witnesses(p2, repaired) if repaired else p2
    if cut_census(p3).classification is not CutClass.CUT_FREE:
        raise AdmissibilityError("stage 3 did not reach a cut-free proof")
    return p1, p2, p3


def eliminate_cuts(
    proof: Proof,
    memo_budget: Optional[int] = None,
    tracer: Optional[Tracer] = None,
) -> Proof:
    """Full cut elimination: same endsequent, no cut anywhere, witnesses included."""
    if cut_census(proof).classification is CutClass.CUT_FREE:
        return proof
    return eliminate_stages(proof, memo_budget, tracer)[2]
