"""Proof checking for the annotated calculus, plus de/annotation.

The checker validates rule instances (including modal side conditions),
focus membership, progress of every cycle, witness stratification and the
requested cut discipline.  Violations are collected exhaustively: a bad
proof yields data, not an exception.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .formulas import (
    AnnotatedSequent,
    Annotation,
    Atom,
    BOT,
    BoxP,
    Box,
    Formula,
    FormulaMultiset,
    ms,
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
    Rule,
    structural_violations,
)


class CutMode(Enum):
    NOCUT = "nocut"
    CUT = "cut"
    MCUT = "mcut"
    WCUT = "wcut"

    def witness_mode(self) -> "CutMode":
        # mCut keeps witnesses cut-free, wCut frees them completely
        if self in (CutMode.NOCUT, CutMode.MCUT):
            return CutMode.NOCUT
        return CutMode.CUT


@dataclass(frozen=True)
class Violation:
    location: str  # witness path, "" for the top-level arena
    node: int
    kind: str
    message: str


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    system: Annotation
    cut_mode: CutMode
    violations: tuple[Violation, ...]


def _ann_str(ann: Annotation) -> str:
    return "o" if ann is None else "a formula"


def _expected_premises(node: ProofNode) -> list[AnnotatedSequent] | str:
    """Premise sequents demanded by the node's tag, or an error string."""
    seq = node.sequent
    tag = node.step.tag
    match tag:
        case Ax():
            if any(isinstance(phi, Atom) and phi in seq.right for phi in seq.left.support()):
                return []
            return "no atom occurs on both sides"
        case AxBot():
            if BOT in seq.left:
                return []
            return "no falsum on the left"
        case ImpR(principal=p):
            if p not in seq.right:
                return f"principal {p} missing on the right"
            return [AnnotatedSequent(seq.left.add(p.lhs), seq.ann, seq.right.remove(p).add(p.rhs))]
        case ImpL(principal=p):
            if p not in seq.left:
                return f"principal {p} missing on the left"
            ctx = seq.left.remove(p)
            return [
                AnnotatedSequent(ctx, seq.ann, seq.right.add(p.lhs)),
                AnnotatedSequent(ctx.add(p.rhs), seq.ann, seq.right),
            ]
        case CutRule(formula=chi):
            return [
                AnnotatedSequent(seq.left, seq.ann, seq.right.add(chi)),
                AnnotatedSequent(seq.left.add(chi), seq.ann, seq.right),
            ]
        case BoxR(principal=phi, split=sp):
            return _check_modal_shape(seq, sp, Box(phi))
        case BoxPF(principal=phi, split=sp):
            if seq.ann != phi:
                return "focused rule used while the focus is elsewhere"
            err = _check_modal_shape(seq, sp, BoxP(phi))
            if isinstance(err, str):
                return err
            return [AnnotatedSequent(sp.premise_left(), phi, ms(BoxP(phi)))]
        case BoxPU(principal=phi, split=sp):
            if seq.ann == phi:
                return "unfocused rule used while its formula is in focus"
            return _check_modal_shape(seq, sp, BoxP(phi))
    return f"unknown rule tag {tag!r}"


def _check_modal_shape(seq: AnnotatedSequent, sp: ModalSplit, principal: Formula) -> list | str:
    if seq.left != sp.conclusion_left():
        return "left side disagrees with the declared split"
    if seq.right != sp.delta_wk.add(principal):
        return "right side is not principal + declared weakening part"
    return []


def _witness_obligations(node: ProofNode) -> list[AnnotatedSequent]:
    tag = node.step.tag
    match tag:
        case BoxR(principal=phi, split=sp):
            return [AnnotatedSequent(sp.premise_left(), None, ms(phi))]
        case BoxPF(principal=phi, split=sp):
            return [AnnotatedSequent(sp.premise_left(), None, ms(phi))]
        case BoxPU(principal=phi, split=sp):
            return [
                AnnotatedSequent(sp.premise_left(), None, ms(phi)),
                AnnotatedSequent(sp.premise_left(), phi, ms(BoxP(phi))),
            ]
    return []


def check(proof: Proof, system: Annotation, mode: CutMode, _location: str = "") -> CheckReport:
    violations: list[Violation] = []

    def bad(node: int, kind: str, message: str) -> None:
        violations.append(Violation(_location, node, kind, message))

    structural = structural_violations(proof)
    for nid, kind, message in structural:
        bad(nid, kind, message)
    broken = {nid for nid, kind, _ in structural if kind in ("structure", "arity")}

    root_seq = proof.endsequent
    if root_seq.ann != system:
        bad(proof.root, "system", f"root annotation is {_ann_str(root_seq.ann)}, expected {_ann_str(system)}")

    for node in proof.nodes.values():
        if not node.sequent.focus_ok():
            bad(node.id, "focus-membership", "focused formula has no BoxP occurrence on the right")
        if node.id in broken or isinstance(node.step, BackEdge):
            continue
        want = _expected_premises(node)
        if isinstance(want, str):
            bad(node.id, "rule", want)
            continue
        for child_id, want_seq in zip(node.step.children, want):
            got = proof.nodes[child_id].sequent
            if got != want_seq:
                bad(node.id, "premise", f"premise {child_id} proves a different sequent than the rule demands")
        for wid, want_seq in zip(node.step.witnesses, _witness_obligations(node)):
            got = proof.witnesses[wid].endsequent
            if got != want_seq:
                bad(node.id, "witness-sequent", f"witness {wid} proves a different sequent than the rule demands")

    # progress: the tree path target .. back-edge must cross a focused
    # master-modality child edge
    for node in proof.nodes.values():
        if not isinstance(node.step, BackEdge) or node.id in broken:
            continue
        tgt = node.step.target
        try:
            path = proof.path_from(tgt, node.id)
        except Exception:
            continue  # already reported as a structural violation
        crosses = any(
            isinstance(proof.nodes[nid].step, Rule) and isinstance(proof.nodes[nid].step.tag, BoxPF)
            for nid in path[:-1]
        )
        if not crosses:
            bad(node.id, "progress", "cycle without progress: no focused master-modality step on it")

    if mode in (CutMode.NOCUT, CutMode.WCUT):
        for node in proof.nodes.values():
            if isinstance(node.step, Rule) and isinstance(node.step.tag, CutRule):
                bad(node.id, "cut-mode", f"cut not permitted in the main fragment under {mode.value}")

    wmode = mode.witness_mode()
    for node in proof.nodes.values():
        if isinstance(node.step, BackEdge) or node.id in broken:
            continue
        obligations = _witness_obligations(node)
        for wid, want_seq in zip(node.step.witnesses, obligations):
            sub = check(
                proof.witnesses[wid],
                want_seq.ann,
                wmode,
                _location=f"{_location}w{wid}/",
            )
            violations.extend(sub.violations)

    violations.sort(key=lambda v: (v.location, v.node, v.kind))
    return CheckReport(not violations, system, mode, tuple(violations))


def finitary_violations(proof: Proof) -> list[Violation]:
    """Nodes contradicting the finitary character of the unfocused system."""
    out = []
    for node in proof.nodes.values():
        if isinstance(node.step, BackEdge):
            out.append(Violation("", node.id, "finitary", "back-edge in an unfocused main fragment"))
        elif isinstance(node.step.tag, BoxPF):
            out.append(Violation("", node.id, "finitary", "focused master-modality rule in an unfocused main fragment"))
    return out


def check_unfocused_finitary(proof: Proof) -> bool:
    """Unfocused proofs have finite main fragments: no cycles, no focused steps."""
    return not finitary_violations(proof)


# ---------------------------------------------------------------------------
# plain (annotation-free) proofs and the translation in both directions


@dataclass(frozen=True)
class PAx:
    pass


@dataclass(frozen=True)
class PAxBot:
    pass


@dataclass(frozen=True)
class PImpL:
    principal: Formula


@dataclass(frozen=True)
class PImpR:
    principal: Formula


@dataclass(frozen=True)
class PBox:
    principal: Formula
    split: ModalSplit


@dataclass(frozen=True)
class PBoxP:
    principal: Formula
    split: ModalSplit


@dataclass(frozen=True)
class PCut:
    formula: Formula


PlainTag = PAx | PAxBot | PImpL | PImpR | PBox | PBoxP | PCut


@dataclass(frozen=True)
class PRule:
    tag: PlainTag
    children: tuple[int, ...] = ()


@dataclass(frozen=True)
class PBackEdge:
    target: int


@dataclass(frozen=True)
class PlainNode:
    id: int
    left: FormulaMultiset
    right: FormulaMultiset
    step: PRule | PBackEdge


@dataclass(frozen=True)
class PlainProof:
    nodes: dict[int, PlainNode]
    root: int


class _PlainBuilder:
    def __init__(self) -> None:
        self.nodes: dict[int, PlainNode] = {}
        self._next = 0

    def reserve(self) -> int:
        nid = self._next
        self._next += 1
        return nid

    def fill(self, nid: int, seq: AnnotatedSequent, step: PRule | PBackEdge) -> int:
        self.nodes[nid] = PlainNode(nid, seq.left, seq.right, step)
        return nid

    def finish(self, root: int) -> PlainProof:
        return PlainProof(dict(self.nodes), root)


def deannotate(proof: Proof) -> PlainProof:
    """Erase annotations; witnesses become ordinary premises of plain modal rules."""
    b = _PlainBuilder()

    def go(p: Proof, nid: int, mapping: dict[int, int]) -> int:
        node = p.nodes[nid]
        if isinstance(node.step, BackEdge):
            return b.fill(b.reserve(), node.sequent, PBackEdge(mapping[node.step.target]))
        my = b.reserve()
        mapping = dict(mapping)
        mapping[nid] = my
        tag = node.step.tag
        match tag:
            case Ax():
                step = PRule(PAx())
            case AxBot():
                step = PRule(PAxBot())
            case ImpL(principal=pr):
                step = PRule(PImpL(pr), tuple(go(p, c, mapping) for c in node.step.children))
            case ImpR(principal=pr):
                step = PRule(PImpR(pr), tuple(go(p, c, mapping) for c in node.step.children))
            case CutRule(formula=chi):
                step = PRule(PCut(chi), tuple(go(p, c, mapping) for c in node.step.children))
            case BoxR(principal=phi, split=sp):
                w = p.witnesses[node.step.witnesses[0]]
                step = PRule(PBox(phi, sp), (go(w, w.root, {}),))
            case BoxPF(principal=phi, split=sp):
                w = p.witnesses[node.step.witnesses[0]]
                first = go(w, w.root, {})
                second = go(p, node.step.children[0], mapping)
                step = PRule(PBoxP(phi, sp), (first, second))
            case BoxPU(principal=phi, split=sp):
                w0 = p.witnesses[node.step.witnesses[0]]
                w1 = p.witnesses[node.step.witnesses[1]]
                step = PRule(PBoxP(phi, sp), (go(w0, w0.root, {}), go(w1, w1.root, {})))
            case _:
                raise ValueError(f"unknown tag {tag!r}")
        b.nodes[my] = PlainNode(my, node.sequent.left, node.sequent.right, step)
        return my

    return b.finish(go(proof, proof.root, {}))


class AnnotationError(ValueError):
    pass


def annotate(plain: PlainProof) -> Proof:
    """Reconstruct the unique annotated proof whose root is unfocused.

    Fails when a cycle in the plain graph never settles on a single focused
    formula, which is exactly when the plain branch condition fails to give
    an annotated counterpart.
    """
    memo: dict[tuple[int, Annotation], Proof] = {}

    def resolve(pid: int) -> int:
        seen = set()
        while isinstance(plain.nodes[pid].step, PBackEdge):
            if pid in seen:
                raise AnnotationError("back-edge chain forms a degenerate cycle")
            seen.add(pid)
            pid = plain.nodes[pid].step.target
        return pid

    def region(start: int, ann: Annotation, in_flight: frozenset) -> Proof:
        start = resolve(start)
        key = (start, ann)
        if key in memo:
            return memo[key]
        if key in in_flight:
            raise AnnotationError("cycle without a stabilizing focus")
        inner = in_flight | {key}
        b = ProofBuilder()

        def walk(pid: int, path: dict[int, int]) -> int:
            node = plain.nodes[pid]
            if isinstance(node.step, PBackEdge):
                tgt = node.step.target
                if tgt in path:
                    seq = AnnotatedSequent(node.left, ann, node.right)
                    return b.backedge(seq, path[tgt])
                return walk(tgt, path)
            if pid in path:
                seq = AnnotatedSequent(node.left, ann, node.right)
                return b.backedge(seq, path[pid])
            seq = AnnotatedSequent(node.left, ann, node.right)
            my = b.reserve()
            sub = dict(path)
            sub[pid] = my
            tag = node.step.tag
            match tag:
                case PAx():
                    return b.fill(my, seq, Rule(Ax()))
                case PAxBot():
                    return b.fill(my, seq, Rule(AxBot()))
                case PImpL(principal=pr):
                    kids = tuple(walk(c, sub) for c in node.step.children)
                    return b.fill(my, seq, Rule(ImpL(pr), kids))
                case PImpR(principal=pr):
                    kids = tuple(walk(c, sub) for c in node.step.children)
                    return b.fill(my, seq, Rule(ImpR(pr), kids))
                case PCut(formula=chi):
                    kids = tuple(walk(c, sub) for c in node.step.children)
                    return b.fill(my, seq, Rule(CutRule(chi), kids))
                case PBox(principal=phi, split=sp):
                    w = b.witness(region(node.step.children[0], None, inner))
                    return b.fill(my, seq, Rule(BoxR(phi, sp), (), (w,)))
                case PBoxP(principal=phi, split=sp):
                    w0 = b.witness(region(node.step.children[0], None, inner))
                    if ann == phi:
                        kid = walk(node.step.children[1], sub)
                        return b.fill(my, seq, Rule(BoxPF(phi, sp), (kid,), (w0,)))
                    w1 = b.witness(region(node.step.children[1], phi, inner))
                    return b.fill(my, seq, Rule(BoxPU(phi, sp), (), (w0, w1)))
            raise ValueError(f"unknown plain tag {tag!r}")

        out = b.finish(walk(start, {}))
        memo[key] = out
        return out

    return region(plain.root, None, frozenset())
