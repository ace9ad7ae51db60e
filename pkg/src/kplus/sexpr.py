"""S-expression grammar: formulas, sequents, proof files and plain proof files.

Formulas: `bot` | atom | `(-> F F)` | `(box F)` | `(boxp F)`; atoms match
[a-z][a-z0-9_]* and may not be reserved words.  Annotations: `o` or a
formula.  Sequents: `(seq (F ...) ANN (F ...))` with repetition significant
and order not.  Proof files list arena nodes and witness definitions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .checker import (
    PAx,
    PAxBot,
    PBackEdge,
    PBox,
    PBoxP,
    PCut,
    PImpL,
    PImpR,
    PlainNode,
    PlainProof,
    PRule,
)
from .formulas import (
    AnnotatedSequent,
    Annotation,
    Atom,
    BOT,
    Box,
    BoxP,
    Formula,
    FormulaMultiset,
    Imp,
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
    ProofNode,
    Rule,
    RuleTag,
)


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


@dataclass(frozen=True)
class Sym:
    text: str
    offset: int


SExpr = "Sym | list"

_ATOM_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
_RESERVED = {"bot", "o", "box", "boxp", "seq"}


def _tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            yield (c, i)
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield (text[i:j], i)
            i = j


def read_all(text: str) -> list:
    forms: list = []
    stack: list[list] = []
    for tok, off in _tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise ParseError("unmatched closing parenthesis", off)
            done = stack.pop()
            (stack[-1] if stack else forms).append(done)
        else:
            (stack[-1] if stack else forms).append(Sym(tok, off))
    if stack:
        raise ParseError("unclosed parenthesis", len(text))
    return forms


def read_one(text: str) -> "Sym | list":
    forms = read_all(text)
    if not forms:
        raise ParseError("empty input", 0)
    if len(forms) > 1:
        raise ParseError("trailing content after first form", _offset(forms[1]))
    return forms[0]


def _offset(e) -> int:
    while isinstance(e, list):
        if not e:
            return 0
        e = e[0]
    return e.offset


def _head(e: list) -> str:
    if e and isinstance(e[0], Sym):
        return e[0].text
    return ""


def formula_from_sexpr(e) -> Formula:
    if isinstance(e, Sym):
        if e.text == "bot":
            return BOT
        if e.text in _RESERVED or not _ATOM_RE.match(e.text):
            raise ParseError(f"invalid atom {e.text!r}", e.offset)
        return Atom(e.text)
    head = _head(e)
    if head == "->" and len(e) == 3:
        return Imp(formula_from_sexpr(e[1]), formula_from_sexpr(e[2]))
    if head == "box" and len(e) == 2:
        return Box(formula_from_sexpr(e[1]))
    if head == "boxp" and len(e) == 2:
        return BoxP(formula_from_sexpr(e[1]))
    raise ParseError("malformed formula", _offset(e))


def parse_formula(text: str) -> Formula:
    return formula_from_sexpr(read_one(text))


def print_formula(phi: Formula) -> str:
    match phi:
        case Atom(name):
            return name
        case Imp(lhs, rhs):
            return f"(-> {print_formula(lhs)} {print_formula(rhs)})"
        case Box(body):
            return f"(box {print_formula(body)})"
        case BoxP(body):
            return f"(boxp {print_formula(body)})"
    return "bot"


def annotation_from_sexpr(e) -> Annotation:
    if isinstance(e, Sym) and e.text == "o":
        return None
    return formula_from_sexpr(e)


def parse_annotation(text: str) -> Annotation:
    return annotation_from_sexpr(read_one(text))


def print_annotation(ann: Annotation) -> str:
    return "o" if ann is None else print_formula(ann)


def _multiset_from_sexpr(e) -> FormulaMultiset:
    if not isinstance(e, list):
        raise ParseError("expected a formula list", _offset(e))
    return FormulaMultiset(formula_from_sexpr(x) for x in e)


def print_multiset(msi: FormulaMultiset) -> str:
    return "(" + " ".join(print_formula(phi) for phi in msi) + ")"


def sequent_from_sexpr(e) -> AnnotatedSequent:
    if not isinstance(e, list) or _head(e) != "seq" or len(e) != 4:
        raise ParseError("malformed sequent", _offset(e))
    return AnnotatedSequent(
        _multiset_from_sexpr(e[1]),
        annotation_from_sexpr(e[2]),
        _multiset_from_sexpr(e[3]),
    )


def parse_sequent(text: str) -> AnnotatedSequent:
    return sequent_from_sexpr(read_one(text))


def print_sequent(seq: AnnotatedSequent) -> str:
    return f"(seq {print_multiset(seq.left)} {print_annotation(seq.ann)} {print_multiset(seq.right)})"


def _int_from(e) -> int:
    if isinstance(e, Sym):
        try:
            return int(e.text)
        except ValueError:
            pass
    raise ParseError("expected an integer id", _offset(e))


def _split_to_sexpr(sp: ModalSplit) -> str:
    return (
        f"(split (sigma{_sp(sp.sigma)}) (gamma{_sp(sp.gamma)})"
        f" (pi{_sp(sp.pi)}) (deltawk{_sp(sp.delta_wk)}))"
    )


def _sp(msi: FormulaMultiset) -> str:
    return "".join(" " + print_formula(phi) for phi in msi)


def _split_from_sexpr(e) -> ModalSplit:
    if not isinstance(e, list) or _head(e) != "split" or len(e) != 5:
        raise ParseError("malformed split", _offset(e))
    parts = {}
    for sub in e[1:]:
        name = _head(sub)
        if name not in ("sigma", "gamma", "pi", "deltawk"):
            raise ParseError("unknown split component", _offset(sub))
        parts[name] = FormulaMultiset(formula_from_sexpr(x) for x in sub[1:])
    return ModalSplit(parts["sigma"], parts["gamma"], parts["pi"], parts["deltawk"])


def _rule_to_sexpr(tag: RuleTag) -> str:
    match tag:
        case Ax():
            return "(rule ax)"
        case AxBot():
            return "(rule axbot)"
        case ImpL(principal=p):
            return f"(rule impl (principal {print_formula(p)}))"
        case ImpR(principal=p):
            return f"(rule impr (principal {print_formula(p)}))"
        case BoxR(principal=p, split=sp):
            return f"(rule box (principal {print_formula(p)}) {_split_to_sexpr(sp)})"
        case BoxPF(principal=p, split=sp):
            return f"(rule boxpf (principal {print_formula(p)}) {_split_to_sexpr(sp)})"
        case BoxPU(principal=p, split=sp):
            return f"(rule boxpu (principal {print_formula(p)}) {_split_to_sexpr(sp)})"
        case CutRule(formula=chi):
            return f"(rule cut (cutformula {print_formula(chi)}))"
    raise ValueError(f"unknown tag {tag!r}")


def _rule_from_sexpr(e) -> RuleTag:
    if not isinstance(e, list) or _head(e) != "rule" or len(e) < 2:
        raise ParseError("malformed rule", _offset(e))
    name = e[1].text if isinstance(e[1], Sym) else ""
    args = {}
    for sub in e[2:]:
        args[_head(sub)] = sub
    if name == "ax":
        return Ax()
    if name == "axbot":
        return AxBot()
    if name in ("impl", "impr"):
        p = formula_from_sexpr(args["principal"][1])
        if not isinstance(p, Imp):
            raise ParseError("implication rule principal must be an implication", _offset(e))
        return ImpL(p) if name == "impl" else ImpR(p)
    if name in ("box", "boxpf", "boxpu"):
        p = formula_from_sexpr(args["principal"][1])
        sp = _split_from_sexpr(args["split"])
        return {"box": BoxR, "boxpf": BoxPF, "boxpu": BoxPU}[name](p, sp)
    if name == "cut":
        return CutRule(formula_from_sexpr(args["cutformula"][1]))
    raise ParseError(f"unknown rule {name!r}", _offset(e))


def proof_to_text(proof: Proof) -> str:
    lines = ["(proof", f"  (root {proof.root})"]
    for nid in sorted(proof.nodes):
        node = proof.nodes[nid]
        if isinstance(node.step, BackEdge):
            lines.append(f"  (node {nid} (backedge {node.step.target}))")
            continue
        parts = [f"(node {nid}", print_sequent(node.sequent), _rule_to_sexpr(node.step.tag)]
        if node.step.children:
            parts.append("(children " + " ".join(map(str, node.step.children)) + ")")
        if node.step.witnesses:
            parts.append("(witness " + " ".join(map(str, node.step.witnesses)) + ")")
        lines.append("  " + " ".join(parts) + ")")
    for wid in sorted(proof.witnesses):
        body = proof_to_text(proof.witnesses[wid]).replace("\n", "\n  ")
        lines.append(f"  (witnessdef {wid} {body})")
    return "\n".join(lines) + ")"


def proof_from_sexpr(e) -> Proof:
    if not isinstance(e, list) or _head(e) != "proof":
        raise ParseError("expected a (proof ...) form", _offset(e))
    root = None
    nodes: dict[int, ProofNode] = {}
    pending_backedges: list[tuple[int, int]] = []
    witnesses: dict[int, Proof] = {}
    for sub in e[1:]:
        head = _head(sub)
        if head == "root":
            root = _int_from(sub[1])
        elif head == "node":
            nid = _int_from(sub[1])
            if len(sub) == 3 and isinstance(sub[2], list) and _head(sub[2]) == "backedge":
                pending_backedges.append((nid, _int_from(sub[2][1])))
                continue
            seq = sequent_from_sexpr(sub[2])
            tag = _rule_from_sexpr(sub[3])
            children: tuple[int, ...] = ()
            wits: tuple[int, ...] = ()
            for extra in sub[4:]:
                if _head(extra) == "children":
                    children = tuple(_int_from(x) for x in extra[1:])
                elif _head(extra) == "witness":
                    wits = tuple(_int_from(x) for x in extra[1:])
            nodes[nid] = ProofNode(nid, seq, Rule(tag, children, wits))
        elif head == "witnessdef":
            witnesses[_int_from(sub[1])] = proof_from_sexpr(sub[2])
        else:
            raise ParseError(f"unknown proof section {head!r}", _offset(sub))
    if root is None:
        raise ParseError("proof lacks a root declaration", _offset(e))
    for nid, tgt in pending_backedges:
        cur, hops = tgt, 0
        while cur in {b for b, _ in pending_backedges}:
            cur = dict(pending_backedges)[cur]
            hops += 1
            if hops > len(pending_backedges):
                raise ParseError("back-edge chain never reaches a rule node", _offset(e))
        if cur not in nodes:
            raise ParseError(f"back-edge target {tgt} undefined", _offset(e))
        nodes[nid] = ProofNode(nid, nodes[cur].sequent, BackEdge(tgt))
    return Proof(nodes, root, witnesses)


def parse_proof(text: str) -> Proof:
    return proof_from_sexpr(read_one(text))


# ---------------------------------------------------------------------------
# plain proofs


_PLAIN_NAMES = {
    PAx: "ax",
    PAxBot: "axbot",
    PImpL: "impl",
    PImpR: "impr",
    PBox: "box",
    PBoxP: "boxp",
    PCut: "cut",
}


def _plain_rule_to_sexpr(tag) -> str:
    match tag:
        case PAx():
            return "(rule ax)"
        case PAxBot():
            return "(rule axbot)"
        case PImpL(principal=p):
            return f"(rule impl (principal {print_formula(p)}))"
        case PImpR(principal=p):
            return f"(rule impr (principal {print_formula(p)}))"
        case PBox(principal=p, split=sp):
            return f"(rule box (principal {print_formula(p)}) {_split_to_sexpr(sp)})"
        case PBoxP(principal=p, split=sp):
            return f"(rule boxp (principal {print_formula(p)}) {_split_to_sexpr(sp)})"
        case PCut(formula=chi):
            return f"(rule cut (cutformula {print_formula(chi)}))"
    raise ValueError(f"unknown plain tag {tag!r}")


def plain_to_text(plain: PlainProof) -> str:
    lines = ["(plainproof", f"  (root {plain.root})"]
    for nid in sorted(plain.nodes):
        node = plain.nodes[nid]
        if isinstance(node.step, PBackEdge):
            lines.append(f"  (node {nid} (backedge {node.step.target}))")
            continue
        parts = [
            f"(node {nid}",
            f"(seq {print_multiset(node.left)} {print_multiset(node.right)})",
            _plain_rule_to_sexpr(node.step.tag),
        ]
        if node.step.children:
            parts.append("(children " + " ".join(map(str, node.step.children)) + ")")
        lines.append("  " + " ".join(parts) + ")")
    return "\n".join(lines) + ")"


def plain_from_sexpr(e) -> PlainProof:
    if not isinstance(e, list) or _head(e) != "plainproof":
        raise ParseError("expected a (plainproof ...) form", _offset(e))
    root = None
    nodes: dict[int, PlainNode] = {}
    pending: list[tuple[int, int]] = []
    for sub in e[1:]:
        head = _head(sub)
        if head == "root":
            root = _int_from(sub[1])
        elif head == "node":
            nid = _int_from(sub[1])
            if len(sub) == 3 and isinstance(sub[2], list) and _head(sub[2]) == "backedge":
                pending.append((nid, _int_from(sub[2][1])))
                continue
            seq = sub[2]
            if _head(seq) != "seq" or len(seq) != 3:
                raise ParseError("malformed plain sequent", _offset(seq))
            left = _multiset_from_sexpr(seq[1])
            right = _multiset_from_sexpr(seq[2])
            rule = sub[3]
            name = rule[1].text if isinstance(rule[1], Sym) else ""
            args = {_head(x): x for x in rule[2:]}
            children: tuple[int, ...] = ()
            for extra in sub[4:]:
                if _head(extra) == "children":
                    children = tuple(_int_from(x) for x in extra[1:])
            if name == "ax":
                tag = PAx()
            elif name == "axbot":
                tag = PAxBot()
            elif name in ("impl", "impr"):
                p = formula_from_sexpr(args["principal"][1])
                tag = PImpL(p) if name == "impl" else PImpR(p)
            elif name in ("box", "boxp"):
                p = formula_from_sexpr(args["principal"][1])
                sp = _split_from_sexpr(args["split"])
                tag = PBox(p, sp) if name == "box" else PBoxP(p, sp)
            elif name == "cut":
                tag = PCut(formula_from_sexpr(args["cutformula"][1]))
            else:
                raise ParseError(f"unknown plain rule {name!r}", _offset(rule))
            nodes[nid] = PlainNode(nid, left, right, PRule(tag, children))
        else:
            raise ParseError(f"unknown plainproof section {head!r}", _offset(sub))
    if root is None:
        raise ParseError("plainproof lacks a root declaration", _offset(e))
    for nid, tgt in pending:
        cur, hops = tgt, 0
        while cur not in nodes:
            match = [t for (b, t) in pending if b == cur]
            if not match or hops > len(pending):
                raise ParseError(f"back-edge target {tgt} undefined", _offset(e))
            cur = match[0]
            hops += 1
        nodes[nid] = PlainNode(nid, nodes[cur].left, nodes[cur].right, PBackEdge(tgt))
    return PlainProof(nodes, root)


def parse_plain(text: str) -> PlainProof:
    return plain_from_sexpr(read_one(text))
