"""Set algebra over the Venn-diagram atoms of a finite frame.

Every element of the hyper-power set is a union of Venn atoms.  Atom ``k``
(``1 <= k < 2**n``) is the region that lies inside exactly those singletons
whose bit is set in ``k``.  A proposition is stored as a Python int used as a
bitset over atom indices, so union and intersection are single ``|``/``&``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

MAX_FRAME_SIZE = 10

_LABEL_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_KEYWORDS = frozenset({"EMPTY", "THETA"})


class FrameMismatch(ValueError):
    pass


class ParseError(ValueError):
    """Malformed proposition expression; ``position`` is a 0-based offset."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}: {text!r}")


def _popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class Frame:
    """Ordered, unique singleton labels."""

    names: tuple[str, ...]

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if not 1 <= len(names) <= MAX_FRAME_SIZE:
            raise ValueError(f"frame size must be in 1..{MAX_FRAME_SIZE}, got {len(names)}")
        for name in names:
            if not isinstance(name, str) or not _LABEL_RE.match(name) or name in _KEYWORDS:
                raise ValueError(f"invalid singleton label {name!r}")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate labels in frame {names}")
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def num_atoms(self) -> int:
        return (1 << self.n) - 1

    @cached_property
    def theta_bits(self) -> int:
        # atom 0 (outside every singleton) does not exist
        return ((1 << (1 << self.n)) - 1) & ~1

    @cached_property
    def singleton_bits(self) -> tuple[int, ...]:
        out = []
        for i in range(self.n):
            bits = 0
            for k in range(1, 1 << self.n):
                if k >> i & 1:
                    bits |= 1 << k
            out.append(bits)
        return tuple(out)

    def index(self, label: str) -> int:
        try:
            return self.names.index(label)
        except ValueError:
            raise KeyError(f"unknown label {label!r}; frame is {list(self.names)}") from None

    def singleton(self, label_or_index: str | int) -> Proposition:
        i = label_or_index if isinstance(label_or_index, int) else self.index(label_or_index)
        return Proposition(self, self.singleton_bits[i])

    @property
    def theta(self) -> Proposition:
        return Proposition(self, self.theta_bits)

    @property
    def empty(self) -> Proposition:
        return Proposition(self, 0)

    def singletons(self) -> list[Proposition]:
        return [Proposition(self, b) for b in self.singleton_bits]


@dataclass(frozen=True)
class Proposition:
    """An element of D^Theta, held as its raw atom bitset."""

    frame: Frame
    bits: int

    @property
    def atoms(self) -> frozenset[int]:
        return frozenset(_iter_atoms(self.bits))

    def is_raw_empty(self) -> bool:
        return self.bits == 0

    def __or__(self, other: Proposition) -> Proposition:
        return union(self, other)

    def __and__(self, other: Proposition) -> Proposition:
        return intersection(self, other)

    def __le__(self, other: Proposition) -> bool:
        _check_frame(self, other)
        return self.bits & ~other.bits == 0

    def __str__(self) -> str:
        return format_proposition(self)

    def __repr__(self) -> str:
        return f"Proposition({format_proposition(self)!r})"


def _iter_atoms(bits: int) -> Iterator[int]:
    k = 0
    while bits:
        if bits & 1:
            yield k
        bits >>= 1
        k += 1


def _check_frame(p: Proposition, q: Proposition) -> None:
    if p.frame != q.frame:
        raise FrameMismatch(f"propositions over different frames: {p.frame.names} vs {q.frame.names}")


def union(p: Proposition, q: Proposition) -> Proposition:
    _check_frame(p, q)
    return Proposition(p.frame, p.bits | q.bits)


def intersection(p: Proposition, q: Proposition) -> Proposition:
    _check_frame(p, q)
    return Proposition(p.frame, p.bits & q.bits)


def complement(p: Proposition) -> Proposition:
    """Atom complement within Theta.

    Only meaningful for unions of singletons in the Shafer setting, where it
    coincides with the set complement.
    """
    return Proposition(p.frame, p.frame.theta_bits & ~p.bits)


def union_span(p: Proposition) -> Proposition:
    """Union of the singletons named in p, e.g. u((A&B)|(A&C)) = A|B|C.

    The names are read off the minimal atoms of p's raw atom set, i.e. its
    intersection terms; u(A) stays A even though A's atoms overlap B.
    """
    touched = 0
    for k in _minimal_atoms(p.bits):
        touched |= k
    bits = 0
    for i, sb in enumerate(p.frame.singleton_bits):
        if touched >> i & 1:
            bits |= sb
    return Proposition(p.frame, bits)


def singleton_content(p: Proposition) -> int:
    """Bitmask over frame indices of singletons whose pure atom lies in p.

    This is the classical 2^Theta reading of a proposition: for a union of
    singletons it recovers exactly which singletons it contains.
    """
    out = 0
    for i in range(p.frame.n):
        if p.bits >> (1 << i) & 1:
            out |= 1 << i
    return out


def upward_closure(frame: Frame, bits: int) -> int:
    """Smallest D^Theta element (an up-set of atoms) containing ``bits``."""
    out = 0
    full = frame.num_atoms
    for k in _iter_atoms(bits):
        # enumerate supersets of k within the frame
        rest = full & ~k
        sub = rest
        while True:
            out |= 1 << (k | sub)
            if sub == 0:
                break
            sub = (sub - 1) & rest
    return out


KINDS = ("shafer", "free", "hybrid")


@dataclass(frozen=True)
class Model:
    """A frame plus the set of atoms forced empty.

    ``constrained`` is an atom bitset.  The Shafer kind constrains every atom
    shared by two or more singletons; the free kind constrains nothing.
    """

    frame: Frame
    kind: str = "shafer"
    constrained: int = field(default=-1)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"model kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "shafer":
            c = 0
            for k in range(1, 1 << self.frame.n):
                if _popcount(k) >= 2:
                    c |= 1 << k
            object.__setattr__(self, "constrained", c)
        elif self.kind == "free":
            object.__setattr__(self, "constrained", 0)
        else:
            if self.constrained < 0:
                raise ValueError("hybrid model requires an explicit constrained atom set")
            object.__setattr__(self, "constrained", self.constrained & self.frame.theta_bits)

    @classmethod
    def shafer(cls, frame: Frame) -> Model:
        return cls(frame, "shafer")

    @classmethod
    def free(cls, frame: Frame) -> Model:
        return cls(frame, "free")

    @classmethod
    def hybrid(cls, frame: Frame, empty: Iterable[Proposition]) -> Model:
        """Hybrid model in which every proposition of ``empty`` is declared empty."""
        c = 0
        for p in empty:
            if p.frame != frame:
                raise FrameMismatch("constraint proposition over a different frame")
            c |= p.bits
        return cls(frame, "hybrid", c)

    def canonical_bits(self, p: Proposition) -> int:
        if p.frame != self.frame:
            raise FrameMismatch("proposition frame does not match model frame")
        return p.bits & ~self.constrained

    def canonical(self, p: Proposition) -> Proposition:
        return Proposition(self.frame, self.canonical_bits(p))

    def normal_form(self, p: Proposition) -> Proposition:
        """Minimal raw representative with the same canonical atom set.

        Two propositions equivalent under the model share one normal form, so
        it is used to key fused masses.
        """
        return Proposition(self.frame, upward_closure(self.frame, self.canonical_bits(p)))


def is_empty(p: Proposition, model: Model) -> bool:
    return model.canonical_bits(p) == 0


def dsm_cardinality(p: Proposition, model: Model) -> int:
    """Number of unconstrained Venn atoms in p."""
    return _popcount(model.canonical_bits(p))


# -- expression grammar ------------------------------------------------------
#   expr   := term ('|' term)*
#   term   := factor ('&' factor)*
#   factor := label | '(' expr ')' | 'EMPTY' | 'THETA'

_TOKEN_RE = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[|&()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            stripped = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[stripped]!r}", text, stripped)
        kind = "name" if m.group("name") else "op"
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, frame: Frame):
        self.text = text
        self.frame = frame
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok):
        raise ParseError(message, self.text, tok[2])

    def expr(self) -> int:
        bits = self.term()
        while self.peek()[1] == "|":
            self.take()
            bits |= self.term()
        return bits

    def term(self) -> int:
        bits = self.factor()
        while self.peek()[1] == "&":
            self.take()
            bits &= self.factor()
        return bits

    def factor(self) -> int:
        tok = self.take()
        kind, value, _ = tok
        if kind == "name":
            if value == "THETA":
                return self.frame.theta_bits
            if value == "EMPTY":
                return 0
            if value not in self.frame.names:
                self.error(f"unknown label {value!r}", tok)
            return self.frame.singleton_bits[self.frame.names.index(value)]
        if value == "(":
            bits = self.expr()
            close = self.take()
            if close[1] != ")":
                self.error("expected ')'", close)
            return bits
        if kind == "end":
            self.error("unexpected end of expression", tok)
        self.error(f"unexpected {value!r}", tok)

    def parse(self) -> int:
        bits = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.error(f"unexpected {tok[1]!r}", tok)
        return bits


def parse_proposition(text: str, frame: Frame) -> Proposition:
    """Parse ``"(A&B)|C"``-style text into a proposition over ``frame``."""
    return Proposition(frame, _Parser(text, frame).parse())


def _minimal_atoms(bits: int) -> list[int]:
    atoms = list(_iter_atoms(bits))
    return [k for k in atoms if not any(j != k and j & k == j for j in atoms)]


def format_proposition(p: Proposition, model: Model | None = None) -> str:
    """Canonical text: '|' between maximal intersection terms, '&' inside a term.

    With a model, the proposition is first reduced to its normal form so that
    equivalent propositions print identically.
    """
    if model is not None:
        p = model.normal_form(p)
    bits = p.bits
    if bits == 0:
        return "EMPTY"
    frame = p.frame
    # a non-up-set (e.g. an atom complement) is printed via its up-closure
    if upward_closure(frame, bits) != bits:
        bits = upward_closure(frame, bits)
    terms = sorted(_minimal_atoms(bits), key=lambda k: (_popcount(k), [not (k >> i & 1) for i in range(frame.n)]))
    parts = []
    for k in terms:
        labels = [frame.names[i] for i in range(frame.n) if k >> i & 1]
        parts.append("&".join(labels))
    if len(parts) == 1:
        return parts[0]
    return "|".join(f"({t})" if "&" in t else t for t in parts)


def propositions_equal(p: Proposition, q: Proposition, model: Model) -> bool:
    return model.canonical_bits(p) == model.canonical_bits(q)


def labels_of(mask: int, frame: Frame) -> Sequence[str]:
    return [frame.names[i] for i in range(frame.n) if mask >> i & 1]
