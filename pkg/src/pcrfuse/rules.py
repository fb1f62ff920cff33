"""Combination rules: conjunctive, Dubois-Prade, DSmH and the PCR family.

All joint rules walk the cartesian product of the experts' focal elements.
A tuple is conflicting when its intersection is empty *under the model*;
conflicting mass is then sent to the tuple's own raw propositions (PCR), to
their union (Dubois-Prade, DSmH), or left on the empty set (conjunctive).
Fused masses are keyed by the model normal form of each target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence

from .algebra import Model, Proposition, union_span, upward_closure
from .mass import MassFunction, validate

MAX_EXPERTS = 8
MAX_TUPLES = 10**6

Weight = Callable[[float], float]


class CapacityError(ValueError):
    """Tuple enumeration would exceed the configured bound."""


@dataclass(frozen=True)
class PowerWeight:
    """Monotone weight x -> x**alpha, alpha >= 0; alpha=1 is the identity."""

    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0 or math.isinf(self.alpha):
            raise ValueError(f"alpha must be a finite non-negative real, got {self.alpha!r}")

    def __call__(self, x: float) -> float:
        return x**self.alpha


IDENTITY = PowerWeight(1.0)


def _identity(x: float) -> float:
    return x


def check_experts(experts: Sequence[MassFunction], allow_empty: bool = False) -> Model:
    if len(experts) < 2:
        raise ValueError("at least two experts are required")
    if len(experts) > MAX_EXPERTS:
        raise CapacityError(f"at most {MAX_EXPERTS} experts are supported, got {len(experts)}")
    model = experts[0].model
    for e in experts[1:]:
        if e.model != model:
            raise ValueError("all experts must share the same model")
    for e in experts:
        validate(e, allow_empty_mass=allow_empty)
    n_tuples = math.prod(len(e) for e in experts)
    if n_tuples > MAX_TUPLES:
        raise CapacityError(f"{n_tuples} focal tuples exceed the limit of {MAX_TUPLES}")
    return model


class _Accumulator:
    """Sums masses keyed by normal-form atom bits."""

    def __init__(self, model: Model):
        self.model = model
        self.keep = ~model.constrained
        self.out: dict[int, float] = {}
        self._norm: dict[int, int] = {}

    def add(self, bits: int, value: float) -> None:
        c = bits & self.keep
        key = self._norm.get(c)
        if key is None:
            key = self._norm[c] = upward_closure(self.model.frame, c)
        self.out[key] = self.out.get(key, 0.0) + value

    def result(self) -> MassFunction:
        frame = self.model.frame
        return MassFunction(self.model, {Proposition(frame, b): v for b, v in sorted(self.out.items())})


def _walk(focals: list[list[tuple[int, float]]], theta: int):
    """Depth-first walk of the focal-element product.

    Yields ``(chosen, intersection, product)`` for each full tuple, where
    ``chosen`` is the list of ``(bits, mass)`` picks (reused between yields).
    Prefix intersections and products are shared across siblings.
    """
    m = len(focals)
    chosen: list[tuple[int, float]] = [(0, 0.0)] * m
    inter = [theta] * (m + 1)
    prod = [1.0] * (m + 1)
    idx = [0] * m
    depth = 0
    while depth >= 0:
        if idx[depth] == len(focals[depth]):
            idx[depth] = 0
            depth -= 1
            if depth >= 0:
                idx[depth] += 1
            continue
        pick = focals[depth][idx[depth]]
        chosen[depth] = pick
        inter[depth + 1] = inter[depth] & pick[0]
        prod[depth + 1] = prod[depth] * pick[1]
        if depth == m - 1:
            yield chosen, inter[m], prod[m]
            idx[depth] += 1
        else:
            depth += 1


def _focals(experts: Sequence[MassFunction]) -> list[list[tuple[int, float]]]:
    return [[(p.bits, v) for p, v in e.items()] for e in experts]


# -- conjunctive -------------------------------------------------------------


def conjunctive(experts: Sequence[MassFunction], *, _allow_empty: bool = False) -> MassFunction:
    """Unnormalized conjunctive rule; conflict stays on the empty set."""
    model = check_experts(experts, allow_empty=_allow_empty)
    keep = ~model.constrained
    # associative, so fold pairwise over canonical atom sets
    acc: dict[int, float] = {model.frame.theta_bits & keep: 1.0}
    for e in experts:
        nxt: dict[int, float] = {}
        for a, va in acc.items():
            for p, vb in e.items():
                c = a & p.bits & keep
                nxt[c] = nxt.get(c, 0.0) + va * vb
        acc = nxt
    out = _Accumulator(model)
    for c, v in sorted(acc.items()):
        out.add(c, v)
    return out.result()


# -- disjunctive conflict handling --------------------------------------------


def dubois_prade(experts: Sequence[MassFunction]) -> MassFunction:
    """Conflicting tuples go to the union of their propositions."""
    model = check_experts(experts)
    keep = ~model.constrained
    out = _Accumulator(model)
    for chosen, inter, prod in _walk(_focals(experts), model.frame.theta_bits):
        if inter & keep:
            out.add(inter, prod)
        else:
            out.add(reduce(lambda u, pick: u | pick[0], chosen, 0), prod)
    return out.result()


def dsmh(experts: Sequence[MassFunction]) -> MassFunction:
    """Hybrid DSm rule.

    A conflicting tuple goes to the union of its propositions; if that union
    is itself empty under the model, to the union of the singletons spanned
    by the propositions; if that is empty too, to Theta.
    """
    model = check_experts(experts)
    frame = model.frame
    keep = ~model.constrained
    spans: dict[int, int] = {}
    out = _Accumulator(model)
    for chosen, inter, prod in _walk(_focals(experts), frame.theta_bits):
        if inter & keep:
            out.add(inter, prod)
            continue
        u = 0
        for bits, _ in chosen:
            u |= bits
        if u & keep:
            out.add(u, prod)
            continue
        span = 0
        for bits, _ in chosen:
            if bits not in spans:
                spans[bits] = union_span(Proposition(frame, bits)).bits
            span |= spans[bits]
        out.add(span if span & keep else frame.theta_bits, prod)
    return out.result()


# -- proportional conflict redistribution ------------------------------------


def _redistribute(out: _Accumulator, weights: dict[int, float], conflict: float) -> None:
    total = math.fsum(weights.values())
    if total > 0.0:
        for bits, w in weights.items():
            out.add(bits, w * conflict / total)
    else:
        share = conflict / len(weights)
        for bits in weights:
            out.add(bits, share)


def _pcr(experts: Sequence[MassFunction], group_weights) -> MassFunction:
    model = check_experts(experts)
    keep = ~model.constrained
    out = _Accumulator(model)
    for chosen, inter, prod in _walk(_focals(experts), model.frame.theta_bits):
        if inter & keep:
            out.add(inter, prod)
        else:
            _redistribute(out, group_weights(chosen), prod)
    return out.result()


def pcr5_general(experts: Sequence[MassFunction]) -> MassFunction:
    """PCR5 for any number of experts.

    Within a conflicting tuple, each distinct proposition is weighted by the
    product of the masses of the experts that chose it.
    """

    def weights(chosen):
        w: dict[int, float] = {}
        for bits, v in chosen:
            w[bits] = w[bits] * v if bits in w else v
        return w

    return _pcr(experts, weights)


def pcr6f(experts: Sequence[MassFunction], f: Weight = IDENTITY) -> MassFunction:
    """PCR6 with each expert's share weighted by f(mass)."""

    def weights(chosen):
        w: dict[int, float] = {}
        for bits, v in chosen:
            w[bits] = w.get(bits, 0.0) + f(v)
        return w

    return _pcr(experts, weights)


def pcr6(experts: Sequence[MassFunction]) -> MassFunction:
    """PCR6: each expert gets back a share proportional to its own mass."""
    return pcr6f(experts, _identity)


def pcr6g(experts: Sequence[MassFunction], g: Weight = IDENTITY) -> MassFunction:
    """PCR6 with identical propositions pooled before weighting by g(pooled mass)."""

    def weights(chosen):
        pooled: dict[int, float] = {}
        for bits, v in chosen:
            pooled[bits] = pooled.get(bits, 0.0) + v
        return {bits: g(v) for bits, v in pooled.items()}

    return _pcr(experts, weights)


def pcr5_two(experts: Sequence[MassFunction]) -> MassFunction:
    """Two-expert PCR5 evaluated pairwise from its closed formula."""
    if len(experts) != 2:
        raise ValueError("pcr5_two needs exactly two experts")
    model = check_experts(experts)
    keep = ~model.constrained
    m1, m2 = experts
    out = _Accumulator(model)
    for p, v in conjunctive(experts).items():
        if p.bits:
            out.add(p.bits, v)
    for x, a in m1.items():
        for y, b in m2.items():
            if x.bits & y.bits & keep:
                continue
            out.add(x.bits, a * a * b / (a + b))
            out.add(y.bits, b * b * a / (a + b))
    return out.result()


def pcr5(experts: Sequence[MassFunction]) -> MassFunction:
    return pcr5_two(experts) if len(experts) == 2 else pcr5_general(experts)


# -- helpers -------------------------------------------------------------------

BINARY_RULES = {
    "conjunctive": lambda pair: conjunctive(pair, _allow_empty=True),
    "dp": dubois_prade,
    "dubois_prade": dubois_prade,
    "pcr5": pcr5_two,
    "pcr5_two": pcr5_two,
    "pcr6": pcr6,
}


def fuse_sequential(experts: Sequence[MassFunction], rule: str = "pcr5") -> MassFunction:
    """Left fold of a two-expert rule: ((e1 + e2) + e3) + ..."""
    try:
        binary = BINARY_RULES[rule]
    except KeyError:
        raise ValueError(f"{rule!r} is not a two-expert rule; choose from {sorted(BINARY_RULES)}") from None
    if len(experts) < 2:
        raise ValueError("at least two experts are required")
    acc = experts[0]
    for e in experts[1:]:
        acc = binary([acc, e])
    return acc


def auto_conflict(m: MassFunction, order: int = 2) -> float:
    """Conflict of the conjunctive combination of ``order`` copies of m."""
    if order < 2:
        raise ValueError("order must be at least 2")
    return conjunctive([m] * order).empty_mass()


RULE_NAMES = ("conjunctive", "dp", "dsmh", "pcr5", "pcr6", "pcr6f", "pcr6g")


def fuse(experts: Sequence[MassFunction], rule: str, weight: Weight | None = None) -> MassFunction:
    """Dispatch by rule name; ``weight`` is required for pcr6f and pcr6g."""
    if rule in ("pcr6f", "pcr6g"):
        if weight is None:
            raise ValueError(f"rule {rule} needs a weighting function")
        return pcr6f(experts, weight) if rule == "pcr6f" else pcr6g(experts, weight)
    table = {
        "conjunctive": conjunctive,
        "dp": dubois_prade,
        "dsmh": dsmh,
        "pcr5": pcr5,
        "pcr6": pcr6,
    }
    if rule not in table:
        raise ValueError(f"unknown rule {rule!r}; choose from {RULE_NAMES}")
    return table[rule](experts)
