"""Basic belief assignments and the decision functionals on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .algebra import (
    Model,
    Proposition,
    dsm_cardinality,
    parse_proposition,
    singleton_content,
)

TOLERANCE = 1e-9


class MassError(ValueError):
    pass


class NegativeMass(MassError):
    pass


class NotNormalized(MassError):
    def __init__(self, total: float):
        self.total = total
        super().__init__(f"masses sum to {total!r}, expected 1")


class EmptyFocalInClosedWorld(MassError):
    pass


class DuplicateFocal(MassError):
    pass


class TotalConflict(MassError):
    pass


class DegenerateFocal(MassError):
    pass


class MassFunction:
    """Sparse mapping from propositions to masses over a fixed model.

    Keys are kept as raw propositions; zero masses are dropped.  Instances are
    treated as immutable once built.
    """

    __slots__ = ("model", "_focal", "_by_canonical")

    def __init__(self, model: Model, focal: Mapping[Proposition, float] | Iterable[tuple[Proposition, float]]):
        self.model = model
        items = focal.items() if isinstance(focal, Mapping) else focal
        store: dict[Proposition, float] = {}
        for prop, value in items:
            if prop.frame != model.frame:
                raise MassError("focal element over a different frame than the model")
            value = float(value)
            if value == 0.0:
                continue
            if prop in store:
                raise DuplicateFocal(f"duplicate focal element {prop}")
            store[prop] = value
        self._focal = store
        self._by_canonical: dict[int, float] | None = None

    @classmethod
    def from_strings(cls, model: Model, masses: Mapping[str, float]) -> MassFunction:
        """Build from ``{"A": 0.6, "A|B": 0.4}``-style input."""
        return cls(model, [(parse_proposition(k, model.frame), v) for k, v in masses.items()])

    @property
    def frame(self):
        return self.model.frame

    def items(self):
        return self._focal.items()

    def keys(self):
        return self._focal.keys()

    def __len__(self):
        return len(self._focal)

    def __iter__(self):
        return iter(self._focal)

    def __getitem__(self, prop: Proposition) -> float:
        """Mass of ``prop``, matched up to model equivalence."""
        if prop in self._focal:
            return self._focal[prop]
        return self._canonical_index().get(self.model.canonical_bits(prop), 0.0)

    def _canonical_index(self) -> dict[int, float]:
        if self._by_canonical is None:
            idx: dict[int, float] = {}
            for prop, value in self._focal.items():
                c = self.model.canonical_bits(prop)
                idx[c] = idx.get(c, 0.0) + value
            self._by_canonical = idx
        return self._by_canonical

    def total(self) -> float:
        return math.fsum(self._focal.values())

    def empty_mass(self) -> float:
        """Mass on propositions that are empty under the model."""
        return self._canonical_index().get(0, 0.0)

    def as_dict(self) -> dict[str, float]:
        from .algebra import format_proposition

        return {format_proposition(p): v for p, v in self._focal.items()}

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v:.6g}" for k, v in self.as_dict().items())
        return f"MassFunction({{{body}}})"


def validate(m: MassFunction, allow_empty_mass: bool = False, tol: float = TOLERANCE) -> None:
    """Raise a MassError subclass unless m is a proper mass function.

    With ``allow_empty_mass=False`` the literal empty proposition may not carry
    mass (closed world).  Propositions that are only empty *under the model*
    are still accepted: hybrid inputs legitimately use them.
    """
    seen: set[int] = set()
    for prop, value in m.items():
        if value < 0 or math.isnan(value):
            raise NegativeMass(f"negative mass {value!r} on {prop}")
        if not allow_empty_mass and prop.is_raw_empty():
            raise EmptyFocalInClosedWorld("mass on the empty set is not allowed in a closed world")
        c = m.model.canonical_bits(prop)
        if c in seen and c != 0:
            raise DuplicateFocal(f"{prop} duplicates another focal element under the model")
        seen.add(c)
    total = m.total()
    if abs(total - 1.0) > tol:
        raise NotNormalized(total)


# -- classical (2^Theta) functionals -----------------------------------------
# Propositions are read through their singleton content, which is exact for
# unions of singletons.


def _classical_empty_mass(m: MassFunction) -> float:
    return math.fsum(v for p, v in m.items() if singleton_content(p) == 0)


def bel(m: MassFunction, x: Proposition) -> float:
    sx = singleton_content(x)
    return math.fsum(v for p, v in m.items() if (sy := singleton_content(p)) and sy & ~sx == 0)


def pl(m: MassFunction, x: Proposition) -> float:
    sx = singleton_content(x)
    return math.fsum(v for p, v in m.items() if singleton_content(p) & sx)


def betp(m: MassFunction, x: Proposition) -> float:
    """Pignistic probability; |Y| counts the singletons contained in Y."""
    sx = singleton_content(x)
    if sx == 0:
        raise ValueError("betP is undefined on the empty set")
    empty = _classical_empty_mass(m)
    if 1.0 - empty <= 0.0:
        raise TotalConflict("all mass is on the empty set")
    acc = []
    for p, v in m.items():
        sy = singleton_content(p)
        if sy:
            acc.append(bin(sx & sy).count("1") / bin(sy).count("1") * v)
    return math.fsum(acc) / (1.0 - empty)


# -- generalized (D^Theta) functionals ---------------------------------------


def gen_bel(m: MassFunction, x: Proposition) -> float:
    cx = m.model.canonical_bits(x)
    return math.fsum(v for p, v in m.items() if (cy := m.model.canonical_bits(p)) and cy & ~cx == 0)


def gen_pl(m: MassFunction, x: Proposition) -> float:
    cx = m.model.canonical_bits(x)
    return math.fsum(v for p, v in m.items() if m.model.canonical_bits(p) & cx)


def gpt(m: MassFunction, x: Proposition) -> float:
    """Generalized pignistic transform, weighting by DSm cardinality."""
    if x.is_raw_empty():
        raise ValueError("GPT is undefined on the empty set")
    model = m.model
    acc = []
    for p, v in m.items():
        card = dsm_cardinality(p, model)
        if card == 0:
            if p.is_raw_empty():
                continue
            raise DegenerateFocal(f"focal element {p} is empty under the model but carries mass {v}")
        acc.append(dsm_cardinality(x & p, model) / card * v)
    return math.fsum(acc)


def mass_of(m: MassFunction, x: Proposition) -> float:
    return m[x]


FUNCTIONALS: dict[str, Callable[[MassFunction, Proposition], float]] = {
    "mass": mass_of,
    "bel": bel,
    "pl": pl,
    "betP": betp,
    "Bel": gen_bel,
    "Pl": gen_pl,
    "GPT": gpt,
}


@dataclass(frozen=True)
class DecisionReport:
    functional: str
    labels: tuple[str, ...]
    values: tuple[float, ...]
    decision: int
    ties: frozenset[int]

    @property
    def decision_label(self) -> str:
        return self.labels[self.decision]

    @property
    def tie_labels(self) -> list[str]:
        return [self.labels[i] for i in sorted(self.ties)]

    def to_dict(self) -> dict:
        return {
            "functional": self.functional,
            "values": dict(zip(self.labels, self.values)),
            "decision": self.decision_label,
            "ties": self.tie_labels,
        }


def decide(m: MassFunction, functional: str = "betP") -> DecisionReport:
    """Argmax of ``functional`` over the singletons; lowest frame index wins ties."""
    try:
        fn = FUNCTIONALS[functional]
    except KeyError:
        raise ValueError(f"unknown functional {functional!r}; choose from {sorted(FUNCTIONALS)}") from None
    values = tuple(fn(m, s) for s in m.frame.singletons())
    best = max(values)
    ties = frozenset(i for i, v in enumerate(values) if v == best)
    return DecisionReport(functional, m.frame.names, values, min(ties), ties)
