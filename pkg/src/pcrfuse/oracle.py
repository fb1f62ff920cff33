"""Reference fusion by literal enumeration, used to cross-check rules.py.

Written against frozensets of atom indices and itertools.product, following
the textbook loop structure line by line.  Nothing here is shared with the
bitset engine except the input/output types.
"""

from __future__ import annotations

import itertools

from .algebra import Model, Proposition
from .mass import MassFunction

ORACLE_LIMIT = 10**6


def _atoms(p: Proposition) -> frozenset[int]:
    return frozenset(k for k in range(1, 1 << p.frame.n) if p.bits >> k & 1)


def _theta(model: Model) -> frozenset[int]:
    return frozenset(range(1, 1 << model.frame.n))


def _constrained(model: Model) -> frozenset[int]:
    return frozenset(k for k in range(1, 1 << model.frame.n) if model.constrained >> k & 1)


def _is_empty(s: frozenset[int], constrained: frozenset[int]) -> bool:
    return len(s - constrained) == 0


def _normal(s: frozenset[int], model: Model) -> frozenset[int]:
    live = s - _constrained(model)
    return frozenset(k for k in _theta(model) if any(a & k == a for a in live))


def _span(s: frozenset[int], model: Model) -> frozenset[int]:
    # labels written in the minimal union-of-intersections expression of s
    minimal = [k for k in s if not any(j != k and j & k == j for j in s)]
    touched = set()
    for k in minimal:
        for i in range(model.frame.n):
            if k >> i & 1:
                touched.add(i)
    return frozenset(k for k in _theta(model) if any(k >> i & 1 for i in touched))


def brute_force_oracle(experts, rule: str, weight=None) -> MassFunction:
    """Recompute ``rule`` over ``experts`` by full tuple enumeration.

    ``rule`` is one of conjunctive, dp, dsmh, pcr5, pcr5_two, pcr6, pcr6f,
    pcr6g; ``weight`` is the f/g function for the last two.
    """
    model = experts[0].model
    constrained = _constrained(model)
    theta = _theta(model)
    n = len(experts)
    cl = []
    ex = []
    for i in range(n):
        cl.append([])
        ex.append({})
        for c, v in experts[i].items():
            a = _atoms(c)
            cl[i].append(a)
            ex[i][a] = ex[i].get(a, 0.0) + v
    total = 1
    for i in range(n):
        total *= len(cl[i])
    if total > ORACLE_LIMIT:
        raise ValueError("oracle input too large")

    ep: dict[frozenset[int], float] = {}

    def add(key, value):
        key = _normal(key, model)
        ep[key] = ep.get(key, 0.0) + value

    for ind in itertools.product(*[range(len(cl[i])) for i in range(n)]):
        s = theta
        for i in range(n):
            s = s & cl[i][ind[i]]
        lconf = 1.0
        for i in range(n):
            lconf = lconf * ex[i][cl[i][ind[i]]]
        if not _is_empty(s, constrained):
            add(s, lconf)
            continue

        if rule == "conjunctive":
            add(frozenset(), lconf)
        elif rule in ("dp", "dsmh"):
            u = frozenset()
            for i in range(n):
                u = u | cl[i][ind[i]]
            if rule == "dsmh" and _is_empty(u, constrained):
                su = frozenset()
                for i in range(n):
                    su = su | _span(cl[i][ind[i]], model)
                u = su if not _is_empty(su, constrained) else theta
            add(u, lconf)
        elif rule in ("pcr5", "pcr5_two"):
            el = {}
            for i in range(n):
                c = cl[i][ind[i]]
                if c in el:
                    el[c] = el[c] * ex[i][c]
                else:
                    el[c] = ex[i][c]
            ssum = 0.0
            for c in el:
                ssum = ssum + el[c]
            for c in el:
                add(c, el[c] * lconf / ssum)
        elif rule in ("pcr6", "pcr6f"):
            f = weight if rule == "pcr6f" else (lambda x: x)
            ssum = 0.0
            for i in range(n):
                ssum = ssum + f(ex[i][cl[i][ind[i]]])
            if ssum == 0.0:
                _uniform(add, [cl[i][ind[i]] for i in range(n)], lconf)
                continue
            for i in range(n):
                c = cl[i][ind[i]]
                add(c, f(ex[i][c]) * lconf / ssum)
        elif rule == "pcr6g":
            el = {}
            for i in range(n):
                c = cl[i][ind[i]]
                el[c] = el.get(c, 0.0) + ex[i][c]
            ssum = 0.0
            for c in el:
                ssum = ssum + weight(el[c])
            if ssum == 0.0:
                _uniform(add, list(el), lconf)
                continue
            for c in el:
                add(c, weight(el[c]) * lconf / ssum)
        else:
            raise ValueError(f"oracle does not know rule {rule!r}")

    frame = model.frame
    out = {}
    for key, v in ep.items():
        bits = 0
        for k in key:
            bits |= 1 << k
        out[Proposition(frame, bits)] = v
    return MassFunction(model, out)


def _uniform(add, props, lconf):
    distinct = list(dict.fromkeys(props))
    for c in distinct:
        add(c, lconf / len(distinct))


def max_abs_diff(m1: MassFunction, m2: MassFunction) -> float:
    """Largest per-proposition mass difference, matched up to model equivalence."""
    model = m1.model
    a: dict[int, float] = {}
    b: dict[int, float] = {}
    for p, v in m1.items():
        c = model.canonical_bits(p)
        a[c] = a.get(c, 0.0) + v
    for p, v in m2.items():
        c = model.canonical_bits(p)
        b[c] = b.get(c, 0.0) + v
    return max((abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b)), default=0.0)
