"""Monte Carlo comparison of combination rules in decision space.

Experts put mass on singletons and on Theta only, drawn uniformly from
{x in [0,1]^n : sum(x) <= 1}.  For that input family every rule has a simple
tuple structure, so fusion is vectorized over samples here; tests check the
vectorized path against the general engine in rules.py.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import Frame, Model
from .mass import MassFunction
from .rules import PowerWeight

CHUNK_SIZE = 50_000
FAST_RULES = ("conjunctive", "dp", "dsmh", "pcr5", "pcr6", "pcr6f", "pcr6g")
FAST_FUNCTIONALS = ("mass", "bel", "pl", "betP")
# short labels used in CSV headers and progress lines
DISPLAY_NAMES = {"conjunctive": "DST", "dp": "DP", "dsmh": "DSmH", "pcr5": "PCR5", "pcr6": "PCR6",
                 "pcr6f": "PCR6f", "pcr6g": "PCR6g"}


class StabilityViolation(AssertionError):
    def __init__(self, case: str, params: dict):
        self.case = case
        self.params = params
        super().__init__(f"decision changed between conjunctive and PCR for case {case}: {params}")


@dataclass(frozen=True)
class ExperimentConfig:
    num_classes: int
    num_experts: int
    num_samples: int
    seed: int = 0
    rules: tuple[str, ...] = ("pcr6", "dp", "conjunctive")
    functional: str = "betP"
    alpha: float = 1.0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.num_experts < 2:
            raise ValueError("num_experts must be >= 2")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if (self.num_classes + 1) ** self.num_experts > 10**6:
            raise ValueError("too many focal tuples for the vectorized path")
        unknown = [r for r in self.rules if r not in FAST_RULES]
        if unknown:
            raise ValueError(f"unsupported rules {unknown}; choose from {FAST_RULES}")
        if len(set(self.rules)) != len(self.rules) or len(self.rules) < 2:
            raise ValueError("need at least two distinct rules")
        if self.functional not in FAST_FUNCTIONALS:
            raise ValueError(f"functional must be one of {FAST_FUNCTIONALS}")
        object.__setattr__(self, "rules", tuple(self.rules))

    @property
    def pairs(self) -> list[tuple[str, str]]:
        return list(itertools.combinations(self.rules, 2))


# -- sampling ------------------------------------------------------------------


def sample_expert(n: int, rng: np.random.Generator) -> np.ndarray:
    """One expert by rejection: n uniforms, kept once their sum is <= 1.

    Returns the n class masses; Theta receives ``1 - sum``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    while True:
        x = rng.random(n)
        if x.sum() <= 1.0:
            return x


def acceptance_rate(n: int, proposals: int, rng: np.random.Generator) -> float:
    """Fraction of uniform proposals in [0,1]^n that pass the simplex filter."""
    accepted = 0
    batch = 1_000_000
    left = proposals
    while left:
        k = min(batch, left)
        accepted += int((rng.random((k, n)).sum(axis=1) <= 1.0).sum())
        left -= k
    return accepted / proposals


def sample_experts(n: int, m: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` sets of ``m`` experts; shape (m, size, n+1), Theta last.

    Normalized exponentials are uniform on the (n+1)-simplex, which is the
    same law as the rejection filter above without its n! rejection cost.
    """
    e = rng.standard_exponential((m, size, n + 1))
    return e / e.sum(axis=-1, keepdims=True)


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Independent counter-based stream for chunk ``chunk`` of a run."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


# -- vectorized fusion ---------------------------------------------------------


@dataclass
class SampleScores:
    """Per-sample singleton scores for each rule plus the conjunctive conflict."""

    scores: dict[str, np.ndarray]
    conflict: np.ndarray

    def decisions(self) -> dict[str, np.ndarray]:
        return {r: s.argmax(axis=1) for r, s in self.scores.items()}

    def ties(self) -> dict[str, np.ndarray]:
        out = {}
        for r, s in self.scores.items():
            top = s.max(axis=1, keepdims=True)
            out[r] = (s == top).sum(axis=1) > 1
        return out


def _group_weights(rule, picks, masses, weight):
    """Per distinct pick, its proportionality weight within a conflicting tuple."""
    groups: dict[int, list[int]] = {}
    for j, k in enumerate(picks):
        groups.setdefault(k, []).append(j)
    out = {}
    for k, js in groups.items():
        if rule == "pcr5":
            w = masses[js[0]]
            for j in js[1:]:
                w = w * masses[j]
        elif rule == "pcr6":
            w = masses[js[0]]
            for j in js[1:]:
                w = w + masses[j]
        elif rule == "pcr6f":
            w = weight(masses[js[0]])
            for j in js[1:]:
                w = w + weight(masses[j])
        else:  # pcr6g
            pooled = masses[js[0]]
            for j in js[1:]:
                pooled = pooled + masses[j]
            w = weight(pooled)
        out[k] = w
    return out


def evaluate_samples(x: np.ndarray, rules, functional: str = "betP", alpha: float = 1.0) -> SampleScores:
    """Fuse every sample of ``x`` (shape (m, size, n+1)) under each rule.

    Returns the chosen functional on each singleton, per rule.  Rules are
    evaluated under the Shafer model, where DSmH coincides with Dubois-Prade.
    """
    m, size, n1 = x.shape
    n = n1 - 1
    theta = n
    weight = PowerWeight(alpha)
    pcr_rules = [r for r in rules if r.startswith("pcr")]
    disj_rules = [r for r in rules if r in ("dp", "dsmh")]

    single = np.zeros((size, n))       # conjunctive part on singletons, shared by all rules
    theta_c = np.zeros(size)           # conjunctive part on Theta
    conflict = np.zeros(size)
    pcr_single = {r: np.zeros((size, n)) for r in pcr_rules}
    pcr_theta = {r: np.zeros(size) for r in pcr_rules}
    disj_theta = np.zeros(size)        # conflicting tuples containing Theta
    disj_union = np.zeros((size, n))   # union shares, as the functional sees them

    for picks in itertools.product(range(n1), repeat=m):
        masses = [x[j, :, k] for j, k in enumerate(picks)]
        prod = masses[0]
        for v in masses[1:]:
            prod = prod * v
        classes = {k for k in picks if k != theta}
        if not classes:
            theta_c += prod
            continue
        if len(classes) == 1:
            single[:, next(iter(classes))] += prod
            continue
        conflict += prod
        for r in pcr_rules:
            w = _group_weights(r, picks, masses, weight)
            total = sum(w.values())
            safe = np.where(total > 0, total, 1.0)
            for k, wk in w.items():
                share = np.where(total > 0, wk * prod / safe, prod / len(w))
                if k == theta:
                    pcr_theta[r] += share
                else:
                    pcr_single[r][:, k] += share
        if disj_rules:
            if theta in picks:
                disj_theta += prod
            elif functional == "betP":
                for k in classes:
                    disj_union[:, k] += prod / len(classes)
            elif functional == "pl":
                for k in classes:
                    disj_union[:, k] += prod

    def score(s, t, u=None, empty=None):
        if functional in ("mass", "bel"):
            return s
        if functional == "pl":
            out = s + t[:, None]
            return out if u is None else out + u
        out = s + (t / n)[:, None]
        if u is not None:
            out = out + u
        if empty is not None:
            out = out / (1.0 - empty)[:, None]
        return out

    scores = {}
    for r in rules:
        if r == "conjunctive":
            scores[r] = score(single, theta_c, empty=conflict)
        elif r in ("dp", "dsmh"):
            scores[r] = score(single, theta_c + disj_theta, disj_union)
        else:
            scores[r] = score(single + pcr_single[r], theta_c + pcr_theta[r])
    return SampleScores(scores, conflict)


# -- experiment ------------------------------------------------------------------


@dataclass
class DecisionChangeTable:
    num_classes: int
    num_experts: int
    num_samples: int
    pairs: list[tuple[str, str]]
    disagreements: dict[tuple[str, str], int]
    ties: dict[tuple[str, str], int]

    def rate(self, p: str, q: str) -> float:
        key = (p, q) if (p, q) in self.disagreements else (q, p)
        return self.disagreements[key] / self.num_samples

    def triangle_violations(self) -> list[tuple[str, str, str]]:
        rules = sorted({r for pair in self.pairs for r in pair})
        bad = []
        for p, q, r in itertools.permutations(rules, 3):
            if self.rate(p, q) > self.rate(p, r) + self.rate(r, q) + 1e-15:
                bad.append((p, q, r))
        return bad


@dataclass
class ConflictHistogram:
    edges: np.ndarray
    overall: np.ndarray
    conditional: dict[tuple[str, str], np.ndarray]
    conflict_sum: float = 0.0
    conditional_sum: dict[tuple[str, str], float] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return int(self.overall.sum())

    def mean(self) -> float:
        return self.conflict_sum / self.total

    def conditional_mean(self, pair: tuple[str, str]) -> float:
        count = int(self.conditional[pair].sum())
        return self.conditional_sum[pair] / count if count else math.nan

    def density(self, counts: np.ndarray) -> np.ndarray:
        widths = np.diff(self.edges)
        total = counts.sum()
        return counts / (total * widths) if total else np.zeros_like(widths)


def histogram_conflicts(values: np.ndarray, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Counts on ``bins`` equal bins over [0, 1]; 1.0 lands in the top bin."""
    counts, edges = np.histogram(np.clip(values, 0.0, 1.0), bins=bins, range=(0.0, 1.0))
    return counts, edges


@dataclass
class _ChunkTally:
    disagreements: dict
    ties: dict
    overall: np.ndarray
    conditional: dict
    conflict_sum: float
    conditional_sum: dict


def _run_chunk(cfg: ExperimentConfig, chunk: int, size: int, bins: int) -> _ChunkTally:
    rng = chunk_rng(cfg.seed, chunk)
    x = sample_experts(cfg.num_classes, cfg.num_experts, size, rng)
    s = evaluate_samples(x, cfg.rules, cfg.functional, cfg.alpha)
    dec = s.decisions()
    tie = s.ties()
    overall, _ = histogram_conflicts(s.conflict, bins)
    t = _ChunkTally({}, {}, overall, {}, math.fsum(s.conflict), {})
    for p, q in cfg.pairs:
        diff = dec[p] != dec[q]
        t.disagreements[p, q] = int(diff.sum())
        t.ties[p, q] = int((tie[p] | tie[q]).sum())
        t.conditional[p, q], _ = histogram_conflicts(s.conflict[diff], bins)
        t.conditional_sum[p, q] = math.fsum(s.conflict[diff])
    return t


def _chunks(n: int) -> list[tuple[int, int]]:
    return [(i, min(CHUNK_SIZE, n - i * CHUNK_SIZE)) for i in range(math.ceil(n / CHUNK_SIZE))]


def run_experiment(cfg: ExperimentConfig, bins: int = 100, workers: int = 1):
    """Decision-change table and conflict histogram in a single pass.

    Sample chunk ``i`` always uses stream ``(seed, i)`` and chunk tallies are
    integer counts merged in chunk order, so output does not depend on
    ``workers``.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    chunks = _chunks(cfg.num_samples)
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(_run_chunk, *zip(*[(cfg, i, k, bins) for i, k in chunks])))
    else:
        tallies = [_run_chunk(cfg, i, k, bins) for i, k in chunks]

    pairs = cfg.pairs
    table = DecisionChangeTable(
        cfg.num_classes, cfg.num_experts, cfg.num_samples, pairs,
        {p: sum(t.disagreements[p] for t in tallies) for p in pairs},
        {p: sum(t.ties[p] for t in tallies) for p in pairs},
    )
    edges = np.linspace(0.0, 1.0, bins + 1)
    hist = ConflictHistogram(
        edges,
        sum(t.overall for t in tallies),
        {p: sum(t.conditional[p] for t in tallies) for p in pairs},
        math.fsum(t.conflict_sum for t in tallies),
        {p: math.fsum(t.conditional_sum[p] for t in tallies) for p in pairs},
    )
    return table, hist


def decision_change_rates(cfg: ExperimentConfig, workers: int = 1) -> DecisionChangeTable:
    return run_experiment(cfg, workers=workers)[0]


def conflict_density(cfg: ExperimentConfig, bins: int = 100, workers: int = 1) -> ConflictHistogram:
    return run_experiment(cfg, bins=bins, workers=workers)[1]


# -- two experts, two classes ------------------------------------------------------


@dataclass(frozen=True)
class ClosedFormParams:
    a1: float
    b1: float
    a2: float
    b2: float

    def __post_init__(self):
        for name in ("a1", "b1", "a2", "b2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.a1 + self.b1 > 1.0 + 1e-12 or self.a2 + self.b2 > 1.0 + 1e-12:
            raise ValueError("each expert's masses on A and B must sum to at most 1")


def _frac(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def closed_form_arrays(a1, b1, a2, b2) -> dict[str, np.ndarray]:
    """Conjunctive and PCR masses for two experts over {A, B}, vectorized."""
    a1, b1, a2, b2 = (np.asarray(v, dtype=float) for v in (a1, b1, a2, b2))
    empty = a1 * b2 + a2 * b1
    ca = a1 + a2 - a1 * a2 - empty
    cb = b1 + b2 - b1 * b2 - empty
    ct = (1 - a1 - b1) * (1 - a2 - b2)
    pa = ca + _frac(a1 * a1 * b2, a1 + b2) + _frac(a2 * a2 * b1, a2 + b1)
    pb = cb + _frac(a1 * b2 * b2, a1 + b2) + _frac(a2 * b1 * b1, a2 + b1)
    return {"c_empty": empty, "c_A": ca, "c_B": cb, "c_theta": ct, "pcr_A": pa, "pcr_B": pb, "pcr_theta": ct}


TWO_CLASS_FRAME = Frame(["A", "B"])
TWO_CLASS_MODEL = Model.shafer(TWO_CLASS_FRAME)


def closed_form_two(params: ClosedFormParams) -> tuple[MassFunction, MassFunction]:
    """(conjunctive, PCR) fusion of the two-expert, two-class table."""
    v = {k: float(a) for k, a in closed_form_arrays(params.a1, params.b1, params.a2, params.b2).items()}
    f = TWO_CLASS_FRAME
    a, b, t = f.singleton("A"), f.singleton("B"), f.theta
    conj = MassFunction(TWO_CLASS_MODEL, {f.empty: v["c_empty"], a: v["c_A"], b: v["c_B"], t: v["c_theta"]})
    pcr = MassFunction(TWO_CLASS_MODEL, {a: v["pcr_A"], b: v["pcr_B"], t: v["pcr_theta"]})
    return conj, pcr


def two_expert_input(params: ClosedFormParams) -> list[MassFunction]:
    f = TWO_CLASS_FRAME
    a, b, t = f.singleton("A"), f.singleton("B"), f.theta
    return [
        MassFunction(TWO_CLASS_MODEL, {a: params.a1, b: params.b1, t: 1 - params.a1 - params.b1}),
        MassFunction(TWO_CLASS_MODEL, {a: params.a2, b: params.b2, t: 1 - params.a2 - params.b2}),
    ]


STABILITY_CASES = ("a1_eq_b1", "a1_eq_b2", "a2_eq_1_minus_a1")


@dataclass(frozen=True)
class StabilityReport:
    case: str
    trials: int
    violations: int


def _draw_case(case: str, size: int, rng: np.random.Generator):
    """Parameters (a1, b1, a2, b2), uniform on the case's feasible region."""
    out = []
    have = 0
    while have < size:
        x, y, z = rng.random((3, 2 * size))
        if case == "a1_eq_b1":
            # expert 1 = (x, x), x <= 1/2; expert 2 = (y, z)
            x = x / 2
            ok = y + z <= 1
            p = (x, x, y, z)
        elif case == "a1_eq_b2":
            # expert 1 = (x, y), expert 2 = (z, x)
            ok = (x + y <= 1) & (x + z <= 1)
            p = (x, y, z, x)
        elif case == "a2_eq_1_minus_a1":
            # expert 1 = (x, y), expert 2 = (1 - x, z); feasibility forces z <= x
            ok = (x + y <= 1) & (z <= x)
            p = (x, y, 1 - x, z)
        else:
            raise ValueError(f"unknown case {case!r}; choose from {STABILITY_CASES}")
        out.append(np.stack([v[ok] for v in p]))
        have += int(ok.sum())
    return np.concatenate(out, axis=1)[:, :size]


def _tie_set(a, b):
    # 1 = A wins, 2 = B wins, 3 = tie
    return np.where(a > b, 1, np.where(a < b, 2, 3))


def stability_case_check(case: str, trials: int, rng: np.random.Generator) -> StabilityReport:
    """Sample the case's free parameters and compare conjunctive vs PCR argmax."""
    a1, b1, a2, b2 = _draw_case(case, trials, rng)
    v = closed_form_arrays(a1, b1, a2, b2)
    c = _tie_set(v["c_A"], v["c_B"])
    p = _tie_set(v["pcr_A"], v["pcr_B"])
    bad = c != p
    if case == "a2_eq_1_minus_a1":
        bad |= (c != 1) | (p != 1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise StabilityViolation(case, {"a1": a1[i], "b1": b1[i], "a2": a2[i], "b2": b2[i]})
    return StabilityReport(case, trials, 0)
