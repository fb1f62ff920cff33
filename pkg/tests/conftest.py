import numpy as np
import pytest

from pcrfuse.algebra import Frame, Model, Proposition
from pcrfuse.mass import MassFunction

LETTERS = "ABCDEFG"


def frame_of(n):
    return Frame(LETTERS[:n])


def union_of_singletons(frame, mask):
    bits = 0
    for i in range(frame.n):
        if mask >> i & 1:
            bits |= frame.singleton_bits[i]
    return Proposition(frame, bits)


def random_shafer_mass(rng, model, max_focal=4):
    """Random closed-world mass on unions of singletons."""
    frame = model.frame
    n_sets = (1 << frame.n) - 1
    k = int(rng.integers(1, min(max_focal, n_sets) + 1))
    masks = rng.choice(np.arange(1, n_sets + 1), size=k, replace=False)
    w = rng.dirichlet(np.ones(k))
    return MassFunction(model, {union_of_singletons(frame, int(mk)): float(v) for mk, v in zip(masks, w)})


def random_dsm_proposition(rng, frame):
    """Random union of intersections of singletons (a D^Theta element)."""
    bits = 0
    for _ in range(int(rng.integers(1, 3))):
        term = frame.theta_bits
        members = rng.choice(frame.n, size=int(rng.integers(1, frame.n + 1)), replace=False)
        for i in members:
            term &= frame.singleton_bits[int(i)]
        bits |= term
    return Proposition(frame, bits)


def random_dsm_mass(rng, model, max_focal=3, allow_model_empty=False):
    frame = model.frame
    focal = {}
    while len(focal) < int(rng.integers(1, max_focal + 1)):
        p = random_dsm_proposition(rng, frame)
        if not allow_model_empty and model.canonical_bits(p) == 0:
            continue
        if any(model.canonical_bits(p) == model.canonical_bits(q) for q in focal):
            continue
        focal[p] = 0.0
    w = rng.dirichlet(np.ones(len(focal)))
    return MassFunction(model, dict(zip(focal, map(float, w))))


def random_experts(rng, n_max=4, m_max=4, kind="shafer"):
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(2, m_max + 1))
    frame = frame_of(n)
    model = Model(frame, kind)
    if kind == "shafer":
        return [random_shafer_mass(rng, model) for _ in range(m)]
    return [random_dsm_mass(rng, model) for _ in range(m)]


@pytest.fixture
def rng():
    return np.random.default_rng(20061015)


@pytest.fixture
def abc():
    return frame_of(3)


@pytest.fixture
def ab():
    return frame_of(2)


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE_KEY = pytest.StashKey[dict]()
CRITERIA = {
    1: "golden worked examples",
    2: "Monte Carlo decision-change table",
    3: "two-class stability cases",
    4: "property suites",
    5: "conflict higher when decisions differ",
}


@pytest.fixture
def acceptance(request):
    """Per-criterion record of (check name, passed, detail lines)."""
    return request.config.stash.setdefault(ACCEPTANCE_KEY, {})


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE_KEY, None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title in CRITERIA.items():
        checks = results.get(number)
        if not checks:
            tr.write_line(f"NOT RUN  criterion {number}: {title}")
            continue
        ok = all(passed for _, passed, _ in checks)
        tr.write_line(f"{'PASS' if ok else 'FAIL'}     criterion {number}: {title}")
        for name, passed, detail in checks:
            if not passed or detail:
                tr.write_line(f"           {'ok ' if passed else 'BAD'} {name}")
                for line in detail:
                    tr.write_line(f"               {line}")
