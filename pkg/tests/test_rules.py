import math

import numpy as np
import pytest

from conftest import frame_of, random_dsm_mass, random_experts, random_shafer_mass
from pcrfuse.algebra import Frame, Model, Proposition, upward_closure
from pcrfuse.mass import MassFunction, decide
from pcrfuse.oracle import brute_force_oracle, max_abs_diff
from pcrfuse.rules import (
    CapacityError,
    PowerWeight,
    auto_conflict,
    conjunctive,
    dsmh,
    dubois_prade,
    fuse,
    fuse_sequential,
    pcr5,
    pcr5_general,
    pcr5_two,
    pcr6,
    pcr6f,
    pcr6g,
)

SQUARE = PowerWeight(2.0)


def mf(model, **kw):
    return MassFunction.from_strings(model, {k.replace("_", "|"): v for k, v in kw.items()})


def values(m):
    return m.as_dict()


def assert_masses(m, expected, tol=1e-12):
    got = values(m)
    keys = set(got) | set(expected)
    for k in keys:
        assert abs(got.get(k, 0.0) - expected.get(k, 0.0)) <= tol, (k, got, expected)


@pytest.fixture
def ab2():
    return Model.shafer(frame_of(2))


@pytest.fixture
def abc3():
    return Model.shafer(frame_of(3))


@pytest.fixture
def pair(ab2):
    return [mf(ab2, A=0.6, THETA=0.4), mf(ab2, B=0.5, THETA=0.5)]


@pytest.fixture
def abb(ab2):
    return [mf(ab2, A=1.0), mf(ab2, B=1.0), mf(ab2, B=1.0)]


# -- conjunctive ----------------------------------------------------------------


def test_auto_conflict_table(abc3):
    m1 = mf(abc3, A=0.6, B=0.3, C=0.1)
    assert_masses(conjunctive([m1, m1]), {"EMPTY": 0.54, "A": 0.36, "B": 0.09, "C": 0.01})
    assert auto_conflict(m1, 2) == pytest.approx(0.54, abs=1e-12)


def test_auto_conflict_other(ab2, abc3):
    assert auto_conflict(mf(abc3, THETA=1.0), 5) == 0.0
    # 2 * 0.5 * 0.5 by enumeration
    assert auto_conflict(mf(ab2, A=0.5, B=0.5), 2) == pytest.approx(0.5, abs=1e-15)


def test_conjunctive_two_class_closed_form(ab2):
    e1 = mf(ab2, A=0.5, B=0.2, THETA=0.3)
    e2 = mf(ab2, A=0.3, B=0.4, THETA=0.3)
    # m(empty)=a1 b2 + a2 b1, m(A)=a1+a2-a1 a2-m(empty), ...
    assert_masses(conjunctive([e1, e2]), {"EMPTY": 0.26, "A": 0.39, "B": 0.26, "A|B": 0.09})


def test_conjunctive_neutral_element(rng):
    for _ in range(200):
        experts = random_experts(rng, m_max=3)
        vac = MassFunction(experts[0].model, {experts[0].frame.theta: 1.0})
        assert max_abs_diff(conjunctive([experts[0], vac]), experts[0]) <= 1e-12


# -- Dubois-Prade and DSmH --------------------------------------------------------


def test_dubois_prade_single_conflict(pair):
    assert_masses(dubois_prade(pair), {"A": 0.3, "B": 0.2, "A|B": 0.3 + 0.2})


def test_dubois_prade_free_model_is_conjunctive(rng):
    for _ in range(200):
        experts = random_experts(rng, n_max=3, m_max=3, kind="free")
        assert max_abs_diff(dubois_prade(experts), conjunctive(experts)) <= 1e-12


def test_dsmh_equals_dp_on_shafer(rng):
    for _ in range(300):
        experts = random_experts(rng)
        assert max_abs_diff(dsmh(experts), dubois_prade(experts)) <= 1e-12


def test_dsmh_free_model_is_conjunctive(rng):
    for _ in range(200):
        experts = random_experts(rng, n_max=3, m_max=3, kind="free")
        assert max_abs_diff(dsmh(experts), conjunctive(experts)) <= 1e-12


def test_dsmh_union_span_term():
    frame = frame_of(2)
    a, b = frame.singletons()
    model = Model.hybrid(frame, [a & b])
    e1 = MassFunction(model, {a & b: 0.5, a: 0.5})
    e2 = MassFunction(model, {a & b: 0.4, b: 0.6})
    # (AB,AB) -> u = A|B : 0.2 ; (AB,B) -> B : 0.3 ; (A,AB) -> A : 0.2 ; (A,B) -> A|B : 0.3
    assert_masses(dsmh([e1, e2]), {"A|B": 0.5, "B": 0.3, "A": 0.2})


def test_dsmh_theta_term():
    frame = frame_of(2)
    a, b = frame.singletons()
    model = Model.hybrid(frame, [a])
    e = MassFunction(model, {a: 1.0})
    # A, A&A and u(A)=A are all empty under the model, so the mass lands on Theta
    out = dsmh([e, e])
    assert out[frame.theta] == 1.0


# -- PCR family: worked examples ---------------------------------------------------


def test_pcr5_two_hand_example(pair):
    assert_masses(pcr5_two(pair), {"A": 0.3 + 0.3 * 0.6 / 1.1, "B": 0.2 + 0.3 * 0.5 / 1.1, "A|B": 0.2})
    assert decide(pcr5_two(pair), "mass").decision_label == "A"


def test_pcr5_total_conflict_pair(ab2):
    assert_masses(pcr5_two([mf(ab2, A=1.0), mf(ab2, B=1.0)]), {"A": 0.5, "B": 0.5})


def test_pcr5_matches_two_class_closed_forms(ab2, rng):
    for _ in range(500):
        x = rng.uniform(0, 0.5)
        y, z = rng.dirichlet(np.ones(3))[:2]
        out = pcr5_two([mf(ab2, A=x, B=x, THETA=1 - 2 * x), mf(ab2, A=y, B=z, THETA=1 - y - z)])
        # conflicts: (A, B) with weight x z and (B, A) with weight x y
        pa = x * y + x * (1 - y - z) + (1 - 2 * x) * y + x * x * z / (x + z) + x * y * y / (x + y)
        pb = x * z + x * (1 - y - z) + (1 - 2 * x) * z + x * z * z / (x + z) + x * x * y / (x + y)
        assert out[out.frame.singleton("A")] == pytest.approx(pa, abs=1e-12)
        assert out[out.frame.singleton("B")] == pytest.approx(pb, abs=1e-12)


def test_sequential_pcr5_by_hand(abb, ab2):
    # step 1: {A:.5, B:.5}; step 2: conflict .5*1 split .5 : 1, plus .5 on B
    assert_masses(fuse_sequential(abb, "pcr5"), {"A": 0.25 / 1.5, "B": 0.5 + 0.5 / 1.5})
    assert_masses(fuse_sequential(abb[::-1], "pcr5"), {"A": 0.5, "B": 0.5})


def test_sequential_conjunctive_equals_joint(rng):
    for _ in range(200):
        experts = random_experts(rng)
        assert max_abs_diff(fuse_sequential(experts, "conjunctive"), conjunctive(experts)) <= 1e-12


def test_pcr6_joint_abb(abb):
    assert_masses(pcr6(abb), {"A": 1 / 3, "B": 2 / 3})


def test_pcr5_general_three_experts_by_hand(ab2):
    experts = [mf(ab2, A=0.5, THETA=0.5), mf(ab2, B=0.5, THETA=0.5), mf(ab2, B=0.5, THETA=0.5)]
    out = pcr5_general(experts)
    conj = conjunctive(experts)
    a, b = out.frame.singletons()
    theta = out.frame.theta
    # (A,B,B): 0.125 split 0.5 : 0.25 -> 0.0833 and 0.0416
    # (A,B,THETA) and (A,THETA,B): 0.125 each, split evenly over three sets
    assert out[a] - conj[a] == pytest.approx(0.125 * 2 / 3 + 2 * 0.125 / 3, abs=1e-15)
    assert out[b] - conj[b] == pytest.approx(0.125 / 3 + 2 * 0.125 / 3, abs=1e-15)
    assert out[theta] - conj[theta] == pytest.approx(2 * 0.125 / 3, abs=1e-15)
    assert round(0.125 * 2 / 3, 4) == 0.0833
    assert math.floor(0.125 / 3 * 1e4) / 1e4 == 0.0416


def test_pcr6_partial_ignorance(abc3):
    experts = [mf(abc3, A_B=0.7, THETA=0.3), mf(abc3, A_C=0.6, THETA=0.4), mf(abc3, B_C=0.5, THETA=0.5)]
    expected = {
        "A": 0.21, "B": 0.14, "C": 0.09,
        "A|B": 0.14 + 0.21 * 7 / 18, "B|C": 0.06 + 0.21 * 5 / 18, "A|C": 0.09 + 0.21 * 6 / 18,
        "A|B|C": 0.06,
    }
    assert_masses(pcr6(experts), expected)


def test_pcr6f_identity_equals_pcr6(rng):
    for _ in range(300):
        experts = random_experts(rng)
        a, b = pcr6f(experts, PowerWeight(1.0)), pcr6(experts)
        assert values(a) == values(b)


def test_pcr6f_square(pair, abb):
    assert_masses(pcr6f(pair, SQUARE), {"A": 0.3 + 0.3 * 36 / 61, "B": 0.2 + 0.3 * 25 / 61, "A|B": 0.2})
    assert_masses(pcr6f(abb, SQUARE), {"A": 1 / 3, "B": 2 / 3})


def test_pcr6g(abb, rng):
    assert_masses(pcr6g(abb, PowerWeight(1.0)), {"A": 1 / 3, "B": 2 / 3})
    assert_masses(pcr6g(abb, SQUARE), {"A": 1 / 5, "B": 4 / 5})
    for _ in range(200):
        experts = random_experts(rng, m_max=2)
        assert max_abs_diff(pcr6g(experts, PowerWeight(1.0)), pcr5_two(experts)) <= 1e-12


def test_zero_weight_tuple_is_split_uniformly(pair):
    out = pcr6f(pair, lambda x: 0.0)
    assert_masses(out, {"A": 0.3 + 0.15, "B": 0.2 + 0.15, "A|B": 0.2})


def test_five_experts_seven_classes():
    model = Model.shafer(frame_of(7))
    experts = [MassFunction.from_strings(model, {"B": 0.57, "C": 0.43})]
    experts += [MassFunction.from_strings(model, {"A": 0.58, d: 0.42}) for d in "DEFG"]
    r5, r6 = pcr5(experts), pcr6(experts)
    for m, row in ((r5, [0.1915, 0.2376, 0.1542] + [0.1042] * 4), (r6, [0.5138, 0.1244, 0.0748] + [0.0718] * 4)):
        for s, v in zip(model.frame.singletons(), row):
            assert abs(m[s] - v) <= 5e-4
    assert decide(r5, "mass").decision_label == "B"
    assert decide(r6, "mass").decision_label == "A"


# -- guards -------------------------------------------------------------------------


def test_capacity_guard():
    frame = Frame([f"c{i}" for i in range(10)])
    model = Model.shafer(frame)
    big = MassFunction(model, {s: 0.1 for s in frame.singletons()})
    with pytest.raises(CapacityError):
        pcr6([big] * 7)  # 10**7 tuples
    with pytest.raises(CapacityError):
        conjunctive([MassFunction(model, {frame.theta: 1.0})] * 9)


def test_rejects_bad_inputs(ab2):
    with pytest.raises(ValueError):
        pcr6([mf(ab2, A=1.0)])
    with pytest.raises(ValueError):
        pcr6([mf(ab2, A=1.0), mf(Model.free(frame_of(2)), A=1.0)])
    with pytest.raises(ValueError):
        pcr6([mf(ab2, A=1.0), MassFunction.from_strings(ab2, {"EMPTY": 0.5, "A": 0.5})])
    with pytest.raises(ValueError):
        fuse([mf(ab2, A=1.0)] * 2, "pcr6g")
    with pytest.raises(ValueError):
        PowerWeight(-1)


# -- properties ------------------------------------------------------------------------

JOINT = {
    "conjunctive": conjunctive,
    "dp": dubois_prade,
    "dsmh": dsmh,
    "pcr5": pcr5_general,
    "pcr6": pcr6,
    "pcr6f": lambda e: pcr6f(e, SQUARE),
    "pcr6g": lambda e: pcr6g(e, SQUARE),
}
PCR = ("pcr5", "pcr6", "pcr6f", "pcr6g")


def _instances(rng, count, n_max=5, m_max=4):
    out = []
    for i in range(count):
        n = int(rng.integers(2, n_max + 1))
        m = int(rng.integers(2, m_max + 1))
        model = Model.shafer(frame_of(n))
        out.append([random_shafer_mass(rng, model, max_focal=3) for _ in range(m)])
    return out


def test_conservation_and_conflict_redistribution(rng):
    for experts in _instances(rng, 10_000):
        conj = conjunctive(experts)
        assert abs(conj.total() - 1.0) <= 1e-9
        for name in ("dp", "dsmh", *PCR):
            out = JOINT[name](experts)
            assert abs(out.total() - 1.0) <= 1e-9, name
            assert out.empty_mass() == 0.0
        for name in PCR:
            out = JOINT[name](experts)
            extra = math.fsum(v - conj[p] for p, v in out.items())
            assert abs(extra - conj.empty_mass()) <= 1e-9


def test_two_expert_coincidence(rng):
    for experts in _instances(rng, 2000, m_max=2):
        a, b, c = pcr5_two(experts), pcr5_general(experts), pcr6(experts)
        assert max_abs_diff(a, b) <= 1e-12
        assert max_abs_diff(a, c) <= 1e-12


def test_vacuous_expert_is_neutral(rng):
    for experts in _instances(rng, 1000, m_max=3):
        m = experts[0]
        vac = MassFunction(m.model, {m.frame.theta: 1.0})
        for name, rule in JOINT.items():
            assert max_abs_diff(rule([m, vac]), m) <= 1e-12, name
            assert max_abs_diff(rule([vac, m]), m) <= 1e-12, name
        assert max_abs_diff(conjunctive(experts + [vac]), conjunctive(experts)) <= 1e-12
        assert max_abs_diff(fuse_sequential(experts + [vac], "pcr5"), fuse_sequential(experts, "pcr5")) <= 1e-12


def test_vacuous_expert_takes_a_share_in_joint_redistribution(ab2):
    # with two conflicting experts already present, THETA sits in conflicting tuples
    e = [mf(ab2, A=1.0), mf(ab2, B=1.0), mf(ab2, THETA=1.0)]
    assert_masses(pcr6(e), {"A": 1 / 3, "B": 1 / 3, "A|B": 1 / 3})
    assert_masses(dubois_prade(e), {"A|B": 1.0})


def test_free_model_pcr_is_conjunctive(rng):
    for _ in range(500):
        experts = random_experts(rng, n_max=3, m_max=3, kind="free")
        conj = conjunctive(experts)
        for name in PCR:
            assert max_abs_diff(JOINT[name](experts), conj) <= 1e-12


def test_permutation_invariance(rng):
    for experts in _instances(rng, 500):
        perm = list(rng.permutation(len(experts)))
        shuffled = [experts[i] for i in perm]
        for name, rule in JOINT.items():
            assert max_abs_diff(rule(experts), rule(shuffled)) <= 1e-12, name


def _hybrid_instances(rng, count):
    out = []
    for _ in range(count):
        n = int(rng.integers(2, 4))
        frame = frame_of(n)
        kind = ["free", "hybrid"][int(rng.integers(0, 2))]
        constrained = int(rng.integers(0, frame.theta_bits + 1)) & frame.theta_bits if kind == "hybrid" else 0
        model = Model(frame, kind, upward_closure(frame, constrained) if kind == "hybrid" else -1)
        if model.canonical_bits(frame.theta) == 0:
            continue
        m = int(rng.integers(2, 4))
        out.append([random_dsm_mass(rng, model, allow_model_empty=(kind == "hybrid")) for _ in range(m)])
    return out


@pytest.mark.parametrize("rule", list(JOINT))
def test_oracle_equivalence_random(rng, rule):
    weight = SQUARE if rule in ("pcr6f", "pcr6g") else None
    cases = _instances(rng, 1000, n_max=4, m_max=4)
    if rule in ("conjunctive", "dp", "dsmh"):
        cases += _hybrid_instances(rng, 300)
    for experts in cases:
        assert max_abs_diff(JOINT[rule](experts), brute_force_oracle(experts, rule, weight)) <= 1e-9


def test_oracle_golden(abc3, ab2, abb):
    m1 = mf(abc3, A=0.6, B=0.3, C=0.1)
    assert brute_force_oracle([m1, m1], "conjunctive")[abc3.frame.empty] == pytest.approx(0.54, abs=1e-12)
    experts = [mf(abc3, A_B=0.7, THETA=0.3), mf(abc3, A_C=0.6, THETA=0.4), mf(abc3, B_C=0.5, THETA=0.5)]
    out = brute_force_oracle(experts, "dp")
    assert out.total() == pytest.approx(1.0, abs=1e-12)
    assert max_abs_diff(brute_force_oracle(abb, "pcr6"), pcr6(abb)) <= 1e-12
    assert max_abs_diff(brute_force_oracle(abb[:2], "pcr5_two"), pcr5_two(abb[:2])) <= 1e-12


def test_outputs_are_keyed_by_normal_form():
    frame = frame_of(3)
    model = Model.shafer(frame)
    a, b, c = frame.singletons()
    out = conjunctive([MassFunction(model, {a | b: 1.0}), MassFunction(model, {a | c: 1.0})])
    (key,) = out.keys()
    assert key == a
    assert isinstance(key, Proposition)
