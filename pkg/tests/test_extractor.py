import random
from fractions import Fraction

import pytest

from src.algebra import PrimeField
from src.coding import encode, message_at, repetition_code, rs_code
from src.errors import InvalidParams, ParameterError, TooLargeToEnumerate
from src.extractor import (CorruptSetProver, DecoyProver, HonestProver, extract, make_prover,
                           succ_exact, sw_extract)
from src.keyed_sw import sw_keygen, sw_tag
from src.models import Limits
from src.schemes import SchemeDescriptor, build_response_code, challenge_count


F5 = PrimeField(5)
F7 = PrimeField(7)


def rs_4_2():
    return rs_code(F5, 4, 2)


def codeword(code, index):
    return encode(code, message_at(code, index))


def test_honest_extraction_recovers_every_message():
    scheme = SchemeDescriptor("multiblock", rs_4_2(), 2)
    for index in range(25):
        M = codeword(scheme.code, index)
        result = extract(HonestProver(scheme, M), scheme)
        assert result.M_hat == M, f"Message {index} not recovered"
        assert (result.distance, result.tie, result.unique) == (0, False, True)
        assert result.queries == 6 and result.dstar == 6


@pytest.mark.parametrize("field, n, k, kind, ell", [
    (F5, 4, 2, "basic", None),
    (F5, 4, 2, "multiblock", 1),
    (F5, 4, 2, "multiblock", 2),
    (F5, 4, 2, "lc-v2", 2),
    (F7, 6, 3, "basic", None),
    (F7, 6, 3, "multiblock", 2),
    (F7, 6, 3, "lc-v2", 2),
])
def test_extraction_below_half_distance_is_exact(field, n, k, kind, ell):
    scheme = SchemeDescriptor(kind, rs_code(field, n, k), ell)
    gamma = challenge_count(scheme)
    radius = (build_response_code(scheme).dstar - 1) // 2
    rng = random.Random(f"{kind}/{field.q}/{ell}")
    for trial in range(1000):
        M = codeword(scheme.code, rng.randrange(scheme.code.message_count))
        wrong = rng.sample(range(gamma), rng.randint(0, radius))
        prover = CorruptSetProver(scheme, M, wrong, component=rng.randrange(scheme.response_width),
                                  rule="random", seed=trial)
        result = extract(prover, scheme)
        assert result.M_hat == M, f"Trial {trial}: {len(wrong)} wrong answers defeated extraction"
        assert result.distance == len(wrong)
        assert result.unique and not result.tie


def test_decoy_at_half_success_wins_extraction():
    code = rs_4_2()
    M = codeword(code, 6)
    decoy = codeword(code, 2)
    assert decoy.values == (2, 4, 1, 3), "(0,2) differs from (1,1) by 2x - x - 1 = x - 1"
    scheme = SchemeDescriptor("basic", code)
    prover = DecoyProver(scheme, M, decoy, budget=2)
    assert succ_exact(prover, scheme, M) == Fraction(1, 2)
    result = extract(prover, scheme)
    assert result.M_hat == decoy, "Half-correct provers are below the threshold and can fool extraction"
    assert result.m_hat.values == (0, 2)
    assert result.distance == 1


def test_ties_are_reported():
    F2 = PrimeField(2)
    scheme = SchemeDescriptor("basic", repetition_code(F2, 2))
    M = encode(scheme.code, F2.vector([0]))
    result = extract(CorruptSetProver(scheme, M, {1}), scheme)
    assert result.tie is True
    assert result.m_hat.values == (0,), "Ties resolve to the lowest message index"
    assert result.unique is False


def test_succ_exact():
    scheme = SchemeDescriptor("lc-v2", rs_4_2(), 2)
    M = codeword(scheme.code, 11)
    assert succ_exact(HonestProver(scheme, M), scheme, M) == 1
    assert succ_exact(CorruptSetProver(scheme, M, range(24)), scheme, M) == Fraction(3, 4)
    sw = SchemeDescriptor("sw", rs_4_2(), 2)
    with pytest.raises(ParameterError):
        succ_exact(HonestProver(scheme, M), sw, M)


def test_extraction_respects_caps():
    scheme = SchemeDescriptor("lc-v2", rs_4_2(), 2)
    M = codeword(scheme.code, 1)
    with pytest.raises(TooLargeToEnumerate):
        extract(HonestProver(scheme, M), scheme, Limits(max_challenges=50))


def test_sw_extract_decodes_mu_only():
    scheme = SchemeDescriptor("sw", rs_4_2(), 2)
    M = codeword(scheme.code, 17)
    S = sw_tag(sw_keygen(F5, 4, 0), M)
    prover = make_prover("corrupt-set", scheme, M, {"tag": S, "ordinals": {3}, "component": 1})
    result = sw_extract(prover, scheme)
    assert result.M_hat == M and result.distance == 0, "A wrong tau does not move mu"
    with pytest.raises(ParameterError):
        sw_extract(prover, SchemeDescriptor("basic", rs_4_2()))


def test_make_prover_kinds():
    scheme = SchemeDescriptor("basic", rs_4_2())
    M = codeword(scheme.code, 6)
    assert make_prover("honest", scheme, M).construction == "honest"
    corrupt = make_prover("corrupt-set", scheme, M, {"ordinals": [0, 2], "rule": "random"}, seed=4)
    assert corrupt.ordinals == frozenset({0, 2})
    decoy = make_prover("decoy", scheme, M, {"decoy": codeword(scheme.code, 2), "budget": 3})
    assert decoy.moved == frozenset({1, 2, 3})

    sw = SchemeDescriptor("sw", rs_4_2(), 2)
    K = sw_keygen(F5, 4, 12)
    S = sw_tag(K, M)
    attack = make_prover("sw-attack", sw, M, {"key": K, "tag": S})
    assert attack.construction == "sw-attack"
    assert sw_extract(attack, sw).M_hat != M
    assert make_prover("sw-guess", sw, M, {"tag": S, "alpha_guess": 1}).construction == "sw-guess"


def test_make_prover_rejects_bad_params():
    scheme = SchemeDescriptor("basic", rs_4_2())
    sw = SchemeDescriptor("sw", rs_4_2(), 2)
    M = codeword(scheme.code, 6)
    bad = [
        ("oracle", scheme, {}),
        ("corrupt-set", scheme, {}),
        ("corrupt-set", scheme, {"ordinals": [4]}),
        ("corrupt-set", scheme, {"ordinals": [0], "component": 1}),
        ("corrupt-set", scheme, {"ordinals": [0], "rule": "flip"}),
        ("decoy", scheme, {"decoy": codeword(scheme.code, 2)}),
        ("decoy", scheme, {"decoy": M, "budget": 1}),
        ("decoy", scheme, {"decoy": codeword(scheme.code, 2), "budget": 4}),
        ("honest", sw, {}),
        ("sw-attack", scheme, {"tag": None}),
        ("remote", scheme, {}),
    ]
    for kind, target, params in bad:
        with pytest.raises(InvalidParams):
            make_prover(kind, target, M, params)
