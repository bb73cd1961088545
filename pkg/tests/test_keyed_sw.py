import itertools
import math
import random
from collections import Counter
from fractions import Fraction

import pytest

from src.algebra import PrimeField
from src.analysis import threshold_for
from src.coding import LinearCode, encode, message_at, rs_code
from src.errors import OracleInconsistent, ParameterError
from src.extractor import sw_extract
from src.keyed_sw import (SwCorruptProver, SwHonestProver, SwKey, SwResponse, SwTag,
                          load_key_file, load_tag_file, next_codeword, oracle_from_key,
                          save_key_file, save_tag_file, sw_acceptable_key_count, sw_guess_prover,
                          sw_is_authentic, sw_keygen, sw_oracle_attack, sw_possible_keys,
                          sw_respond, sw_succ_avg, sw_tag, sw_verify)
from src.schemes import (ProvingAlgorithm, SchemeDescriptor, challenge_at, challenge_count,
                         enumerate_challenges, response_vector)


F5 = PrimeField(5)


def full_space(field, n):
    identity = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    return LinearCode(field, n, n, identity, declared_distance=1)


def sw_rs_4_2():
    return SchemeDescriptor("sw", rs_code(F5, 4, 2), 2)


def stored(scheme, index=6):
    code = scheme.code
    return encode(code, message_at(code, index))


def fixed_key():
    return SwKey(F5(2), F5.vector([1, 3, 4]))


def test_tag_respond_verify_example():
    K = fixed_key()
    M = F5.vector([1, 1, 1])
    S = sw_tag(K, M)
    assert S.sigma.values == (3, 0, 1), "S = B + 2*M"
    r = sw_respond(M, S, F5.vector([1, 2, 0]))
    assert r.values == (3, 3)
    assert sw_verify(K, F5.vector([1, 2, 0]), r) is True
    assert sw_verify(K, F5.vector([1, 2, 0]), SwResponse.of(F5, 3, 4)) is False


def test_keygen_is_seeded():
    assert sw_keygen(F5, 4, "seed") == sw_keygen(F5, 4, "seed"), "Same seed, same key"
    key = sw_keygen(PrimeField(7), 6, 1)
    assert len(key.beta) == 6 and key.field.q == 7


def test_honest_responses_always_verify():
    scheme = sw_rs_4_2()
    M = stored(scheme)
    K = sw_keygen(F5, 4, 3)
    S = sw_tag(K, M)
    for challenge in enumerate_challenges(scheme):
        assert sw_verify(K, challenge, sw_respond(M, S, challenge)),\
               f"Authentic response to {challenge.payload.values} must verify"


def test_possible_keys_all_produce_the_tag():
    K = fixed_key()
    M = F5.vector([4, 0, 2])
    S = sw_tag(K, M)
    keys = sw_possible_keys(M, S)
    assert len(keys) == 5
    assert K in keys
    assert all(sw_tag(candidate, M) == S for candidate in keys),\
           "Every possible key explains the tag"


@pytest.mark.parametrize("q", [3, 5])
def test_acceptable_key_count_exhaustive(q):
    field = PrimeField(q)
    scheme = SchemeDescriptor("sw", full_space(field, 3))
    for seed, message in ((1, (1, 0, 2)), (2, (0, 0, 0))):
        M = field.vector(message)
        S = sw_tag(sw_keygen(field, 3, seed), M)
        keys = sw_possible_keys(M, S)
        for challenge in enumerate_challenges(scheme):
            authentic = sw_respond(M, S, challenge)
            for mu, tau in itertools.product(range(q), repeat=2):
                r = SwResponse.of(field, mu, tau)
                accepting = sum(1 for key in keys if sw_verify(key, challenge, r))
                assert accepting == sw_acceptable_key_count(M, S, challenge, r)
                if r == authentic:
                    assert accepting == q, "The authentic response is acceptable under every key"
                elif r.mu == authentic.mu:
                    assert accepting == 0, "Right mu with a wrong tau is never acceptable"
                else:
                    assert accepting == 1, "A wrong mu is acceptable under exactly one key"


def test_succ_avg_of_corrupt_provers():
    scheme = sw_rs_4_2()
    M = stored(scheme)
    S = sw_tag(sw_keygen(F5, 4, 5), M)
    assert sw_succ_avg(SwHonestProver(scheme, M, S), scheme, M, S) == 1
    wrong_mu = SwCorruptProver(scheme, M, S, {0, 5}, component=0)
    assert sw_succ_avg(wrong_mu, scheme, M, S) == Fraction(94 * 5 + 2, 96 * 5),\
           "Each wrong mu is acceptable under one of the five keys"
    wrong_tau = SwCorruptProver(scheme, M, S, {0, 5}, component=1, rule="random", seed=9)
    assert sw_succ_avg(wrong_tau, scheme, M, S) == Fraction(94, 96)


class RandomSwProver(ProvingAlgorithm):
    """Authentic except on `corrupted`, where it answers a random non-authentic pair."""
    construction = "random"

    def __init__(self, scheme, M, S, corrupted, rng):
        super().__init__(scheme)
        q = scheme.q
        self.answers = []
        for ordinal in range(challenge_count(scheme)):
            authentic = sw_respond(M, S, challenge_at(scheme, ordinal))
            r = authentic
            while ordinal in corrupted and r == authentic:
                r = SwResponse.of(scheme.code.field, rng.randrange(q), rng.randrange(q))
            self.answers.append(r)

    def respond_at(self, ordinal):
        return self.answers[ordinal]


def test_keygen_alpha_is_uniform():
    seeds = 100_000
    counts = Counter(sw_keygen(F5, 3, seed).alpha.value for seed in range(seeds))
    sigma = math.sqrt(seeds * 0.2 * 0.8)
    assert sorted(counts) == [0, 1, 2, 3, 4]
    for alpha, count in counts.items():
        assert abs(count - seeds / 5) <= 5 * sigma, f"alpha={alpha} drawn {count} times"


def test_succ_avg_bounds_for_random_provers():
    scheme = sw_rs_4_2()
    M = stored(scheme)
    S = sw_tag(sw_keygen(F5, 4, 11), M)
    gamma, q = challenge_count(scheme), 5
    rng = random.Random(2024)
    for _ in range(100):
        corrupted = set(rng.sample(range(gamma), rng.randrange(gamma + 1)))
        P = RandomSwProver(scheme, M, S, corrupted, rng)
        succ = sw_succ_avg(P, scheme, M, S)
        challenges = [challenge_at(scheme, o) for o in range(gamma)]
        chi = sum(sw_acceptable_key_count(M, S, V, P(V)) for V in challenges)
        assert succ == Fraction(chi, gamma * q), "succ_avg counts acceptable (challenge, key) pairs"

        # Test for the bound from the number of non-authentic responses
        C = sum(1 for V in challenges if not sw_is_authentic(M, S, V, P(V)))
        assert C == len(corrupted)
        assert succ <= 1 - Fraction(C * (q - 1), gamma * q)

        # Test for the bound on the mu distance from the stored file
        mu_distance = sum(1 for V in challenges if P(V).mu != sw_respond(M, S, V).mu)
        assert mu_distance <= (1 - succ) * Fraction(gamma * q, q - 1)


def test_sw_extraction_above_the_threshold():
    scheme = sw_rs_4_2()
    M = stored(scheme)
    S = sw_tag(sw_keygen(F5, 4, 12), M)
    bound = threshold_for(scheme).threshold
    assert bound == Fraction(7, 10), "1 - d*(q-1)/(2 gamma q) with d*=72, gamma=96"
    rng = random.Random(99)
    extracted = 0
    for _ in range(150):
        corrupted = set(rng.sample(range(96), rng.randrange(50)))
        P = RandomSwProver(scheme, M, S, corrupted, rng)
        if sw_succ_avg(P, scheme, M, S) > bound:
            result = sw_extract(P, scheme)
            assert result.M_hat == M and not result.tie,\
                   f"Prover above the threshold with {len(corrupted)} bad answers was not extracted"
            extracted += 1
    assert extracted >= 50, "At most 28 bad answers always stay above the threshold"


def test_next_codeword_wraps():
    scheme = sw_rs_4_2()
    assert next_codeword(stored(scheme, 6)) == stored(scheme, 7)
    assert next_codeword(stored(scheme, 24)) == stored(scheme, 0)


def test_guess_prover_passes_only_where_decoy_agrees():
    scheme = sw_rs_4_2()
    M = stored(scheme)
    K = sw_keygen(F5, 4, 8)
    S = sw_tag(K, M)
    wrong_alpha = (K.alpha.value + 1) % 5
    prover = sw_guess_prover(M, S, wrong_alpha, scheme)
    honest_mu = response_vector(scheme, M)[:, 0]
    decoy_mu = response_vector(scheme, next_codeword(M))[:, 0]
    agree = int((honest_mu == decoy_mu).sum())
    accepted = sum(1 for o in range(challenge_count(scheme))
                   if sw_verify(K, challenge_at(scheme, o), prover.respond_at(o)))
    assert accepted == agree < challenge_count(scheme),\
           "With a wrong guess only the authentic coordinates verify"
    lucky = sw_guess_prover(M, S, K.alpha.value, scheme)
    assert all(sw_verify(K, challenge_at(scheme, o), lucky.respond_at(o))
               for o in range(challenge_count(scheme)))


def test_oracle_attack_recovers_key_and_defeats_extraction():
    scheme = sw_rs_4_2()
    M = stored(scheme)
    K = sw_keygen(F5, 4, 21)
    S = sw_tag(K, M)
    result = sw_oracle_attack(M, S, oracle_from_key(K), scheme)
    assert result.key == K and result.checks == 4
    assert result.queries <= 4, "At most q-1 queries when the last candidate is inferred"
    for ordinal in range(challenge_count(scheme)):
        assert sw_verify(K, challenge_at(scheme, ordinal), result.prover.respond_at(ordinal)),\
               "The attack prover must pass every check"
    extracted = sw_extract(result.prover, scheme)
    assert extracted.M_hat == next_codeword(M), "Extraction returns the decoy, not the stored file"
    assert extracted.distance == 0


def test_oracle_attack_without_inference():
    scheme = sw_rs_4_2()
    M = stored(scheme)
    K = sw_keygen(F5, 4, 4)
    S = sw_tag(K, M)
    result = sw_oracle_attack(M, S, oracle_from_key(K), scheme, infer_last=False)
    assert result.key == K
    assert result.queries == 5, "One forged response per candidate alpha"
    assert result.checks == 4, "One authentic response per dimension of F_5^4"


def test_oracle_attack_detects_inconsistent_oracles():
    scheme = sw_rs_4_2()
    M = stored(scheme)
    S = sw_tag(sw_keygen(F5, 4, 2), M)
    with pytest.raises(OracleInconsistent):
        sw_oracle_attack(M, S, lambda V, r: False, scheme, infer_last=False)
    with pytest.raises(OracleInconsistent):
        sw_oracle_attack(M, S, lambda V, r: True, scheme, infer_last=False)
    with pytest.raises(OracleInconsistent):
        sw_oracle_attack(M, S, lambda V, r: False, scheme)


# Test every key over F_5 with n=4: the keys of Possible(M, S) are recovered, all others refused
def test_oracle_attack_over_every_key():
    scheme = sw_rs_4_2()
    M = stored(scheme)
    S = sw_tag(sw_keygen(F5, 4, 1), M)
    possible = sw_possible_keys(M, S)
    recovered = 0
    for alpha in range(5):
        for beta in itertools.product(range(5), repeat=4):
            K = SwKey(F5(alpha), F5.vector(beta))
            if K in possible:
                result = sw_oracle_attack(M, S, oracle_from_key(K), scheme)
                assert result.key == K, f"Key {alpha}, {beta} not recovered"
                assert result.queries <= 4
                recovered += 1
            else:
                with pytest.raises(OracleInconsistent):
                    sw_oracle_attack(M, S, oracle_from_key(K), scheme)
    assert recovered == 5


def test_oracle_attack_refuses_a_foreign_key_on_the_full_space():
    scheme = SchemeDescriptor("sw", full_space(F5, 3), 2)
    K = fixed_key()
    M = encode(scheme.code, F5.vector([1, 4, 2]))
    S = sw_tag(K, M)
    for shift in ([0, 0, 1], [1, 4, 0], [2, 2, 2]):
        foreign = SwKey(K.alpha, K.beta + F5.vector(shift))
        with pytest.raises(OracleInconsistent):
            sw_oracle_attack(M, S, oracle_from_key(foreign), scheme)


def test_oracle_attack_needs_the_keyed_scheme():
    basic = SchemeDescriptor("basic", rs_code(F5, 4, 2))
    M = stored(basic)
    with pytest.raises(ParameterError):
        sw_oracle_attack(M, M.blocks, lambda V, r: True, basic)


def test_key_and_tag_files(tmp_path):
    K = sw_keygen(PrimeField(2**61 - 1), 3, "files")
    key_path = tmp_path / "k.key"
    save_key_file(K, key_path)
    assert load_key_file(key_path) == K
    S = SwTag(PrimeField(7).vector([6, 0, 3]))
    tag_path = tmp_path / "s.tag"
    save_tag_file(S, tag_path)
    assert load_tag_file(tag_path) == S
    key_path.write_text("q=7\nn=2\nalpha=9\nbeta=1 2\n", encoding="utf-8")
    with pytest.raises(ParameterError):
        load_key_file(key_path)
    tag_path.write_text("q=7\nn=3\nsigma=1 2\n", encoding="utf-8")
    with pytest.raises(ParameterError):
        load_tag_file(tag_path)
