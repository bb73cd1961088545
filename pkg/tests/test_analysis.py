import itertools
import math
import random
from fractions import Fraction

import pytest

from src.algebra import PrimeField
from src.analysis import (a_r, a_r_brute, dstar_lc_v1, dstar_lc_v2_estimate, dstar_lc_v2_exact,
                          dstar_multiblock, estimate_sufficient, exact_sufficient, lc_v2_agreement,
                          lc_v2_pair_distance, max_n, max_n_table, threshold, threshold_for,
                          verifier_storage_lower_bound)
from src.coding import LinearCode, encode, message_at, minimum_distance, repetition_code, rs_code
from src.errors import ParameterError
from src.extractor import CorruptSetProver, extract, succ_exact
from src.schemes import SchemeDescriptor, SchemeKind, build_response_code


F5 = PrimeField(5)


def full_space(field, n):
    identity = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    return LinearCode(field, n, n, identity, declared_distance=1)


def count_nonzero_products(q, n, ell, delta):
    """Weight-ell vectors V with V.X != 0 for X = (1,..,1,0,..,0) of weight delta."""
    count = 0
    for v in itertools.product(range(q), repeat=n):
        if sum(1 for x in v if x) == ell and sum(v[:delta]) % q:
            count += 1
    return count


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_a_r_matches_enumeration(q):
    for r in range(1, 6):
        assert a_r(q, r) == a_r_brute(q, r), f"a_{r} over F_{q}"
    with pytest.raises(ParameterError):
        a_r(q, 0)


def test_multiblock_dstar():
    assert dstar_multiblock(4, 3, 2) == 6
    assert dstar_multiblock(4, 3, 1) == 3
    assert dstar_multiblock(10, 3, 10) == 1, "A single challenge over every block"
    with pytest.raises(ParameterError):
        dstar_multiblock(4, 5, 1)


def random_code(field, n, k, rng):
    while True:
        rows = [[rng.randrange(field.q) for _ in range(n)] for _ in range(k)]
        try:
            return LinearCode(field, n, k, rows)
        except ParameterError:
            continue


# Test for the multiblock formula against the enumerated response code
@pytest.mark.parametrize("q", [2, 3, 5])
def test_multiblock_dstar_matches_enumeration(q):
    field = PrimeField(q)
    rng = random.Random(f"multiblock/{q}")
    for n in range(1, 7):
        for k in range(1, min(3, n) + 1):
            code = random_code(field, n, k, rng)
            d = minimum_distance(code)
            for ell in range(1, min(3, n) + 1):
                enumerated = build_response_code(SchemeDescriptor("multiblock", code, ell)).dstar
                assert enumerated == dstar_multiblock(n, d, ell),\
                       f"q={q} n={n} k={k} d={d} l={ell}: generator {code.generator}"


@pytest.mark.parametrize("q, n", [(3, 3), (3, 4), (5, 3)])
def test_lc_v2_pair_distance_matches_enumeration(q, n):
    for ell in range(1, n + 1):
        gamma = (q - 1) ** ell * len(list(itertools.combinations(range(n), ell)))
        for delta in range(1, n + 1):
            expected = count_nonzero_products(q, n, ell, delta)
            assert lc_v2_pair_distance(q, n, ell, delta) == expected,\
                   f"q={q} n={n} l={ell} delta={delta}"
            assert lc_v2_agreement(q, n, ell, delta) + expected == gamma


def test_lc_v2_distances_over_the_full_space():
    assert [lc_v2_pair_distance(3, 3, 2, delta) for delta in (1, 2, 3)] == [8, 10, 6]
    assert dstar_lc_v2_exact(full_space(PrimeField(3), 3), 2) == 6,\
           "The minimum is attained at full weight, not at weight 1"


def test_lc_v2_exact_dstar_matches_response_code():
    code = rs_code(F5, 4, 2)
    assert dstar_lc_v2_exact(code, 2) == 72
    assert build_response_code(SchemeDescriptor("lc-v2", code, 2)).dstar == 72
    assert build_response_code(SchemeDescriptor("sw", code, 2)).dstar == 72
    assert dstar_lc_v2_estimate(5, 4, 3, 2) == pytest.approx(16 / 5 * 6 * 4)


@pytest.mark.parametrize("q, n", [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4), (5, 2), (5, 3)])
def test_lc_v1_dstar_is_off_by_one(q, n):
    v1 = dstar_lc_v1(q, n)
    assert v1.dstar_count == q**n - q ** (n - 1) and v1.dstar_published == v1.dstar_count - 1
    enumerated = build_response_code(SchemeDescriptor("lc-v1", repetition_code(PrimeField(q), n))).dstar
    assert enumerated == v1.dstar_count, "Counting nonzero challenges gives q^n - q^(n-1)"


def test_lc_v1_small_cases():
    assert build_response_code(SchemeDescriptor("lc-v1", full_space(PrimeField(3), 3))).dstar == 18
    assert dstar_lc_v1(2, 1).degenerate is True


# Test that thresholds from the published d* still guarantee extraction
@pytest.mark.parametrize("code", [full_space(PrimeField(3), 3), rs_code(F5, 4, 2)])
def test_lc_v1_threshold_suffices_for_extraction(code):
    scheme = SchemeDescriptor("lc-v1", code)
    report = threshold_for(scheme)
    assert report.dstar_formula == dstar_lc_v1(code.q, code.n).dstar_published
    rng = random.Random(f"lc-v1/{code.q}/{code.n}")
    extracted = 0
    for trial in range(60):
        M = encode(code, message_at(code, rng.randrange(code.message_count)))
        wrong = rng.sample(range(report.gamma), rng.randint(0, report.dstar_formula // 2 + 3))
        prover = CorruptSetProver(scheme, M, wrong, rule="random", seed=trial)
        if succ_exact(prover, scheme, M) <= report.threshold:
            continue
        result = extract(prover, scheme)
        assert result.M_hat == M and result.unique and not result.tie,\
               f"Trial {trial}: {len(wrong)} wrong answers above the threshold defeated extraction"
        extracted += 1
    assert extracted >= 30, f"Only {extracted} trials were above the threshold"


def test_thresholds_for_small_schemes():
    code = rs_code(F5, 4, 2)
    basic = threshold_for(SchemeDescriptor("basic", code))
    assert (basic.gamma, basic.dstar, basic.threshold) == (4, 3, Fraction(5, 8))
    multiblock = threshold_for(SchemeDescriptor("multiblock", code, 2))
    assert (multiblock.gamma, multiblock.dstar, multiblock.threshold) == (6, 6, Fraction(1, 2))
    lc_v2 = threshold_for(SchemeDescriptor("lc-v2", code, 2))
    assert (lc_v2.gamma, lc_v2.dstar, lc_v2.threshold) == (96, 72, Fraction(5, 8))
    sw = threshold_for(SchemeDescriptor("sw", code, 2))
    assert sw.threshold == Fraction(7, 10), "1 - 72*4/(2*96*5)"
    assert sw.threshold_float == pytest.approx(0.7)


def test_closed_form_thresholds():
    lc_v1 = threshold("lc-v1", 3, 3, 1)
    assert lc_v1.threshold == Fraction(1, 2) + Fraction(9, 52)
    assert lc_v1.dstar_count == 18
    lc_v2 = threshold(SchemeKind.LC_V2, 5, 4, 3, 2)
    assert lc_v2.threshold == lc_v2.s1, "Without an exact d* the closed form is used"
    assert lc_v2.s0 == Fraction(1, 2)
    with pytest.raises(ParameterError):
        threshold("basic", 5, 4, 5)
    with pytest.raises(ParameterError):
        threshold("multiblock", 5, 4, 3)
    with pytest.raises(ParameterError):
        threshold("lc-v2", 5, 4, 3, 5)


def test_max_n_goldens():
    assert max_n(100, 100, 0.6, "estimate") == 6213
    assert abs(max_n(100, 100, 0.6, "exact") - 6313) <= 1
    assert max_n(1000, 1000, 0.99, "estimate") == 49498316
    assert max_n(50, 10000, 0.7, "estimate") == 545678


def test_max_n_is_the_boundary_of_the_exact_criterion():
    for ell, d, succ in ((10, 10, 0.6), (100, 10, 0.9), (50, 100, 0.99)):
        n = max_n(ell, d, succ)
        assert exact_sufficient(ell, d, n, succ), f"n={n} must satisfy the criterion"
        assert not exact_sufficient(ell, d, n + 1, succ), f"n={n + 1} must not"


def test_estimate_is_conservative():
    for ell, d, succ in itertools.product((10, 50, 100), (10, 100), (0.6, 0.9, 0.99)):
        assert max_n(ell, d, succ, "estimate") <= max_n(ell, d, succ, "exact"),\
               f"l={ell} d={d} succ={succ}: the estimate must never exceed the exact length"


def test_estimate_implies_exact_on_a_random_grid():
    rng = random.Random("estimate-vs-exact")
    held = 0
    for _ in range(200):
        ell, d = rng.randint(1, 2000), rng.randint(1, 2000)
        succ = round(rng.uniform(0.51, 0.999), 4)
        boundary = ell * d / math.log(1 / (2 * succ - 1))
        n = max(ell, d, int(boundary * rng.uniform(0.5, 2)))
        if estimate_sufficient(ell, d, n, succ):
            held += 1
            assert exact_sufficient(ell, d, n, succ),\
                   f"l={ell} d={d} n={n} succ={succ}: the estimate holds but the exact criterion fails"
    assert held >= 40, f"Only {held} tuples satisfied the estimate"


def test_max_n_rejects_bad_inputs():
    for succ in (0.5, 1.0, 0.2):
        with pytest.raises(ParameterError):
            max_n(10, 10, succ)
    with pytest.raises(ParameterError):
        max_n(10, 10, 0.9, "guess")


def test_max_n_table_flags_published_typos():
    rows = max_n_table(ells=(50,), ds=(10000,), succs=(0.7,))
    assert len(rows) == 1
    assert rows[0].estimate == 545678
    assert "estimate" in rows[0].mismatches, "The published estimate has a stray digit"
    matching = max_n_table(ells=(100,), ds=(100,), succs=(0.6,))
    assert matching[0].mismatches == []


def test_verifier_storage_lower_bound():
    small = verifier_storage_lower_bound(2, 5, 4, 5)
    assert small.bits == 0.0 and small.unkeyed_feasible is True
    large = verifier_storage_lower_bound(100, 2, 10, 2)
    assert large.bits == pytest.approx(90.0)
    assert large.unkeyed_feasible is False
    with pytest.raises(ParameterError):
        verifier_storage_lower_bound(0, 2, 10, 2)
