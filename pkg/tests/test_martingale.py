from fractions import Fraction

import pytest

from martlab import dsl
from martlab.bits import BitString, EMPTY, ExplicitBitSource, strings_up_to
from martlab.martingale import (
    MartingaleEvalError,
    Mixture,
    TableMartingale,
    constant,
    decompose_odd_even,
    doubling_on_zero,
    fix_oracle,
    mix,
    random_fair_table,
    savings_transform,
    table_from_text,
    table_to_text,
    validate_fairness,
)

B = BitString


def unfair_table():
    # f(empty)=1, f(0)=2, f(1)=1: 2 + 1 != 2 * 1.
    values = {"": Fraction(1), "0": Fraction(2), "1": Fraction(1)}
    return TableMartingale(1, values)


# ---------------------------------------------------------------------------
# validate_fairness


def test_constant_is_fair():
    assert validate_fairness(constant(1), 6).passed


def test_doubling_on_zero_is_fair():
    assert validate_fairness(doubling_on_zero(3), 3).passed


def test_depth_one_doubling_table_passes_at_depth_three():
    # f(empty)=1, f(0)=2, f(1)=0, constant beyond the table depth.
    values = {"": Fraction(1), "0": Fraction(2), "1": Fraction(0)}
    assert validate_fairness(TableMartingale(1, values), 3).passed


def test_unfair_table_reported_at_root():
    report = validate_fairness(unfair_table(), 1)
    assert not report.passed
    assert report.violation.node == EMPTY
    assert report.violation.kind == "fairness"


def test_tables_stop_betting_beyond_their_depth():
    f = doubling_on_zero(2)
    assert f.value(B("0000")) == f.value(B("00"))
    # Fairness keeps holding at depths past the table.
    assert validate_fairness(f, 5).passed


def test_validation_reports_program_failures_with_the_string():
    program = dsl.parse("(if (>= (len) 2) (diverge) 1)")
    m = fix_oracle(program, ExplicitBitSource(B("1")), 100)
    report = validate_fairness(m, 3)
    assert not report.passed
    assert report.violation.kind == "evaluation"
    assert report.violation.node == B("00")


# ---------------------------------------------------------------------------
# mix


def test_mix_constants():
    d = mix(constant(1), constant(1), Fraction(1, 2))
    for x in strings_up_to(4):
        assert d.value(x) == Fraction(3, 2)


def test_mix_zero_coefficient_is_identity():
    f = random_fair_table(4, seed=11)
    d = mix(f, doubling_on_zero(4), Fraction(0))
    for x in strings_up_to(4):
        assert d.value(x) == f.value(x)


def test_mix_pointwise_value():
    d = mix(constant(1), doubling_on_zero(3), Fraction(1, 2))
    assert d.value(B("0")) == 1 + Fraction(1, 2) * 2


def test_mix_flattens_mixtures():
    d = Mixture(Fraction(1), ())
    d = mix(d, constant(2), Fraction(1, 4))
    d = mix(d, constant(3), Fraction(1, 8))
    assert len(d.components) == 2
    assert d.value(EMPTY) == 1 + Fraction(1, 2) + Fraction(3, 8)


def test_mix_outputs_stay_fair():
    for seed in range(5):
        d = mix(
            random_fair_table(10, seed=100 + seed),
            random_fair_table(10, seed=200 + seed),
            Fraction(seed, 3),
        )
        assert validate_fairness(d, 10).passed


def test_metered_mixture_cost_model():
    # One step for the base plus each component's steps; use is the max.
    base_only = Mixture(Fraction(1), ())
    out = base_only.metered(B("0101"))
    assert (out.value, out.steps, out.oracle_use) == (1, 1, 0)

    oracle = ExplicitBitSource(B("10"))
    comp = fix_oracle(dsl.parse("(const 1)"), oracle, 100)
    d = mix(base_only, comp, Fraction(1, 2))
    out = d.metered(B("0"))
    assert (out.value, out.steps, out.oracle_use) == (Fraction(3, 2), 2, 0)


def test_metered_mixture_propagates_failure():
    oracle = ExplicitBitSource(B("10"))
    comp = fix_oracle(dsl.parse("(oracle 5)"), oracle, 100)
    d = mix(Mixture(Fraction(1), ()), comp, Fraction(1))
    out = d.metered(EMPTY)
    assert out.kind == "oracle_out_of_range"


def test_metered_mixture_rejects_tables():
    d = mix(Mixture(Fraction(1), ()), constant(1), Fraction(1))
    with pytest.raises(TypeError):
        d.metered(EMPTY)


# ---------------------------------------------------------------------------
# savings transform


def test_savings_banks_along_doubling_path():
    f = doubling_on_zero(4)
    wrapped = savings_transform(f)
    assert wrapped.value(EMPTY) == 2
    assert wrapped.value(B("0")) == 3
    assert wrapped.value(B("00")) == 4
    assert wrapped.banked(B("00")) == 3


def test_savings_of_constant_never_banks():
    wrapped = savings_transform(constant(1))
    for x in strings_up_to(5):
        assert wrapped.state(x) == (1, 1)
        assert wrapped.value(x) == 2


def test_savings_halving_boundary():
    f = doubling_on_zero(4)
    wrapped = savings_transform(f)
    assert wrapped.value(B("1")) == 1
    assert wrapped.value(B("1")) >= wrapped.value(EMPTY) / 2


def test_savings_requires_positive_start():
    dead = TableMartingale(0, {"": Fraction(0)})
    with pytest.raises(ValueError):
        savings_transform(dead)


def test_savings_normalizes_scale():
    f = TableMartingale(0, {"": Fraction(5)})
    wrapped = savings_transform(f)
    assert wrapped.value(EMPTY) == 2


@pytest.mark.parametrize("seed", range(8))
def test_savings_invariants_on_random_tables(seed):
    f = random_fair_table(10, seed=500 + seed)
    wrapped = savings_transform(f)
    assert validate_fairness(wrapped, 10).passed
    values = {}
    for x in strings_up_to(10):
        banked, active = wrapped.state(x)
        values[x.bits] = banked + active
        # After banking the active part is capped and the total is covered
        # by twice the banked part.
        assert active <= 1
        assert banked + active <= 2 * banked
        if len(x) > 0:
            assert banked >= wrapped.state(x.parent())[0]
    # Exact halving along every extension pair.
    for x in strings_up_to(10):
        v = values[x.bits]
        for y in strings_up_to(10 - len(x)):
            assert 2 * values[(x + y).bits] >= v


# ---------------------------------------------------------------------------
# odd/even decomposition


def test_decompose_constant():
    f_odd, f_even = decompose_odd_even(constant(1), 4)
    for x in strings_up_to(4):
        assert f_odd.value(x) == 1
        assert f_even.value(x) == 1


def test_decompose_first_position_strategy():
    # Betting only on position 1 (odd): the even factor is trivial.
    values = {"": Fraction(1), "0": Fraction(2), "1": Fraction(0)}
    for x in strings_up_to(3):
        if len(x) >= 1:
            values[x.bits] = Fraction(2) if x.bits[0] == "0" else Fraction(0)
    f = TableMartingale(3, values)
    f_odd, f_even = decompose_odd_even(f, 3)
    for x in strings_up_to(3):
        assert f_even.value(x) == 1
        assert f_odd.value(x) == f.value(x)


@pytest.mark.parametrize("seed", range(8))
def test_decompose_recompose_exact(seed):
    f = random_fair_table(6, seed=700 + seed)
    f_odd, f_even = decompose_odd_even(f, 6)
    for x in strings_up_to(6):
        assert f_odd.value(x) * f_even.value(x) == f.value(x)
        if len(x) > 0:
            parent = x.parent()
            if len(x) % 2 == 0:
                assert f_odd.value(x) == f_odd.value(parent)
            else:
                assert f_even.value(x) == f_even.value(parent)


@pytest.mark.parametrize("seed", range(4))
def test_decompose_outputs_stay_fair(seed):
    f = random_fair_table(10, seed=800 + seed)
    f_odd, f_even = decompose_odd_even(f, 10)
    assert validate_fairness(f_odd, 10).passed
    assert validate_fairness(f_even, 10).passed


# ---------------------------------------------------------------------------
# fix_oracle


def test_program_martingale_constant():
    m = fix_oracle(dsl.parse("(const 1)"), ExplicitBitSource(B("1")), 100)
    for x in strings_up_to(4):
        assert m.value(x) == 1


def test_program_martingale_bets_toward_oracle():
    program = dsl.parse("(if (= (len) 0) 1 (if (= (bit 1) (oracle 1)) 2 0))")
    m = fix_oracle(program, ExplicitBitSource(B("1")), 100)
    assert m.value(B("1")) == 2
    assert m.value(B("0")) == 0


def test_program_martingale_divergence_carries_string():
    program = dsl.parse("(if (>= (len) 2) (diverge) 1)")
    m = fix_oracle(program, ExplicitBitSource(B("1")), 100)
    with pytest.raises(MartingaleEvalError) as err:
        m.value(B("00"))
    assert err.value.node == B("00")


def test_program_martingale_memo_is_invisible():
    program = dsl.parse("(fold 1 (if (= (bit (pos)) 0) (mul (acc) 2) 0))")
    m = fix_oracle(program, ExplicitBitSource(B("1")), 1000)
    first = m.metered(B("0011"))
    second = m.metered(B("0011"))
    assert first == second
    fresh = fix_oracle(program, ExplicitBitSource(B("1")), 1000)
    assert fresh.metered(B("0011")) == first


# ---------------------------------------------------------------------------
# table text format


def test_table_roundtrip():
    f = random_fair_table(4, seed=99)
    text = table_to_text(f)
    back = table_from_text(text)
    assert back.depth == 4
    for x in strings_up_to(4):
        assert back.value(x) == f.value(x)


def test_table_text_uses_marker_for_empty_string():
    text = table_to_text(constant(1))
    assert "- 1/1" in text


def test_table_text_rejects_incomplete_tables():
    with pytest.raises(ValueError):
        table_from_text("- 1/1\n0 2/1\n")  # missing '1'
    with pytest.raises(ValueError):
        table_from_text("- 1/1\n- 2/1\n")  # duplicate
    with pytest.raises(ValueError):
        table_from_text("")


def test_random_fair_tables_are_fair_and_deterministic():
    a = random_fair_table(8, seed=5)
    b = random_fair_table(8, seed=5)
    for x in strings_up_to(8):
        assert a.value(x) == b.value(x)
    assert validate_fairness(a, 8).passed
