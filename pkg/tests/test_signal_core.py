import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transient_lab import (OutOfSupport, SampledSignal, SignalSource,
                           SymbolicTransient, combine, evaluate,
                           inner_product, l2_norm_bound_check, load_samples_csv,
                           load_signal_spec, save_samples_csv, save_signal_spec,
                           subtract_term, synthesize_samples)

from conftest import random_transient


def closed_form_inner(s: SymbolicTransient, u: SymbolicTransient) -> float:
    """Independent oracle: <x, y> = sum over term pairs of a*b / (r + q)."""
    return sum(a * b / (r + q) for r, a in s.terms for q, b in u.terms)


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

class TestSymbolicTransient:
    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError, match="positive"):
            SymbolicTransient(((0.0, 1.0),))
        with pytest.raises(ValueError, match="positive"):
            SymbolicTransient(((-1.0, 1.0),))

    def test_rejects_unsorted_and_duplicate_rates(self):
        with pytest.raises(ValueError, match="increasing"):
            SymbolicTransient(((2.0, 1.0), (1.0, 1.0)))
        with pytest.raises(ValueError, match="increasing"):
            SymbolicTransient(((1.0, 1.0), (1.0, 2.0)))

    def test_canonical_flag(self):
        assert SymbolicTransient(((1.0, 2.0),)).is_canonical
        assert not SymbolicTransient(((1.0, 0.0), (2.0, 1.0))).is_canonical
        assert SymbolicTransient(((1.0, 0.0), (2.0, 1.0))).canonicalize().terms == ((2.0, 1.0),)

    def test_empty_signal_is_zero(self):
        zero = SymbolicTransient()
        assert zero(3.7) == 0.0
        assert zero.min_rate is None


class TestSampledSignal:
    def test_uniform_step_detected(self):
        sig = SampledSignal(times=np.arange(0.0, 1.0, 0.125), values=np.zeros(8))
        assert sig.uniform_step == pytest.approx(0.125, rel=1e-12)

    def test_nonuniform_has_no_step(self):
        sig = SampledSignal(times=np.array([0.0, 1.0, 3.0]), values=np.zeros(3))
        assert sig.uniform_step is None

    def test_rejects_bad_grids(self):
        with pytest.raises(ValueError, match="increasing"):
            SampledSignal(times=np.array([0.0, 2.0, 1.0]), values=np.zeros(3))
        with pytest.raises(ValueError, match="mismatch"):
            SampledSignal(times=np.array([0.0, 1.0]), values=np.zeros(3))
        with pytest.raises(ValueError, match="t >= 0"):
            SampledSignal(times=np.array([-1.0, 1.0]), values=np.zeros(2))


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

class TestEvaluate:
    def test_single_term_at_zero(self):
        src = SignalSource.from_symbolic(SymbolicTransient(((1.0, 1.0),)))
        assert evaluate(src, 0.0) == 1.0

    def test_sum_of_coefficients_at_zero(self):
        src = SignalSource.from_symbolic(SymbolicTransient(((1.0, 2.0), (2.0, 3.0))))
        assert evaluate(src, 0.0) == 5.0

    def test_half_life(self):
        src = SignalSource.from_symbolic(SymbolicTransient(((1.0, 1.0),)))
        assert evaluate(src, math.log(2.0)) == pytest.approx(0.5, abs=1e-15)

    def test_sampled_interpolates_linearly(self):
        sig = SampledSignal(times=np.array([0.0, 1.0, 2.0]), values=np.array([0.0, 2.0, 0.0]))
        src = SignalSource.from_sampled(sig)
        assert evaluate(src, 0.5) == pytest.approx(1.0)
        assert evaluate(src, 1.0) == 2.0

    def test_sampled_out_of_support(self):
        sig = SampledSignal(times=np.array([0.0, 1.0]), values=np.array([1.0, 0.5]))
        src = SignalSource.from_sampled(sig)
        with pytest.raises(OutOfSupport):
            evaluate(src, 2.0)

    def test_negative_time_rejected(self):
        src = SignalSource.from_symbolic(SymbolicTransient(((1.0, 1.0),)))
        with pytest.raises(ValueError):
            evaluate(src, -0.1)

    def test_evaluator_variant_delegates(self):
        src = SignalSource.from_evaluator(lambda ts: np.exp(-2.0 * np.asarray(ts)))
        assert evaluate(src, 1.0) == pytest.approx(math.exp(-2.0))


# ---------------------------------------------------------------------------
# subtract_term
# ---------------------------------------------------------------------------

class TestSubtractTerm:
    def test_exact_cancellation(self):
        src = SignalSource.from_symbolic(SymbolicTransient(((1.0, 2.0), (2.0, 3.0))))
        out = subtract_term(src, 1.0, 2.0)
        assert out.symbolic.terms == ((2.0, 3.0),)

    def test_coefficient_arithmetic(self):
        src = SignalSource.from_symbolic(SymbolicTransient(((1.0, 2.0),)))
        out = subtract_term(src, 1.0, 0.5)
        assert out.symbolic.terms == ((1.0, 1.5),)

    def test_new_rate_inserted_negated(self):
        src = SignalSource.from_symbolic(SymbolicTransient(((2.0, 3.0),)))
        out = subtract_term(src, 1.0, 0.25)
        assert out.symbolic.terms == ((1.0, -0.25), (2.0, 3.0))

    def test_evaluator_variant(self):
        src = SignalSource.from_evaluator(
            lambda ts: np.exp(-np.asarray(ts)) + np.exp(-3.0 * np.asarray(ts)))
        out = subtract_term(src, 1.0, 1.0)
        assert evaluate(out, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_sampled_variant_matches_contract_between_nodes(self):
        sig = synthesize_samples(SymbolicTransient(((1.0, 2.0),)), np.linspace(0, 5, 11))
        src = SignalSource.from_sampled(sig)
        out = subtract_term(src, 2.0, 0.7)
        t = 0.37
        assert evaluate(out, t) == pytest.approx(evaluate(src, t) - 0.7 * math.exp(-2.0 * t),
                                                 abs=1e-15)

    def test_min_rate_moves_up(self, rng):
        for _ in range(20):
            sig = random_transient(rng, 3)
            src = SignalSource.from_symbolic(sig)
            r1, c1 = sig.terms[0]
            out = subtract_term(src, r1, c1)
            assert out.symbolic.min_rate == sig.terms[1][0]


# ---------------------------------------------------------------------------
# inner_product and the square-integrability bound
# ---------------------------------------------------------------------------

class TestInnerProduct:
    def test_unit_exponential(self):
        src = SignalSource.from_symbolic(SymbolicTransient(((1.0, 1.0),)))
        assert inner_product(src, src) == pytest.approx(0.5, abs=1e-10)

    def test_mixed_rates(self):
        f = SignalSource.from_symbolic(SymbolicTransient(((1.0, 1.0),)))
        g = SignalSource.from_symbolic(SymbolicTransient(((2.0, 1.0),)))
        assert inner_product(f, g) == pytest.approx(1.0 / 3.0, abs=1e-10)

    def test_two_term_closed_form(self):
        sig = SymbolicTransient(((1.0, 2.0), (2.0, 3.0)))
        src = SignalSource.from_symbolic(sig)
        expected = closed_form_inner(sig, sig)
        assert expected == pytest.approx(8.25, abs=1e-12)   # independent arithmetic
        assert inner_product(src, src) == pytest.approx(expected, abs=1e-9)

    def test_symmetry_and_bilinearity(self, rng):
        for _ in range(10):
            s, u = random_transient(rng, 2), random_transient(rng, 3)
            fs, fu = SignalSource.from_symbolic(s), SignalSource.from_symbolic(u)
            assert inner_product(fs, fu) == pytest.approx(inner_product(fu, fs), abs=1e-12)
            both = SignalSource.from_symbolic(combine(2.0, s, -0.5, u))
            expected = 2.0 * inner_product(fs, fu) - 0.5 * inner_product(fu, fu)
            assert inner_product(both, fu) == pytest.approx(expected, rel=1e-9, abs=1e-9)

    def test_quadrature_failure_propagates(self):
        from transient_lab import QuadratureFailure
        bad = SignalSource.from_evaluator(lambda ts: np.full_like(np.asarray(ts), np.nan))
        with pytest.raises(QuadratureFailure):
            inner_product(bad, bad)


class TestL2Bound:
    def test_single_term_tight(self):
        assert l2_norm_bound_check(SymbolicTransient(((1.0, 1.0),)))

    def test_two_term_closed_forms(self):
        sig = SymbolicTransient(((1.0, 2.0), (2.0, 3.0)))
        assert closed_form_inner(sig, sig) == pytest.approx(8.25)
        assert sig.coefficient_l1() ** 2 / (2 * sig.min_rate) == pytest.approx(12.5)
        assert l2_norm_bound_check(sig)

    def test_slow_rate_equality_case(self):
        assert l2_norm_bound_check(SymbolicTransient(((0.1, 10.0),)))

    def test_random_signals_satisfy_bound(self, rng):
        for _ in range(20):
            assert l2_norm_bound_check(random_transient(rng, int(rng.integers(1, 5))))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            l2_norm_bound_check(SymbolicTransient())


# ---------------------------------------------------------------------------
# synthesize_samples
# ---------------------------------------------------------------------------

class TestSynthesize:
    def test_exact_values(self):
        sig = synthesize_samples(SymbolicTransient(((1.0, 1.0),)), [0.0, 1.0])
        assert sig.values[0] == 1.0
        assert sig.values[1] == pytest.approx(math.exp(-1.0), abs=1e-16)

    def test_seeded_noise_is_deterministic(self):
        s = SymbolicTransient(((1.0, 1.0),))
        a = synthesize_samples(s, [0.0, 1.0], noise_sigma=0.1, seed=7)
        b = synthesize_samples(s, [0.0, 1.0], noise_sigma=0.1, seed=7)
        assert np.array_equal(a.values, b.values)
        c = synthesize_samples(s, [0.0, 1.0], noise_sigma=0.1, seed=8)
        assert not np.array_equal(a.values, c.values)

    def test_zero_signal(self):
        sig = synthesize_samples(SymbolicTransient(), np.linspace(0, 1, 5))
        assert np.array_equal(sig.values, np.zeros(5))


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

rate_lists = st.lists(st.floats(0.05, 20.0), min_size=1, max_size=5, unique=True)


@given(rates=rate_lists,
       coeffs=st.lists(st.floats(-10.0, 10.0), min_size=5, max_size=5),
       t=st.floats(0.0, 50.0))
@settings(max_examples=200, deadline=None)
def test_vanishing_bound(rates, coeffs, t):
    terms = tuple(sorted((r, c) for r, c in zip(rates, coeffs)))
    sig = SymbolicTransient(terms)
    bound = math.exp(-sig.min_rate * t) * sig.coefficient_l1()
    assert abs(sig(t)) <= bound * (1.0 + 1e-12) + 1e-300


@given(data=st.data())
@settings(max_examples=150, deadline=None)
def test_linearity_within_ulps(data):
    n = data.draw(st.integers(1, 3))
    rates = sorted(data.draw(st.lists(st.floats(0.1, 5.0), min_size=n, max_size=n,
                                      unique=True)))
    alphas = data.draw(st.lists(st.floats(0.1, 2.0), min_size=n, max_size=n))
    betas = data.draw(st.lists(st.floats(0.1, 2.0), min_size=n, max_size=n))
    a = data.draw(st.floats(0.25, 2.0))
    b = data.draw(st.floats(0.25, 2.0))
    t = data.draw(st.floats(0.0, 10.0))
    s = SymbolicTransient(tuple(zip(rates, alphas)))
    u = SymbolicTransient(tuple(zip(rates, betas)))
    lhs = combine(a, s, b, u)(t)
    rhs = a * s(t) + b * u(t)
    assert abs(lhs - rhs) <= 4.0 * math.ulp(max(abs(lhs), abs(rhs), 1e-300))


def test_uniform_tail_bound(rng):
    grid = np.linspace(0.0, 20.0, 200)
    for _ in range(20):
        sig = random_transient(rng, int(rng.integers(2, 6)))
        full = sig(grid)
        for depth in range(len(sig.terms) + 1):
            partial = SymbolicTransient(sig.terms[:depth])(grid)
            tail_l1 = sum(abs(c) for _, c in sig.terms[depth:])
            assert np.abs(full - partial).max() <= tail_l1 * (1 + 1e-12) + 1e-15


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

class TestFileFormats:
    def test_spec_round_trip(self, tmp_path):
        sig = SymbolicTransient(((0.5, -1.25), (2.0, 3.5)))
        path = tmp_path / "sig.json"
        save_signal_spec(sig, path)
        assert load_signal_spec(path).terms == sig.terms

    def test_spec_rejects_unsorted(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"terms": [{"rate": 2.0, "coeff": 1.0}, {"rate": 1.0, "coeff": 1.0}]}')
        with pytest.raises(ValueError, match=r"terms\[1\].rate"):
            load_signal_spec(path)

    def test_spec_rejects_nonpositive_rate(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"terms": [{"rate": -1.0, "coeff": 1.0}]}')
        with pytest.raises(ValueError, match=r"terms\[0\].rate"):
            load_signal_spec(path)

    def test_spec_names_missing_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"terms": [{"rate": 1.0}]}')
        with pytest.raises(ValueError, match="coeff"):
            load_signal_spec(path)

    def test_samples_round_trip(self, tmp_path):
        sig = synthesize_samples(SymbolicTransient(((1.0, 2.0),)), np.linspace(0, 3, 7),
                                 noise_sigma=0.01, seed=3)
        path = tmp_path / "samples.csv"
        save_samples_csv(sig, path)
        back = load_samples_csv(path)
        assert np.array_equal(back.times, sig.times)
        assert np.array_equal(back.values, sig.values)

    def test_samples_reject_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,value\n0.0,1.0\n")
        with pytest.raises(ValueError, match="header"):
            load_samples_csv(path)
