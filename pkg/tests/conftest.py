import numpy as np
import pytest

from transient_lab import SymbolicTransient


def random_transient(rng, n_terms, rate_lo=0.3, gap_lo=0.5, gap_hi=1.5,
                     coeff_lo=0.1, coeff_hi=5.0, rate_start_hi=None):
    """Well-separated random signal: gapped rates, coefficients bounded away from 0."""
    start_hi = rate_start_hi if rate_start_hi is not None else rate_lo + 0.5
    rates = [rng.uniform(rate_lo, start_hi)]
    for _ in range(n_terms - 1):
        rates.append(rates[-1] + rng.uniform(gap_lo, gap_hi))
    coeffs = [float(rng.uniform(coeff_lo, coeff_hi) * rng.choice([-1.0, 1.0]))
              for _ in range(n_terms)]
    return SymbolicTransient(tuple(zip(rates, coeffs)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
