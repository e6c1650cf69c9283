"""Classical Prony fitting of uniform samples to a sum of real exponentials.

The method leans on the fact that p exponential terms sampled uniformly
satisfy a linear recurrence of depth p.  Fitting splits into three linear
stages, each a well-known numerical weak point:

1. least-squares solve of the linear-prediction (Hankel) system for the
   characteristic-polynomial coefficients;
2. polynomial rooting via the companion-matrix eigenvalues; real roots in
   (0, 1) are the decay poles, anything else is flagged and set aside;
3. least-squares Vandermonde solve for the amplitudes, whose condition
   number is recorded because it degrades sharply as poles cluster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient
from .signal_core import SampledSignal

_REAL_ROOT_TOL = 1e-8


@dataclass(frozen=True)
class PronyModel:
    """Fitted poles/rates/amplitudes plus conditioning and validity flags."""

    order: int
    poles: tuple               # z-domain roots kept for the transient model
    rates: tuple               # -log(pole) / step, ascending
    amplitudes: tuple
    vandermonde_condition: float
    flags: tuple = ()
    rejected_roots: tuple = ()  # complex or out-of-range roots, kept visible

    def predict(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        out = np.zeros_like(times)
        for rate, amp in zip(self.rates, self.amplitudes):
            out += amp * np.exp(-rate * times)
        return out


def _companion_roots(monic_low_to_high) -> np.ndarray:
    """Roots of a monic polynomial given coefficients lowest power first."""
    coeffs = np.asarray(monic_low_to_high, dtype=float)
    degree = len(coeffs) - 1
    if degree == 0:
        return np.array([])
    matrix = np.zeros((degree, degree))
    matrix[1:, :-1] = np.eye(degree - 1)
    matrix[:, -1] = -coeffs[:-1] / coeffs[-1]
    return np.linalg.eigvals(matrix)


def prony_fit(signal: SampledSignal, order: int) -> PronyModel:
    """Fit `order` exponential terms to uniformly sampled data.

    Raises RankDeficient only when the prediction system carries no rank at
    all; a merely overestimated order is reduced to the detected rank and
    flagged instead.
    """
    if signal.uniform_step is None:
        raise ValueError("prony_fit needs a uniform sample grid")
    if order < 1:
        raise ValueError("order must be positive")
    values = signal.values
    n = len(values)
    if n < 2 * order:
        raise ValueError(f"need at least {2 * order} samples for order {order}, got {n}")

    step = signal.uniform_step
    flags = []
    p = order
    while True:
        prediction = np.empty((n - p, p))
        for i in range(n - p):
            prediction[i] = values[i:i + p]
        poly, _, rank, _ = np.linalg.lstsq(prediction, -values[p:], rcond=None)
        if rank == p:
            break
        if rank == 0:
            raise RankDeficient("linear-prediction system has rank 0")
        # noiseless data of lower true order: retry at the detected rank
        flags.append(f"order_reduced:{p}->{rank}")
        p = int(rank)

    roots = _companion_roots(np.concatenate([poly, [1.0]]))
    scale = np.maximum(1.0, np.abs(roots.real))
    is_real = np.abs(roots.imag) <= _REAL_ROOT_TOL * scale
    real_roots = roots[is_real].real
    in_range = (real_roots > 0.0) & (real_roots < 1.0)
    kept = np.sort(real_roots[in_range])[::-1]          # descending pole = ascending rate
    rejected = tuple(np.concatenate([roots[~is_real], real_roots[~in_range]]).tolist())
    if len(rejected):
        flags.append("complex_or_out_of_range_roots")
    if len(kept) == 0:
        raise RankDeficient("no real poles in (0, 1) survived root filtering")
    if len(np.unique(kept)) != len(kept):
        flags.append("duplicate_poles")

    rates = -np.log(kept) / step
    vandermonde = kept[None, :] ** np.arange(n)[:, None]
    amplitudes, *_ = np.linalg.lstsq(vandermonde, values, rcond=None)
    # grid may start at t0 > 0; translate amplitudes back to t = 0
    amplitudes = amplitudes * np.exp(rates * signal.times[0])
    singular = np.linalg.svd(vandermonde, compute_uv=False)
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0.0 else float("inf")

    return PronyModel(
        order=int(p),
        poles=tuple(kept.tolist()),
        rates=tuple(rates.tolist()),
        amplitudes=tuple(amplitudes.tolist()),
        vandermonde_condition=condition,
        flags=tuple(flags),
        rejected_roots=rejected,
    )


def vandermonde_condition(rates, times) -> float:
    """Condition number (extreme singular-value ratio) of the amplitude solve."""
    rates = np.asarray(rates, dtype=float)
    times = np.asarray(times, dtype=float)
    if len(rates) == 0:
        raise ValueError("need at least one rate")
    if len(np.unique(rates)) != len(rates):
        raise ValueError("rates must be distinct")
    if len(times) < 2:
        raise ValueError("need at least two sample times")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-12, atol=0.0):
        raise ValueError("times must be uniform")
    poles = np.exp(-rates * steps[0])
    matrix = poles[None, :] ** np.arange(len(times))[:, None]
    singular = np.linalg.svd(matrix, compute_uv=False)
    if singular[-1] == 0.0:
        return float("inf")
    return float(singular[0] / singular[-1])
