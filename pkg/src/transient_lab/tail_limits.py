"""Finite-horizon estimators for the two tail limits of a decaying signal.

For x(t) = sum_n coeff_n exp(-rate_n t) the far tail is governed by the
slowest term, so

    -log|x(t)| / t        ->  rate_1      (slowest-rate limit)
    exp(rate_1 t) x(t)    ->  coeff_1     (coefficient limit)

as t grows.  On a finite window the raw sequences carry a contamination
term of size roughly exp(-(rate_2 - rate_1) t), so instead of reading the
sequences directly we fit a straight line to log|x| over a tail window
(exact for a single exponential, and the log intercept bias cancels), and
optionally accelerate with iterated Aitken extrapolation over shifted
sub-windows: on a uniform grid the sub-window statistics of the
contamination form an exact geometric sequence, which one Aitken step
eliminates.

Window placement, floors, and extrapolation order all live in
TailFitConfig; the limits themselves are ideal and the estimation policy
is a deliberate design surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Diverging, NonDecaying, SignalVanished
from .signal_core import SignalSource, evaluate_many

# evaluation density for sources that do not carry their own grid
_DEFAULT_WINDOW_POINTS = 513

_FIT_ORDERS = {"slope_fit": 1, "richardson_1": 3, "richardson_2": 5}


@dataclass(frozen=True)
class TailFitConfig:
    """Window and extrapolation policy for the tail estimators.

    window_fraction: trailing portion of the support used as the fit window.
    min_window_points: fewest usable samples before giving up.
    fit_order: "slope_fit" for a single least-squares line, "richardson_1"
        or "richardson_2" for one or two Aitken eliminations over shifted
        sub-windows.
    abs_floor: samples below abs_floor times the window's peak magnitude
        are skipped (log|x| is undefined at zeros and meaningless below
        rounding).
    diverge_factor: growth of the reweighted tail, across the window,
        beyond which the coefficient estimate reports Diverging.
    """

    window_fraction: float = 0.5
    min_window_points: int = 8
    fit_order: str = "slope_fit"
    abs_floor: float = 1e-13
    diverge_factor: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.window_fraction < 1.0:
            raise ValueError("window_fraction must lie in (0, 1)")
        if self.min_window_points < 4:
            raise ValueError("min_window_points must be at least 4")
        if self.fit_order not in _FIT_ORDERS:
            raise ValueError(f"fit_order must be one of {sorted(_FIT_ORDERS)}")
        if self.abs_floor <= 0.0:
            raise ValueError("abs_floor must be positive")
        if self.diverge_factor <= 1.0:
            raise ValueError("diverge_factor must exceed 1")


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    intercept: float          # fitted log-magnitude at t = 0
    window: tuple             # (t_start, t_end) actually used
    residual_rms: float       # rms of log|x| about the fitted line


@dataclass(frozen=True)
class RateSequence:
    """Raw slowest-rate sequence (t, -log|x(t)|/t) for diagnostics."""
    points: np.ndarray        # shape (n, 2)
    skipped_times: np.ndarray


def _validate_support(support):
    t_lo, t_hi = float(support[0]), float(support[1])
    if not (t_hi > t_lo >= 0.0) or not math.isfinite(t_hi):
        raise ValueError(f"support must satisfy 0 <= t_lo < t_hi < inf, got {support}")
    return t_lo, t_hi


def _sample_times(source: SignalSource, lo: float, hi: float) -> np.ndarray:
    if source.grid is not None:
        sel = (source.grid >= lo) & (source.grid <= hi)
        ts = source.grid[sel]
        if len(ts) >= 2:
            return ts
    return np.linspace(lo, hi, _DEFAULT_WINDOW_POINTS)


def _window_samples(source, support, cfg):
    """Times, values, and the window bounds for the trailing fit window."""
    t_lo, t_hi = _validate_support(support)
    w_start = t_hi - cfg.window_fraction * (t_hi - t_lo)
    ts = _sample_times(source, w_start, t_hi)
    xs = evaluate_many(source, ts)
    finite = np.isfinite(xs)
    return ts[finite], xs[finite], (w_start, t_hi)


def _kept(ts, xs, cfg):
    """Drop samples below the relative magnitude floor."""
    mag = np.abs(xs)
    peak = mag.max() if len(mag) else 0.0
    if peak == 0.0:
        raise SignalVanished("signal is identically zero on the tail window")
    keep = mag > cfg.abs_floor * peak
    if keep.sum() < cfg.min_window_points:
        raise SignalVanished(
            f"only {int(keep.sum())} tail samples above the floor, "
            f"need {cfg.min_window_points}")
    return ts[keep], xs[keep]


def _line_fit(t, y):
    tm, ym = t.mean(), y.mean()
    dt = t - tm
    denom = float(np.dot(dt, dt))
    slope = float(np.dot(dt, y - ym)) / denom
    return slope, ym - slope * tm


def _aitken_pass(seq):
    out = []
    for s0, s1, s2 in zip(seq, seq[1:], seq[2:]):
        d1, d2 = s1 - s0, s2 - s1
        den = d2 - d1
        if den == 0.0 or not math.isfinite(den):
            out.append(s2)
            continue
        corr = d2 * d2 / den
        # a correction larger than the observed differences is extrapolation
        # noise, not a geometric transient; keep the latest raw value
        if not math.isfinite(corr) or abs(corr) > 2.0 * (abs(d1) + abs(d2)):
            out.append(s2)
        else:
            out.append(s2 - corr)
    return out


def _extrapolate(seq):
    seq = list(seq)
    while len(seq) >= 3:
        seq = _aitken_pass(seq)
    return seq[-1]


def _index_blocks(n, nsub, min_points):
    """Equal-length, equal-stride index blocks spanning 0..n-1.

    Equal strides keep the grid offsets inside every block identical, which
    is what makes the per-block contamination exactly geometric on uniform
    grids (and therefore removable by Aitken).
    """
    if nsub == 1:
        return [(0, n)]
    length = n // 2
    step = (n - length) // (nsub - 1)
    if step < 1 or length < min_points:
        return None
    return [(j * step, j * step + length) for j in range(nsub)]


def estimate_rate(source: SignalSource, support, cfg: TailFitConfig = None) -> RateEstimate:
    """Slowest decay rate from a line fit to log|x| over the tail window.

    Exact (to rounding) for a single exponential.  Raises SignalVanished
    when too few samples clear the floor and NonDecaying when the fitted
    slope is non-negative.
    """
    cfg = cfg or TailFitConfig()
    ts, xs, window = _window_samples(source, support, cfg)
    ts, xs = _kept(ts, xs, cfg)
    logs = np.log(np.abs(xs))

    nsub = _FIT_ORDERS[cfg.fit_order]
    blocks = _index_blocks(len(ts), nsub, cfg.min_window_points)
    if blocks is None or nsub == 1:
        slope, icpt = _line_fit(ts, logs)
        rate = -slope
    else:
        slopes = [_line_fit(ts[a:b], logs[a:b])[0] for a, b in blocks]
        rate = -_extrapolate(slopes)
        icpt = float(np.mean(logs + rate * ts))
    if not math.isfinite(rate) or rate <= 0.0:
        raise NonDecaying(f"fitted tail slope is non-negative (rate {rate})")
    rms = float(np.sqrt(np.mean((logs - (icpt - rate * ts)) ** 2)))
    return RateEstimate(rate=float(rate), intercept=float(icpt), window=window, residual_rms=rms)


def _reweighted(ts, xs, rate):
    """exp(rate*t) * x(t) computed in log space to dodge overflow."""
    out = np.zeros_like(xs)
    nz = xs != 0.0
    out[nz] = np.sign(xs[nz]) * np.exp(rate * ts[nz] + np.log(np.abs(xs[nz])))
    return out


def estimate_coefficient(source: SignalSource, rate: float, support,
                         cfg: TailFitConfig = None) -> float:
    """Leading coefficient: tail-window average of exp(rate*t) x(t).

    With richardson variants the averages over shifted sub-windows are
    Aitken-extrapolated.  Raises Diverging when the reweighted tail grows
    by more than diverge_factor across the window (the rate was too big).
    """
    cfg = cfg or TailFitConfig()
    if rate <= 0.0:
        raise ValueError(f"rate must be positive, got {rate}")
    ts, xs, _ = _window_samples(source, support, cfg)
    ts, xs = _kept(ts, xs, cfg)
    values = _reweighted(ts, xs, rate)
    if not np.all(np.isfinite(values)):
        raise Diverging("reweighted tail overflowed; decay rate is overestimated")

    quarter = max(len(values) // 4, 1)
    head = float(np.mean(np.abs(values[:quarter])))
    tail = float(np.mean(np.abs(values[-quarter:])))
    if head > 0.0 and tail / head > cfg.diverge_factor:
        raise Diverging(
            f"reweighted tail grows by {tail / head:.3g} across the window "
            f"(limit {cfg.diverge_factor}); decay rate is overestimated")

    nsub = _FIT_ORDERS[cfg.fit_order]
    blocks = _index_blocks(len(values), nsub, cfg.min_window_points)
    if blocks is None or nsub == 1:
        return float(np.mean(values))
    return float(_extrapolate([float(np.mean(values[a:b])) for a, b in blocks]))


def rate_sequence(source: SignalSource, support, cfg: TailFitConfig = None) -> RateSequence:
    """Raw sequence -log|x(t)|/t over the support, for plots and diagnostics.

    Entries where the value is zero or non-finite are skipped and reported
    in skipped_times rather than raising.
    """
    cfg = cfg or TailFitConfig()
    t_lo, t_hi = _validate_support(support)
    ts = _sample_times(source, t_lo, t_hi)
    ts = ts[ts > 0.0]
    xs = evaluate_many(source, ts)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = -np.log(np.abs(xs)) / ts
    good = np.isfinite(vals)
    points = np.column_stack([ts[good], vals[good]])
    return RateSequence(points=points, skipped_times=ts[~good])


def save_rate_sequence_csv(sequence: RateSequence, path) -> None:
    """Write the raw sequence as two columns "t,value" for plotting."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "value"])
        for t, value in sequence.points:
            writer.writerow([repr(float(t)), repr(float(value))])


def shrink_support(source: SignalSource, support, rel_floor: float = 1e-8,
                   eval_points: int = 2049):
    """Trim the horizon to where |x| still clears rel_floor of its peak.

    Past that point the values carry no usable precision relative to the
    signal's own scale (and, inside a decomposition, are dominated by the
    leftovers of earlier subtractions).
    """
    t_lo, t_hi = _validate_support(support)
    if source.grid is not None:
        sel = (source.grid >= t_lo) & (source.grid <= t_hi)
        ts = source.grid[sel]
        if len(ts) < 2:
            ts = np.linspace(t_lo, t_hi, eval_points)
    else:
        ts = np.linspace(t_lo, t_hi, eval_points)
    mag = np.abs(evaluate_many(source, ts))
    peak = mag.max() if len(mag) else 0.0
    if peak == 0.0:
        raise SignalVanished("signal is identically zero on the support")
    above = ts[mag >= rel_floor * peak]
    new_hi = float(above[-1])
    if new_hi <= t_lo:
        return t_lo, t_hi
    return t_lo, new_hi
