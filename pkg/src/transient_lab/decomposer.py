"""Sequential extraction of decay rates and coefficients.

The loop is the same in both modes: read off the slowest remaining rate,
read off its coefficient, subtract the identified term, repeat.  Exact mode
runs it on a symbolic term list where every step is literal arithmetic.
Numeric mode runs it on samples through the tail estimators, with three
policies the idealized loop does not need:

* horizon placement: each iteration fits over the tail window of several
  candidate horizons (the residual trimmed at successively deeper relative
  floors) and keeps the fit whose log-magnitude residual is smallest;
* stopping: residual below a relative floor, a term budget, or a rate that
  collides with one already extracted;
* cyclic re-estimation: after each extraction, every held term is
  re-estimated against the signal minus the other terms.  A sweep feeds
  each term the others' latest values, so the cross-contamination of the
  estimates shrinks multiplicatively, which is what keeps later (faster,
  smaller) terms recoverable in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import Diverging, NonDecaying, SignalVanished
from .signal_core import SignalSource, SymbolicTransient, evaluate_many, subtract_term
from .tail_limits import TailFitConfig, estimate_coefficient, estimate_rate

TERMINATION_REASONS = ("residual_floor", "max_terms", "signal_vanished", "rate_collision")


@dataclass(frozen=True)
class StoppingPolicy:
    """Termination and windowing policy for numeric decomposition.

    residual_floor: stop once the tail sup norm of the residual drops below
        this fraction of the original signal's tail sup norm over the same
        window.  1e-8 sits safely above the double-precision leftovers of
        swept subtractions while staying far below any honest term.
    horizon_floors: candidate relative floors for per-iteration horizon
        trimming; the fit with the smallest log-magnitude residual wins.
    refine_sweeps: extra re-estimation sweeps after extraction ends.
    eval_points: grid density when the input carries no sample grid.
    """

    residual_floor: float = 1e-8
    max_terms: int = 16
    rate_merge_tol: float = 1e-3
    horizon_floors: tuple = (1e-4, 1e-6, 1e-8, 1e-10, 1e-12)
    refine_sweeps: int = 2
    eval_points: int = 4001

    def __post_init__(self):
        if not 0.0 < self.residual_floor < 1.0:
            raise ValueError("residual_floor must lie in (0, 1)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")
        if self.rate_merge_tol <= 0.0:
            raise ValueError("rate_merge_tol must be positive")


@dataclass(frozen=True)
class TermDiagnostics:
    rate_residual_rms: float
    window: Optional[tuple]
    mode: str


@dataclass(frozen=True)
class DecompositionResult:
    terms: tuple                      # ((rate, coeff), ...) rates ascending
    diagnostics: tuple                # TermDiagnostics per term
    terminal_residual_norm: float
    termination_reason: str
    flagged: Optional[str] = None
    iteration_tail_norms: tuple = ()  # residual sup norm per iteration, fixed window

    def __post_init__(self):
        rates = [r for r, _ in self.terms]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValueError("recovered rates must be strictly increasing")
        if self.terminal_residual_norm < 0.0:
            raise ValueError("terminal_residual_norm must be non-negative")
        if self.termination_reason not in TERMINATION_REASONS:
            raise ValueError(f"unknown termination reason {self.termination_reason!r}")


def decompose_exact(signal: SymbolicTransient) -> DecompositionResult:
    """Run the extraction loop on a symbolic signal with exact arithmetic.

    Requires a canonical signal (nonzero coefficients, which the type
    already keeps sorted).  Each iteration takes the slowest remaining
    term and subtracts it exactly, so the input terms come back verbatim.
    """
    if not signal.is_canonical:
        raise ValueError("decompose_exact needs a canonical signal; call canonicalize() first")
    residual = SignalSource.from_symbolic(signal)
    terms = []
    while residual.symbolic.terms:
        rate, coeff = residual.symbolic.terms[0]
        terms.append((rate, coeff))
        residual = subtract_term(residual, rate, coeff)
    diags = tuple(TermDiagnostics(rate_residual_rms=0.0, window=None, mode="exact")
                  for _ in terms)
    return DecompositionResult(
        terms=tuple(terms),
        diagnostics=diags,
        terminal_residual_norm=0.0,
        termination_reason="signal_vanished",
        iteration_tail_norms=tuple(abs(c) for _, c in terms),
    )


def reconstruct(result: DecompositionResult) -> SymbolicTransient:
    """Symbolic signal built from the recovered terms."""
    return SymbolicTransient(result.terms)


def _noise_level(values) -> float:
    """Robust noise scale from fourth differences of the trailing half.

    The trailing half is where the transient has decayed, so the smooth
    contribution O(x * (rate*step)^4) is negligible there while i.i.d.
    noise passes through fourth differences with variance 70."""
    tail = np.asarray(values)[len(values) // 2:]
    if len(tail) < 9:
        return 0.0
    fourth = np.diff(tail, n=4)
    mad = float(np.median(np.abs(fourth - np.median(fourth))))
    return mad / (0.6745 * math.sqrt(70.0))


class _NumericState:
    """Grid-resident bookkeeping for one numeric decomposition."""

    def __init__(self, source, support, cfg, stop):
        self.cfg = cfg
        self.stop = stop
        self.source = source
        self.t_lo, self.t_hi = float(support[0]), float(support[1])
        if not (self.t_hi > self.t_lo >= 0.0) or not math.isfinite(self.t_hi):
            raise ValueError(f"support must satisfy 0 <= t_lo < t_hi < inf, got {support}")
        if source.grid is not None:
            sel = (source.grid >= self.t_lo) & (source.grid <= self.t_hi)
            self.grid = source.grid[sel]
        else:
            self.grid = np.linspace(self.t_lo, self.t_hi, stop.eval_points)
        if len(self.grid) < cfg.min_window_points:
            raise ValueError("support holds too few samples for the configured window")
        self.base_values = evaluate_many(source, self.grid)
        self.noise_sigma = _noise_level(self.base_values)
        self.terms = []          # [(rate, coeff)]
        self.term_info = {}      # rate -> (rms, window)

    # -- residual bookkeeping -------------------------------------------

    def residual_source(self, skip=None):
        """Residual as a SignalSource built by chained term subtraction."""
        out = self.source
        for i, (rate, coeff) in enumerate(self.terms):
            if i != skip:
                out = subtract_term(out, rate, coeff)
        return out

    def residual_values(self, skip=None):
        out = self.base_values.copy()
        for i, (rate, coeff) in enumerate(self.terms):
            if i != skip:
                out -= coeff * np.exp(-rate * self.grid)
        return out

    def tail_window(self, values):
        """Mask of the tail window over the trimmed horizon of these values."""
        mag = np.abs(values)
        peak = mag.max()
        if peak == 0.0:
            return None
        t_hi = self.grid[mag >= self.stop.residual_floor * peak][-1]
        w_start = t_hi - self.cfg.window_fraction * (t_hi - self.t_lo)
        return (self.grid >= w_start) & (self.grid <= t_hi)

    def floor_hit(self, values):
        window = self.tail_window(values)
        if window is None:
            return True
        sup_resid = float(np.abs(values[window]).max())
        sup_base = float(np.abs(self.base_values[window]).max())
        return sup_resid < self.stop.residual_floor * sup_base

    # -- estimation ------------------------------------------------------

    def estimate_term(self, residual, values):
        """Best (rate, coeff, rms, window) over the candidate horizons.

        Fits the trailing window of each trimmed horizon and keeps the rate
        fit whose log-magnitude residual is smallest; the coefficient is then
        read off the winning window.
        """
        mag = np.abs(values)
        peak = mag.max()
        if peak == 0.0:
            raise SignalVanished("residual is identically zero")
        floors = list(self.stop.horizon_floors)
        if self.noise_sigma > 1e-9 * peak:
            # trim where the residual sinks into the measured noise
            floors.append(min(0.5, 5.0 * self.noise_sigma / peak))
        best = None
        last_error = None
        for rel in floors:
            t_hi = float(self.grid[mag >= rel * peak][-1])
            if t_hi <= self.t_lo:
                continue
            try:
                est = estimate_rate(residual, (self.t_lo, t_hi), self.cfg)
            except (SignalVanished, NonDecaying) as exc:
                last_error = exc
                continue
            # a log-magnitude spread beyond 0.5 means the window straddles a
            # noise floor or a sign flip, not an exponential
            if est.residual_rms > 0.5:
                continue
            if best is None or est.residual_rms < best.residual_rms:
                best = est
        if best is None:
            raise last_error if last_error is not None else SignalVanished(
                "no window fits a decaying exponential above the floor")
        coeff = estimate_coefficient(residual, best.rate, (self.t_lo, best.window[1]), self.cfg)
        return best.rate, coeff, best.residual_rms, best.window

    def collides(self, rate, skip=None):
        return any(abs(rate - r) < self.stop.rate_merge_tol
                   for i, (r, _) in enumerate(self.terms) if i != skip)

    def sweep(self):
        """Re-estimate every held term against the signal minus the others."""
        for j in range(len(self.terms)):
            try:
                rate, coeff, rms, window = self.estimate_term(
                    self.residual_source(skip=j), self.residual_values(skip=j))
            except (SignalVanished, NonDecaying, Diverging):
                continue
            if rate <= 0.0 or self.collides(rate, skip=j):
                continue
            old_rate = self.terms[j][0]
            self.term_info.pop(old_rate, None)
            self.terms[j] = (rate, coeff)
            self.term_info[rate] = (rms, window)
        self.terms.sort(key=lambda rc: rc[0])

    def prune(self):
        """Drop terms whose removal already satisfies the residual floor."""
        for j in range(len(self.terms) - 1, -1, -1):
            if self.floor_hit(self.residual_values(skip=j)):
                rate, _ = self.terms.pop(j)
                self.term_info.pop(rate, None)


def decompose_numeric(source: SignalSource, support, cfg: TailFitConfig = None,
                      stop: StoppingPolicy = None) -> DecompositionResult:
    """Extract (rate, coeff) terms from samples or an evaluatable signal.

    Terms come back in ascending rate order, which is also discovery order:
    every iteration isolates the slowest rate remaining in the residual.
    """
    cfg = cfg or TailFitConfig(fit_order="richardson_2")
    stop = stop or StoppingPolicy()
    state = _NumericState(source, support, cfg, stop)

    reason = "max_terms"
    flagged = None
    tail_norms = []
    # fixed reference window: successive residual sup norms are only
    # comparable over one window, and the first tail window is where the
    # dominant term was isolated
    window0 = state.tail_window(state.base_values)
    for _ in range(stop.max_terms):
        values = state.residual_values()
        window = state.tail_window(values)
        if window is None:
            reason = "signal_vanished"
            break
        if window0 is not None:
            tail_norms.append(float(np.abs(values[window0]).max()))
        if state.floor_hit(values):
            reason = "residual_floor"
            break
        try:
            rate, coeff, rms, fit_window = state.estimate_term(state.residual_source(), values)
        except SignalVanished:
            reason = "signal_vanished"
            break
        except (NonDecaying, Diverging) as exc:
            if not state.terms:
                raise
            reason = "rate_collision"
            flagged = f"non_decaying_residual: {exc}"
            break
        if rate <= 0.0:
            reason = "rate_collision"
            flagged = f"non-positive rate estimate {rate:.6g}"
            break
        if state.collides(rate):
            reason = "rate_collision"
            flagged = f"estimated rate {rate:.6g} within merge tolerance of an extracted rate"
            break
        state.terms.append((rate, coeff))
        state.terms.sort(key=lambda rc: rc[0])
        state.term_info[rate] = (rms, fit_window)
        if len(state.terms) > 1:
            state.sweep()

    state.prune()
    for _ in range(stop.refine_sweeps):
        if state.terms:
            state.sweep()

    final_values = state.residual_values()
    window = state.tail_window(final_values)
    terminal = float(np.abs(final_values[window]).max()) if window is not None else 0.0

    diags = tuple(
        TermDiagnostics(
            rate_residual_rms=state.term_info.get(rate, (math.nan, None))[0],
            window=state.term_info.get(rate, (math.nan, None))[1],
            mode="numeric",
        )
        for rate, _ in state.terms
    )
    return DecompositionResult(
        terms=tuple(state.terms),
        diagnostics=diags,
        terminal_residual_norm=terminal,
        termination_reason=reason,
        flagged=flagged,
        iteration_tail_norms=tuple(tail_norms),
    )
