"""Beaconing detection over binned flow series.

The primary detector scores each (src, dst) pair by the fraction of
non-DC spectral power captured by the harmonic comb of a fundamental
frequency, searched over a small grid of bin widths and phase offsets.
A self-contained autocorrelation scorer acts as an independent check
on the recovered period.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import Hypothesis, HypKind, pred, telemetry_ref
from .telemetry import HttpFlow

log = logging.getLogger(__name__)

HTTP_SOURCE = "http"


class DetectorError(ValueError):
    """Invalid detector parameterization."""


@dataclass(frozen=True)
class BeaconDetectionParams:
    bin_width: float = 300.0
    window: float = 604800.0
    min_events: int = 8
    threshold: float = 0.6
    max_period: float = 86400.0

    def __post_init__(self) -> None:
        if self.bin_width <= 0:
            raise DetectorError("bin_width must be positive")
        if self.window < 2 * self.max_period:
            raise DetectorError("window must cover at least two max_period spans")
        if self.min_events < 4:
            raise DetectorError("min_events must be at least 4")
        if not (0 < self.threshold <= 1):
            raise DetectorError("threshold must be in (0, 1]")
        if self.max_period <= 2 * self.bin_width:
            raise DetectorError("max_period must exceed two bins")


@dataclass(frozen=True)
class PeriodicityResult:
    score: float
    dominant_period: Optional[float]
    n_events: int


def _comb_teeth(f0: float, k_hi: int) -> np.ndarray:
    h = np.arange(1, int(np.floor(k_hi / f0)) + 1)
    return np.unique(np.rint(h * f0).astype(int))


def _periodicity(
    counts: np.ndarray, bin_width: float, max_period: float, min_events: int
) -> tuple[float, Optional[float]]:
    """Comb-power fraction and the fitted period, in seconds."""
    n = len(counts)
    if counts.sum() < min_events:
        return 0.0, None
    y = counts - counts.mean()
    power = np.abs(np.fft.rfft(y)) ** 2
    k_hi = n // 2
    total = power[1 : k_hi + 1].sum()
    if total <= 0:
        return 0.0, None
    # periods above max_period are indistinguishable from trend
    k_lo = max(2, int(np.ceil(n * bin_width / max_period)))
    if k_lo > k_hi:
        return 0.0, None
    seg = power[k_lo : k_hi + 1]
    mx = float(seg.max())
    if mx <= 0:
        return 0.0, None
    peak = k_lo + int(np.argmax(seg >= (1 - 1e-9) * mx))

    # estimate which harmonic the peak is from the spacing of strong bins
    strong = np.flatnonzero(seg >= 0.25 * mx) + k_lo
    reps: list[int] = []
    run = [int(strong[0])]
    for k in strong[1:]:
        if k == run[-1] + 1:
            run.append(int(k))
        else:
            reps.append(run[int(np.argmax(power[run]))])
            run = [int(k)]
    reps.append(run[int(np.argmax(power[run]))])
    if len(reps) >= 2:
        spacing = (reps[-1] - reps[0]) / (len(reps) - 1)
        j_est = max(1, round(peak / spacing))
    else:
        j_est = 1

    # pick the divisor whose comb collects the most power above noise
    j_max = max(1, int(peak // k_lo))
    half = max(3, round(0.05 * j_est))
    noise_floor = total / k_hi
    best_excess = 0.0
    cands: list[tuple[float, float]] = []
    for j in range(max(1, j_est - half), min(j_max, j_est + half) + 1):
        f0 = peak / j
        teeth = _comb_teeth(f0, k_hi)
        excess = float(power[teeth].sum()) - len(teeth) * noise_floor
        cands.append((f0, excess))
        best_excess = max(best_excess, excess)
    if best_excess > 0:
        f0 = max(f for f, e in cands if e >= 0.95 * best_excess)
        j = round(peak / f0)
    else:
        f0, j = float(peak), 1

    # refine the fundamental against the highest usable harmonic
    unc = 0.5 / j
    used_h = j
    while True:
        h = min(int(np.floor(k_hi / (f0 + unc))), max(1, int(np.floor(0.45 / unc))))
        if h <= used_h:
            break
        lo = max(int(np.ceil(h * (f0 - unc))), 1)
        hi = min(int(np.floor(h * (f0 + unc))), k_hi)
        if lo > hi:
            break
        kappa = lo + int(np.argmax(power[lo : hi + 1]))
        f0, unc, used_h = kappa / h, 0.5 / h, h

    family = power[_comb_teeth(f0, k_hi)].sum()
    return float(family / total), bin_width * n / f0


def periodicity_score(
    counts: Sequence[float] | np.ndarray,
    bin_width: float,
    max_period: float,
    min_events: int = 4,
) -> PeriodicityResult:
    arr = np.asarray(counts, dtype=float)
    if arr.ndim != 1 or len(arr) < 8:
        raise DetectorError("need a one-dimensional series of at least 8 bins")
    if bin_width <= 0 or max_period <= 2 * bin_width:
        raise DetectorError("bad bin_width / max_period combination")
    score, period = _periodicity(arr, bin_width, max_period, min_events)
    return PeriodicityResult(score, period, int(arr.sum()))


def autocorrelation_oracle(
    counts: Sequence[float] | np.ndarray, min_lag: int = 2, tol: float = 0.1
) -> tuple[float, Optional[int]]:
    """Lag of the first near-maximal autocorrelation cluster.

    Deliberately shares no code path with the spectral scorer. Returns
    (normalized correlation at the chosen lag, lag in bins).
    """
    y = np.asarray(counts, dtype=float)
    y = y - y.mean()
    denom = float(y @ y)
    if denom <= 0:
        return 0.0, None
    n = len(y)
    max_lag = n // 2
    if max_lag < min_lag:
        return 0.0, None
    lags = np.arange(min_lag, max_lag + 1)
    r = np.array([float(y[:-l] @ y[l:]) / denom for l in lags])
    # smooth over +-1 lag so jitter-split peaks still cluster
    rs = r.copy()
    rs[1:] += r[:-1]
    rs[:-1] += r[1:]
    m = rs.max()
    if m <= 0:
        return 0.0, None
    cand = int(lags[np.argmax(rs >= (1 - tol) * m)])
    lo = max(min_lag, cand - 1)
    hi = min(max_lag, cand + 1)
    best = lo + int(np.argmax(r[lo - min_lag : hi - min_lag + 1]))
    # jitter can suppress odd multiples; fall back to the half lag when real
    while best >= 2 * min_lag:
        lo = max(min_lag, best // 2 - 1)
        hi = min(max_lag, (best + 1) // 2 + 1)
        half = lo + int(np.argmax(r[lo - min_lag : hi - min_lag + 1]))
        if r[half - min_lag] >= 0.5 * r[best - min_lag] and r[half - min_lag] > 0:
            best = half
        else:
            break
    return float(np.clip(r[best - min_lag], 0.0, 1.0)), best


def _grid_variants(params: BeaconDetectionParams) -> list[tuple[float, float]]:
    out = []
    for bw in (params.bin_width, 3 * params.bin_width):
        for off in (0.0, bw / 2):
            out.append((bw, off))
    return out


def _bin_pair(
    ts: np.ndarray, t0: float, window: float, bw: float, off: float
) -> np.ndarray:
    n = int(np.floor(window / bw + 1e-9))
    idx = np.floor((ts - t0 + off) / bw).astype(int)
    idx = idx[(idx >= 0) & (idx < n)]
    return np.bincount(idx, minlength=n).astype(float)


def score_pair(
    ts: Sequence[float] | np.ndarray, t0: float, params: BeaconDetectionParams
) -> PeriodicityResult:
    """Best periodicity over the bin-width / offset grid for one pair."""
    arr = np.asarray(ts, dtype=float)
    arr = arr[(arr >= t0) & (arr < t0 + params.window)]
    best = PeriodicityResult(0.0, None, len(arr))
    for bw, off in _grid_variants(params):
        counts = _bin_pair(arr, t0, params.window, bw, off)
        score, period = _periodicity(
            counts, bw, params.max_period, params.min_events
        )
        if score > best.score:
            best = PeriodicityResult(score, period, len(arr))
    return best


def detect_beacons(
    flows: Sequence[HttpFlow],
    params: BeaconDetectionParams,
    base_offset: int = 0,
    source: str = HTTP_SOURCE,
) -> list[Hypothesis]:
    """Score every directed (src, dst) pair; emit a hypothesis per hit.

    Emitted hypotheses carry no id (the engine assigns one) and use the
    pair score as confidence. Lowering the threshold can only grow the
    emitted set: scores do not depend on it.
    """
    if not flows:
        return []
    t0 = min(f.ts for f in flows)
    groups: dict[tuple[str, str], list[int]] = {}
    for i, flow in enumerate(flows):
        groups.setdefault((flow.src, flow.dst), []).append(i)

    scored: list[tuple[float, tuple[str, str], PeriodicityResult, list[int]]] = []
    for pair in sorted(groups):
        idxs = groups[pair]
        ts = np.array([flows[i].ts for i in idxs])
        result = score_pair(ts, t0, params)
        if result.score >= params.threshold:
            scored.append((result.score, pair, result, idxs))
            log.debug(
                "beacon candidate %s -> %s score=%.4f period=%s",
                pair[0],
                pair[1],
                result.score,
                result.dominant_period,
            )

    scored.sort(key=lambda item: (-item[0], item[1]))
    out = []
    for score, (src, dst), result, idxs in scored:
        out.append(
            Hypothesis(
                id="",
                kind=HypKind.DETECTION,
                predicate=pred("beacon", dst, src),
                confidence=min(1.0, score),
                evidence=[telemetry_ref(source, base_offset + i) for i in idxs],
                origin="",
            )
        )
    return out


def histogram_baseline(
    flows: Sequence[HttpFlow],
    min_count: int = 50,
    base_offset: int = 0,
    source: str = HTTP_SOURCE,
) -> list[Hypothesis]:
    """Naive volume detector: flags any pair with enough flows.

    Exists as a contrast detector; every hit gets flat 0.5 confidence.
    """
    groups: dict[tuple[str, str], list[int]] = {}
    for i, flow in enumerate(flows):
        groups.setdefault((flow.src, flow.dst), []).append(i)
    out = []
    for (src, dst), idxs in sorted(groups.items()):
        if len(idxs) >= min_count:
            out.append(
                Hypothesis(
                    id="",
                    kind=HypKind.DETECTION,
                    predicate=pred("beacon", dst, src),
                    confidence=0.5,
                    evidence=[telemetry_ref(source, base_offset + i) for i in idxs],
                    origin="",
                )
            )
    return out
