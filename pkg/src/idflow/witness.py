"""
Non-Markovianity witnesses: backflow intervals of an IDF series, per-channel sign intervals of the decay rates and the
agreement between the two
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import trapezoid

from idflow.constants import numerics
from idflow.dynamics import FlowRecord, MasterEquation
from idflow.errors import EmptySeriesError
from idflow.record_types import IntervalReportType, IntervalType

IDF_POSITIVE = 'idf_positive'
RATE_NEGATIVE = 'rate_negative'


@dataclass(frozen=True)
class Interval:
    """Time window [start, end] of uniform sign, with the extremes seen on the samples inside it"""
    start: float
    end: float
    sign: int = 1
    peak: Optional[Tuple[float, float]] = None
    trough: Optional[Tuple[float, float]] = None

    @property
    def length(self) -> float:
        """end - start"""
        return self.end - self.start

    def to_dict(self) -> IntervalType:
        """JSON-ready representation"""
        return {'start': self.start, 'end': self.end, 'sign': self.sign,
                'peak_time': self.peak[0] if self.peak else None,
                'peak_value': self.peak[1] if self.peak else None,
                'trough_time': self.trough[0] if self.trough else None,
                'trough_value': self.trough[1] if self.trough else None}

    @classmethod
    def from_dict(cls, data: IntervalType) -> 'Interval':
        """Inverse of to_dict"""
        peak = (data['peak_time'], data['peak_value']) if data['peak_time'] is not None else None
        trough = (data['trough_time'], data['trough_value']) if data['trough_time'] is not None else None
        return cls(start=data['start'], end=data['end'], sign=data['sign'], peak=peak, trough=trough)


@dataclass(frozen=True)
class IntervalReport:
    """Disjoint ascending intervals found by one witness"""
    witness_kind: str
    intervals: Tuple[Interval, ...] = ()
    channel: Optional[int] = None
    grid_step: float = 0.0

    def __len__(self) -> int:
        return len(self.intervals)

    def with_sign(self, sign: int) -> List[Interval]:
        """Intervals of the given sign"""
        return [i for i in self.intervals if i.sign == sign]

    def to_dict(self) -> IntervalReportType:
        """JSON-ready representation"""
        return {'witness_kind': self.witness_kind, 'channel': self.channel, 'grid_step': self.grid_step,
                'intervals': [i.to_dict() for i in self.intervals]}

    @classmethod
    def from_dict(cls, data: IntervalReportType) -> 'IntervalReport':
        """Inverse of to_dict"""
        return cls(witness_kind=data['witness_kind'], channel=data['channel'], grid_step=data['grid_step'],
                   intervals=tuple(Interval.from_dict(i) for i in data['intervals']))


@dataclass(frozen=True)
class AgreementSummary:
    """Outcome of comparing IDF backflow with negative-rate windows"""
    channels: int
    checked: bool
    counterexamples: Tuple[Interval, ...] = field(default_factory=tuple)

    @property
    def holds(self) -> bool:
        """True when every backflow interval sits inside a negative-rate window"""
        return not self.counterexamples


def _segments(times: np.ndarray, usable: np.ndarray, splits: Sequence[float] = ()) -> List[np.ndarray]:
    """Index runs of consecutive usable samples, cut at unusable samples and at the split times"""
    ret: List[np.ndarray] = []
    current: List[int] = []
    for index, ok in enumerate(usable):
        if current and any(times[current[-1]] < s <= times[index] for s in splits):
            ret.append(np.array(current))
            current = []
        if ok:
            current.append(index)
        elif current:
            ret.append(np.array(current))
            current = []
    if current:
        ret.append(np.array(current))
    return ret


def _crossing(t0: float, v0: float, t1: float, v1: float) -> float:
    if v1 == v0:
        return t0
    return t0 + (t1 - t0) * v0 / (v0 - v1)


def _grid_step(times: np.ndarray) -> float:
    return float(np.max(np.diff(times))) if times.size > 1 else 0.0


def detect_backflow(records: Sequence[FlowRecord], threshold: Optional[float] = None) -> IntervalReport:
    """
    Maximal time windows where the IDF exceeds threshold. Endpoints are the linear interpolation of the crossings
    between grid samples; records that are flagged (pole, singular, undefined) split the windows
    :param records: time-ordered FlowRecords
    :param threshold: positivity threshold (default: backflow threshold of the numerics)
    :return: IntervalReport of kind idf_positive, with the IDF peak and IDQS trough of each window
    """
    if not records:
        raise EmptySeriesError('No records to analyse')
    threshold = numerics().backflow_threshold if threshold is None else threshold
    if threshold < 0:
        raise ValueError(f'Threshold must be non-negative, got {threshold}')

    times = np.array([r.t for r in records], dtype=float)
    usable = np.array([r.defined and r.idf is not None for r in records])
    intervals: List[Interval] = []
    for segment in _segments(times, usable):
        excess = np.array([records[i].idf - threshold for i in segment])
        positive = excess > 0
        run_start: Optional[int] = None
        for k in range(segment.size + 1):
            if k < segment.size and positive[k]:
                if run_start is None:
                    run_start = k
                continue
            if run_start is None:
                continue
            first, last = run_start, k - 1
            start = times[segment[0]] if first == 0 else \
                _crossing(times[segment[first - 1]], excess[first - 1], times[segment[first]], excess[first])
            end = times[segment[-1]] if k == segment.size else \
                _crossing(times[segment[last]], excess[last], times[segment[k]], excess[k])
            inside = [records[i] for i in segment[first:k]]
            peak = max(inside, key=lambda r: r.idf)
            trough = min(inside, key=lambda r: r.idqs)
            intervals.append(Interval(start=float(start), end=float(end), sign=1, peak=(peak.t, peak.idf),
                                      trough=(trough.t, trough.idqs)))
            run_start = None

    logger.info('{} backflow intervals above {}', len(intervals), threshold)
    return IntervalReport(witness_kind=IDF_POSITIVE, intervals=tuple(intervals), grid_step=_grid_step(times))


def _sign(value: float, tol: float) -> int:
    if value > tol:
        return 1
    if value < -tol:
        return -1
    return 0


def _sign_partition(times: np.ndarray, values: np.ndarray, segment: np.ndarray, tol: float) -> List[Interval]:
    signs = [_sign(values[i], tol) for i in segment]
    runs: List[Tuple[int, int, int]] = []
    for k, sign in enumerate(signs):
        if runs and runs[-1][0] == sign:
            runs[-1] = (sign, runs[-1][1], k)
        else:
            runs.append((sign, k, k))

    bounds = [float(times[segment[0]])]
    for (left, _, last), (right, first, _) in zip(runs, runs[1:]):
        i, j = segment[last], segment[first]
        if left * right == -1:
            bounds.append(_crossing(times[i], values[i], times[j], values[j]))
        elif left == 0:
            bounds.append(float(times[i]))
        else:
            bounds.append(float(times[j]))
    bounds.append(float(times[segment[-1]]))

    return [Interval(start=bounds[n], end=bounds[n + 1], sign=run[0])
            for n, run in enumerate(runs) if bounds[n + 1] > bounds[n] or len(runs) == 1]


def rate_sign_intervals(me: MasterEquation, t_grid: Sequence[float], tol: float = 0.0) -> List[IntervalReport]:
    """
    Partitions the grid by the sign of every channel rate. Non-finite rates and declared pole times split the
    partition; sign changes between samples are located by linear interpolation
    :param me: master equation
    :param t_grid: ascending times
    :param tol: rates within [-tol, tol] count as zero
    :return: one IntervalReport of kind rate_negative per channel; intervals carry sign +1, -1 or 0
    """
    times = np.asarray(t_grid, dtype=float)
    if times.size == 0:
        raise EmptySeriesError('No times to analyse')
    rates = np.array([me.rates(float(t)) for t in times], dtype=float).reshape(times.size, len(me.channels))
    reports = []
    for index, channel in enumerate(me.channels):
        values = rates[:, index]
        intervals: List[Interval] = []
        for segment in _segments(times, np.isfinite(values), channel.pole_times):
            intervals.extend(_sign_partition(times, values, segment, tol))
        logger.debug('Channel {} ({}): {} sign intervals, {} negative', index, channel.name, len(intervals),
                     sum(i.sign < 0 for i in intervals))
        reports.append(IntervalReport(witness_kind=RATE_NEGATIVE, intervals=tuple(intervals), channel=index,
                                      grid_step=_grid_step(times)))
    return reports


def witness_agreement(idf_report: IntervalReport, rate_reports: Sequence[IntervalReport],
                      slack: Optional[float] = None) -> AgreementSummary:
    """
    Checks that every backflow interval lies inside a negative-rate window of some channel, up to slack at each end.
    Containment is guaranteed for a single channel; with several channels a failure is reported, not raised
    :param idf_report: detect_backflow output
    :param rate_reports: rate_sign_intervals output on the same grid
    :param slack: allowed overhang (default: one grid step)
    :return: AgreementSummary
    """
    if slack is None:
        slack = max([idf_report.grid_step] + [r.grid_step for r in rate_reports])
    negative = [i for report in rate_reports for i in report.with_sign(-1)]
    counterexamples = tuple(i for i in idf_report.intervals
                            if not any(n.start - slack <= i.start and i.end <= n.end + slack for n in negative))
    summary = AgreementSummary(channels=len(rate_reports), checked=len(rate_reports) == 1,
                               counterexamples=counterexamples)
    if counterexamples:
        log = logger.warning if summary.checked else logger.info
        log('{} backflow intervals outside every negative-rate window', len(counterexamples))
    return summary


def backflow_integral(records: Sequence[FlowRecord]) -> float:
    """
    Extension statistic: time integral of the positive part of the IDF, trapezoidal over the defined stretches of
    the series
    :param records: time-ordered FlowRecords
    :return: non-negative integral
    """
    if not records:
        raise EmptySeriesError('No records to integrate')
    times = np.array([r.t for r in records], dtype=float)
    usable = np.array([r.defined and r.idf is not None and math.isfinite(r.idf) for r in records])
    total = 0.0
    for segment in _segments(times, usable):
        if segment.size > 1:
            total += float(trapezoid(np.clip([records[i].idf for i in segment], 0.0, None), times[segment]))
    return total
