"""Spectral flow along the grid by two independent algorithms.

``flow_by_tracking`` follows sorted eigenvalue branches between adjacent grid
points and counts signed crossings of zero.  ``flow_by_partition`` covers the
grid by adapted segments and telescopes window-rank differences instead.
The two routes share no counting logic, so their exact agreement is a strong
cross-check; both require zero off the spectrum at the grid endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adapted import (
    GridRange,
    AdaptedPairCertificate,
    certify_adapted_pair,
    level_candidates,
    level_margins,
    level_ranks,
    truncation_ceiling,
)
from .errors import (
    AmbiguousMatching,
    EndpointOnSpectrum,
    PartitionFailed,
)
from .families import FamilySample
from .spectral import TAU_EDGE_DEFAULT


@dataclass(frozen=True)
class Crossing:
    """One signed zero crossing of a tracked branch."""

    branch: int
    left_index: int
    right_index: int
    direction: int


@dataclass(frozen=True)
class FlowPartition:
    """Adapted segments covering the grid: breakpoints plus one level each."""

    breakpoints: tuple[int, ...]
    levels: tuple[float, ...]
    certificates: tuple[AdaptedPairCertificate, ...]


@dataclass(frozen=True)
class FlowResult:
    flow: int
    method: str
    endpoint_margins: tuple[float, float]
    crossings: tuple[Crossing, ...] | None = None
    partition: FlowPartition | None = None


def _endpoint_margins(smp: FamilySample, tau_edge: float) -> tuple[float, float]:
    ev = smp.eigenvalue_matrix
    first = float(np.min(np.abs(ev[0])))
    last = float(np.min(np.abs(ev[-1])))
    if first < tau_edge:
        raise EndpointOnSpectrum(0, first)
    if last < tau_edge:
        raise EndpointOnSpectrum(len(smp) - 1, last)
    return first, last


def _movement_bound(row: np.ndarray, tau_edge: float) -> float:
    """Half the width of the spectral gap straddling zero at this point."""
    negatives = row[row < -tau_edge]
    positives = row[row > tau_edge]
    if negatives.size == 0 or positives.size == 0:
        return math.inf
    return 0.5 * float(positives.min() - negatives.max())


def flow_by_tracking(smp: FamilySample,
                     tau_edge: float = TAU_EDGE_DEFAULT) -> FlowResult:
    """Count signed zero crossings of greedily matched eigenvalue branches.

    Sorted eigenvalue lists at adjacent points are matched index to index;
    the matching is trusted only while every branch moves less than half the
    zero-straddling gap at the left point (``AmbiguousMatching`` otherwise:
    refine the grid).  A branch sitting on zero at an interior point is
    counted through the sign pattern of its definite neighbors.
    """
    margins = _endpoint_margins(smp, tau_edge)
    ev = smp.eigenvalue_matrix
    n, dim = ev.shape
    for i in range(n - 1):
        movement = float(np.max(np.abs(ev[i + 1] - ev[i])))
        bound = _movement_bound(ev[i], tau_edge)
        if movement >= bound:
            raise AmbiguousMatching(i, movement, bound)

    signs = np.zeros_like(ev, dtype=int)
    signs[ev > tau_edge] = 1
    signs[ev < -tau_edge] = -1
    crossings = []
    flow = 0
    for j in range(dim):
        prev_sign = signs[0, j]
        prev_index = 0
        for i in range(1, n):
            s = signs[i, j]
            if s == 0:
                continue
            if s != prev_sign:
                direction = 1 if s > prev_sign else -1
                crossings.append(Crossing(j, prev_index, i, direction))
                flow += direction
            prev_sign = s
            prev_index = i
    return FlowResult(flow=flow, method="tracking", endpoint_margins=margins,
                      crossings=tuple(crossings))


def _count_strictly_positive_upto(row: np.ndarray, level: float) -> int:
    return int(np.sum((row > 0.0) & (row <= level)))


def flow_by_partition(smp: FamilySample,
                      tau_edge: float = TAU_EDGE_DEFAULT) -> FlowResult:
    """Telescope window-rank differences over a greedy adapted partition.

    Each segment uses the smallest admissible window level at its starting
    point (the tightest window survives longest) and extends while the
    window rank stays constant and the level keeps clear of the spectrum.
    The flow contribution of a segment is the change in the number of
    eigenvalues in (0, level] between its endpoints; counting is half-open
    at zero, which the endpoint margins make unambiguous.
    """
    margins_ends = _endpoint_margins(smp, tau_edge)
    ev = smp.eigenvalue_matrix
    n = len(smp)
    ceiling = truncation_ceiling(smp)
    # max branch movement per grid edge: a branch can cross +-level between
    # two samples only by moving at least the sum of its sampled clearances,
    # so requiring movement below the sampled margin sum makes the sampled
    # window rank trustworthy along the whole edge
    moves = np.max(np.abs(np.diff(ev, axis=0)), axis=1)

    def edge_ok(i, margins, ranks):
        return (margins[i] >= tau_edge and margins[i + 1] >= tau_edge
                and ranks[i] == ranks[i + 1]
                and moves[i] < margins[i] + margins[i + 1])

    breakpoints = [0]
    levels: list[float] = []
    certificates: list[AdaptedPairCertificate] = []
    start = 0
    flow = 0
    while start < n - 1:
        cands = level_candidates(np.abs(ev[start]), 4.0 * tau_edge, ceiling, tau_edge)
        chosen = None
        for cand in sorted(cands, key=lambda c: c.level):
            margins = level_margins(smp, cand.level)
            ranks = level_ranks(smp, cand.level)
            if edge_ok(start, margins, ranks):
                chosen = (cand.level, margins, ranks)
                break
        if chosen is None:
            raise PartitionFailed(start)
        level, margins, ranks = chosen
        end = start + 1
        while end + 1 < n and edge_ok(end, margins, ranks):
            end += 1
        segment = GridRange(start, end)
        certificates.append(certify_adapted_pair(smp, segment, level,
                                                 tau_edge=tau_edge))
        breakpoints.append(end)
        levels.append(level)
        flow += (_count_strictly_positive_upto(ev[end], level)
                 - _count_strictly_positive_upto(ev[start], level))
        start = end

    partition = FlowPartition(tuple(breakpoints), tuple(levels), tuple(certificates))
    return FlowResult(flow=flow, method="partition", endpoint_margins=margins_ends,
                      partition=partition)
