"""Graph (uniform resolvent) and Riesz distances, continuity moduli along a
grid, and the two quantitative continuity certificates built from adapted
pairs.

``graph_continuity_certify`` compresses the resolvent to the spectral window
of an adapted pair and verifies the resulting three-term bound on resolvent
differences.  ``riesz_continuity_certify`` splits the operator into lower /
window / upper spectral blocks, applies the bounded transform blockwise, and
verifies the seven-term bound on transform differences.  Both refuse to
return a certificate whose inequalities do not hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adapted import (
    GridRange,
    find_adapted_pair,
    level_margins,
    level_ranks,
    shrink_toward,
    truncation_ceiling,
    _grow_range,
)
from .errors import (
    BoundViolated,
    EdgeOnSpectrum,
    NoGap,
    RankJump,
    StrictAdaptednessFailed,
)
from .families import FamilySample
from .spectral import (
    TAU_EDGE_DEFAULT,
    TAU_RECONSTRUCT,
    HermitianOperator,
    bounded_transform,
    bounded_transform_scalar,
    hermitian_norm,
    operator_norm,
    projector,
    resolvent_at_i,
)

#: matrices are embedded in certificates only up to this dimension
EMBED_DIM_LIMIT = 64


def graph_distance(a: HermitianOperator, b: HermitianOperator) -> float:
    """Operator-norm distance between the resolvents at +i."""
    if a.dim != b.dim:
        raise ValueError("operators must share a dimension")
    return operator_norm(resolvent_at_i(a) - resolvent_at_i(b))


def riesz_distance(a: HermitianOperator, b: HermitianOperator) -> float:
    """Operator-norm distance between the bounded transforms."""
    if a.dim != b.dim:
        raise ValueError("operators must share a dimension")
    return hermitian_norm(
        bounded_transform(a).entries - bounded_transform(b).entries
    )


@dataclass(frozen=True)
class ContinuityModuli:
    """Distance along each adjacent grid edge, plus the maximum."""

    metric: str
    per_edge: tuple[tuple[float, float, float], ...]
    max_modulus: float


def continuity_modulus(smp: FamilySample, metric: str = "graph") -> ContinuityModuli:
    """Adjacent-edge distances, the grid surrogate of a continuity statement."""
    if metric not in ("graph", "riesz"):
        raise ValueError(f"unknown metric {metric!r}")
    values = []
    if metric == "graph":
        images = [resolvent_at_i(op) for op in smp.operators]
        norm = operator_norm
    else:
        images = [bounded_transform(op).entries for op in smp.operators]
        norm = hermitian_norm
    for y in range(len(smp) - 1):
        values.append((
            smp.grid[y],
            smp.grid[y + 1],
            float(norm(images[y + 1] - images[y])),
        ))
    return ContinuityModuli(metric, tuple(values),
                            max(v for _, _, v in values) if values else 0.0)


@dataclass(frozen=True)
class GraphContinuityCertificate:
    """Verified bound chain for resolvent continuity around a base point.

    ``tail_bound`` caps the error of compressing the resolvent to the window,
    ``compressed_modulus`` the variation of the compressed resolvents over
    the range, and ``final_bound`` the resulting full resolvent variation:
    tail_bound < delta, compressed_modulus < delta, final_bound < 3 delta.
    """

    x_index: int
    delta: float
    level: float
    range: GridRange
    window_rank: int
    tail_bound: float
    compressed_modulus: float
    final_bound: float
    compressed_resolvents: tuple[np.ndarray, ...] | None


def _compressed_resolvent(dec, level: float) -> np.ndarray:
    mask = np.abs(dec.eigenvalues) <= level
    return projector(dec, mask, weights=1.0 / (dec.eigenvalues + 1j))


def graph_continuity_certify(smp: FamilySample, x_index: int, delta: float,
                             tau_edge: float = TAU_EDGE_DEFAULT) -> GraphContinuityCertificate:
    """Certify resolvent continuity at ``x_index`` with tolerance ``delta``.

    Requires an adapted pair with level above 1/delta (``NoGap`` if the
    truncation ceiling forbids one: raise the dimension).  The range is then
    contracted around the base point until the compressed resolvents vary by
    less than delta, using a cheap Frobenius bound to drive the contraction
    and exact spectral norms on the surviving range.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    pair = find_adapted_pair(smp, x_index, 1.0 / delta, tau_edge=tau_edge)
    level = pair.level
    rng = pair.range

    compressed = {y: _compressed_resolvent(smp.decompositions[y], level)
                  for y in rng.indices()}
    base = compressed[x_index]
    frob = {y: float(np.linalg.norm(compressed[y] - base))
            for y in rng.indices()}
    while max(frob[y] for y in rng.indices()) >= delta:
        rng = shrink_toward(rng, x_index)  # singleton has modulus 0, so this ends

    compressed_modulus = max(
        operator_norm(compressed[y] - base) for y in rng.indices()
    )
    tail_bound = 0.0
    for y in rng.indices():
        ev = smp.decompositions[y].eigenvalues
        outside = ev[np.abs(ev) > level]
        if outside.size:
            tail_bound = max(tail_bound, float(np.max(1.0 / np.sqrt(1.0 + outside ** 2))))
    resolvents = {y: resolvent_at_i(smp.operators[y]) for y in rng.indices()}
    final_bound = max(
        operator_norm(resolvents[y] - resolvents[x_index]) for y in rng.indices()
    )

    if tail_bound >= delta:
        raise BoundViolated("tail_bound", tail_bound, delta)
    if compressed_modulus >= delta:
        raise BoundViolated("compressed_modulus", compressed_modulus, delta)
    if final_bound >= 3.0 * delta:
        raise BoundViolated("final_bound", final_bound, 3.0 * delta)

    embed = None
    if smp.dim <= EMBED_DIM_LIMIT:
        embed = tuple(compressed[y] for y in rng.indices())
    return GraphContinuityCertificate(
        x_index=x_index,
        delta=float(delta),
        level=level,
        range=rng,
        window_rank=pair.rank,
        tail_bound=tail_bound,
        compressed_modulus=compressed_modulus,
        final_bound=final_bound,
        compressed_resolvents=embed,
    )


@dataclass(frozen=True)
class StrictAdaptednessResult:
    """Continuity report for the upper spectral projections at one level."""

    passed: bool
    epsilon: float
    cap: float
    modulus: float
    range: GridRange
    window_rank: int


def strict_adaptedness_certify(smp: FamilySample, x_index: int, epsilon: float,
                               cap: float,
                               tau_edge: float = TAU_EDGE_DEFAULT) -> StrictAdaptednessResult:
    """Check norm continuity of the projections onto [epsilon, infinity).

    The range is the maximal adapted range at level ``epsilon`` around the
    base point; the reported modulus is the largest adjacent-edge projection
    distance over it, and the check passes when that stays below ``cap``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    margins = level_margins(smp, epsilon)
    ranks = level_ranks(smp, epsilon)
    if margins[x_index] < tau_edge:
        raise EdgeOnSpectrum(epsilon, float(margins[x_index]), grid_index=x_index)
    rng = _grow_range(margins, ranks, x_index, tau_edge)
    uppers = []
    for y in rng.indices():
        dec = smp.decompositions[y]
        uppers.append(projector(dec, dec.eigenvalues >= epsilon))
    modulus = 0.0
    for a, b in zip(uppers, uppers[1:]):
        modulus = max(modulus, hermitian_norm(b - a))
    return StrictAdaptednessResult(
        passed=modulus < cap,
        epsilon=float(epsilon),
        cap=float(cap),
        modulus=modulus,
        range=rng,
        window_rank=int(ranks[x_index]),
    )


def _positive_gap_levels(eigenvalues: np.ndarray, hi: float,
                         tau_edge: float) -> list[float]:
    """Ascending midpoints of the positive spectral gaps below ``hi``."""
    ev = np.sort(eigenvalues)
    gaps = []
    prev = 0.0
    for w in ev:
        if w <= 0.0:
            continue
        if w > prev:
            gaps.append((prev, float(w)))
        prev = max(prev, float(w))
    out = []
    for g_lo, g_hi in gaps:
        eff_hi = min(g_hi, hi)
        if g_lo >= eff_hi:
            continue
        mid = 0.5 * (g_lo + eff_hi)
        if min(mid - g_lo, g_hi - mid) <= tau_edge:
            continue
        out.append(mid)
    return out


@dataclass(frozen=True)
class RieszContinuityCertificate:
    """Verified bound chain for transform continuity around a base point.

    The operator is split at +-level into lower / window / upper blocks.
    ``split_residual`` measures the blockwise reassembly of the transform,
    ``upper_defect`` / ``lower_defect`` the distance of the transformed outer
    blocks from +-(their projections), the three moduli the variation of the
    window transform and outer projections relative to the base point, and
    ``final_bound`` the resulting transform variation (< 7 delta).
    """

    x_index: int
    delta: float
    transform: str
    strict_level: float
    strict_modulus: float
    level: float
    range: GridRange
    window_rank: int
    split_residual: float
    upper_split_residual: float
    upper_defect: float
    lower_defect: float
    center_modulus: float
    lower_projection_modulus: float
    upper_projection_modulus: float
    final_bound: float
    projections: tuple | None
    transform_blocks: tuple | None


def _riesz_chain_certify(smp: FamilySample, x_index: int, delta: float, cap: float,
                         value_map, threshold: float, transform_name: str,
                         level_ceiling: float | None = None,
                         tau_edge: float = TAU_EDGE_DEFAULT) -> RieszContinuityCertificate:
    """Shared engine: strict adaptedness, outer-block bounds, 7-delta chain.

    ``value_map`` is the scalar function applied blockwise (the bounded
    transform, or the identity for families that are already contractions);
    ``threshold`` is the level above which the transformed upper block sits
    within delta of its projection.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    ceiling = truncation_ceiling(smp)
    if level_ceiling is not None:
        ceiling = min(ceiling, level_ceiling)

    ev_x = smp.eigenvalue_matrix[x_index]
    strict_result = None
    pair = None
    saw_strict_pass = False
    for eps in _positive_gap_levels(ev_x, ceiling, tau_edge):
        try:
            candidate = strict_adaptedness_certify(smp, x_index, eps, cap,
                                                   tau_edge=tau_edge)
        except (EdgeOnSpectrum, RankJump):
            continue
        if not candidate.passed:
            continue
        saw_strict_pass = True
        b_req = max(eps * (1.0 + 1e-12), threshold)
        try:
            found = find_adapted_pair(smp, x_index, b_req, ceiling=ceiling,
                                      tau_edge=tau_edge)
        except NoGap:
            continue
        strict_result = candidate
        pair = found
        break
    if pair is None:
        if not saw_strict_pass:
            raise StrictAdaptednessFailed(
                x_index, "no level keeps the upper projections norm continuous"
            )
        raise NoGap(threshold, ceiling, x_index)

    level = pair.level
    rng = strict_result.range.intersect(pair.range)

    values = value_map
    window_q = {}
    upper_q = {}
    lower_q = {}
    block_center = {}
    block_upper = {}
    block_lower = {}
    full_image = {}
    upper_split_residual = 0.0
    split_residual = 0.0
    upper_defect = 0.0
    lower_defect = 0.0
    eye = np.eye(smp.dim)
    for y in rng.indices():
        dec = smp.decompositions[y]
        ev = dec.eigenvalues
        inner = np.abs(ev) < level
        upper = ev >= level
        lower = ev <= -level
        fv = values(ev)
        q = projector(dec, inner)
        qp = projector(dec, upper)
        qm = eye - q - qp  # exact by construction
        window_q[y], upper_q[y], lower_q[y] = q, qp, qm
        block_center[y] = projector(dec, inner, weights=fv)
        block_upper[y] = projector(dec, upper, weights=fv)
        block_lower[y] = projector(dec, lower, weights=fv)
        full_image[y] = projector(dec, np.ones_like(inner, dtype=bool), weights=fv)
        split_residual = max(split_residual, hermitian_norm(
            full_image[y] - (block_lower[y] + block_center[y] + block_upper[y])
        ))
        # the upper projection equals "everything >= strict level" minus the
        # [strict level, level) part of the window block, exactly
        strict_eps = strict_result.epsilon
        p_eps = projector(dec, ev >= strict_eps)
        p_band = projector(dec, (ev >= strict_eps) & (ev < level))
        upper_split_residual = max(upper_split_residual,
                                   hermitian_norm(qp - (p_eps - p_band)))
        if int(np.count_nonzero(upper)) != (
            int(np.count_nonzero(ev >= strict_eps))
            - int(np.count_nonzero((ev >= strict_eps) & (ev < level)))
        ):
            raise BoundViolated("upper projection rank identity", 1.0, 0.0)
        if np.any(upper):
            upper_defect = max(upper_defect, float(np.max(np.abs(fv[upper] - 1.0))))
        if np.any(lower):
            lower_defect = max(lower_defect, float(np.max(np.abs(fv[lower] + 1.0))))

    if upper_defect >= delta:
        raise BoundViolated("upper_defect", upper_defect, delta)
    if lower_defect >= delta:
        raise BoundViolated("lower_defect", lower_defect, delta)

    # contract around the base point until the three relative moduli drop
    # below delta; Frobenius norms dominate spectral ones, so the contraction
    # is safe and the exact norms are evaluated only on the survivors
    frob = {}
    for y in rng.indices():
        frob[y] = max(
            float(np.linalg.norm(block_center[y] - block_center[x_index])),
            float(np.linalg.norm(lower_q[y] - lower_q[x_index])),
            float(np.linalg.norm(upper_q[y] - upper_q[x_index])),
        )
    while max(frob[y] for y in rng.indices()) >= delta:
        rng = shrink_toward(rng, x_index)

    center_modulus = max(hermitian_norm(block_center[y] - block_center[x_index])
                         for y in rng.indices())
    lower_projection_modulus = max(hermitian_norm(lower_q[y] - lower_q[x_index])
                                   for y in rng.indices())
    upper_projection_modulus = max(hermitian_norm(upper_q[y] - upper_q[x_index])
                                   for y in rng.indices())
    final_bound = max(hermitian_norm(full_image[y] - full_image[x_index])
                      for y in rng.indices())

    if split_residual > TAU_RECONSTRUCT:
        raise BoundViolated("split_residual", split_residual, TAU_RECONSTRUCT)
    for name, value in (("center_modulus", center_modulus),
                        ("lower_projection_modulus", lower_projection_modulus),
                        ("upper_projection_modulus", upper_projection_modulus)):
        if value >= delta:
            raise BoundViolated(name, value, delta)
    if final_bound >= 7.0 * delta:
        raise BoundViolated("final_bound", final_bound, 7.0 * delta)

    projections = None
    blocks = None
    if smp.dim <= EMBED_DIM_LIMIT:
        projections = tuple(
            (window_q[y], upper_q[y], lower_q[y]) for y in rng.indices()
        )
        blocks = tuple(
            (block_lower[y], block_center[y], block_upper[y]) for y in rng.indices()
        )
    return RieszContinuityCertificate(
        x_index=x_index,
        delta=float(delta),
        transform=transform_name,
        strict_level=strict_result.epsilon,
        strict_modulus=strict_result.modulus,
        level=level,
        range=rng,
        window_rank=pair.rank,
        split_residual=split_residual,
        upper_split_residual=upper_split_residual,
        upper_defect=upper_defect,
        lower_defect=lower_defect,
        center_modulus=center_modulus,
        lower_projection_modulus=lower_projection_modulus,
        upper_projection_modulus=upper_projection_modulus,
        final_bound=final_bound,
        projections=projections,
        transform_blocks=blocks,
    )


def transform_clearing_level(delta: float) -> float:
    """Smallest level whose bounded transform exceeds 1 - delta."""
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    return (1.0 - delta) / math.sqrt(delta * (2.0 - delta))


def riesz_continuity_certify(smp: FamilySample, x_index: int, delta: float,
                             cap: float,
                             tau_edge: float = TAU_EDGE_DEFAULT) -> RieszContinuityCertificate:
    """Certify transform continuity at ``x_index`` with tolerance ``delta``.

    Scans window levels for one whose upper projections are norm continuous
    (modulus below ``cap``), then picks a larger level whose bounded
    transform clears 1 - delta, splits the operator there, and verifies the
    full bound chain.  Raises ``StrictAdaptednessFailed`` when no level makes
    the upper projections continuous, ``NoGap`` when the ceiling forbids the
    larger level, and ``BoundViolated`` when an inequality fails.
    """
    return _riesz_chain_certify(
        smp, x_index, delta, cap,
        value_map=bounded_transform_scalar,
        threshold=transform_clearing_level(delta),
        transform_name="bounded",
        tau_edge=tau_edge,
    )
