"""Compactly polarized families: self-adjoint contractions whose spectrum
clusters at +-1 except for a small interior budget.

At finite dimension "essential spectrum {-1, +1}" has no literal meaning; the
surrogate is a band width ``eta`` and an interior budget ``m``: all but at
most ``m`` eigenvalues must sit within ``eta`` of +-1, the norm must not
exceed 1 + slack, and both bands must be populated.  Weak discrete-spectrum
certification then searches window levels inside (0, 1) only, mirroring the
unbounded search through the bounded transform, under which the two sides
correspond level-for-level and rank-for-rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adapted import (
    CertificateFailure,
    DefinitionalSweep,
    discrete_spectrum_certify,
    find_adapted_pair,
    truncation_ceiling,
)
from .errors import (
    EdgeOnSpectrum,
    FamilyModelError,
    NoGap,
    PolarizationCheckFailed,
    RankJump,
)
from .families import FamilySample, essential_sign_check
from .spectral import (
    TAU_EDGE_DEFAULT,
    HermitianOperator,
    bounded_transform_scalar,
    decompose,
)
from .topology import RieszContinuityCertificate, _riesz_chain_certify

DEFAULT_BAND_WIDTH = 0.1
DEFAULT_NORM_SLACK = 1e-9


@dataclass(frozen=True)
class PolarizationCheck:
    """Band width, interior budget and norm slack for the polarization test."""

    eta: float = DEFAULT_BAND_WIDTH
    interior_budget: int | None = None
    norm_slack: float = DEFAULT_NORM_SLACK

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise ValueError("band width eta must lie in (0, 1)")
        if self.interior_budget is not None and self.interior_budget < 0:
            raise ValueError("interior budget must be non-negative")
        if self.norm_slack < 0.0:
            raise ValueError("norm slack must be non-negative")

    def budget_for(self, dim: int) -> int:
        return dim // 4 if self.interior_budget is None else self.interior_budget


@dataclass(frozen=True)
class PolarizationReport:
    passed: bool
    norm: float
    interior_count: int
    near_minus_count: int
    near_plus_count: int
    budget: int
    check: PolarizationCheck


def compact_polarization_check(op: HermitianOperator,
                               check: PolarizationCheck | None = None) -> PolarizationReport:
    """Is this operator a plausible finite stand-in for a polarized one?

    Passes when the norm is at most 1 + slack, at most ``m`` eigenvalues lie
    strictly inside (-1 + eta, 1 - eta), and each of the two bands around
    +-1 contains at least one eigenvalue.
    """
    if check is None:
        check = PolarizationCheck()
    ev = decompose(op).eigenvalues
    budget = check.budget_for(op.dim)
    norm = float(np.max(np.abs(ev)))
    interior = int(np.sum(np.abs(ev) < 1.0 - check.eta))
    near_minus = int(np.sum(np.abs(ev + 1.0) <= check.eta))
    near_plus = int(np.sum(np.abs(ev - 1.0) <= check.eta))
    passed = (norm <= 1.0 + check.norm_slack
              and interior <= budget
              and near_minus >= 1
              and near_plus >= 1)
    return PolarizationReport(passed, norm, interior, near_minus, near_plus,
                              budget, check)


@dataclass(frozen=True)
class WeakDiscreteReport:
    passed: bool
    b_levels: tuple[float, ...]
    level_ceiling: float
    certificates: dict
    failures: tuple[CertificateFailure, ...]
    failing_points: tuple[int, ...]
    definitional: DefinitionalSweep | None

    @property
    def routes_agree(self) -> bool:
        if self.definitional is None:
            return True
        return (self.passed == self.definitional.passed
                and self.failing_points == self.definitional.failing_points)


def _weak_definitional_sweep(smp: FamilySample, level_ceiling: float,
                             sweep_count: int, epsilon_count: int,
                             tau_edge: float) -> DefinitionalSweep:
    # shifts sample the open essential-free zone; shifted windows must stay
    # inside (-level_ceiling, level_ceiling)
    lambdas = np.linspace(-level_ceiling, level_ceiling, sweep_count + 2)[1:-1]
    ev = smp.eigenvalue_matrix
    n = len(smp)
    failures = []
    failing_points = set()
    for lam in lambdas:
        cap = level_ceiling - abs(lam)
        ok = np.zeros(n, dtype=bool)
        if cap > tau_edge:
            for k in range(1, epsilon_count + 1):
                eps = cap * k / epsilon_count
                lo_clear = np.min(np.abs(ev - (lam - eps)), axis=1)
                hi_clear = np.min(np.abs(ev - (lam + eps)), axis=1)
                ok |= np.minimum(lo_clear, hi_clear) > tau_edge
                if ok.all():
                    break
        for x in np.nonzero(~ok)[0]:
            failures.append((float(lam), int(x)))
            failing_points.add(int(x))
    return DefinitionalSweep(
        lambdas=tuple(float(v) for v in lambdas),
        epsilon_count=epsilon_count,
        failures=tuple(failures),
        failing_points=tuple(sorted(failing_points)),
        passed=not failures,
    )


def weak_discrete_spectrum_certify(smp: FamilySample, b_levels,
                                   check: PolarizationCheck | None = None,
                                   level_ceiling: float | None = None,
                                   include_definitional: bool = True,
                                   sweep_count: int = 33,
                                   tau_edge: float = TAU_EDGE_DEFAULT) -> WeakDiscreteReport:
    """Adapted pairs at every grid point with levels confined to (b, 1).

    Every fiber must pass the polarization test first.  The level search is
    capped at ``level_ceiling`` (by default 1 - eta, the inner edge of the
    essential band: wider windows would swallow the band, the finite shadow
    of infinite rank).  A companion shift sweep over the essential-free zone
    plays the definitional oracle, exactly as in the unbounded setting.
    """
    if check is None:
        check = PolarizationCheck()
    b_levels = tuple(float(b) for b in b_levels)
    if not b_levels or any(not 0.0 < b < 1.0 for b in b_levels):
        raise ValueError("b_levels must lie strictly inside (0, 1)")
    for y, op in enumerate(smp.operators):
        report = compact_polarization_check(op, check)
        if not report.passed:
            raise PolarizationCheckFailed(
                y,
                f"norm {report.norm:.6g}, {report.interior_count} interior "
                f"(budget {report.budget}), bands ({report.near_minus_count}, "
                f"{report.near_plus_count})",
            )
    if level_ceiling is None:
        level_ceiling = 1.0 - check.eta

    certificates: dict[float, tuple] = {}
    failures: list[CertificateFailure] = []
    for b in b_levels:
        per_x = []
        for x in range(len(smp)):
            try:
                per_x.append(find_adapted_pair(smp, x, b, ceiling=level_ceiling,
                                               tau_edge=tau_edge))
            except (NoGap, EdgeOnSpectrum, RankJump) as exc:
                failures.append(CertificateFailure(x, b, type(exc).__name__, str(exc)))
                per_x.append(None)
        certificates[b] = tuple(per_x)
    failing_points = tuple(sorted({f.x_index for f in failures}))
    sweep = None
    if include_definitional:
        sweep = _weak_definitional_sweep(smp, level_ceiling, sweep_count, 32, tau_edge)
    return WeakDiscreteReport(
        passed=not failures,
        b_levels=b_levels,
        level_ceiling=float(level_ceiling),
        certificates=certificates,
        failures=tuple(failures),
        failing_points=failing_points,
        definitional=sweep,
    )


@dataclass(frozen=True)
class CorrespondenceReport:
    """Level-for-level comparison of a family with its bounded transform."""

    equivalent: bool
    rank_identity_ok: bool
    mismatches: tuple[tuple[float, int], ...]
    discrete_passed: bool
    weak_passed: bool
    band_width: float
    interior_budget: int
    transformed_levels: tuple[float, ...]


def transform_correspondence_check(smp: FamilySample, b_levels, k: int = 1,
                                   include_definitional: bool = False,
                                   tau_edge: float = TAU_EDGE_DEFAULT) -> CorrespondenceReport:
    """Check that wide-window certificates transport through the bounded transform.

    Runs the unbounded certification at the given levels and the weak
    certification of the transformed family at the transformed levels, with
    the polarization surrogate derived from the sample itself: the band width
    is set by the smallest one-sided spectral reach along the grid and the
    level ceiling by the transformed truncation ceiling, so admissible
    windows correspond bijectively.  Also verifies, certificate by
    certificate, that window ranks agree exactly across the transform.
    """
    sign = essential_sign_check(smp, k)
    if not sign.passed:
        raise FamilyModelError(
            "sample must carry both spectrum signs at every grid point "
            f"(threshold {k}); failing points {sign.failing_points}"
        )
    ceiling = truncation_ceiling(smp)
    ev = smp.eigenvalue_matrix
    side_reach = min(float(np.min(-ev.min(axis=1))), float(np.min(ev.max(axis=1))))
    band_edge = float(bounded_transform_scalar(min(side_reach, ceiling)))
    check = PolarizationCheck(
        eta=1.0 - band_edge,
        interior_budget=int(np.max(np.sum(np.abs(ev) < min(side_reach, ceiling), axis=1))),
        norm_slack=1e-12,
    )
    transformed = smp.bounded_transformed()
    transformed_levels = tuple(float(bounded_transform_scalar(b)) for b in b_levels)

    discrete = discrete_spectrum_certify(smp, b_levels,
                                         include_definitional=include_definitional,
                                         tau_edge=tau_edge)
    weak = weak_discrete_spectrum_certify(
        transformed, transformed_levels, check=check,
        level_ceiling=float(bounded_transform_scalar(ceiling)),
        include_definitional=include_definitional, tau_edge=tau_edge,
    )

    mismatches = []
    for b, gb in zip(discrete.b_levels, weak.b_levels):
        for x in range(len(smp)):
            have = discrete.certificates[b][x] is not None
            have_weak = weak.certificates[gb][x] is not None
            if have != have_weak:
                mismatches.append((float(b), x))

    transformed_ev = transformed.eigenvalue_matrix
    rank_ok = True
    for b in discrete.b_levels:
        for cert in discrete.certificates[b]:
            if cert is None:
                continue
            glevel = float(bounded_transform_scalar(cert.level))
            for y in cert.range.indices():
                image_rank = int(np.sum(np.abs(transformed_ev[y]) <= glevel))
                if image_rank != cert.rank:
                    rank_ok = False

    return CorrespondenceReport(
        equivalent=(discrete.passed == weak.passed and not mismatches and rank_ok),
        rank_identity_ok=rank_ok,
        mismatches=tuple(mismatches),
        discrete_passed=discrete.passed,
        weak_passed=weak.passed,
        band_width=check.eta,
        interior_budget=check.budget_for(smp.dim),
        transformed_levels=transformed_levels,
    )


def polarized_continuity_certify(smp: FamilySample, x_index: int, delta: float,
                                 cap: float, level_ceiling: float | None = None,
                                 tau_edge: float = TAU_EDGE_DEFAULT) -> RieszContinuityCertificate:
    """Norm-continuity certificate for a polarized family, windows inside (-1, 1).

    The family is already a contraction, so the blockwise transform is the
    identity and the outer-block bounds need a level above 1 - delta.  The
    rest of the chain is the one behind ``riesz_continuity_certify`` with the
    level domain reparametrized to (0, 1).
    """
    if level_ceiling is None:
        level_ceiling = truncation_ceiling(smp)
    return _riesz_chain_certify(
        smp, x_index, delta, cap,
        value_map=lambda values: np.asarray(values, dtype=float),
        threshold=1.0 - delta,
        transform_name="identity",
        level_ceiling=level_ceiling,
        tau_edge=tau_edge,
    )
