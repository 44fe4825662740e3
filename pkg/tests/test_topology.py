import math

import numpy as np
import pytest

from specfam import (
    FamilySpec,
    HermitianOperator,
    ParameterGrid,
    bounded_transform_scalar,
    continuity_modulus,
    diagonal_operator,
    discrete_spectrum_certify,
    graph_continuity_certify,
    graph_distance,
    riesz_continuity_certify,
    riesz_distance,
    sample,
    strict_adaptedness_certify,
    transform_clearing_level,
)
from specfam.errors import NoGap, StrictAdaptednessFailed
from specfam.spectral import TAU_RECONSTRUCT

from conftest import constant_sample, random_hermitian


def scalar_graph(a, b):
    return abs(1 / (a + 1j) - 1 / (b + 1j))


def scalar_riesz(a, b):
    return abs(a / math.sqrt(1 + a * a) - b / math.sqrt(1 + b * b))


def tangent_sample(points_per_side=100, inner=0.48):
    pts = np.concatenate([np.linspace(0.1, inner, points_per_side),
                          np.linspace(1.0 - inner, 0.9, points_per_side)])
    return sample(FamilySpec("tangent_blowup", 5), ParameterGrid(pts))


class TestDistances:
    def test_zero_on_equal_operators(self, rng):
        op = random_hermitian(rng, 6)
        twin = HermitianOperator(op.entries.copy())
        assert graph_distance(op, twin) <= 1e-12
        assert riesz_distance(op, twin) <= 1e-12

    def test_graph_scalar_case(self):
        value = graph_distance(diagonal_operator([0.0]), diagonal_operator([1.0]))
        assert value == pytest.approx(abs(-1j - (0.5 - 0.5j)))
        assert value == pytest.approx(1 / math.sqrt(2))

    def test_far_apart_resolvents_are_close(self):
        value = graph_distance(diagonal_operator([1e6]), diagonal_operator([-1e6]))
        assert value == pytest.approx(scalar_graph(1e6, -1e6), rel=1e-9)
        assert value < 3e-6

    def test_riesz_separates_the_same_pair(self):
        value = riesz_distance(diagonal_operator([1e6]), diagonal_operator([-1e6]))
        assert value == pytest.approx(2.0, abs=1e-9)

    def test_riesz_unit_pair(self):
        value = riesz_distance(diagonal_operator([1.0]), diagonal_operator([-1.0]))
        assert value == pytest.approx(math.sqrt(2.0))

    def test_commuting_pairs_match_scalar_formulas(self, rng):
        # operators sharing an eigenbasis reduce both metrics to scalar maxima
        for _ in range(10):
            dim = 7
            basis = np.linalg.qr(rng.standard_normal((dim, dim))
                                 + 1j * rng.standard_normal((dim, dim)))[0]
            ev_a = np.sort(rng.uniform(-4, 4, dim))
            ev_b = np.sort(rng.uniform(-4, 4, dim))
            a = HermitianOperator((basis * ev_a) @ basis.conj().T)
            b = HermitianOperator((basis * ev_b) @ basis.conj().T)
            expect_graph = max(scalar_graph(x, y) for x, y in zip(ev_a, ev_b))
            expect_riesz = max(scalar_riesz(x, y) for x, y in zip(ev_a, ev_b))
            assert abs(graph_distance(a, b) - expect_graph) <= TAU_RECONSTRUCT
            assert abs(riesz_distance(a, b) - expect_riesz) <= TAU_RECONSTRUCT

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            graph_distance(diagonal_operator([1.0]), diagonal_operator([1.0, 2.0]))


class TestContinuityModulus:
    def test_constant_family_zero(self):
        moduli = continuity_modulus(constant_sample([-1.0, 1.0]), "graph")
        assert moduli.max_modulus == 0.0
        assert all(v == 0.0 for _, _, v in moduli.per_edge)

    def test_tangent_pole_edge_graph_vs_riesz(self):
        smp = tangent_sample()
        a, b = math.tan(0.48 * math.pi), math.tan(0.52 * math.pi)
        graph = continuity_modulus(smp, "graph")
        riesz = continuity_modulus(smp, "riesz")
        pole_edge = 99  # between the two sides of the excluded window
        assert graph.per_edge[pole_edge][2] == pytest.approx(scalar_graph(a, b), abs=1e-9)
        assert riesz.per_edge[pole_edge][2] == pytest.approx(scalar_riesz(a, b), abs=1e-9)
        assert riesz.per_edge[pole_edge][2] > 1.9
        assert graph.per_edge[pole_edge][2] < 0.2

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            continuity_modulus(constant_sample([1.0, -1.0]), "hausdorff")


class TestGraphContinuityCertify:
    def test_constant_family_tail_formula(self):
        smp = constant_sample([-30.0, -1.0, 1.0, 30.0])
        cert = graph_continuity_certify(smp, 2, 0.05)
        assert cert.compressed_modulus == 0.0
        assert cert.final_bound == 0.0
        assert cert.tail_bound == pytest.approx(1 / math.sqrt(1 + 900.0))
        assert cert.tail_bound < 0.05

    def test_dirac_centered_flux(self):
        grid = ParameterGrid.linspace(-0.49, 0.49, 99)
        smp = sample(FamilySpec("dirac_circle", 41), grid)
        cert = graph_continuity_certify(smp, 49, 0.2)
        assert cert.level > 5.0
        assert cert.tail_bound < 0.2
        assert cert.compressed_modulus < 0.2
        assert cert.final_bound < 0.6
        assert cert.range.contains(49)

    def test_small_padding_hits_ceiling(self):
        smp = sample(FamilySpec("linear_crossing", 3),
                     ParameterGrid.linspace(0.4, 0.6, 5))
        with pytest.raises(NoGap):
            graph_continuity_certify(smp, 2, 0.5)
        wider = sample(FamilySpec("linear_crossing", 5),
                       ParameterGrid.linspace(0.4, 0.6, 5))
        cert = graph_continuity_certify(wider, 2, 0.5)
        assert cert.level > 2.0

    def test_delta_must_be_positive(self):
        with pytest.raises(ValueError):
            graph_continuity_certify(constant_sample([1.0, -1.0]), 0, 0.0)

    def test_perturbed_ladder_with_rotating_eigenvectors(self):
        smp = sample(FamilySpec("harmonic_perturbed", 16, {"coupling": (0.0, 0.6)}),
                     ParameterGrid.linspace(0.0, 1.0, 41))
        cert = graph_continuity_certify(smp, 20, 0.45)
        assert cert.level > 1 / 0.45
        assert cert.tail_bound < 0.45
        assert cert.compressed_modulus < 0.45
        assert cert.final_bound < 3 * 0.45
        # resolvent continuity must also show up in the raw edge moduli
        moduli = continuity_modulus(smp, "graph")
        assert moduli.max_modulus < 0.45

    def test_embeds_matrices_at_small_dim(self):
        cert = graph_continuity_certify(constant_sample([-30.0, 1.0, -1.0, 30.0]), 2, 0.1)
        assert cert.compressed_resolvents is not None
        assert cert.compressed_resolvents[0].shape == (4, 4)


class TestStrictAdaptedness:
    def test_constant_family_passes(self):
        result = strict_adaptedness_certify(constant_sample([-1.0, 1.0]), 2, 0.5, cap=0.1)
        assert result.passed
        assert result.modulus == 0.0

    def test_diagonal_flux_projections_constant(self):
        grid = ParameterGrid.linspace(0.0, 0.4, 41)
        smp = sample(FamilySpec("dirac_circle", 11), grid)
        result = strict_adaptedness_certify(smp, 20, 0.45, cap=0.5)
        assert result.passed
        assert result.modulus <= 1e-12

    def test_tangent_pole_fails_with_unit_jump(self):
        smp = tangent_sample()
        result = strict_adaptedness_certify(smp, 60, 0.5, cap=0.5)
        assert not result.passed
        assert result.modulus >= 1.0
        assert result.range.contains(99) and result.range.contains(100)


class TestRieszContinuityCertify:
    def test_clearing_level_formula(self):
        for delta in (0.05, 0.1, 0.2, 0.49):
            c = transform_clearing_level(delta)
            assert bounded_transform_scalar(c) == pytest.approx(1 - delta)

    def test_delta_range_enforced(self):
        smp = constant_sample([-3.0, -1.0, 1.0, 3.0])
        with pytest.raises(ValueError):
            riesz_continuity_certify(smp, 2, 0.7, cap=0.5)

    def test_constant_family_all_bounds(self):
        smp = constant_sample([-9.0, -1.0, 1.0, 9.0])
        cert = riesz_continuity_certify(smp, 2, 0.2, cap=0.5)
        assert cert.split_residual <= TAU_RECONSTRUCT
        assert cert.upper_defect < 0.2
        assert cert.lower_defect < 0.2
        assert cert.center_modulus == 0.0
        assert cert.final_bound < 1.4
        assert cert.level > transform_clearing_level(0.2)

    def test_projection_partition_identities(self):
        grid = ParameterGrid.linspace(-0.5, 0.5, 51)
        smp = sample(FamilySpec("dirac_circle", 41, {"alpha": (3.0, 1.0)}), grid)
        cert = riesz_continuity_certify(smp, 25, 0.2, cap=0.5)
        eye = np.eye(smp.dim)
        for q, qp, qm in cert.projections:
            assert np.max(np.abs(q + qp + qm - eye)) <= 1e-14
        assert cert.upper_split_residual <= 1e-12
        assert cert.final_bound < 7 * 0.2

    def test_tangent_pole_refused(self):
        # near the pole every strict range spans the pole edge, where the
        # upper projections jump by a full rank
        smp = tangent_sample()
        with pytest.raises(StrictAdaptednessFailed):
            riesz_continuity_certify(smp, 99, 0.1, cap=0.5)

    def test_away_from_pole_still_certifies(self):
        # continuity is local: far from the pole a strict range detaches
        # from the pole edge and the chain goes through
        smp = tangent_sample()
        cert = riesz_continuity_certify(smp, 60, 0.1, cap=0.5)
        assert not cert.range.contains(99) or not cert.range.contains(100)
        assert cert.final_bound < 0.7

    def test_bounds_hold_for_perturbed_ladder(self):
        smp = sample(FamilySpec("harmonic_perturbed", 24, {"coupling": (0.0, 0.3)}),
                     ParameterGrid.linspace(0.0, 1.0, 81))
        cert = riesz_continuity_certify(smp, 40, 0.2, cap=0.5)
        assert cert.center_modulus < 0.2
        assert cert.lower_projection_modulus < 0.2
        assert cert.upper_projection_modulus < 0.2
        assert cert.final_bound < 1.4


class TestDirectionalSoundness:
    def test_shifted_family_certifies_where_unshifted_does(self):
        grid = ParameterGrid.linspace(-0.3, 0.3, 31)
        smp = sample(FamilySpec("dirac_circle", 41), grid)
        report = discrete_spectrum_certify(smp, [2.0], include_definitional=False)
        assert report.passed
        delta = 0.45
        base = graph_continuity_certify(smp, 15, delta)
        shifted = graph_continuity_certify(smp.shifted(0.3), 15, delta)
        assert base.final_bound < 3 * delta
        assert shifted.final_bound < 3 * delta
        assert math.isfinite(
            graph_distance(smp.shifted(0.3).operators[0],
                           smp.shifted(0.3).operators[15])
        )
