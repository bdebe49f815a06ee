import math

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from ncrank.atom_rank import (
    MethodTag,
    MomentTriple,
    RankCertificate,
    RankOptions,
    RegularityInfo,
    ThetaSample,
    certify_rank,
    default_y_grid,
    find_zero_block,
    moment_atom_bound,
    moment_rank_lower_bound,
    moment_triple,
    rank_exact_regular,
    rank_lower_bound_scan,
    regular_theta_excess,
    regular_y_threshold,
    scan_lower_bound,
    theta_at,
    theta_derivative_lower_bound,
    theta_law_violations,
    theta_scan,
    zero_block_upper_bound,
)
from ncrank.cauchy_solver import EvaluationPoint, SolverConfig, solve_or_raise
from ncrank.exceptions import (
    InconsistentBoundsError,
    InconsistentMomentsError,
    InfeasibleParametersError,
    PreconditionError,
    UnsupportedInputError,
    ZeroBlockContradictionError,
)
from ncrank.pencil import GeneralPencil, LinearPencil, covariance_map
from ncrank.presets import example_family_pencil, load_preset


def semicircle_theta(y):
    return y * (math.sqrt(y * y + 4.0) - y) / 2.0


def family_bound(t):
    return moment_atom_bound(moment_triple(covariance_map(example_family_pencil(t))))


# ---------------------------------------------------------------------------
# θ 근사
# ---------------------------------------------------------------------------

def test_theta_semicircle_at_one(semicircle):
    sample = theta_at(semicircle, 1.0, 1e-6)
    assert sample.ok
    assert abs(sample.theta_tilde - (math.sqrt(5.0) - 1.0) / 2.0) < 1e-6
    assert sample.solver_iterations >= 1


def test_theta_tends_to_one_for_large_y(semicircle):
    assert abs(theta_at(semicircle, 1e6, 1e-6).theta_tilde - 1.0) < 1e-5


def test_theta_scan_matches_closed_form(semicircle):
    samples = theta_scan(semicircle, [10.0, 1.0, 0.1], 1e-6)
    assert [s.y for s in samples] == [10.0, 1.0, 0.1]
    for s in samples:
        assert abs(s.theta_tilde - semicircle_theta(s.y)) < s.eps


def test_theta_scan_parallel_matches_sequential(semicircle):
    grid = default_y_grid(0.1, 10.0, 5)
    sequential = theta_scan(semicircle, grid, 1e-6, warm_start=False, threads=1)
    parallel = theta_scan(semicircle, grid, 1e-6, warm_start=False, threads=3)
    assert [s.theta_tilde for s in parallel] == [s.theta_tilde for s in sequential]


def test_theta_scan_rejects_bad_grid(semicircle):
    with pytest.raises(PreconditionError):
        theta_scan(semicircle, [0.1, 1.0], 1e-3)
    with pytest.raises(PreconditionError):
        theta_scan(semicircle, [], 1e-3)
    with pytest.raises(PreconditionError):
        theta_at(semicircle, -1.0, 1e-3)


def test_theta_scan_stops_early(semicircle):
    samples = theta_scan(semicircle, [1.0, 0.1, 0.01], 1e-3, stop_when=lambda s: s.theta_tilde < 0.7)
    assert len(samples) == 1


def test_default_y_grid():
    grid = default_y_grid(1e-3, 1.0, 4)
    assert grid == pytest.approx([1.0, 1e-1, 1e-2, 1e-3])
    with pytest.raises(PreconditionError):
        default_y_grid(1.0, 0.1, 4)


def test_theta_rejects_general_pencil():
    with pytest.raises(PreconditionError):
        theta_at(GeneralPencil(np.array([[[0.0, 1.0], [0.0, 0.0]]])), 1.0, 1e-3)


def test_centered_pencil_has_symmetric_trace():
    p = load_preset("a0")
    c = covariance_map(p)
    ep = EvaluationPoint.at_imaginary(0.5, p.dim)
    outcome = solve_or_raise(ep, c, SolverConfig.build(ep, c, target_delta=1e-6))
    assert abs(np.trace(outcome.w).real / p.dim) <= outcome.certified_error


def test_theta_laws_hold_on_semicircle_scan(semicircle):
    grid = default_y_grid(1e-2, 1e3, 11)
    samples = theta_scan(semicircle, grid, 1e-6)
    assert theta_law_violations(samples, known_atom=0.0, second_moment=1.0) == []


def test_theta_laws_flag_violations():
    samples = [
        ThetaSample(1.0, 0.5, 1e-3, 10),
        ThetaSample(0.5, 0.7, 1e-3, 10),
        ThetaSample(0.1, 0.05, 1e-3, 10),
    ]
    problems = theta_law_violations(samples, known_atom=0.2)
    assert any("0.5" in p for p in problems)
    assert len(problems) >= 2

    far = [ThetaSample(1e3, 0.9, 1e-3, 3)]
    assert theta_law_violations(far)


# ---------------------------------------------------------------------------
# 모멘트 상한
# ---------------------------------------------------------------------------

def test_moment_triple_semicircle(semicircle):
    m = moment_triple(covariance_map(semicircle))
    assert (m.a2, m.a4, m.a6) == pytest.approx((1.0, 2.0, 5.0))


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 4.0])
def test_moment_triple_example_family(t):
    m = moment_triple(covariance_map(example_family_pencil(t)))
    a2 = (4.0 + t) / 3.0
    a4 = 2.0 * ((1.0 + t) ** 2 + 5.0) / 3.0
    a6 = (2.0 * ((1.0 + t) ** 3 + 9.0) + 3.0 * (8.0 + 5.0 * t + 2.0 * t ** 2 + t ** 3)) / 3.0
    assert (m.a2, m.a4, m.a6) == pytest.approx((a2, a4, a6), rel=1e-12)


def test_moment_triple_at_zero_parameter():
    m = moment_triple(covariance_map(example_family_pencil(0.0)))
    assert (m.a2, m.a4, m.a6) == pytest.approx((4.0 / 3.0, 4.0, 44.0 / 3.0), rel=1e-12)


@pytest.mark.parametrize("t, expected", [(0.0, 0.58469), (1.0, 0.57251), (4.0, 0.68470)])
def test_moment_atom_bound_values(t, expected):
    assert family_bound(t) == pytest.approx(expected, abs=1e-5)


def test_moment_atom_bound_minimum():
    result = minimize_scalar(family_bound, bounds=(0.0, 2.0), method="bounded")
    assert abs(result.x - 0.60844) < 5e-3
    assert result.fun == pytest.approx(0.56713, abs=1e-4)


def test_moment_rank_threshold():
    t0 = brentq(lambda t: family_bound(t) - 2.0 / 3.0, 1.0, 4.0)
    assert 3.4099 < t0 < 4.0
    assert moment_rank_lower_bound(example_family_pencil(3.4)) == 2
    assert moment_rank_lower_bound(example_family_pencil(0.0)) == 2
    assert moment_rank_lower_bound(example_family_pencil(5.0)) == 1


@pytest.mark.parametrize("name", ["a0", "a1", "a2"])
def test_moment_rank_lower_bound_on_bordered_pencils(name):
    assert moment_rank_lower_bound(load_preset(name)) == 2


def test_moment_bound_is_continuous_at_case_boundary():
    equal = moment_atom_bound(MomentTriple(1.0, 2.0, 4.0))
    near = moment_atom_bound(MomentTriple(1.0, 2.0, 4.0 * (1.0 + 1e-8)))
    assert equal == pytest.approx(0.5)
    assert abs(near - equal) < 1e-4


def test_moment_bound_zero_pencil():
    zero = LinearPencil.zero(2)
    assert moment_atom_bound(moment_triple(covariance_map(zero))) == 1.0
    assert moment_rank_lower_bound(zero) == 0


def test_moment_triple_validation():
    with pytest.raises(InconsistentMomentsError):
        MomentTriple(1.0, 3.0, 4.0)
    with pytest.raises(InconsistentMomentsError):
        MomentTriple(-1.0, 1.0, 1.0)
    shifted = LinearPencil(np.ones((1, 1, 1)), mean=np.array([[1.0]]))
    with pytest.raises(UnsupportedInputError):
        moment_triple(covariance_map(shifted))


def test_theta_derivative_lower_bound(semicircle):
    m = moment_triple(covariance_map(semicircle))
    for y in (0.1, 1.0, 3.0):
        bound = theta_derivative_lower_bound(m, y)
        assert 0.0 < bound <= 1.0 / (2.0 * y)
        h = 1e-4 * y
        slope = (semicircle_theta(y + h) - semicircle_theta(y - h)) / (2.0 * h)
        assert bound <= slope + 1e-9


# ---------------------------------------------------------------------------
# 정칙형 판정
# ---------------------------------------------------------------------------

def test_regular_threshold_and_excess():
    reg = RegularityInfo(1.0, 1.0, 1.0)
    assert regular_y_threshold(1, reg) == pytest.approx((1.0 / 8.0) ** 1.5)
    assert regular_y_threshold(1, RegularityInfo(1.0, 1.0, 0.01)) == pytest.approx(0.01 ** 1.5)
    assert regular_theta_excess(reg, 1e-6) == pytest.approx(2.0 * 1e-6 ** (2.0 / 3.0))
    with pytest.raises(PreconditionError):
        RegularityInfo(1.0, 1.5, 1.0)


def test_rank_exact_regular_semicircle(semicircle):
    certificate = rank_exact_regular(semicircle, RegularityInfo(1.0, 1.0, 1.0))
    assert certificate.exact == 1
    assert certificate.method_tags == (MethodTag.EXACT_REGULAR,)
    assert certificate.warning_flags == ()


def test_rank_exact_regular_zero_pencil():
    certificate = rank_exact_regular(LinearPencil.zero(2), RegularityInfo(1.0, 1.0, 1.0))
    assert certificate.exact == 0
    assert certificate.samples[0].theta_tilde == pytest.approx(1.0)


def test_rank_exact_regular_infeasible(semicircle):
    with pytest.raises(InfeasibleParametersError):
        rank_exact_regular(semicircle, RegularityInfo(1.0, 1e-3, 1.0))


# ---------------------------------------------------------------------------
# 영 블록 상한
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name, rows, cols, expected", [
    ("a0", [0, 1, 2, 3], [0, 1, 2, 3], 2),
    ("a1", [1, 2, 3], [0, 1, 2, 3], 3),
    ("a2", [2, 3], [0, 1, 2, 3], 4),
])
def test_zero_block_upper_bound(name, rows, cols, expected):
    assert zero_block_upper_bound(load_preset(name), rows, cols) == expected


def test_zero_block_contradiction():
    with pytest.raises(ZeroBlockContradictionError) as info:
        zero_block_upper_bound(load_preset("a1"), [0, 1, 2, 3], [0, 1, 2, 3])
    assert "(1, 1)" in str(info.value)


def test_zero_block_bad_indices():
    with pytest.raises(PreconditionError):
        zero_block_upper_bound(load_preset("a0"), [0, 5], [1])
    with pytest.raises(PreconditionError):
        zero_block_upper_bound(load_preset("a0"), [0, 0], [1])


@pytest.mark.parametrize("name, expected", [("a0", 2), ("a1", 3), ("a2", 4), ("full_3x3", 3), ("semicircle", 1)])
def test_find_zero_block_on_presets(name, expected):
    p = load_preset(name)
    block = find_zero_block(p)
    bound = p.dim if block is None else zero_block_upper_bound(p, *block)
    assert bound == expected


def test_find_zero_block_matches_term_rank(rng):
    for _ in range(100):
        dim = int(rng.integers(1, 7))
        coeffs = rng.standard_normal((2, dim, dim)) * (rng.random((2, dim, dim)) < 0.25)
        p = GeneralPencil(coeffs)
        support = np.any(coeffs != 0, axis=0).astype(int)
        matching = maximum_bipartite_matching(csr_matrix(support), perm_type="column")
        term_rank = int(np.count_nonzero(matching >= 0))

        block = find_zero_block(p)
        bound = dim if block is None else zero_block_upper_bound(p, *block)
        assert bound == term_rank


def test_find_zero_block_size_limit():
    p = LinearPencil(np.eye(4)[None, :, :])
    with pytest.raises(PreconditionError):
        find_zero_block(p, max_dim=3)


# ---------------------------------------------------------------------------
# 인증서
# ---------------------------------------------------------------------------

def test_certificate_rejects_inconsistent_bounds():
    with pytest.raises(InconsistentBoundsError):
        RankCertificate(3, 3, upper_bound=2)


def test_certificate_to_dict():
    sample = ThetaSample(0.1, 0.25, 1e-3, 12)
    failed = ThetaSample(0.01, math.nan, 1e-3, 0, failure="boom")
    certificate = RankCertificate(
        4, 2, 3, None,
        method_tags=(MethodTag.MOMENT_BOUND, MethodTag.ZERO_BLOCK),
        samples=(sample, failed),
        lower_source=MethodTag.MOMENT_BOUND,
        upper_source=MethodTag.ZERO_BLOCK,
    )
    data = certificate.to_dict()
    assert data["N"] == 4 and data["lower"] == 2 and data["upper"] == 3 and data["exact"] is None
    assert data["methods"] == ["MomentBound", "ZeroBlock"]
    assert data["samples"] == [{"y": 0.1, "theta": 0.25, "eps": 1e-3}]
    assert data["lower_source"] == "MomentBound"
    assert data["warnings"] == []


def test_scan_lower_bound_rounding():
    assert scan_lower_bound(3, ThetaSample(1e-3, 0.0, 0.05, 1)) == 3
    assert scan_lower_bound(3, ThetaSample(1e-3, 1.0 / 3.0 - 0.05, 0.05, 1)) == 2
    assert scan_lower_bound(5, ThetaSample(1e-3, 0.9, 0.2, 1)) == 0


def test_certify_rank_moment_and_block_meet():
    certificate = certify_rank(load_preset("a0"), RankOptions(auto_block=True))
    assert certificate.exact == 2
    assert certificate.lower_source is MethodTag.MOMENT_BOUND
    assert certificate.upper_source is MethodTag.ZERO_BLOCK
    assert certificate.samples == ()


def test_certify_rank_general_pencil_reports_skipped_block_search():
    coeffs = 1j * np.eye(13)[np.newaxis]
    certificate = certify_rank(GeneralPencil(coeffs), RankOptions(y=0.01, auto_block=True))
    assert "zero_block_search_skipped" in certificate.warning_flags
    assert "hermitized" in certificate.warning_flags
    assert MethodTag.ZERO_BLOCK not in certificate.method_tags
    assert certificate.exact == 13


def test_certify_rank_semicircle_by_scan(semicircle):
    certificate = certify_rank(semicircle)
    assert certificate.exact == 1
    assert certificate.lower_bound == 1
    assert MethodTag.MOMENT_BOUND in certificate.method_tags


def test_certify_rank_general_pencil():
    certificate = certify_rank(GeneralPencil(np.array([[[1.0]]])))
    assert certificate.dim == 1
    assert certificate.exact == 1
    assert "hermitized" in certificate.warning_flags


def test_certify_rank_general_pencil_with_zero_block():
    coeffs = np.zeros((1, 2, 2))
    coeffs[0, 0, 1] = 1.0
    certificate = certify_rank(GeneralPencil(coeffs), RankOptions(y=0.1, auto_block=True))
    assert certificate.exact == 1
    assert certificate.upper_source is MethodTag.ZERO_BLOCK


def test_certify_rank_with_regularity(semicircle):
    certificate = certify_rank(semicircle, RankOptions(y=1.0, regularity=RegularityInfo(1.0, 1.0, 1.0)))
    assert certificate.exact == 1
    assert MethodTag.EXACT_REGULAR in certificate.method_tags


def test_certify_rank_nonzero_mean_warns():
    shifted = LinearPencil(np.ones((1, 1, 1)), mean=np.array([[0.5]]))
    certificate = certify_rank(shifted, RankOptions(y=1.0, eps=0.25))
    assert "nonzero_mean" in certificate.warning_flags
    assert MethodTag.MOMENT_BOUND not in certificate.method_tags


# ---------------------------------------------------------------------------
# 긴 수용 테스트
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_full_rank_certification():
    certificate = rank_lower_bound_scan(load_preset("full_3x3"), 1e-5, 0.05)
    assert certificate.lower_bound == 3
    assert certificate.exact == 3


@pytest.mark.slow
@pytest.mark.parametrize("name, atom, rank", [("a0", 0.6, 2), ("a1", 0.4, 3), ("a2", 0.2, 4)])
def test_bordered_pencil_certificates(name, atom, rank):
    p = load_preset(name)
    scan = rank_lower_bound_scan(p, 1e-5, 1e-3)
    assert abs(scan.samples[0].theta_tilde - atom) < 0.01
    assert scan.lower_bound == rank

    certificate = certify_rank(p, RankOptions(y=1e-5, eps=1e-3, auto_block=True))
    assert certificate.exact == rank
    assert theta_law_violations(certificate.samples, known_atom=atom - 0.01) == []
