import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from edrsim.edr.relations import (
    AuxiliaryStateError,
    BasisMismatchError,
    EdrPointError,
    Method,
    RadicandError,
    RelationKind,
    RobertsonViolationError,
    WeakProbeStrengthError,
    direct_disturbance,
    direct_error,
    edr_report,
    min_disturbance_bound,
    post_probe_bound,
    relation_lhs,
    robertson_check,
    three_state_disturbance,
    three_state_error,
    tilde,
    uncertainty_terms,
    weak_probe_disturbance,
    weak_probe_error,
)
from edrsim.simulation.circuit import (
    Basis,
    JointTable2,
    Pair,
    Quantity,
    chain_distribution,
    make_stage,
    marginal_joint,
    theta_for_strength,
)
from edrsim.simulation.qcore import StateVector, X, Z, ket, random_state
from tests.mock_states import (
    PI_8_ERROR,
    POST_WP_C,
    chain_with_defaults,
    point_with_defaults,
    stage_with_defaults,
)

STRENGTH_GRID = [i / 20 for i in range(21)]
SQRT_2_MINUS_SQRT_3 = math.sqrt(2 - math.sqrt(3))


def ideal_error(strength: float) -> float:
    return math.sqrt(2 * (1 - strength))


def ideal_disturbance(strength: float) -> float:
    return math.sqrt(2 * (1 - math.sqrt(1 - strength**2)))


@pytest.mark.parametrize(
    "theta, expected",
    [(0.0, 0.0), (math.pi / 4, math.sqrt(2)), (math.pi / 6, 1.0)],
)
def test_direct_error_examples(theta, expected, y_plus):
    assert direct_error(make_stage(theta), y_plus) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize(
    "theta, expected",
    [(math.pi / 4, 0.0), (0.0, math.sqrt(2)), (math.pi / 6, SQRT_2_MINUS_SQRT_3)],
)
def test_direct_disturbance_examples(theta, expected, y_plus):
    assert direct_disturbance(make_stage(theta), y_plus) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("strength", STRENGTH_GRID)
def test_direct_values_follow_closed_forms_for_any_state(strength, rng):
    stage = stage_with_defaults(strength)
    for _ in range(20):
        psi = random_state(rng)
        assert direct_error(stage, psi) == pytest.approx(ideal_error(strength), abs=1e-10)
        assert direct_disturbance(stage, psi) == pytest.approx(
            ideal_disturbance(strength), abs=1e-10
        )


def test_direct_methods_accept_density_matrices(y_plus):
    stage = stage_with_defaults(0.5)
    assert direct_error(stage, y_plus.density()) == pytest.approx(1.0, abs=1e-10)


def test_direct_methods_reject_x_basis_stage(y_plus):
    stage = stage_with_defaults(0.5, Basis.X)
    with pytest.raises(BasisMismatchError):
        direct_error(stage, y_plus)
    with pytest.raises(BasisMismatchError):
        direct_disturbance(stage, y_plus)
    with pytest.raises(BasisMismatchError):
        three_state_error(stage, y_plus)


def test_three_state_examples(y_plus):
    assert three_state_error(make_stage(0.0), y_plus) == pytest.approx(0.0, abs=1e-7)
    assert three_state_error(make_stage(math.pi / 6), y_plus) == pytest.approx(1.0, abs=1e-10)
    assert three_state_error(make_stage(math.pi / 6), ket("0")) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("strength", STRENGTH_GRID)
def test_three_state_agrees_with_direct(strength, rng):
    stage = stage_with_defaults(strength)
    for _ in range(5):
        psi = random_state(rng)
        # squared errors carry the rounding; their roots amplify it near zero
        assert three_state_error(stage, psi) ** 2 == pytest.approx(
            direct_error(stage, psi) ** 2, abs=1e-9
        )
        assert three_state_disturbance(stage, psi) ** 2 == pytest.approx(
            direct_disturbance(stage, psi) ** 2, abs=1e-9
        )


def test_three_state_rejects_zero_norm_auxiliary_state():
    # (Z + I)|1⟩ = 0 and (X + I)|−⟩ = 0
    with pytest.raises(AuxiliaryStateError):
        three_state_error(stage_with_defaults(0.5), ket("1"))
    minus = StateVector.normalized([1, -1])
    with pytest.raises(AuxiliaryStateError):
        three_state_disturbance(stage_with_defaults(0.5), minus)


@pytest.mark.parametrize(
    "strength, expected_eps, expected_eta",
    [
        (0.5, 1.0, SQRT_2_MINUS_SQRT_3),
        (1.0, 0.0, math.sqrt(2)),
        (0.0, math.sqrt(2), 0.0),
    ],
)
def test_weak_probe_examples(strength, expected_eps, expected_eta):
    error_joint = marginal_joint(
        chain_distribution(chain_with_defaults(strength, quantity=Quantity.ERROR)), Pair.WP_MA
    )
    disturbance_joint = marginal_joint(
        chain_distribution(chain_with_defaults(strength, quantity=Quantity.DISTURBANCE)),
        Pair.WP_POST,
    )
    assert weak_probe_error(error_joint, 0.104) ** 2 == pytest.approx(expected_eps**2, abs=1e-9)
    assert weak_probe_disturbance(disturbance_joint, 0.104) ** 2 == pytest.approx(
        expected_eta**2, abs=1e-9
    )


@pytest.mark.parametrize("wp_strength", [0.05, 0.104, 0.3, 0.9, 1.0])
@pytest.mark.parametrize("strength", [0.0, 0.25, 0.5, 0.7071, 0.95, 1.0])
def test_weak_probe_agrees_with_direct(strength, wp_strength, y_plus):
    stage = stage_with_defaults(strength)
    error_cfg = chain_with_defaults(strength, wp_strength, Quantity.ERROR)
    disturbance_cfg = chain_with_defaults(strength, wp_strength, Quantity.DISTURBANCE)
    eps = weak_probe_error(marginal_joint(chain_distribution(error_cfg), Pair.WP_MA), wp_strength)
    eta = weak_probe_disturbance(
        marginal_joint(chain_distribution(disturbance_cfg), Pair.WP_POST), wp_strength
    )
    assert eps**2 == pytest.approx(direct_error(stage, y_plus) ** 2, abs=1e-9)
    assert eta**2 == pytest.approx(direct_disturbance(stage, y_plus) ** 2, abs=1e-9)


def test_weak_probe_rejects_zero_strength():
    joint = JointTable2([[0.25, 0.25], [0.25, 0.25]])
    with pytest.raises(WeakProbeStrengthError):
        weak_probe_error(joint, 0.0)
    with pytest.raises(WeakProbeStrengthError):
        weak_probe_disturbance(joint, 0.0)


def test_weak_probe_radicand_window():
    perfectly_correlated = JointTable2([[0.5, 0.0], [0.0, 0.5]])
    assert weak_probe_error(perfectly_correlated, 1.0) == 0.0
    with pytest.raises(RadicandError):
        weak_probe_error(perfectly_correlated, 0.104)
    # a loose window admits the same table
    assert weak_probe_error(perfectly_correlated, 0.104, tolerance=20.0) == 0.0


def test_weak_probe_clips_overshoot_above_two_within_tolerance():
    anti_correlated = JointTable2([[0.0, 0.5], [0.5, 0.0]])
    assert weak_probe_error(anti_correlated, 1.0) == 2.0
    # radicand 2(1 + 1/0.5) = 6
    with pytest.raises(RadicandError):
        weak_probe_error(anti_correlated, 0.5)
    assert weak_probe_disturbance(anti_correlated, 0.5, tolerance=3.0) == 2.0


def test_small_radicands_are_not_rounded_to_zero():
    # correlator 1 − 1e-15 gives a radicand of 2e-15
    joint = JointTable2([[0.5, 0.0], [0.0, 0.5 - 1e-15]])
    eps = weak_probe_error(joint, 1.0)
    assert eps > 0
    assert eps == pytest.approx(math.sqrt(2e-15), rel=0.2)


def test_tilde_transform():
    assert tilde(0.0) == 0.0
    assert tilde(2.0) == 0.0
    assert tilde(math.sqrt(2)) == pytest.approx(1.0)
    assert tilde(1.0) == pytest.approx(math.sqrt(0.75), abs=1e-12)
    with pytest.raises(EdrPointError):
        tilde(2.1)


def test_edr_report_at_pi_over_eight():
    report = edr_report(point_with_defaults())
    assert report.lhs_heisenberg == pytest.approx(0.58579, abs=1e-5)
    assert report.lhs_ozawa == pytest.approx(2.11652, abs=1e-5)
    assert report.lhs_branciard == pytest.approx(1.08239, abs=1e-5)
    assert report.lhs_branciard_tight == pytest.approx(1.0, abs=1e-10)
    assert not report.heisenberg_ok
    assert report.ozawa_ok
    assert report.branciard_ok
    assert report.branciard_tight_ok
    assert report.tilde_eps == pytest.approx(PI_8_ERROR * math.sqrt(1 - PI_8_ERROR**2 / 4))
    assert report.lhs(RelationKind.OZAWA) == report.lhs_ozawa
    assert report.satisfied("heisenberg") is False


def test_edr_report_at_projective_endpoint():
    report = edr_report(point_with_defaults(strength=1.0, eps=0.0, eta=math.sqrt(2)))
    assert report.lhs_heisenberg == 0.0
    assert report.lhs_ozawa == pytest.approx(math.sqrt(2))
    assert report.lhs_branciard == pytest.approx(math.sqrt(2))
    assert report.lhs_branciard_tight == pytest.approx(1.0)


def test_edr_report_below_unit_commutator():
    point = point_with_defaults(strength=0.5, eps=1.0, eta=SQRT_2_MINUS_SQRT_3, c_bound=0.995)
    report = edr_report(point)
    assert report.lhs_ozawa == pytest.approx(2.03528, abs=1e-5)
    assert report.ozawa_ok


def test_edr_point_validation():
    with pytest.raises(EdrPointError):
        point_with_defaults(eps=2.5)
    with pytest.raises(EdrPointError):
        point_with_defaults(eta=-0.1)
    with pytest.raises(EdrPointError):
        point_with_defaults(c_bound=1.2)
    with pytest.raises(EdrPointError):
        point_with_defaults(sigma_a=math.nan)
    assert point_with_defaults(method="weak_probe").method == Method.WEAK_PROBE


def test_relation_lhs_rejects_robertson_violation():
    with pytest.raises(RobertsonViolationError):
        relation_lhs(RelationKind.BRANCIARD, 0.5, 0.5, sigma_a=0.5, sigma_b=0.5, c=1.0)


def test_robertson_check_examples(y_plus):
    saturated = robertson_check(Z, X, y_plus)
    assert saturated.margin == pytest.approx(0.0, abs=1e-12)
    assert saturated.holds
    assert robertson_check(Z, X, ket("0")).margin == pytest.approx(0.0, abs=1e-12)
    psi = random_state(np.random.default_rng(3))
    sigma_z = uncertainty_terms(Z, Z, psi)[0]
    assert robertson_check(Z, Z, psi).margin == pytest.approx(sigma_z**2, abs=1e-12)


def test_robertson_check_holds_near_an_eigenstate():
    state = StateVector.normalized([1, 1e-10j])
    sigma_z, sigma_x, c = uncertainty_terms(Z, X, state)
    assert c == pytest.approx(2e-10, rel=1e-6)
    assert sigma_z * sigma_x == pytest.approx(c, rel=1e-6)
    assert robertson_check(Z, X, state).holds


def test_robertson_check_tolerance_scales_with_operator_norms(y_plus):
    # σ(10Z)σ(10X) = 100 · 1, C = 100
    check = robertson_check(Z.scaled(10.0), X.scaled(10.0), y_plus)
    assert check.margin == pytest.approx(0.0, abs=1e-9)
    assert check.holds


def test_post_probe_bound_for_default_probe(y_plus):
    assert post_probe_bound(y_plus, 0.104) == pytest.approx(POST_WP_C, abs=1e-12)
    assert post_probe_bound(y_plus, 1.0) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("strength", STRENGTH_GRID)
def test_tight_relation_saturates_on_ideal_curve(strength):
    eps, eta = ideal_error(strength), ideal_disturbance(strength)
    assert tilde(eps) ** 2 + tilde(eta) ** 2 == pytest.approx(1.0, abs=1e-10)
    tight = relation_lhs(RelationKind.BRANCIARD_TIGHT, eps, eta)
    branciard = relation_lhs(RelationKind.BRANCIARD, eps, eta)
    ozawa = relation_lhs(RelationKind.OZAWA, eps, eta)
    assert tight <= branciard + 1e-12 <= ozawa + 2e-12


@pytest.mark.parametrize(
    "kind, eps, expected",
    [
        (RelationKind.HEISENBERG, 0.5, 2.0),
        (RelationKind.HEISENBERG, 2.0, 0.5),
        (RelationKind.OZAWA, 0.0, 1.0),
        (RelationKind.OZAWA, 0.5, 1 / 3),
        (RelationKind.OZAWA, 1.0, 0.0),
        (RelationKind.BRANCIARD, 0.5, math.sqrt(0.75)),
        (RelationKind.BRANCIARD_TIGHT, PI_8_ERROR, PI_8_ERROR),
        (RelationKind.BRANCIARD_TIGHT, math.sqrt(2), 0.0),
    ],
)
def test_min_disturbance_bound_examples(kind, eps, expected):
    assert min_disturbance_bound(kind, eps) == pytest.approx(expected, abs=1e-10)


def test_min_disturbance_bound_is_infinite_for_heisenberg_at_zero_error():
    assert min_disturbance_bound(RelationKind.HEISENBERG, 0.0) == math.inf
    assert min_disturbance_bound(RelationKind.HEISENBERG, 0.0, c=0.0) == 0.0


def test_min_disturbance_bound_rejects_negative_inputs():
    with pytest.raises(ValueError):
        min_disturbance_bound(RelationKind.OZAWA, -0.1)
    with pytest.raises(ValueError):
        min_disturbance_bound(RelationKind.OZAWA, 0.1, c=-1.0)


@pytest.mark.parametrize("kind", list(RelationKind))
@pytest.mark.parametrize("eps", [0.05, 0.2, 0.45, 0.7, 0.9])
def test_min_disturbance_bound_is_tight(kind, eps):
    eta = min_disturbance_bound(kind, eps, c=0.995)
    assert relation_lhs(kind, eps, eta, c=0.995) == pytest.approx(0.995, abs=1e-8)


@seed(5)
@settings(max_examples=200, deadline=None)
@given(
    strength=st.floats(min_value=0.0, max_value=1.0),
    index=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_universally_valid_relations_hold(strength, index):
    psi = random_state(np.random.default_rng(index))
    stage = make_stage(theta_for_strength(strength))
    sigma_a, sigma_b, c_bound = uncertainty_terms(Z, X, psi)
    report = edr_report(
        point_with_defaults(
            strength=strength,
            eps=direct_error(stage, psi),
            eta=direct_disturbance(stage, psi),
            sigma_a=sigma_a,
            sigma_b=sigma_b,
            c_bound=c_bound,
        )
    )
    assert report.ozawa_ok
    assert report.branciard_ok
    assert report.branciard_tight_ok
