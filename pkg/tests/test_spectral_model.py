import math
import logging

import numpy as np
import pytest
from scipy.special import roots_legendre

from mscale_spectral_lab.errors import NonSPDError
from mscale_spectral_lab.hermite_core import (
    PI_QUARTER,
    HermiteBasis,
    eval_hermite_derivatives,
    eval_hermite_functions,
)
from mscale_spectral_lab.spectral_model import (
    ScaleSpec,
    SpectralOperator,
    SpectralState,
    assemble_operator,
    band_energy,
    coeff_A,
    coeff_B,
    coefficient_profiles,
    default_lambda,
    energy,
    evaluate_spectral,
    evolve,
    gaussian_hat,
    make_basis,
    project_initial,
    project_interval,
    scale_spec,
    step_backward_euler,
    tail_fraction,
)


@pytest.fixture
def small_basis():
    """A p = 30 basis at unit scale for the assembly checks."""
    return HermiteBasis(30, 1.0)


@pytest.fixture
def indicator_basis():
    """The p = 100 basis resolving the indicator of [−5, 5] up to |ξ| = 10."""
    return make_basis(100, "auto", xi_max=10.0)


def unit_state(basis, index=0):
    """State with a single unit real coefficient at ``index``."""
    U_plus = np.zeros(basis.size)
    U_plus[index] = 1.0
    return SpectralState(U_plus, np.zeros(basis.size), 0.0, basis.lam)


def test_scale_spec_pow2_rule():
    """Test that the pow2 rule yields α_j = 2^j and that invalid layouts are rejected."""
    spec = scale_spec(3)
    assert spec.alphas == (1.0, 2.0, 4.0, 8.0)
    assert spec.count == 4

    with pytest.raises(ValueError, match="scale factors"):
        ScaleSpec(1, (1.0, 0.5))
    with pytest.raises(ValueError, match="expected 3"):
        ScaleSpec(2, (1.0, 2.0))
    with pytest.raises(ValueError, match="alpha rule"):
        scale_spec(2, "linear")


def test_default_lambda_places_turning_point():
    """Test λ = √(2p+1)/Ξ_max and the 'auto' resolution in make_basis."""
    assert default_lambda(100, 10.0) == pytest.approx(math.sqrt(201) / 10.0)
    assert make_basis(12, 0.5).lam == 0.5
    with pytest.raises(ValueError, match="xi_max"):
        make_basis(12, "auto")


def test_gaussian_hat_examples():
    """Test Ĝ(0; 1) = √(2π), the 1/α prefactor, and decay in |ξ|."""
    assert gaussian_hat(0.0, 1.0) == pytest.approx(2.5066283, rel=1e-7)
    assert gaussian_hat(0.0, 4.0) == pytest.approx(math.sqrt(2 * math.pi) / 4.0)
    assert gaussian_hat(0.5, 1.0) < gaussian_hat(0.1, 1.0)
    assert gaussian_hat(np.zeros(3), 1.0, d=3) == pytest.approx((2 * math.pi) ** 1.5)


def test_diffusion_coefficients_examples():
    """
    Test A_0^+(0) = 0.036046, B_0^+(0) = (1+e^{−2})√(2π)/2, and A^+ > A^− pointwise.
    """
    spec = scale_spec(0)
    assert coeff_A(0.0, "+", spec) == pytest.approx(0.036046, rel=1e-4)
    assert coeff_B(0.0, "+", spec) == pytest.approx(
        (1 + math.exp(-2)) * math.sqrt(2 * math.pi) / 2.0, rel=1e-12
    )

    xi = np.linspace(-3.0, 3.0, 61)
    spec = scale_spec(3)
    assert np.all(coeff_A(xi, "+", spec) > coeff_A(xi, "-", spec))
    assert np.all(coeff_B(xi, "+", spec) > coeff_B(xi, "-", spec))

    with pytest.raises(ValueError, match="sign"):
        coeff_A(0.0, "plus", spec)


def test_coefficient_support_grows_with_scales():
    """
    Test that max_ξ A_s^−(ξ) and the measure of {A_s^− > 1e-3} are non-decreasing in s.
    """
    xi = np.linspace(0.0, 30.0, 3001)
    profiles = coefficient_profiles(xi, range(6))

    peaks = [profiles[s]["A_minus"].max() for s in range(6)]
    supports = [np.count_nonzero(profiles[s]["A_minus"] > 1e-3) for s in range(6)]

    assert all(later >= earlier for earlier, later in zip(peaks, peaks[1:]))
    assert all(later >= earlier for earlier, later in zip(supports, supports[1:]))
    assert set(profiles[0]) == {"A_minus", "A_plus", "B_plus", "B_minus"}


def test_assembled_matrices_are_symmetric_with_parity_zeros(small_basis):
    """
    Test that K^± and M^± are symmetric, vanish exactly where n + k is odd, and are
    negative semidefinite; D is the identity over λ.
    """
    op = assemble_operator(small_basis, scale_spec(3))
    n, k = np.indices(op.K_plus.shape)
    odd = (n + k) % 2 == 1

    for matrix in (op.K_plus, op.K_minus, op.M_plus, op.M_minus):
        np.testing.assert_allclose(matrix, matrix.T, rtol=0.0, atol=1e-12 * np.abs(matrix).max())
        assert np.all(matrix[odd] == 0.0)
        assert np.linalg.eigvalsh(matrix).max() <= 1e-10 * np.abs(matrix).max()

    np.testing.assert_array_equal(op.D, np.eye(31) / small_basis.lam)


@pytest.mark.parametrize("num_scales", [0, 3, 5])
@pytest.mark.parametrize("lam", [0.5, 1.0])
def test_assembly_matches_quadrature_oracle(num_scales, lam):
    """
    Test K^± = −λ²∫A^±(ξ)Ĥ'_n(λξ)Ĥ'_k(λξ)dξ and M^± = −∫B^±(ξ)Ĥ_n(λξ)Ĥ_k(λξ)dξ.

    The oracle integrates in u = λξ with 3000 Gauss-Legendre nodes on [−16, 16],
    calling the coefficient functions directly.
    """
    basis = HermiteBasis(30, lam)
    spec = scale_spec(num_scales)
    op = assemble_operator(basis, spec)

    nodes, weights = roots_legendre(3000)
    u = 16.0 * nodes
    weights = 16.0 * weights
    functions = eval_hermite_functions(u, 30)
    derivatives = eval_hermite_derivatives(u, 30)

    for sign, K, M in (("+", op.K_plus, op.M_plus), ("-", op.K_minus, op.M_minus)):
        A = coeff_A(u / lam, sign, spec)
        B = coeff_B(u / lam, sign, spec)
        K_oracle = -lam * (derivatives * (weights * A)) @ derivatives.T
        M_oracle = -(functions * (weights * B)) @ functions.T / lam

        assert np.abs(K - K_oracle).max() <= 1e-8 * max(1.0, np.abs(K).max())
        assert np.abs(M - M_oracle).max() <= 1e-8 * max(1.0, np.abs(M).max())


def test_assembly_rejects_higher_dimensions(small_basis):
    """Test that the diffusion assembly is one-dimensional only."""
    with pytest.raises(ValueError, match="d = 1"):
        assemble_operator(small_basis, scale_spec(1, dim=2))


def test_projection_of_basis_function_and_zero(small_basis):
    """
    Test that projecting Ĥ_0(λξ) yields e_0 and that projecting zero yields zeros.
    """
    state = project_initial(small_basis, lambda xi: small_basis.evaluate(xi)[0])
    expected = np.zeros(small_basis.size)
    expected[0] = 1.0

    np.testing.assert_allclose(state.U_plus, expected, atol=1e-12)
    np.testing.assert_allclose(state.U_minus, 0.0, atol=1e-12)

    zero = project_initial(small_basis, lambda xi: np.zeros_like(xi))
    assert not np.any(zero.U_plus) and not np.any(zero.U_minus)


def test_synthesis_then_projection_round_trip():
    """
    Test that projecting a synthesized profile recovers its coefficients to 1e-10.
    """
    basis = HermiteBasis(10, 0.8)
    rng = np.random.default_rng(3)
    state = SpectralState(rng.standard_normal(11), rng.standard_normal(11), 0.0, basis.lam)

    projected = project_initial(basis, lambda xi: evaluate_spectral(state, basis, xi).values)

    np.testing.assert_allclose(projected.U_plus, state.U_plus, atol=1e-10)
    np.testing.assert_allclose(projected.U_minus, state.U_minus, atol=1e-10)


def test_interval_projection_matches_quadrature(indicator_basis):
    """
    Test the exact indicator projection against 2000-node Gauss-Legendre integrals of
    Ĥ_k over [−λr, λr]; both parts carry the value 1 + i.
    """
    state = project_interval(indicator_basis, -5.0, 5.0)

    edge = indicator_basis.lam * 5.0
    nodes, weights = roots_legendre(2000)
    functions = eval_hermite_functions(edge * nodes, indicator_basis.order_p)
    oracle = functions @ (edge * weights)

    np.testing.assert_allclose(state.U_plus, oracle, atol=1e-10)
    np.testing.assert_allclose(state.U_minus, oracle, atol=1e-10)
    # Odd coefficients of a symmetric indicator vanish
    assert np.abs(state.U_plus[1::2]).max() < 1e-12


def test_interval_projection_first_coefficient():
    """Test U_0 = π^{-1/4}√(2π)·erf(λr/√2) for the symmetric indicator."""
    basis = HermiteBasis(4, 0.5)
    state = project_interval(basis, -2.0, 2.0, value=1.0)
    expected = PI_QUARTER * math.sqrt(2 * math.pi) * math.erf(1.0 / math.sqrt(2.0))

    assert state.U_plus[0] == pytest.approx(expected, rel=1e-13)
    assert not np.any(state.U_minus)
    with pytest.raises(ValueError, match="lower < upper"):
        project_interval(basis, 1.0, -1.0)


def test_projection_warns_on_unresolved_data(caplog):
    """
    Test that a profile living entirely in the highest basis function triggers the
    resolution warning.
    """
    basis = HermiteBasis(9, 1.0)
    with caplog.at_level(logging.WARNING):
        state = project_initial(basis, lambda xi: basis.evaluate(xi)[9])

    assert tail_fraction(state) == pytest.approx(1.0)
    assert "may not resolve" in caplog.text


def test_step_of_zero_state_stays_zero(small_basis):
    """Test that stepping zero initial data stays exactly zero."""
    op = assemble_operator(small_basis, scale_spec(2))
    state = step_backward_euler(op, SpectralState.zeros(small_basis), 0.01)

    assert not np.any(state.U_plus) and not np.any(state.U_minus)
    assert state.time == pytest.approx(0.01)


def test_single_step_decreases_energy(indicator_basis):
    """Test E(e_0) = 1/λ and that one step of e_0 with s = 3 lowers the energy."""
    op = assemble_operator(indicator_basis, scale_spec(3))
    start = unit_state(indicator_basis)

    assert energy(start) == pytest.approx(1.0 / indicator_basis.lam)
    assert energy(step_backward_euler(op, start, 1e-3)) < energy(start)


def test_step_rejects_nonpositive_dt(small_basis):
    """Test that dt ≤ 0 raises ValueError."""
    op = assemble_operator(small_basis, scale_spec(0))
    with pytest.raises(ValueError, match="dt"):
        step_backward_euler(op, unit_state(small_basis), 0.0)


def test_step_reports_indefinite_system():
    """
    Test that a system matrix failing Cholesky factorization raises NonSPDError.
    """
    basis = HermiteBasis(3, 1.0)
    size = basis.size
    op = SpectralOperator(
        basis=basis,
        spec=scale_spec(0),
        D=np.eye(size),
        K_plus=10.0 * np.eye(size),
        K_minus=10.0 * np.eye(size),
        M_plus=np.zeros((size, size)),
        M_minus=np.zeros((size, size)),
    )

    with pytest.raises(NonSPDError, match="positive definite"):
        step_backward_euler(op, unit_state(basis), 1.0)


@pytest.mark.parametrize("order_p", [20, 100])
@pytest.mark.parametrize("num_scales", [0, 5])
@pytest.mark.parametrize("dt", [1e-4, 1e-1])
def test_stepping_systems_are_positive_definite(order_p, num_scales, dt):
    """Test that both backward-Euler systems factor for a spread of p, s and dt."""
    basis = make_basis(order_p, "auto", xi_max=10.0)
    op = assemble_operator(basis, scale_spec(num_scales))
    for matrix in (op.D - dt * (op.K_minus + op.M_plus), op.D - dt * (op.K_plus + op.M_minus)):
        assert np.linalg.eigvalsh(matrix).min() > 0.0


def test_energy_is_non_increasing(indicator_basis):
    """
    Test monotone energy over 10^4 steps of the indicator problem with s = 3, dt = 1e-3.
    """
    op = assemble_operator(indicator_basis, scale_spec(3))
    state = project_interval(indicator_basis, -5.0, 5.0)

    run = evolve(op, state, 1e-3, 10_000)

    assert len(run.energies) == 10_001
    assert np.all(run.energies[1:] <= run.energies[:-1] * (1.0 + 1e-12))


def test_evolve_keeps_requested_snapshots(small_basis):
    """Test that snapshots are kept at the requested steps with matching times."""
    op = assemble_operator(small_basis, scale_spec(1))
    run = evolve(op, unit_state(small_basis), 0.01, 20, snapshot_steps=(0, 5, 20))

    assert sorted(run.snapshots) == [0, 5, 20]
    assert run.snapshots[5].time == pytest.approx(0.05)
    assert run.energies[20] == pytest.approx(energy(run.snapshots[20]))


def test_evaluate_unit_state_at_origin():
    """Test that η̃(0) = π^{-1/4} for the e_0 state at any λ."""
    basis = HermiteBasis(5, 2.5)
    profile = evaluate_spectral(unit_state(basis), basis, np.array([0.0]))

    assert profile.real_part[0] == pytest.approx(PI_QUARTER)
    assert profile.imag_part[0] == 0.0


def test_band_energies_add_up(indicator_basis):
    """Test that adjacent bands partition the total energy of a resolved state."""
    state = project_interval(indicator_basis, -5.0, 5.0)
    total = band_energy(state, indicator_basis, 0.0, 3.0) + band_energy(
        state, indicator_basis, 3.0, math.inf
    )

    assert total == pytest.approx(energy(state), rel=1e-6)
    assert band_energy(unit_state(indicator_basis), indicator_basis, 0.0, math.inf) == (
        pytest.approx(1.0 / indicator_basis.lam, rel=1e-12)
    )
    with pytest.raises(ValueError, match="band"):
        band_energy(state, indicator_basis, 2.0, 1.0)


def test_spectral_bias_ordering(indicator_basis):
    """
    Test the band-energy ordering of the indicator problem on the band 2 ≤ |ξ| ≤ 5.

    With R_s(t) the ratio of band energy at time t to band energy at t = 0, the
    single-scale error barely moves (R_0(1) > 0.9 on 3 ≤ |ξ| ≤ 5), more scales remove
    it faster (R_0 > R_3 > R_5 at t = 0.1, 0.5, 1 and 5), and five extra scales clear
    most of it by t = 1 (R_5(1) < 0.1).
    """
    state = project_interval(indicator_basis, -5.0, 5.0)
    dt = 1e-3
    steps = {0.1: 100, 0.5: 500, 1.0: 1000, 5.0: 5000}
    ratios = {}
    upper_ratio = None

    for s in (0, 3, 5):
        op = assemble_operator(indicator_basis, scale_spec(s))
        run = evolve(op, state, dt, 5000, snapshot_steps=steps.values())
        start = band_energy(state, indicator_basis, 2.0, 5.0)
        ratios[s] = {
            t: band_energy(run.snapshots[m], indicator_basis, 2.0, 5.0) / start
            for t, m in steps.items()
        }
        if s == 0:
            upper_ratio = band_energy(run.snapshots[1000], indicator_basis, 3.0, 5.0) / (
                band_energy(state, indicator_basis, 3.0, 5.0)
            )

    assert upper_ratio > 0.9
    for t in steps:
        assert ratios[0][t] > ratios[3][t] > ratios[5][t], t
    assert ratios[5][1.0] < 0.1
