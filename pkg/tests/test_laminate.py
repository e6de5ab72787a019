"""Tests for the rank-one laminate formula and its structure conditions."""

import numpy as np
import pytest

from homoglab import laminate, linalg
from homoglab.errors import ValidationError

E1_2 = np.array([1.0, 0.0])
I2 = np.eye(2)
E2XE2 = np.array([[0.0, 0.0], [0.0, 1.0]])


def spec2(phase1, phase2, theta=0.5, direction=E1_2):
    return laminate.LaminateSpec(phase1=phase1, phase2=phase2, theta=theta,
                                 direction=direction)


def test_spec_validation():
    with pytest.raises(ValidationError, match="theta"):
        spec2(I2, I2, theta=1.5)
    with pytest.raises(ValidationError, match="unit vector"):
        spec2(I2, I2, direction=np.array([1.0, 1.0]))
    with pytest.raises(ValidationError, match="not PSD"):
        spec2(np.diag([-1.0, 1.0]), I2)


def test_laminate_a_values():
    assert laminate.laminate_a(spec2(E2XE2, I2)) == pytest.approx(0.5, abs=1e-15)
    assert laminate.laminate_a(spec2(E2XE2, E2XE2)) == 0.0
    assert laminate.laminate_a(spec2(I2, 2 * I2)) == pytest.approx(1.5, abs=1e-15)


def test_counterexample_tensor_exact():
    hom = laminate.homogenize_laminate(spec2(E2XE2, I2))
    assert hom.a_value == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(hom.tensor, np.diag([0.0, 1.0]), atol=1e-14)
    assert not hom.pd
    assert hom.branch == "regular"
    assert len(hom.kernel) == 1
    assert abs(abs(hom.kernel[0][0]) - 1.0) < 1e-10


def test_equal_phases_reproduce_phase():
    rng = np.random.default_rng(11)
    b = rng.normal(size=(2, 2))
    m = b.T @ b
    hom = laminate.homogenize_laminate(spec2(m, m, theta=0.3))
    np.testing.assert_allclose(hom.tensor, m, atol=1e-13)


def test_isotropic_harmonic_arithmetic():
    hom = laminate.homogenize_laminate(spec2(I2, 2 * I2))
    np.testing.assert_allclose(hom.tensor, np.diag([4.0 / 3.0, 1.5]), rtol=1e-14)


def test_degenerate_average_branch():
    # both phases kill the normal: a = 0, arithmetic average
    hom = laminate.homogenize_laminate(spec2(E2XE2, 2 * E2XE2, theta=0.25))
    assert hom.branch == "degenerate_average"
    np.testing.assert_allclose(hom.tensor, 0.25 * E2XE2 + 0.75 * 2 * E2XE2,
                               atol=1e-14)


def test_rotated_direction_matches_conjugation():
    rng = np.random.default_rng(5)
    b1, b2 = rng.normal(size=(2, 2, 2))
    a1, a2 = b1.T @ b1, b2.T @ b2
    angle = 0.7
    q = np.array([[np.cos(angle), -np.sin(angle)],
                  [np.sin(angle), np.cos(angle)]])
    n = q @ E1_2
    hom_rot = laminate.homogenize_laminate(
        spec2(q @ a1 @ q.T, q @ a2 @ q.T, theta=0.37, direction=n))
    hom_ref = laminate.homogenize_laminate(spec2(a1, a2, theta=0.37))
    np.testing.assert_allclose(hom_rot.tensor, q @ hom_ref.tensor @ q.T,
                               atol=1e-12)


def _random_psd_pair(rng, d):
    b1 = rng.normal(size=(d, d))
    b2 = rng.normal(size=(d, d))
    return b1.T @ b1, b2.T @ b2


def test_formula_invariants_random():
    rng = np.random.default_rng(101)
    for _ in range(300):
        d = int(rng.integers(2, 4))
        a1, a2 = _random_psd_pair(rng, d)
        th = float(rng.uniform(0.05, 0.95))
        n = rng.normal(size=d)
        n /= np.linalg.norm(n)
        spec = laminate.LaminateSpec(phase1=a1, phase2=a2, theta=th, direction=n)
        hom = laminate.homogenize_laminate(spec)
        rho = max(1.0, linalg.spectral_radius(hom.tensor))
        assert linalg.sym_eig(hom.tensor).eigenvalues[0] >= -1e-10 * rho
        mean = th * a1 + (1 - th) * a2
        assert linalg.sym_eig(mean - hom.tensor).eigenvalues[0] >= -1e-10 * rho
        # exchange symmetry
        swapped = laminate.homogenize_laminate(
            laminate.LaminateSpec(phase1=a2, phase2=a1, theta=1 - th, direction=n))
        assert np.abs(swapped.tensor - hom.tensor).max() <= 1e-12 * rho
        # cross-interface identity A*n.n a = (A1n.n)(A2n.n)
        if hom.a_value > laminate.default_a_tol(spec):
            lhs = float((hom.tensor @ n) @ n) * hom.a_value
            rhs = float((a1 @ n) @ n) * float((a2 @ n) @ n)
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_theta_endpoint_continuity():
    rng = np.random.default_rng(23)
    for _ in range(20):
        d = int(rng.integers(2, 4))
        a1, a2 = _random_psd_pair(rng, d)
        a1 += 0.1 * np.eye(d)  # keep a bounded away from 0 at the endpoints
        a2 += 0.1 * np.eye(d)
        n = np.zeros(d)
        n[0] = 1.0
        lo = laminate.homogenize_laminate(
            laminate.LaminateSpec(phase1=a1, phase2=a2, theta=1e-8, direction=n))
        hi = laminate.homogenize_laminate(
            laminate.LaminateSpec(phase1=a1, phase2=a2, theta=1 - 1e-8, direction=n))
        assert np.abs(lo.tensor - a2).max() <= 1e-6 * np.abs(a2).max()
        assert np.abs(hi.tensor - a1).max() <= 1e-6 * np.abs(a1).max()


def test_conditions_2d_examples():
    xi = np.array([1.0, 1.0])
    rep = laminate.check_conditions_2d(spec2(np.outer(xi, xi), I2), xi=xi)
    assert rep.h2_holds
    assert rep.detail("xi_not_orthogonal").value == pytest.approx(1.0)
    assert rep.detail("xi_A2n_independent").value == pytest.approx(1.0)

    rep = laminate.check_conditions_2d(spec2(E2XE2, I2))
    assert not rep.h2_holds
    assert not rep.detail("xi_not_orthogonal").passed

    e1e1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    rep = laminate.check_conditions_2d(spec2(e1e1, I2))
    assert not rep.h2_holds
    assert not rep.detail("xi_A2n_independent").passed
    assert rep.detail("xi_not_orthogonal").passed


def test_conditions_2d_rejects_full_rank_phase1():
    with pytest.raises(ValidationError, match="rank one"):
        laminate.check_conditions_2d(spec2(I2, I2))


def _rank_two(eta):
    eta = np.asarray(eta, dtype=float)
    eta = eta / np.linalg.norm(eta)
    return np.eye(3) - np.outer(eta, eta)


def spec3(a1, a2, theta=0.5):
    return laminate.LaminateSpec(phase1=a1, phase2=a2, theta=theta,
                                 direction=np.array([1.0, 0.0, 0.0]))


def test_conditions_3d_equal_fluxes_fail_rank_condition():
    # eta1 = e2, eta2 = e3: A1 e1 = A2 e1 = e1, so the flux pair is rank one
    rep = laminate.check_conditions_3d(spec3(_rank_two([0, 1, 0]), _rank_two([0, 0, 1])))
    assert rep.detail("n_eta1_eta2_independent").passed
    assert not rep.detail("A1n_A2n_independent").passed
    assert not rep.h2_holds


def test_conditions_3d_kernel_along_normal_fails():
    rep = laminate.check_conditions_3d(spec3(_rank_two([1, 0, 0]), _rank_two([0, 0, 1])))
    assert not rep.detail("n_eta1_eta2_independent").passed
    assert not rep.h2_holds


def test_conditions_3d_oblique_kernel_holds():
    a2 = _rank_two(np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0))
    rep = laminate.check_conditions_3d(spec3(_rank_two([0, 1, 0]), a2))
    # det[e1, e2, (e1+e3)/sqrt(2)] = 1/sqrt(2); A1 e1 = e1, A2 e1 = (e1-e3)/2
    assert rep.detail("n_eta1_eta2_independent").value == pytest.approx(1 / np.sqrt(2))
    assert rep.h2_holds
    hom = laminate.homogenize_laminate(
        spec3(_rank_two([0, 1, 0]), a2))
    assert hom.pd


def test_conditions_3d_rejects_wrong_rank():
    with pytest.raises(ValidationError, match="phase2"):
        laminate.check_conditions_3d(spec3(_rank_two([0, 1, 0]), np.eye(3)))


def test_v_space_2d_spans_plane():
    xi = np.array([1.0, 1.0])
    gens = laminate.v_space_basis(spec2(np.outer(xi, xi), I2))
    assert len(gens) == 2
    np.testing.assert_allclose(gens[0], xi, atol=1e-12)
    np.testing.assert_allclose(np.abs(gens[1]), [0.0, 0.5], atol=1e-12)
    assert linalg._span_rank(gens, 2, 1e-10)[0] == 2


def test_v_space_2d_orthogonal_xi_degenerates():
    gens = laminate.v_space_basis(spec2(E2XE2, I2))
    rank, basis = linalg._span_rank(gens, 2, 1e-10)
    assert rank == 1
    assert abs(abs(basis[0][1]) - 1.0) < 1e-12  # span {e2}


def test_v_space_3d_spans_space():
    gens = laminate.v_space_basis(
        spec3(_rank_two([0, 1, 0]), _rank_two(np.array([1.0, 0, 1.0]) / np.sqrt(2))))
    assert len(gens) == 3
    assert linalg._span_rank(gens, 3, 1e-10)[0] == 3


def test_verify_kernel_identity_examples():
    xi = np.array([1.0, 1.0])
    assert laminate.verify_kernel_identity(spec2(np.outer(xi, xi), I2))
    assert laminate.verify_kernel_identity(spec2(E2XE2, I2))
    assert laminate.verify_kernel_identity(spec2(I2, I2))


def test_parallel_flux_with_pd_phase2_keeps_definiteness():
    # xi parallel to A2 e1 forces xi.e1 != 0 when A2 is PD, and the explicit
    # formula then yields a positive definite tensor even though the
    # independence condition fails.
    e1e1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    hom = laminate.homogenize_laminate(spec2(e1e1, I2))
    np.testing.assert_allclose(hom.tensor, np.diag([1.0, 0.5]), atol=1e-14)
    assert hom.pd
    assert laminate.verify_kernel_identity(spec2(e1e1, I2))


def test_spec_dict_round_trip():
    spec = spec2(E2XE2, I2, theta=0.25)
    again = laminate.LaminateSpec.from_dict(spec.to_dict())
    np.testing.assert_array_equal(again.phase1, spec.phase1)
    np.testing.assert_array_equal(again.phase2, spec.phase2)
    assert again.theta == spec.theta
    with pytest.raises(ValidationError, match="missing keys"):
        laminate.LaminateSpec.from_dict({"phase1": [[1, 0], [0, 1]]})
