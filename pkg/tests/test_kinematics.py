import math

import numpy as np
import pytest

from densify import tensors as tn
from densify.elastic import InternalState, kirchhoff_stress
from densify.errors import NonCoaxial, NonInvertible
from densify.kinematics import (DeformationState, PlasticKinematics, coaxiality_residual,
                                conjugate_stress, eulerian_conjugacy_residual,
                                multiplicative_split, strain_measure, volumetric_split_check,
                                work_conjugacy_residual)

from conftest import PC0, random_K, random_rotation, random_spd, random_sym, smooth_path

I = np.eye(3)


class TestStrainMeasures:
    def test_identity(self):
        for m in (-2, -1, 0, 1, 2, 3):
            np.testing.assert_allclose(strain_measure(I, m), 0.0, atol=1e-15)

    def test_values(self):
        U = np.diag([2.0, 1.0, 1.0])
        np.testing.assert_allclose(strain_measure(U, 2), np.diag([1.5, 0, 0]))
        np.testing.assert_allclose(strain_measure(U, 0), np.diag([math.log(2.0), 0, 0]))

    def test_monotone_in_m(self):
        U = np.diag([1.7, 1.0, 1.0])
        vals = [strain_measure(U, m)[0, 0] for m in (-2, -1, 0, 1, 2)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestConjugates:
    def test_identity_deformation(self, rng):
        K = random_sym(rng)
        st = DeformationState(I)
        for m in (0, 1, 2):
            np.testing.assert_allclose(conjugate_stress(K, st, m), K, atol=1e-15)

    def test_spherical(self):
        p, lam = 3.0, 1.4
        st = DeformationState(lam * I)
        np.testing.assert_allclose(conjugate_stress(-p * I, st, 2), -p / lam ** 2 * I)
        np.testing.assert_allclose(conjugate_stress(-p * I, st, 1), -p / lam * I)

    def test_pure_rotation(self, rng):
        R = random_rotation(rng)
        K = random_sym(rng)
        np.testing.assert_allclose(conjugate_stress(K, DeformationState(R), 0), R.T @ K @ R,
                                   atol=1e-14)

    def test_biot_symmetric(self, rng):
        st = DeformationState(random_rotation(rng) @ random_spd(rng))
        T1 = conjugate_stress(random_sym(rng), st, 1)
        assert np.abs(T1 - T1.T).max() <= 1e-14 * tn.norm(T1)

    def test_noncoaxial(self, rng):
        st = DeformationState(np.diag([1.3, 1.0, 0.8]))
        K = np.array([[1.0, 0.5, 0.0], [0.5, 2.0, 0.0], [0.0, 0.0, 3.0]])
        with pytest.raises(NonCoaxial):
            conjugate_stress(K, st, 0)

    def test_unsupported_m(self):
        with pytest.raises(ValueError):
            conjugate_stress(I, DeformationState(I), 3)


class TestCoaxiality:
    def test_coaxial_diagonals(self):
        assert coaxiality_residual(np.diag([1.0, 2.0, 3.0]), np.diag([1.1, 0.9, 1.3])) == 0.0

    def test_hydrostatic(self, rng):
        assert coaxiality_residual(-2.0 * I, random_spd(rng)) <= 1e-16

    def test_elastic_law(self, rng, params):
        state = InternalState.from_pc(5.0, params)
        for _ in range(100):
            eps = random_sym(rng, 0.05)
            K = kirchhoff_stress(eps, state, params)
            assert coaxiality_residual(K, tn.tensor_exp(eps)) <= 1e-12


class TestSplit:
    def test_no_plasticity(self, rng):
        F = random_rotation(rng) @ random_spd(rng)
        Fe, Ve, eps = multiplicative_split(F, I)
        np.testing.assert_allclose(Fe, F)
        np.testing.assert_allclose(eps, tn.tensor_log(DeformationState(F).V), atol=1e-14)

    def test_purely_plastic(self, rng):
        U = random_spd(rng)
        Fe, Ve, eps = multiplicative_split(U, U)
        np.testing.assert_allclose(Fe, I, atol=1e-14)
        np.testing.assert_allclose(eps, 0.0, atol=1e-14)

    def test_spherical_traces(self):
        _, _, eps = multiplicative_split(1.3 * I, 0.9 * I)
        assert np.trace(eps) == pytest.approx(3 * math.log(1.3 / 0.9), rel=1e-14)

    def test_volumetric_examples(self):
        assert volumetric_split_check(I, I) == (0.0, 0.0, 0.0)
        vals = volumetric_split_check(0.8 * I, 0.9 * I)
        np.testing.assert_allclose(vals, (3 * math.log(0.8), 3 * math.log(8 / 9), 3 * math.log(0.9)),
                                   rtol=1e-13)

    def test_volumetric_additivity(self, rng):
        for _ in range(1000):
            F = random_rotation(rng) @ random_spd(rng, 0.4, 2.0)
            logJ, logJe, logJp = volumetric_split_check(F, random_spd(rng, 0.5, 1.2))
            assert abs(logJ - logJe - logJp) <= 1e-12

    def test_singular_plastic_stretch(self):
        with pytest.raises(NonInvertible):
            multiplicative_split(I, np.diag([1.0, 1.0, 0.0]))

    def test_plastic_kinematics(self, rng):
        Up = random_spd(rng)
        pk = PlasticKinematics.from_stretch(Up)
        np.testing.assert_allclose(pk.Up, Up, rtol=1e-12, atol=1e-14)
        assert math.log(pk.Jp) == pytest.approx(pk.trEp, abs=1e-12)


class TestWorkConjugacy:
    def test_static_path(self, rng):
        K = random_sym(rng)
        for m in (1, 2):
            assert work_conjugacy_residual(lambda t: 1.2 * I, lambda t: K, m, 0.0, 1e-6,
                                           floor=1.0) == 0.0

    def test_isotropic_path(self):
        F = lambda t: (1.0 + t) * I
        K = lambda t: -2.0 * I
        assert work_conjugacy_residual(F, K, 2, 0.3, 1e-6) <= 1e-8

    @pytest.mark.parametrize("m", [1, 2])
    def test_random_paths(self, rng, m):
        for _ in range(10):
            F, K = smooth_path(rng), random_K(rng)
            assert work_conjugacy_residual(F, K, m, 0.4, 1e-6) <= 1e-6

    @pytest.mark.parametrize("m", [1, 2])
    def test_second_order_convergence(self, rng, m):
        F, K = smooth_path(rng), random_K(rng)
        r1 = work_conjugacy_residual(F, K, m, 0.4, 2e-3)
        r2 = work_conjugacy_residual(F, K, m, 0.4, 1e-3)
        assert 3.5 < r1 / r2 < 4.5

    def test_eulerian_identity(self, rng, params):
        state = InternalState.from_pc(PC0, params)
        for _ in range(10):
            F = smooth_path(rng)
            K = lambda t, F=F: kirchhoff_stress(tn.tensor_log(DeformationState(F(t)).V), state, params)
            assert eulerian_conjugacy_residual(F, K, 0.4, 1e-6) <= 1e-6
