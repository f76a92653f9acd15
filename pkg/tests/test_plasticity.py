import math

import numpy as np
import pytest

from densify import tensors as tn
from densify.elastic import ElasticPieces, InternalState, biot_stress, pc_from_trEp
from densify.errors import LockingMaterial, NotPositiveDefinite
from densify.plasticity import (coupling_tensor_G, hardening_modulus, hardening_rates,
                                plastic_modulus, xi_coefficients)
from densify.yield_surface import flow_mode, stress_from_invariants, yield_gradient

from conftest import make_params, random_sym

I = np.eye(3)
FD_STEP = 1e-6


def sym_basis():
    out = []
    for k in range(3):
        for l in range(k, 3):
            B = np.zeros((3, 3))
            B[k, l] += 0.5
            B[l, k] += 0.5
            out.append(B)
    return out


def perturbed_state(rng, pc, params, spread=0.01):
    base = InternalState.from_pc(pc, params)
    return InternalState.from_plastic_strain(base.Ep + tn.dev(random_sym(rng, spread)), params)


def fd_G_column(U, Ep, params, B, M4):
    """``-M[dT1/dEp]`` along ``B`` at fixed stretch, state recomputed from ``Ep``."""
    def T(E):
        s = InternalState.from_plastic_strain(E, params)
        return biot_stress(U, s.Up, s, params)
    return -tn.apply(M4, (T(Ep + FD_STEP * B) - T(Ep - FD_STEP * B)) / (2 * FD_STEP))


def check_G_against_fd(U, state, params):
    pieces = ElasticPieces(U, state.Up, state, params)
    G = coupling_tensor_G(U, state.Up, state, params, pieces=pieces)
    M4 = tn.tensor4_invert(pieces.E4)
    for B in sym_basis():
        fd = fd_G_column(U, state.Ep, params, B, M4)
        np.testing.assert_allclose(tn.apply(G, B), fd, atol=1e-6 * tn.norm(fd))
    return G


class TestCouplingTensor:
    @pytest.mark.parametrize("pc", [0.3, 0.8, 3.0, 12.0])
    def test_matches_finite_differences(self, params, rng, pc):
        state = perturbed_state(rng, pc, params)
        U = tn.tensor_exp(state.Ep + random_sym(rng, 0.02))
        check_G_against_fd(U, state, params)

    def test_decoupled(self, rng):
        params = make_params(B=0.0, Gamma=0.0)
        for pc in (0.8, 5.0):
            state = perturbed_state(rng, pc, params)
            U = tn.tensor_exp(state.Ep + random_sym(rng, 0.02))
            assert xi_coefficients(state, params) == (0.0, 0.0, 0.0)
            check_G_against_fd(U, state, params)

    def test_below_threshold_geometric_only(self, params):
        state = InternalState.from_pc(0.3, params)
        U = state.Up
        assert xi_coefficients(state, params) == (0.0, 0.0, 0.0)
        pieces = ElasticPieces(U, state.Up, state, params)
        geometric = tn.compose(tn.tensor4_invert(pieces.E4), pieces.dT_dX,
                               tn.box(pieces.X, pieces.Upinv), tn.dexp_dE(state.Ep))
        np.testing.assert_allclose(coupling_tensor_G(U, state.Up, state, params), geometric,
                                   atol=1e-14)

    def test_positive_definite_on_isotropic_path(self, params):
        for pc in np.geomspace(0.1, 20.0, 40):
            state = InternalState.from_pc(pc, params)
            G = coupling_tensor_G(state.Up, state.Up, state, params)
            M = tn.to_mandel(G)
            assert np.linalg.eigvalsh(0.5 * (M + M.T)).min() > 0.0

    def test_indefinite_rejected(self):
        # a steep cohesion onset with a soft bulk response breaks positivity
        params = make_params(c_inf=1.5, kappa=0.04)
        state = InternalState.from_pc(0.501, params)
        with pytest.raises(NotPositiveDefinite):
            coupling_tensor_G(state.Up * math.exp(-0.03), state.Up, state, params)


class TestHardeningRates:
    def test_no_rate(self, params):
        assert hardening_rates(InternalState.from_pc(2.0, params), 0.0, params) == (0.0, 0.0)

    def test_compaction_hardens(self, params):
        for pc in (0.1, 0.3, 2.0, 20.0):
            pcDot, cDot = hardening_rates(InternalState.from_pc(pc, params), -1.0, params)
            assert pcDot > 0.0 and cDot >= 0.0

    def test_no_cohesion_below_threshold(self, params):
        assert hardening_rates(InternalState.from_pc(0.3, params), -1.0, params)[1] == 0.0

    def test_cohesion_rate(self, params):
        state = InternalState.from_pc(2.0, params)
        pcDot, cDot = hardening_rates(state, -1.0, params)
        slope = params.c_inf * params.Gamma * math.exp(-params.Gamma * (2.0 - params.pcb))
        assert cDot == pytest.approx(slope * pcDot, rel=1e-14)

    @pytest.mark.parametrize("pc", [0.1, 0.7, 3.0, 25.0])
    def test_derivative_of_compaction_law(self, params, pc):
        state = InternalState.from_pc(pc, params)
        h = 1e-6 * abs(state.trEp)
        fd = (pc_from_trEp(state.trEp - h, params) - pc_from_trEp(state.trEp + h, params)) / (2 * h)
        pcDot, _ = hardening_rates(state, -1.0, params)
        assert pcDot == pytest.approx(fd, rel=1e-8)


def cap_setup(params, pc=3.0, Phi=0.97, q_frac=0.05, theta=0.4):
    state = InternalState.from_pc(pc, params)
    p = Phi * (state.pc + state.c) - state.c
    T1 = stress_from_invariants(p, q_frac * pc, theta)
    Q = yield_gradient(T1, state, params)
    return state, T1, Q, flow_mode(Q, Phi, params)


class TestModuli:
    def test_hardening_on_cap_decoupled(self):
        params = make_params(B=0.0, Gamma=0.0)
        for pc in (0.5, 3.0, 12.0):
            state, T1, _, P = cap_setup(params, pc)
            assert np.trace(P) < 0.0  # outward normal on the cap: compaction
            assert hardening_modulus(T1, state, P, params, U=state.Up) > 0.0

    def test_no_hardening_without_volumetric_flow(self, params, rng):
        state, T1, _, P_cap = cap_setup(params)
        G = coupling_tensor_G(state.Up, state.Up, state, params)
        scale = abs(hardening_modulus(T1, state, P_cap, params, G=G))
        for _ in range(10):
            D = tn.dev(random_sym(rng))
            D *= tn.norm(tn.solve4(G, P_cap)) / tn.norm(D)
            P = tn.apply(G, D)
            assert abs(hardening_modulus(T1, state, P, params, G=G)) <= 1e-12 * scale

    def test_plastic_modulus_without_hardening(self, params):
        state, _, Q, P = cap_setup(params)
        E4 = ElasticPieces(state.Up, state.Up, state, params).E4
        assert plastic_modulus(0.0, Q, P, E4) == pytest.approx(tn.ddot(Q, tn.apply(E4, P)))

    def test_associative_quadratic_form(self, rng):
        params = make_params(eps_na=0.0)
        for pc in (0.3, 3.0):
            state = InternalState.from_pc(pc, params)
            E4 = ElasticPieces(state.Up, state.Up, state, params).E4
            for _ in range(50):
                Q = random_sym(rng)
                assert plastic_modulus(0.0, Q, Q, E4) > 0.0

    def test_locking(self, params):
        state, _, Q, P = cap_setup(params)
        E4 = ElasticPieces(state.Up, state.Up, state, params).E4
        with pytest.raises(LockingMaterial):
            plastic_modulus(-2.0 * tn.ddot(Q, tn.apply(E4, P)), Q, P, E4)
