"""Irreversible strain direction, coupling tensor and hardening moduli.

The plastic part of the Biot strain rate is produced by the evolution of the
plastic log strain ``E_p`` through the coupling tensor ``G``::

    Lambda_dot P = G[dE_p/dt]

which collects the change of the elastic law with ``(c, d, mu)`` (all
functions of ``tr E_p``) and with the plastic stretch ``U_p = exp E_p``.
"""
import math

import numpy as np

from . import tensors as tn
from .elastic import (ElasticPieces, coupling_slopes, dK_dc, dK_dd, dK_dmu,
                      dpc_dtrEp, heaviside)
from .errors import LockingMaterial, NotPositiveDefinite
from .yield_surface import yield_partials


def xi_coefficients(state, params):
    """Slopes ``(dc, dd, dmu) / d tr E_p`` of the coupled parameters."""
    pc, trEp = state.pc, state.trEp
    H = heaviside(pc - params.pcb)
    den = (params.a1 * params.Lambda1 * math.exp(-params.Lambda1 / pc)
           + params.a2 * params.Lambda2 * math.exp(-params.Lambda2 / pc))
    common = H * pc * pc * math.exp(trEp) / den
    xi2 = -params.c_inf * params.Gamma * math.exp(-params.Gamma * (pc - params.pcb)) * common
    xi3 = -params.B * common
    d = state.d
    xi4 = (d - 1.0 / d) * params.mu1 * xi2 + state.c * (1.0 + 1.0 / (d * d)) * params.mu1 * xi3
    return xi2, xi3, xi4


def _biot_sym(Uinv, A):
    return 0.5 * (Uinv @ A + A @ Uinv)


def coupling_tensor_G(U, Up, state, params, pieces=None, check=True):
    """Coupling tensor mapping ``dE_p/dt`` to ``Lambda_dot P``.

    Parameters
    ----------
    pieces : ElasticPieces, optional
        Reuse intermediate quantities already computed for the tangent.
    check : bool
        Verify positive definiteness of the symmetric part (6x6 Mandel).

    Raises
    ------
    NotPositiveDefinite
        If ``check`` and the symmetric part has a non-positive eigenvalue.
    """
    pc = pieces if pieces is not None else ElasticPieces(U, Up, state, params)
    Minv = tn.tensor4_invert(pc.E4)
    xi2, xi3, xi4 = xi_coefficients(state, params)
    Uinv = pc.Uinv
    coupled = (-xi2 * tn.outer(_biot_sym(Uinv, dK_dc(pc.trL, state, params)), tn.I3)
               - xi3 * tn.outer(_biot_sym(Uinv, dK_dd(pc.trL, state, params)), tn.I3)
               - xi4 * tn.outer(_biot_sym(Uinv, dK_dmu(pc.L)), tn.I3))
    Ep = tn.tensor_log(pc.Up)
    geometric = tn.compose(pc.dT_dX, tn.box(pc.X, pc.Upinv), tn.dexp_dE(Ep))
    G = tn.compose(Minv, coupled + geometric)
    if check:
        M = tn.to_mandel(G)
        lam_min = float(np.min(np.linalg.eigvalsh(0.5 * (M + M.T))))
        if not lam_min > 0.0:
            raise NotPositiveDefinite(
                f"coupling tensor not positive definite (min eigenvalue {lam_min:.3e})")
    return G


def hardening_rates(state, trEpDot, params):
    """``(dp_c/dt, dc/dt)`` for a volumetric plastic log strain rate."""
    pcDot = dpc_dtrEp(state.pc, state.trEp, params) * trEpDot
    dc, _ = coupling_slopes(state.pc, params)
    return pcDot, dc * pcDot


def hardening_modulus(T1, state, P, params, G=None, U=None, guard=None):
    """Hardening modulus ``h = -(dF/dp_c pc_bar + dF/dc c_bar)``.

    ``pc_bar`` and ``c_bar`` are the hardening rates per unit plastic
    multiplier, driven by ``tr G^-1[P]``. ``G`` defaults to the coupling
    tensor at rotation-free stretch ``U`` (identity if omitted).
    """
    if G is None:
        U = tn.I3 if U is None else U
        G = coupling_tensor_G(U, state.Up, state, params)
    tr_rate = float(np.trace(tn.solve4(G, P)))
    pc_bar, c_bar = hardening_rates(state, tr_rate, params)
    dF_dpc, dF_dc = yield_partials(T1, state, params, guard)
    return -(dF_dpc * pc_bar + dF_dc * c_bar)


def plastic_modulus(h, Q, P, E4):
    """``g = h + Q : E[P]``; must be positive."""
    g = h + tn.ddot(Q, tn.apply(E4, P))
    if not g > 0.0:
        raise LockingMaterial(f"plastic modulus g = {g:.6e} is not positive")
    return g
