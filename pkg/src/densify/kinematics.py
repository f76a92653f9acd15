"""Strain measures, work-conjugate stresses and the elastic-plastic split.

Lagrangean strains ``E(m) = (U^m - I)/m`` (``log U`` for ``m = 0``) are paired
with the stresses ``T(2) = F^-1 K F^-T``, ``T(1) = (T(2) U + U T(2))/2`` and,
when the Kirchhoff stress ``K`` commutes with ``log V``, ``T(0) = R^T K R``.
The plastic rotation is fixed to the identity, so the plastic part of the
deformation is carried entirely by the plastic right stretch ``U_p``.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import tensors as tn
from .errors import NonCoaxial, NonInvertible

#: Relative commutator tolerance for the rotated-stress conjugate.
COAXIALITY_TOL = 1e-8
#: Norm of log V treated as zero in the commutator normalization.
ZERO_LOG_TOL = 1e-13


@dataclass(frozen=True)
class DeformationState:
    """Deformation gradient with its polar factors, computed once."""

    F: np.ndarray

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        F.setflags(write=False)
        object.__setattr__(self, "F", F)
        R, U = tn.polar_decompose(F, "right")
        object.__setattr__(self, "_polar", (R, U))

    @classmethod
    def from_stretch(cls, U):
        """Rotation-free state ``F = U``."""
        return cls(tn.sym(np.asarray(U, float)))

    @property
    def R(self):
        return self._polar[0]

    @property
    def U(self):
        return self._polar[1]

    @cached_property
    def V(self):
        R, U = self._polar
        return tn.sym(R @ U @ R.T)

    @cached_property
    def J(self):
        return float(np.linalg.det(self.F))


@dataclass(frozen=True)
class PlasticKinematics:
    """Plastic stretch described by its logarithm ``E_p = log U_p``."""

    Ep: np.ndarray
    Up: np.ndarray = field(init=False)

    def __post_init__(self):
        Ep = tn.sym(np.array(self.Ep, dtype=float))
        object.__setattr__(self, "Ep", Ep)
        object.__setattr__(self, "Up", tn.tensor_exp(Ep))

    @classmethod
    def from_stretch(cls, Up):
        return cls(tn.tensor_log(Up))

    @property
    def trEp(self):
        return float(np.trace(self.Ep))

    @property
    def Jp(self):
        return float(np.exp(self.trEp))


def strain_measure(U, m):
    """Lagrangean strain of order ``m``: ``(U^m - I)/m`` or ``log U``."""
    U = np.asarray(U, float)
    if m == 0:
        return tn.tensor_log(U)
    if m == 1:
        return U - tn.I3
    if m == 2:
        return 0.5 * (U @ U - tn.I3)
    return (tn.tensor_power(U, m) - tn.I3) / m


def coaxiality_residual(K, V):
    """Normalized commutator ``|(log V) K - K (log V)| / (|K| |log V|)``."""
    K = np.asarray(K, float)
    L = tn.tensor_log(V)
    # a stretch equal to I up to rounding counts as the zero factor
    if tn.norm(L) <= ZERO_LOG_TOL:
        return 0.0
    scale = tn.norm(K) * tn.norm(L)
    if scale == 0.0:
        return 0.0
    return tn.norm(L @ K - K @ L) / scale


def conjugate_stress(K, state, m):
    """Stress conjugate to ``E(m)`` for Kirchhoff stress ``K``.

    Parameters
    ----------
    K : ndarray, shape (3, 3)
        Symmetric Kirchhoff stress.
    state : DeformationState
    m : {0, 1, 2}

    Raises
    ------
    NonCoaxial
        For ``m = 0`` when ``K`` and ``log V`` do not commute.
    """
    K = np.asarray(K, float)
    if m == 2:
        Finv = np.linalg.inv(state.F)
        return tn.sym(Finv @ K @ Finv.T)
    if m == 1:
        T2 = conjugate_stress(K, state, 2)
        return tn.sym(0.5 * (T2 @ state.U + state.U @ T2))
    if m == 0:
        res = coaxiality_residual(K, state.V)
        if res > COAXIALITY_TOL:
            raise NonCoaxial(f"commutator residual {res:.3e} exceeds {COAXIALITY_TOL}")
        return tn.sym(state.R.T @ K @ state.R)
    raise ValueError("conjugate stress available for m in {0, 1, 2} only")


def multiplicative_split(F, Up):
    """Elastic factor of ``F = F_e U_p`` (plastic rotation = identity).

    Returns
    -------
    Fe, Ve, eps_e
        Elastic deformation gradient, its left stretch and ``log V_e``.
    """
    F = np.asarray(F, float)
    Up = np.asarray(Up, float)
    if not np.linalg.det(Up) > 0.0:
        raise NonInvertible("plastic stretch is singular")
    Fe = F @ np.linalg.inv(Up)
    _, Ve = tn.polar_decompose(Fe, "left")
    # log V_e = 1/2 log(F_e F_e^T) avoids a second polar solve
    eps_e = 0.5 * tn.tensor_log(tn.sym(Fe @ Fe.T))
    return Fe, Ve, eps_e


def volumetric_split_check(F, Up):
    """Return ``(log J, log J_e, log J_p)`` with ``log J_e = tr log V_e``."""
    F = np.asarray(F, float)
    _, _, eps_e = multiplicative_split(F, Up)
    logJ = float(np.log(np.linalg.det(F)))
    logJp = float(np.trace(tn.tensor_log(Up)))
    logJe = float(np.trace(eps_e))
    return logJ, logJe, logJp


def stress_power(K, F, Fdot):
    """Reference stress power ``S : Fdot`` with ``S = K F^-T``."""
    S = np.asarray(K, float) @ np.linalg.inv(np.asarray(F, float)).T
    return tn.ddot(S, Fdot)


def work_conjugacy_residual(F_of_t, K_of_t, m, t, dt, floor=1e-300):
    """Relative mismatch ``|T(m) : dE(m)/dt - S : dF/dt|`` at time ``t``.

    Rates are central differences with step ``dt``; ``F_of_t`` and ``K_of_t``
    are callables returning the deformation gradient and Kirchhoff stress.
    """
    if m not in (1, 2):
        raise ValueError("m must be 1 or 2")
    F = np.asarray(F_of_t(t), float)
    Fp, Fm = np.asarray(F_of_t(t + dt), float), np.asarray(F_of_t(t - dt), float)
    state = DeformationState(F)
    Ep = strain_measure(DeformationState(Fp).U, m)
    Em = strain_measure(DeformationState(Fm).U, m)
    Edot = (Ep - Em) / (2.0 * dt)
    Fdot = (Fp - Fm) / (2.0 * dt)
    K = np.asarray(K_of_t(t), float)
    Tm = conjugate_stress(K, state, m)
    power = stress_power(K, F, Fdot)
    return abs(tn.ddot(Tm, Edot) - power) / max(abs(power), floor)


def eulerian_conjugacy_residual(F_of_t, K_of_t, t, dt, floor=1e-300):
    """Relative mismatch ``|K : d(log V)/dt - T(0) : d(log U)/dt|``.

    Holds when ``K`` is coaxial with ``V`` along the path.
    """
    F = np.asarray(F_of_t(t), float)
    sp, sm = DeformationState(F_of_t(t + dt)), DeformationState(F_of_t(t - dt))
    state = DeformationState(F)
    K = np.asarray(K_of_t(t), float)
    logV_dot = (tn.tensor_log(sp.V) - tn.tensor_log(sm.V)) / (2.0 * dt)
    logU_dot = (tn.tensor_log(sp.U) - tn.tensor_log(sm.U)) / (2.0 * dt)
    lhs = tn.ddot(K, logV_dot)
    rhs = tn.ddot(conjugate_stress(K, state, 0), logU_dot)
    return abs(lhs - rhs) / max(abs(rhs), floor)
