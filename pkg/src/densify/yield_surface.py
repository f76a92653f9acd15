"""Three-invariant cap yield function written in Biot stress.

``F = f(p, p_c, c) + q / g(theta)`` with the meridian function

    f = -M p_c sqrt((Phi - Phi^m) (2 (1 - alpha) Phi + alpha)),
    Phi = (p + c) / (p_c + c),

(``+inf`` for ``Phi`` outside ``[0, 1]``) and the deviatoric shape
``1/g(theta) = cos(beta pi/6 - acos(gamma cos 3 theta)/3)``. Pressure is
positive in compression, ``p = -tr T1 / 3``.
"""
from dataclasses import dataclass
import math

import numpy as np

from . import tensors as tn
from .errors import GradientSingular

#: Sentinel multiplier standing in for the infinite branch of ``f``.
OUT_OF_DOMAIN = 1e30
#: Distance from the cap vertices below which the gradient is singular.
VERTEX_TOL = 1e-9
#: Relative threshold on J2 (w.r.t. (tr T1)^2) below which theta is undefined.
TOL_J2 = 1e-12

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class StressInvariants:
    p: float
    q: float
    theta: float
    J2: float
    J3: float
    lode_undefined: bool = False

    @property
    def cos3theta(self):
        return math.cos(3.0 * self.theta)


@dataclass(frozen=True)
class YieldState:
    """Yield function value together with gradient and flow mode."""

    F: float
    Phi: float
    Q: np.ndarray
    P: np.ndarray
    in_domain: bool = True


def _j2_tol(trace):
    return TOL_J2 * trace * trace


def _cos3theta(s_hat):
    # unit-J2 deviator keeps J3 / J2^(3/2) clear of under- and overflow
    t = 0.5 * _SQRT3 * float(np.trace(s_hat @ s_hat @ s_hat))
    return min(1.0, max(-1.0, t))


def stress_invariants(T1):
    """Mean pressure, Mises stress, Lode angle and J2, J3 of ``T1``."""
    T1 = np.asarray(T1, float)
    tr = float(np.trace(T1))
    s = tn.dev(T1)
    J2 = 0.5 * tn.ddot(s, s)
    J3 = float(np.trace(s @ s @ s)) / 3.0
    p = -tr / 3.0
    q = math.sqrt(3.0 * J2)
    if J2 <= _j2_tol(tr) or J2 == 0.0:
        return StressInvariants(p, q, 0.0, J2, J3, True)
    t = _cos3theta(s / math.sqrt(J2))
    return StressInvariants(p, q, math.acos(t) / 3.0, J2, J3, False)


def stress_from_invariants(p, q, theta):
    """Diagonal Biot stress with the given ``(p, q, theta)``."""
    r = 2.0 * q / 3.0
    s = [r * math.cos(theta), r * math.cos(theta - 2.0 * math.pi / 3.0),
         r * math.cos(theta + 2.0 * math.pi / 3.0)]
    return np.diag(s) - p * tn.I3


# ---------------------------------------------------------------------------
# shape functions
# ---------------------------------------------------------------------------

def inverse_lode_g(cos3theta, params):
    """``1/g`` as a function of ``cos 3 theta``."""
    return math.cos(params.beta * math.pi / 6.0
                    - math.acos(params.gamma * cos3theta) / 3.0)


def lode_g(theta, params):
    """Deviatoric shape factor ``g(theta)``."""
    return 1.0 / inverse_lode_g(math.cos(3.0 * theta), params)


def _d_inverse_lode_g(t, params):
    # d(1/g)/d(cos 3 theta); gamma < 1 keeps the square root away from zero
    gam = params.gamma
    arg = params.beta * math.pi / 6.0 - math.acos(gam * t) / 3.0
    return -(gam / 3.0) * math.sin(arg) / math.sqrt(1.0 - gam * gam * t * t)


def normalized_pressure(p, pc, c):
    return (p + c) / (pc + c)


def _cap_S(Phi, params):
    return (Phi - Phi ** params.m) * (2.0 * (1.0 - params.alpha) * Phi + params.alpha)


def _cap_dS(Phi, params):
    a, m = params.alpha, params.m
    return ((1.0 - m * Phi ** (m - 1.0)) * (2.0 * (1.0 - a) * Phi + a)
            + 2.0 * (1.0 - a) * (Phi - Phi ** m))


def meridian_f(p, pc, c, params):
    """Meridian part ``f``; returns ``(value, in_domain)``."""
    Phi = normalized_pressure(p, pc, c)
    if not 0.0 <= Phi <= 1.0:
        return OUT_OF_DOMAIN * params.M * pc, False
    return -params.M * pc * math.sqrt(max(_cap_S(Phi, params), 0.0)), True


def yield_value(T1, state, params):
    """``F(T1, p_c, c)``; a large positive sentinel outside the cap."""
    return yield_function(T1, state, params)[0]


def yield_function(T1, state, params):
    """Return ``(F, Phi, invariants, in_domain)``."""
    inv = stress_invariants(T1)
    pc, c = state.pc, state.c
    f, ok = meridian_f(inv.p, pc, c, params)
    Phi = normalized_pressure(inv.p, pc, c)
    if not ok:
        return f, Phi, inv, False
    return f + inv.q * inverse_lode_g(inv.cos3theta, params), Phi, inv, True


def regularized_yield_value(T1, state, params):
    """Continuous extension of ``F`` through the cap vertices.

    Equal to ``F`` inside ``Phi in [0, 1]``; outside, the infinite branch is
    replaced by ``+M p_c sqrt(|S|)``-type growth so root finders see a sign
    change with finite magnitudes. Zero exactly where ``F`` is.
    """
    inv = stress_invariants(T1)
    pc, c = state.pc, state.c
    Phi = normalized_pressure(inv.p, pc, c)
    dev_part = inv.q * inverse_lode_g(inv.cos3theta, params)
    if Phi > 1.0:
        a = params.alpha
        S = (Phi ** params.m - Phi) * max(2.0 * (1.0 - a) * Phi + a, 1e-3)
        return params.M * pc * math.sqrt(S) + dev_part
    if Phi < 0.0:
        x = -Phi
        return params.M * pc * math.sqrt(x * (params.alpha + 2.0 * x)) + dev_part
    return -params.M * pc * math.sqrt(max(_cap_S(Phi, params), 0.0)) + dev_part


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

def _guarded_phi(Phi, guard):
    if guard is None:
        if not VERTEX_TOL < Phi < 1.0 - VERTEX_TOL:
            raise GradientSingular(
                f"Phi = {Phi!r} at a cap vertex; the meridian slope diverges")
        return Phi
    return min(max(Phi, guard), 1.0 - guard)


def _meridian_slopes(p, pc, c, params, guard):
    """``df/dp``, ``dF/dp_c``, ``dF/dc`` at (guarded) ``Phi``."""
    M = params.M
    Phi = _guarded_phi(normalized_pressure(p, pc, c), guard)
    p = Phi * (pc + c) - c  # consistent with the guarded Phi
    root = math.sqrt(_cap_S(Phi, params))
    ratio = _cap_dS(Phi, params) / (2.0 * root)
    df_dp = -M * pc / (pc + c) * ratio
    dF_dpc = -M * root + M * pc * (p + c) / (pc + c) ** 2 * ratio
    dF_dc = -M * pc * (pc - p) / (pc + c) ** 2 * ratio
    return df_dp, dF_dpc, dF_dc, Phi


def _deviatoric_gradient(T1, inv, params):
    """Gradient of ``q / g(theta)`` through J2 and J3 (never through theta)."""
    if inv.lode_undefined:
        return np.zeros((3, 3))
    s = tn.dev(np.asarray(T1, float))
    r = math.sqrt(inv.J2)
    s_hat = s / r
    t = _cos3theta(s_hat)
    J3_hat = float(np.trace(s_hat @ s_hat @ s_hat)) / 3.0
    dq = (_SQRT3 / 2.0) * s_hat
    dt = 1.5 * _SQRT3 * (tn.dev(s_hat @ s_hat) - 1.5 * J3_hat * s_hat) / r
    return inverse_lode_g(t, params) * dq + inv.q * _d_inverse_lode_g(t, params) * dt


def yield_gradient(T1, state, params, guard=None):
    """``Q = dF/dT1`` by the chain rule through ``(p, q, theta)``.

    Parameters
    ----------
    guard : float, optional
        If given, ``Phi`` is clamped into ``[guard, 1 - guard]`` for the
        meridian slope; otherwise states within ``VERTEX_TOL`` of a cap vertex
        raise :class:`GradientSingular`.
    """
    T1 = np.asarray(T1, float)
    inv = stress_invariants(T1)
    df_dp, _, _, _ = _meridian_slopes(inv.p, state.pc, state.c, params, guard)
    return tn.sym(-(df_dp / 3.0) * tn.I3 + _deviatoric_gradient(T1, inv, params))


def yield_partials(T1, state, params, guard=None):
    """``(dF/dp_c, dF/dc)`` at fixed Biot stress."""
    inv = stress_invariants(T1)
    _, dF_dpc, dF_dc, _ = _meridian_slopes(inv.p, state.pc, state.c, params, guard)
    return dF_dpc, dF_dc


def flow_mode(Q, Phi, params):
    """``P = Q - (tr Q / 3) eps_na (1 - Phi) I``."""
    Q = np.asarray(Q, float)
    return Q - (np.trace(Q) / 3.0) * params.eps_na * (1.0 - Phi) * tn.I3


def yield_state(T1, state, params, guard=None):
    """Evaluate ``F``, ``Phi``, ``Q`` and ``P`` together."""
    F, Phi, _, ok = yield_function(T1, state, params)
    Q = yield_gradient(T1, state, params, guard)
    Phi_flow = Phi if guard is None else min(max(Phi, 0.0), 1.0)
    return YieldState(F, Phi, Q, flow_mode(Q, Phi_flow, params), ok)
