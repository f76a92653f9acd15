"""Coupled hyperelasticity: potential, Kirchhoff and Biot stresses, tangent.

The elastic potential is an isotropic function of the logarithmic elastic
strain ``eps_e = log V_e``::

    phi = -(mu/3) (tr eps_e)^2 + c tr eps_e
          + (p0 + c) [ (d - 1/d) (tr eps_e)^2 / (2 kappa)
                       + d^(1/n) kappa exp(-tr eps_e / (d^(1/n) kappa)) ]
          + mu eps_e : eps_e

where cohesion ``c``, coupling factor ``d`` and shear modulus ``mu`` grow with
the hardening pressure ``p_c``, itself tied to the volumetric plastic log
strain ``tr E_p`` through a double-exponential compaction law. Stresses are in
the units of ``p0`` (MPa in the driver); ``kappa`` is dimensionless.
"""
from dataclasses import dataclass, field, fields
from functools import cached_property
import math

import numpy as np

from . import tensors as tn
from .errors import NonInvertible, OutOfRange, ParameterError


@dataclass(frozen=True)
class MaterialParams:
    """Constitutive constants.

    Attributes
    ----------
    kappa : float
        Logarithmic bulk compliance (dimensionless).
    p0 : float
        Initial confining pressure [stress].
    n : float
        Exponent of the coupling factor in ``d**(1/n)``.
    mu0 : float
        Shear modulus of the uncoupled material [stress].
    mu1 : float
        Coupling coefficient of the shear modulus; multiplies the cohesion,
        so it is dimensionless.
    B : float
        Growth rate of ``d`` with ``p_c`` [1/stress].
    pcb : float
        Hardening pressure at which coupling starts [stress].
    c_inf, Gamma : float
        Asymptotic cohesion [stress] and its rate [1/stress].
    a1, a2, Lambda1, Lambda2 : float
        Compaction-law constants (``Lambda`` in stress units).
    M, m, alpha, beta, gamma : float
        Yield surface shape.
    eps_na : float
        Non-associativity of the flow rule (0 = associative).
    """

    kappa: float
    p0: float
    n: float
    mu0: float
    mu1: float
    B: float
    pcb: float
    c_inf: float
    Gamma: float
    a1: float
    a2: float
    Lambda1: float
    Lambda2: float
    M: float
    m: float
    alpha: float
    beta: float
    gamma: float
    eps_na: float

    _REQUIRED_MESSAGES = {
        "n": "elastic exponent n required",
    }

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))
        problems = self.violations()
        if problems:
            raise ParameterError(problems)

    def violations(self):
        """List every violated parameter constraint."""
        out = []
        for name in ("kappa", "p0", "n", "mu0", "M", "Lambda1", "Lambda2", "a1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                out.append(f"{name} must be positive (got {v})")
        for name in ("mu1", "B", "pcb", "c_inf", "Gamma", "a2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                out.append(f"{name} must be non-negative (got {v})")
        if not self.m > 1.0:
            out.append(f"m must exceed 1 (got {self.m})")
        if not 0.0 <= self.alpha <= 2.0:
            out.append(f"alpha must lie in [0, 2] (got {self.alpha})")
        if not 0.0 <= self.beta <= 2.0:
            out.append(f"beta must lie in [0, 2] (got {self.beta})")
        if not 0.0 <= self.gamma < 1.0:
            out.append(f"gamma must lie in [0, 1) (got {self.gamma})")
        if not 0.0 <= self.eps_na <= 1.0:
            out.append(f"eps_na must lie in [0, 1] (got {self.eps_na})")
        if not self.a1 + self.a2 < 1.0:
            out.append(
                f"a1 + a2 must be < 1 so the compaction law keeps exp(tr Ep) > 0 "
                f"(got {self.a1 + self.a2})")
        return out

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, data):
        """Build from a mapping, reporting missing and invalid keys together."""
        problems = []
        values = {}
        for name in cls.field_names():
            if name not in data or data[name] is None:
                problems.append(cls._REQUIRED_MESSAGES.get(name, f"parameter {name} required"))
                continue
            try:
                values[name] = float(data[name])
            except (TypeError, ValueError):
                problems.append(f"parameter {name} must be a number (got {data[name]!r})")
        unknown = sorted(set(data) - set(cls.field_names()))
        problems.extend(f"unknown parameter {k}" for k in unknown)
        # range checks on whatever was supplied, so one pass reports everything
        try:
            cls(**{**_PROBE_DEFAULTS, **values})
        except ParameterError as exc:
            problems.extend(v for v in exc.violations if v.split()[0] in values)
        if problems:
            raise ParameterError(problems)
        return cls(**values)

    def replace(self, **changes):
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return type(self)(**data)


# neutral values used only to surface range errors of supplied keys when
# others are missing
_PROBE_DEFAULTS = dict(kappa=0.1, p0=1.0, n=2.0, mu0=1.0, mu1=0.0, B=0.0, pcb=0.0,
                       c_inf=0.0, Gamma=0.0, a1=0.1, a2=0.0, Lambda1=1.0, Lambda2=1.0,
                       M=1.0, m=2.0, alpha=1.0, beta=1.0, gamma=0.0, eps_na=0.0)


# ---------------------------------------------------------------------------
# compaction and coupling laws
# ---------------------------------------------------------------------------

def _macaulay(x):
    return x if x > 0.0 else 0.0


def heaviside(x):
    """Step with ``H(0) = 0``."""
    return 1.0 if x > 0.0 else 0.0


def coupling_parameters(pc, params):
    """Cohesion ``c``, coupling factor ``d`` and shear modulus ``mu`` at ``p_c``."""
    excess = _macaulay(pc - params.pcb)
    d = 1.0 + params.B * excess
    c = params.c_inf * -math.expm1(-params.Gamma * excess)
    mu = params.mu0 + c * (d - 1.0 / d) * params.mu1
    return c, d, mu


def trEp_from_pc(pc, params):
    """Volumetric plastic log strain reached at hardening pressure ``p_c``."""
    if not pc > 0.0:
        raise OutOfRange(f"p_c must be positive (got {pc})")
    s = params.a1 * math.exp(-params.Lambda1 / pc) + params.a2 * math.exp(-params.Lambda2 / pc)
    return math.log1p(-s)


def trEp_lower_bound(params):
    """Infimum ``log(1 - a1 - a2)`` of the volumetric plastic log strain."""
    return math.log1p(-(params.a1 + params.a2))


def pc_from_trEp(trEp, params, max_iter=100):
    """Invert the compaction law for ``p_c`` (Newton with a bisection safeguard).

    Works in ``u = 1/p_c`` where the residual
    ``a1 exp(-Lambda1 u) + a2 exp(-Lambda2 u) - (1 - exp(tr Ep))`` is convex
    and decreasing.

    Raises
    ------
    OutOfRange
        If ``tr Ep`` is outside ``(log(1 - a1 - a2), 0)``.
    """
    lo_bound = trEp_lower_bound(params)
    if not lo_bound < trEp < 0.0:
        raise OutOfRange(
            f"tr Ep = {trEp!r} outside ({lo_bound:.6g}, 0) of the compaction law")
    a1, a2, L1, L2 = params.a1, params.a2, params.Lambda1, params.Lambda2
    y = -math.expm1(trEp)

    def resid(u):
        e1, e2 = a1 * math.exp(-L1 * u), a2 * math.exp(-L2 * u)
        return e1 + e2 - y, -(L1 * e1 + L2 * e2)

    # positive bracket [lo, hi] with resid(lo) > 0 > resid(hi)
    u = 1.0 / max(L1, L2)
    if resid(u)[0] > 0.0:
        while resid(u)[0] > 0.0:
            u *= 2.0
        lo, hi = 0.5 * u, u
    else:
        while resid(u)[0] <= 0.0:
            u *= 0.5
            if u < 1e-300:
                raise OutOfRange(f"tr Ep = {trEp!r} too close to the compaction limit")
        lo, hi = u, 2.0 * u

    u = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r, dr = resid(u)
        if r == 0.0:
            break
        if r > 0.0:
            lo = u
        else:
            hi = u
        u_new = u - r / dr
        if not lo < u_new < hi:
            u_new = 0.5 * (lo + hi)
        if abs(u_new - u) <= 4e-16 * u:
            u = u_new
            break
        u = u_new
    r, _ = resid(u)
    if abs(r) > 1e-12 * y:
        raise OutOfRange(f"compaction law inversion stalled at tr Ep = {trEp!r}")
    return 1.0 / u


def dpc_dtrEp(pc, trEp, params):
    """Slope ``d p_c / d tr Ep`` of the compaction law (negative)."""
    den = (params.a1 * params.Lambda1 * math.exp(-params.Lambda1 / pc)
           + params.a2 * params.Lambda2 * math.exp(-params.Lambda2 / pc))
    return -pc * pc * math.exp(trEp) / den


def coupling_slopes(pc, params):
    """``(dc/dp_c, dd/dp_c)`` with the ``H(0) = 0`` convention."""
    H = heaviside(pc - params.pcb)
    dc = params.c_inf * params.Gamma * H * math.exp(-params.Gamma * (pc - params.pcb))
    return dc, params.B * H


@dataclass(frozen=True)
class InternalState:
    """Plastic internal variables.

    ``Ep = log U_p`` is the stored primitive; ``p_c`` follows from ``tr Ep``
    and ``(c, d, mu)`` from ``p_c``. Construct with :meth:`from_pc` or
    :meth:`from_plastic_strain` so the three stay consistent.
    """

    pc: float
    trEp: float
    c: float
    d: float
    mu: float
    Ep: np.ndarray = field(repr=False)

    @classmethod
    def from_pc(cls, pc, params, Ep=None):
        """State at hardening pressure ``pc`` with isotropic history by default."""
        trEp = trEp_from_pc(pc, params)
        if Ep is None:
            Ep = (trEp / 3.0) * tn.I3
        c, d, mu = coupling_parameters(pc, params)
        return cls(float(pc), trEp, c, d, mu, np.array(Ep, float))

    @classmethod
    def from_plastic_strain(cls, Ep, params):
        Ep = tn.sym(np.asarray(Ep, float))
        trEp = float(np.trace(Ep))
        pc = pc_from_trEp(trEp, params)
        c, d, mu = coupling_parameters(pc, params)
        return cls(pc, trEp, c, d, mu, Ep)

    @cached_property
    def Up(self):
        return tn.tensor_exp(self.Ep)

    def with_coupling(self, c=None, d=None, mu=None):
        """Copy with coupled parameters overridden (for sensitivity studies)."""
        return InternalState(self.pc, self.trEp,
                             self.c if c is None else c,
                             self.d if d is None else d,
                             self.mu if mu is None else mu, self.Ep)


# ---------------------------------------------------------------------------
# hyperelastic law
# ---------------------------------------------------------------------------

def _dn(state, params):
    return state.d ** (1.0 / params.n)


def strain_energy(eps_e, state, params):
    """Elastic potential at logarithmic elastic strain ``eps_e``."""
    eps_e = np.asarray(eps_e, float)
    tr = float(np.trace(eps_e))
    c, d, mu = state.c, state.d, state.mu
    dn = _dn(state, params)
    k = params.kappa
    vol = (d - 1.0 / d) * tr * tr / (2.0 * k) + dn * k * math.exp(-tr / (dn * k))
    return (-(mu / 3.0) * tr * tr + c * tr + (params.p0 + c) * vol
            + mu * tn.ddot(eps_e, eps_e))


def _spherical_coefficient(trL, state, params):
    # coefficient of I in K-hat written with L = log(X X^T) = 2 eps_e
    c, d, mu = state.c, state.d, state.mu
    k = params.kappa
    return (-(mu / 3.0) * trL + c
            + (params.p0 + c) * ((d - 1.0 / d) * trL / (2.0 * k)
                                 - math.exp(-trL / (2.0 * _dn(state, params) * k))))


def kirchhoff_stress(eps_e, state, params):
    """Kirchhoff stress ``d phi / d eps_e``; coaxial with ``eps_e``."""
    eps_e = np.asarray(eps_e, float)
    L = 2.0 * eps_e
    return _spherical_coefficient(float(np.trace(L)), state, params) * tn.I3 + state.mu * L


def kirchhoff_hat(X, state, params):
    """Kirchhoff stress as a function of the elastic deformation ``X = F_e``."""
    X = np.asarray(X, float)
    L = tn.tensor_log(tn.sym(X @ X.T))
    return _spherical_coefficient(float(np.trace(L)), state, params) * tn.I3 + state.mu * L


def tangent_bulk(trL, state, params):
    """Volumetric tangent ``K_t`` at ``tr log(X X^T) = trL``."""
    c, d = state.c, state.d
    dn = _dn(state, params)
    return ((params.p0 + c) / (2.0 * params.kappa)
            * (d - 1.0 / d + math.exp(-trL / (2.0 * dn * params.kappa)) / dn))


def _inv_spd(A, what):
    if not np.linalg.det(A) > 0.0:
        raise NonInvertible(f"{what} is singular")
    return tn.sym(np.linalg.inv(A))


def biot_stress(U, Up, state, params):
    """Biot stress from total and plastic right stretches.

    ``T1 = (U^-1 K + K U^-1)/2`` with ``K = K_hat(U U_p^-1)``.
    """
    U = np.asarray(U, float)
    Uinv = _inv_spd(U, "stretch U")
    Upinv = _inv_spd(np.asarray(Up, float), "plastic stretch U_p")
    K = kirchhoff_hat(U @ Upinv, state, params)
    return tn.sym(0.5 * (Uinv @ K + K @ Uinv))


class ElasticPieces:
    """Intermediate quantities shared by the elastic and coupling tensors."""

    def __init__(self, U, Up, state, params, log_method="auto"):
        self.U = np.asarray(U, float)
        self.Up = np.asarray(Up, float)
        self.state = state
        self.params = params
        self.Uinv = _inv_spd(self.U, "stretch U")
        self.Upinv = _inv_spd(self.Up, "plastic stretch U_p")
        self.X = self.U @ self.Upinv
        self.Y = tn.sym(self.X @ self.X.T)
        self.series_ok = tn.log_series_radius(self.Y) < tn.LOG_SERIES_GUARD
        self.L = tn.tensor_log(self.Y)
        self.trL = float(np.trace(self.L))
        self.K = (_spherical_coefficient(self.trL, state, params) * tn.I3
                  + state.mu * self.L)
        self.log_method = log_method

    @cached_property
    def dK_dX(self):
        """``[(K_t - mu/3) I(x)I + mu I box I] dlogY (I box_t X + X box_s I)``."""
        mu = self.state.mu
        Kt = tangent_bulk(self.trL, self.state, self.params)
        iso = (Kt - mu / 3.0) * tn.I_OUTER_I + mu * tn.SYMMETRIZER
        dY = tn.box_t(tn.I3, self.X) + tn.box_s(self.X, tn.I3)
        return tn.compose(iso, tn.dlog_dY(self.Y, method=self.log_method), dY)

    @cached_property
    def dT_dX(self):
        """``1/2 (d(U^-1 K)/dX + d(K U^-1)/dX)`` at fixed ``U``."""
        left = tn.box_t(self.Uinv, tn.I3) + tn.box_t(tn.I3, self.Uinv)
        return 0.5 * tn.compose(left, self.dK_dX)

    @cached_property
    def E4(self):
        KUinv = self.K @ self.Uinv
        geo = -0.5 * (tn.box(self.Uinv, KUinv) + tn.box(KUinv, self.Uinv))
        return geo + tn.compose(self.dT_dX, tn.box(tn.I3, self.Upinv))

    @cached_property
    def T1(self):
        return tn.sym(0.5 * (self.Uinv @ self.K + self.K @ self.Uinv))


def elastic_tangent(U, Up, state, params, log_method="auto"):
    """Elastic tangent ``dT1/dE1`` at fixed internal variables.

    ``log_method`` selects the gradient of the tensor logarithm (see
    :func:`densify.tensors.dlog_dY`); the default uses the power series
    inside its convergence guard and eigenprojections outside.
    """
    return ElasticPieces(U, Up, state, params, log_method).E4


# ---------------------------------------------------------------------------
# sensitivities to the coupled parameters
# ---------------------------------------------------------------------------

def dK_dc(trL, state, params):
    """``d K_hat / d c`` (spherical) at ``tr log(U U_p^-2 U) = trL``."""
    d, k = state.d, params.kappa
    e = math.exp(-trL / (2.0 * _dn(state, params) * k))
    return (1.0 + (d - 1.0 / d) * trL / (2.0 * k) - e) * tn.I3


def dK_dd(trL, state, params):
    """``d K_hat / d d`` (spherical).

    The exponential term carries ``1/(n d^(1+1/n))``: differentiating
    ``exp(-s d^(-1/n))`` in ``d`` brings down ``(s/n) d^(-1-1/n)`` with
    ``s = trL / (2 kappa)``.
    """
    c, d, k, n = state.c, state.d, params.kappa, params.n
    s = trL / (2.0 * k)
    e = math.exp(-s / _dn(state, params))
    return ((params.p0 + c) * s
            * (1.0 + 1.0 / (d * d) - e / (n * d ** (1.0 + 1.0 / n)))) * tn.I3


def dK_dmu(L):
    """``d K_hat / d mu`` = dev-like part ``L - (tr L / 3) I``."""
    return tn.dev(np.asarray(L, float))
