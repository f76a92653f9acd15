"""Material-point integration of the Biot-stress rate equations.

The driver works with rotation-free deformations, ``F = U``. The stored
plastic primitive is ``E_p = log U_p``; the Biot stress is always evaluated
from the hyperelastic law at the current ``(U, U_p, c, d, mu)``, so purely
elastic paths are exactly reversible. Plastic sub-steps advance ``E_p`` by
forward Euler along ``G^-1[P]`` and the end of every increment is returned
to the yield surface by a cutting-plane correction along the same
direction.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import tensors as tn
from .elastic import ElasticPieces, InternalState, biot_stress
from .errors import (DriftNotConverged, LockingMaterial, NewtonNotConverged,
                     NonInvertibleRegime)
from .plasticity import coupling_tensor_G, hardening_modulus, plastic_modulus
from .yield_surface import (regularized_yield_value, stress_invariants,
                            yield_function, yield_gradient, flow_mode)

#: Voigt-ordered slot names for mixed control.
SLOTS = ("xx", "yy", "zz", "yz", "xz", "xy")
_SLOT_IDX = {"xx": (0, 0), "yy": (1, 1), "zz": (2, 2),
             "yz": (1, 2), "xz": (0, 2), "xy": (0, 1)}


@dataclass(frozen=True)
class StepControl:
    """Numerical controls of :func:`integrate_step`.

    Attributes
    ----------
    max_substep : float
        Bound on the Frobenius norm of each Biot-strain sub-increment.
    tol_F : float
        Yield tolerance relative to ``M p_c``.
    max_drift_iter : int
        Cutting-plane iterations before the bracketed fallback.
    drift_correction : bool
        Disable only to study the raw truncation error of the scheme.
    crossing_tol : float
        Resolution of the elastic-to-plastic crossing fraction.
    phi_guard : float
        Distance from the cap vertices at which gradients are evaluated.
    """

    max_substep: float = 1e-4
    tol_F: float = 1e-8
    max_drift_iter: int = 20
    drift_correction: bool = True
    crossing_tol: float = 1e-10
    phi_guard: float = 1e-8
    max_newton_iter: int = 50
    newton_tol: float = 1e-8


@dataclass(frozen=True)
class MaterialPoint:
    """Rotation-free material point: stretch, internal state and Biot stress."""

    params: object
    U: np.ndarray
    state: InternalState
    T1: np.ndarray
    Lambda: float = 0.0
    on_surface: bool = False

    @classmethod
    def initial(cls, params, pc0):
        """Freshly poured powder: ``U = I``, isotropic plastic history at ``pc0``."""
        state = InternalState.from_pc(pc0, params)
        T1 = biot_stress(tn.I3, state.Up, state, params)
        return cls(params, tn.I3.copy(), state, T1)

    @classmethod
    def at(cls, params, U, Ep, Lambda=0.0, on_surface=False):
        state = InternalState.from_plastic_strain(Ep, params)
        U = tn.sym(np.asarray(U, float))
        return cls(params, U, state, biot_stress(U, state.Up, state, params),
                   Lambda, on_surface)

    @property
    def E1(self):
        return self.U - tn.I3

    @property
    def yield_scale(self):
        return self.params.M * self.state.pc

    def yield_value(self):
        return yield_function(self.T1, self.state, self.params)[0]

    def volumetric_split(self):
        """``(log J, log J_e, log J_p)`` for the current state."""
        logJ = math.log(np.linalg.det(self.U))
        X = self.U @ np.linalg.inv(self.state.Up)
        logJe = 0.5 * float(np.trace(tn.tensor_log(tn.sym(X @ X.T))))
        return logJ, logJe, float(np.trace(self.state.Ep))


@dataclass
class StepResult:
    mode: str
    dLambda: float = 0.0
    n_substeps: int = 0
    drift_residual: float = 0.0
    h: float = 0.0
    g: float = 0.0
    Phi: float = 0.0
    theta: float = 0.0
    softening: bool = False
    spectral_fallbacks: int = 0
    newton_iterations: int = 0
    diagnostics: dict = field(default_factory=dict)


@dataclass
class Operators:
    """Rate-equation operators evaluated at one material state."""

    F: float
    Phi: float
    E4: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    G: np.ndarray
    GinvP: np.ndarray
    h: float
    g: float
    series_ok: bool

    @property
    def M4(self):
        return tn.tensor4_invert(self.E4)


def operators(point, guard=1e-8):
    """Evaluate ``E``, ``Q``, ``P``, ``G``, ``h`` and ``g`` at ``point``.

    Raises
    ------
    LockingMaterial
        If the plastic modulus is not positive.
    """
    params, state = point.params, point.state
    F, Phi, _, _ = yield_function(point.T1, state, params)
    pieces = ElasticPieces(point.U, state.Up, state, params)
    E4 = pieces.E4
    Q = yield_gradient(point.T1, state, params, guard=guard)
    P = flow_mode(Q, min(max(Phi, 0.0), 1.0), params)
    G = coupling_tensor_G(point.U, state.Up, state, params, pieces=pieces)
    GinvP = tn.solve4(G, P)
    h = hardening_modulus(point.T1, state, P, params, G=G, guard=guard)
    g = plastic_modulus(h, Q, P, E4)
    return Operators(F, Phi, E4, Q, P, G, GinvP, h, g, pieces.series_ok)


def _on_surface(point, control):
    return point.yield_value() >= -control.tol_F * point.yield_scale


def forward_rate(point, E1dot, control=StepControl(), on_surface=None):
    """Biot stress rate and plastic multiplier rate for a strain rate.

    Returns
    -------
    T1dot : ndarray
    LambdaDot : float
    """
    E1dot = tn.sym(np.asarray(E1dot, float))
    if on_surface is None:
        on_surface = _on_surface(point, control)
    if not on_surface:
        pieces = ElasticPieces(point.U, point.state.Up, point.state, point.params)
        return tn.apply(pieces.E4, E1dot), 0.0
    ops = operators(point, control.phi_guard)
    trial = tn.apply(ops.E4, E1dot)
    load = tn.ddot(ops.Q, trial)
    if load <= 0.0:
        return trial, 0.0
    lam = load / ops.g
    return trial - lam * tn.apply(ops.E4, ops.P), lam


def inverse_rate(point, T1dot, control=StepControl(), on_surface=None):
    """Biot strain rate for a prescribed Biot stress rate (needs ``h > 0``)."""
    T1dot = tn.sym(np.asarray(T1dot, float))
    if on_surface is None:
        on_surface = _on_surface(point, control)
    if not on_surface:
        pieces = ElasticPieces(point.U, point.state.Up, point.state, point.params)
        return tn.solve4(pieces.E4, T1dot)
    ops = operators(point, control.phi_guard)
    if not ops.h > 0.0:
        raise NonInvertibleRegime(f"hardening modulus h = {ops.h:.6e} is not positive")
    E1dot = tn.apply(ops.M4, T1dot)
    load = tn.ddot(ops.Q, T1dot)
    if load > 0.0:
        E1dot = E1dot + (load / ops.h) * ops.P
    return E1dot


def elastoplastic_tangent(ops, loading=True):
    """Continuum tangent ``E - (E[P] (x) E^T[Q]) / g`` (elastic if unloading)."""
    if not loading:
        return ops.E4
    EP = tn.apply(ops.E4, ops.P)
    QE = np.tensordot(ops.Q, ops.E4, axes=([0, 1], [0, 1]))
    return ops.E4 - np.einsum("ij,kl->ijkl", EP, QE) / ops.g


# ---------------------------------------------------------------------------
# incremental integration
# ---------------------------------------------------------------------------

def _advance(point, U, Ep, dLambda, on_surface):
    return MaterialPoint.at(point.params, U, Ep, point.Lambda + dLambda, on_surface)


def _crossing(point, dE, control):
    """Largest elastic fraction ``s`` of ``dE`` that stays inside the surface."""
    lo, hi = 0.0, 1.0
    base = point
    while hi - lo > control.crossing_tol:
        mid = 0.5 * (lo + hi)
        trial = replace(base, U=point.U + mid * dE,
                        T1=biot_stress(point.U + mid * dE, base.state.Up, base.state, base.params))
        if trial.yield_value() > 0.0:
            hi = mid
        else:
            lo = mid
    U = point.U + lo * dE
    return lo, replace(point, U=U, T1=biot_stress(U, point.state.Up, point.state, point.params))


def _plastic_euler(point, dE, ops):
    """One forward-Euler plastic sub-step; returns ``(point, dLambda)`` or None."""
    load = tn.ddot(ops.Q, tn.apply(ops.E4, dE))
    if load <= 0.0:
        return None
    dlam = load / ops.g
    Ep = point.state.Ep + dlam * ops.GinvP
    return _advance(point, point.U + dE, Ep, dlam, True), dlam


def correct_drift(point, control, ops=None):
    """Return ``point`` to the yield surface along ``G^-1[P]``.

    Cutting-plane iterations ``lambda += F/g`` first; near the cap vertices,
    where ``F`` has unbounded slope, a bracketed regula-falsi/bisection on a
    continuous extension of ``F`` finishes the job.

    Returns
    -------
    point, dLambda, iterations, resolution_limited
        The flag is set when the root was bracketed between adjacent
        floating-point states without meeting the tolerance. This happens at the
        hydrostatic cap vertex, where ``F ~ sqrt(1 - Phi)`` turns the
        rounding noise of the pressure into a residual of order
        ``sqrt(eps) M p_c``.
    """
    tol = control.tol_F * point.yield_scale
    F0 = point.yield_value()
    if abs(F0) <= tol:
        return point, 0.0, 0, False
    if ops is None:
        ops = operators(point, control.phi_guard)
    D, g = ops.GinvP, ops.g
    U, Ep0 = point.U, point.state.Ep

    def at(lam):
        return _advance(point, U, Ep0 + lam * D, lam, True)

    lam, cand = 0.0, point
    for it in range(1, control.max_drift_iter + 1):
        F, _, _, ok = yield_function(cand.T1, cand.state, cand.params)
        if abs(F) <= tol:
            return cand, lam, it - 1, False
        if not ok:
            break
        lam += F / g
        cand = at(lam)
    F, _, _, ok = yield_function(cand.T1, cand.state, cand.params)
    if ok and abs(F) <= tol:
        return cand, lam, control.max_drift_iter, False
    return _bracketed_drift(point, at, F0, g, tol, control)


def _bracketed_drift(point, at, F0, g, tol, control):
    def reg(p):
        return regularized_yield_value(p.T1, p.state, p.params)

    # dF/dlambda ~ -g < 0: positive F needs positive lambda
    r0 = reg(point)
    step = max(abs(r0) / g, 1e-14)
    sgn = 1.0 if r0 > 0.0 else -1.0
    a, ra, pa = 0.0, r0, point
    for _ in range(200):
        b = sgn * step
        pb = at(b)
        rb = reg(pb)
        if (rb > 0.0) != (r0 > 0.0) or rb == 0.0:
            break
        a, ra, pa = b, rb, pb
        step *= 2.0
    else:
        raise DriftNotConverged("could not bracket the yield surface")
    lo, rlo, plo, hi, rhi, phi_ = (a, ra, pa, b, rb, pb) if ra < 0.0 else (b, rb, pb, a, ra, pa)
    best = None
    side = 0
    collapsed = False
    for it in range(400):
        for cand, lam in ((plo, lo), (phi_, hi)):
            F, _, _, ok = yield_function(cand.T1, cand.state, cand.params)
            if ok and abs(F) <= tol:
                return cand, lam, it, False
        # Illinois-modified regula falsi, bisection if it stalls
        if rhi != rlo and it % 3 != 2:
            x = hi - rhi * (hi - lo) / (rhi - rlo)
        else:
            x = 0.5 * (lo + hi)
        if not (min(lo, hi) < x < max(lo, hi)):
            x = 0.5 * (lo + hi)
            if not (min(lo, hi) < x < max(lo, hi)):
                collapsed = True
                break
        px = at(x)
        rx = reg(px)
        if rx < 0.0:
            lo, rlo, plo = x, rx, px
            if side == -1:
                rhi *= 0.5
            side = -1
        else:
            hi, rhi, phi_ = x, rx, px
            if side == 1:
                rlo *= 0.5
            side = 1
    for cand, lam in ((plo, lo), (phi_, hi)):
        F, _, _, ok = yield_function(cand.T1, cand.state, cand.params)
        if ok and (best is None or abs(F) < best[0]):
            best = (abs(F), cand, lam)
    if best is not None and (best[0] <= tol or collapsed):
        return best[1], best[2], it, best[0] > tol
    raise DriftNotConverged(
        f"yield drift {best[0] if best else float('inf'):.3e} exceeds {tol:.3e}")


def integrate_step(point, dE1, control=StepControl()):
    """Advance ``point`` by the Biot-strain increment ``dE1``.

    Returns
    -------
    MaterialPoint, StepResult
    """
    dE1 = tn.sym(np.asarray(dE1, float))
    n_sub = max(1, math.ceil(tn.norm(dE1) / control.max_substep))
    dE = dE1 / n_sub
    result = StepResult("elastic", n_substeps=n_sub)
    cur = point
    on_surface = point.on_surface
    plastic = False
    last_ops = None
    for _ in range(n_sub):
        tol = control.tol_F * cur.yield_scale
        F0 = cur.yield_value()
        if on_surface or F0 >= -tol:
            ops = operators(cur, control.phi_guard)
            stepped = _plastic_euler(cur, dE, ops)
            if stepped is not None:
                cur, dlam = stepped
                result.dLambda += dlam
                plastic, on_surface, last_ops = True, True, ops
                _record(result, ops, cur)
                continue
            on_surface = False
        U = cur.U + dE
        trial = replace(cur, U=U, T1=biot_stress(U, cur.state.Up, cur.state, cur.params),
                        on_surface=False)
        Ft = trial.yield_value()
        if Ft <= tol or F0 > 0.0:
            cur = trial
            continue
        # elastic up to the surface, plastic for the remainder
        s, at_surface = _crossing(cur, dE, control)
        ops = operators(at_surface, control.phi_guard)
        stepped = _plastic_euler(at_surface, (1.0 - s) * dE, ops)
        if stepped is None:
            cur = trial
            continue
        cur, dlam = stepped
        result.dLambda += dlam
        plastic, on_surface, last_ops = True, True, ops
        _record(result, ops, cur)

    if plastic:
        result.mode = "plastic"
        if control.drift_correction:
            cur, dlam, iters, limited = correct_drift(cur, control)
            result.dLambda += dlam
            result.diagnostics["drift_iterations"] = iters
            result.diagnostics["resolution_limited"] = limited
        cur = replace(cur, on_surface=True)
    result.drift_residual = abs(cur.yield_value()) / cur.yield_scale if plastic else 0.0
    inv = stress_invariants(cur.T1)
    result.theta = inv.theta
    result.Phi = (inv.p + cur.state.c) / (cur.state.pc + cur.state.c)
    if last_ops is not None:
        result.h, result.g = last_ops.h, last_ops.g
    return cur, result


def _record(result, ops, cur):
    if ops.h <= 0.0:
        result.softening = True
    if not ops.series_ok:
        result.spectral_fallbacks += 1


# ---------------------------------------------------------------------------
# mixed strain/stress control
# ---------------------------------------------------------------------------

def _basis(slot):
    i, j = _SLOT_IDX[slot]
    B = np.zeros((3, 3))
    B[i, j] = B[j, i] = 1.0
    return B


def _component(A, slot):
    i, j = _SLOT_IDX[slot]
    return A[i, j]


def mixed_control_step(point, strain_increments, stress_targets, control=StepControl()):
    """Step with some Biot-strain increments and some end Biot stresses given.

    Parameters
    ----------
    strain_increments : mapping slot -> float
        Prescribed increments of ``E1`` components (slots ``xx .. xy``).
    stress_targets : mapping slot -> float
        Prescribed end-of-step ``T1`` components for the remaining slots.

    Newton iterations on the unknown strain components, each trial resolved by
    :func:`integrate_step`; converged when the stress residual is at most
    ``control.newton_tol * M * p_c``.

    Returns
    -------
    MaterialPoint, StepResult
    """
    strain_increments = dict(strain_increments)
    stress_targets = dict(stress_targets)
    given = set(strain_increments) | set(stress_targets)
    if set(strain_increments) & set(stress_targets) or given != set(SLOTS):
        raise ValueError("strain and stress slots must partition xx, yy, zz, yz, xz, xy")
    unknown = [s for s in SLOTS if s in stress_targets]
    dE_known = sum((v * _basis(s) for s, v in strain_increments.items()), np.zeros((3, 3)))
    if not unknown:
        return integrate_step(point, dE_known, control)
    target = np.array([stress_targets[s] for s in unknown])

    def jacobian(pt, loading):
        try:
            ops = operators(pt, control.phi_guard)
            C = elastoplastic_tangent(ops, loading)
        except LockingMaterial:
            C = ElasticPieces(pt.U, pt.state.Up, pt.state, pt.params).E4
        return np.array([[_component(tn.apply(C, _basis(b)), a) for b in unknown]
                         for a in unknown]), C

    # predictor from the tangent at the start of the step
    J0, C0 = jacobian(point, point.on_surface)
    r0 = np.array([_component(point.T1 + tn.apply(C0, dE_known), s) for s in unknown]) - target
    x = -np.linalg.solve(J0, r0)
    for it in range(1, control.max_newton_iter + 1):
        dE = dE_known + sum((xi * _basis(s) for s, xi in zip(unknown, x)), np.zeros((3, 3)))
        new, result = integrate_step(point, dE, control)
        r = np.array([_component(new.T1, s) for s in unknown]) - target
        if np.max(np.abs(r)) <= control.newton_tol * new.yield_scale:
            result.newton_iterations = it
            return new, result
        J, _ = jacobian(new, result.mode == "plastic")
        x = x - np.linalg.solve(J, r)
    raise NewtonNotConverged(
        f"mixed control residual {np.max(np.abs(r)):.3e} after {control.max_newton_iter} iterations")
