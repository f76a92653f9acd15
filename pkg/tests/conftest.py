"""Shared fixtures: a synthetic parameter set and random tensor generators."""
import math

import numpy as np
import pytest

from densify import tensors as tn
from densify.elastic import MaterialParams

# synthetic constants, identical to scenarios/smoke.yaml (MPa)
SMOKE = dict(kappa=0.02, p0=0.063, n=2.0, mu0=5.0, mu1=5.0, B=0.3, pcb=0.5,
             c_inf=0.5, Gamma=0.5, a1=0.3, a2=0.2, Lambda1=1.5, Lambda2=20.0,
             M=1.1, m=2.0, alpha=0.1, beta=0.19, gamma=0.9, eps_na=0.3)
PC0 = 0.1


def make_params(**changes):
    return MaterialParams(**{**SMOKE, **changes})


@pytest.fixture
def params():
    return make_params()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_sym(rng, scale=1.0):
    return scale * tn.sym(rng.normal(size=(3, 3)))


def random_rotation(rng):
    Q, R = np.linalg.qr(rng.normal(size=(3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1.0
    return Q


def random_spd(rng, lo=0.5, hi=1.5):
    Q = random_rotation(rng)
    return tn.sym((Q * rng.uniform(lo, hi, 3)) @ Q.T)


def rotation_exp(W):
    """``exp(W)`` of a skew tensor by the Rodrigues formula."""
    w = np.array([W[2, 1], W[0, 2], W[1, 0]])
    a = float(np.linalg.norm(w))
    if a == 0.0:
        return np.eye(3)
    return np.eye(3) + math.sin(a) / a * W + (1.0 - math.cos(a)) / (a * a) * (W @ W)


def smooth_path(rng):
    """``F(t) = R(t) U(t)`` with analytic dependence on ``t``."""
    W = tn.skew(rng.normal(size=(3, 3)))
    A, B = random_sym(rng, 0.3), random_sym(rng, 0.3)
    R0 = random_rotation(rng)

    def F(t):
        U = tn.tensor_exp(A * math.sin(t) + B * t * t)
        return R0 @ rotation_exp(W * t) @ U
    return F


def random_K(rng):
    A, B = random_sym(rng), random_sym(rng)
    return lambda t: A + B * math.cos(t)


# ---------------------------------------------------------------------------
# acceptance report: one line per criterion at the end of the run
# ---------------------------------------------------------------------------

ACCEPTANCE = {}


def report(number, part, ok, detail):
    """Record one checked part of an acceptance criterion."""
    ACCEPTANCE.setdefault(number, []).append((part, bool(ok), detail))
    print(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {part}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}{'' if good else ' (FAIL)'}: {d}" for name, good, d in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
