"""Finite-strain elastoplastic model for the compaction of ceramic powders.

The package evaluates a hyperelastic-plastic material point written in Biot
stress: logarithmic elasticity with plastic coupling, a three-invariant cap
yield surface with pressure-driven hardening, and an explicit sub-stepped
integrator with yield-drift correction. ``densify.cli`` exposes a batch
driver.
"""
from ._backend import BACKEND
from .elastic import (ElasticPieces, InternalState, MaterialParams, biot_stress,
                      elastic_tangent, kirchhoff_stress, pc_from_trEp, strain_energy,
                      trEp_from_pc)
from .errors import (DensifyError, DriftNotConverged, GradientSingular, IntegrationError,
                     LockingMaterial, NewtonNotConverged, NonCoaxial, NonInvertible,
                     NonInvertibleRegime, NotPositiveDefinite, NotSPD,
                     OutOfConvergenceRadius, OutOfRange, ParameterError,
                     ScenarioParseError, ScenarioRunError, Singular, ValidationError)
from .integrator import (MaterialPoint, StepControl, StepResult, forward_rate,
                         integrate_step, inverse_rate, mixed_control_step)
from .kinematics import DeformationState, PlasticKinematics, conjugate_stress
from .plasticity import coupling_tensor_G, hardening_modulus, plastic_modulus
from .yield_surface import stress_invariants, yield_function, yield_gradient, yield_value

__version__ = "0.1.0"
