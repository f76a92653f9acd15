"""Exception hierarchy.

Every failure raised by the library derives from :class:`DensifyError`, so
callers (notably the command-line driver) can map error classes onto exit
codes without inspecting messages.
"""


class DensifyError(Exception):
    """Base class for all library errors."""


# --- tensor algebra ---------------------------------------------------------

class TensorError(DensifyError):
    pass


class NonInvertible(TensorError):
    """Second-order tensor with non-positive or vanishing determinant."""


class NotSPD(TensorError):
    """Argument expected symmetric positive definite."""


class OutOfConvergenceRadius(TensorError):
    """Power series of the logarithm gradient would diverge."""


class Singular(TensorError):
    """Fourth-order tensor not invertible on symmetric tensors."""


# --- kinematics / constitutive ----------------------------------------------

class NonCoaxial(DensifyError):
    """Rotated stress requested for non-coaxial Kirchhoff stress and log V."""


class OutOfRange(DensifyError):
    """Volumetric plastic strain outside the domain of the compaction law."""


class GradientSingular(DensifyError):
    """Yield function gradient evaluated at a cap vertex."""


class NotPositiveDefinite(DensifyError):
    """Coupling tensor lost positive definiteness."""


class LockingMaterial(DensifyError):
    """Plastic modulus g <= 0."""


class NonInvertibleRegime(DensifyError):
    """Inverse rate equations requested with non-positive hardening."""


# --- integration ------------------------------------------------------------

class IntegrationError(DensifyError):
    pass


class DriftNotConverged(IntegrationError):
    pass


class NewtonNotConverged(IntegrationError):
    pass


# --- input ------------------------------------------------------------------

class ParameterError(DensifyError, ValueError):
    """One or more invalid material parameters or scenario entries.

    All violations are collected in :attr:`violations` rather than failing on
    the first one.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ScenarioParseError(DensifyError):
    """Scenario file is not well-formed structured text."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


#: Scenario-level validation failures are parameter errors.
ValidationError = ParameterError


class ScenarioRunError(IntegrationError):
    """Integrator failure inside a scenario, tagged with its location."""

    def __init__(self, step, leg, cause, diagnostics=None):
        self.step = step
        self.leg = leg
        self.cause = cause
        self.diagnostics = dict(diagnostics or {})
        extra = "".join(f", {k}={v:.6g}" for k, v in self.diagnostics.items())
        super().__init__(
            f"step {step} (leg {leg}): {type(cause).__name__}: {cause}{extra}")
