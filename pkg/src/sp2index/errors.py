"""Exception types.  Degeneracy and solver failures are refusals, not warnings."""


class Sp2IndexError(Exception):
    """Base class for every error raised by the package."""


class InputError(Sp2IndexError, ValueError):
    """Malformed or out-of-range input."""


class NotElliptic(Sp2IndexError):
    """Krein sign requested for a matrix without eigenvalues on S^1 \\ {+-1}."""


class NonSymmetric(InputError):
    """A probe of S(t) was not symmetric (or not periodic)."""


class StepFailure(Sp2IndexError):
    """The integrator could not satisfy the lift contract or its step limits."""


class LiftError(Sp2IndexError):
    """The rho-angle lift is inconsistent with the endpoint classification."""


class DegenerateEndpoint(Sp2IndexError):
    """The endpoint of a path lies (numerically) in Sp(2)_omega^0."""

    def __init__(self, phi, d_value, deg_tol, where=""):
        self.phi = float(phi)
        self.d_value = float(d_value)
        self.deg_tol = float(deg_tol)
        self.where = where
        msg = f"degenerate endpoint at phi={self.phi:.17g}: |D|={abs(self.d_value):.3e} <= {self.deg_tol:.1e}"
        if where:
            msg += f" ({where})"
        super().__init__(msg)


class CrossCheckMismatch(Sp2IndexError):
    """Two independent routes to the same integer disagreed."""


class NoConvergence(Sp2IndexError):
    """An iterative solver hit its iteration cap."""


class NotAMinimizer(Sp2IndexError):
    """A minimisation converged to a critical point with positive Morse index."""


class CollapseToEndpoint(Sp2IndexError):
    """The mountain-pass path slid off the ridge onto one of its endpoints."""


class DegenerateHessian(Sp2IndexError):
    """Second variation has eigenvalues inside the nullity band."""

    def __init__(self, msg, eigenvalues=None):
        super().__init__(msg)
        self.eigenvalues = eigenvalues


class IndexMismatch(Sp2IndexError):
    """A polished saddle does not have the expected Morse index."""


class LegendreViolation(Sp2IndexError):
    """L_pp <= 0 somewhere along the loop."""


class LostBracket(Sp2IndexError):
    """Continuation of a transition curve lost its root bracket."""


class ConclusionViolated(Sp2IndexError):
    """A stability conclusion failed on a nondegenerate instance."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}
