"""Linear algebra on Sp(2) = SL(2, R): eigen-structure, Krein sign, rotation
function and the omega-components Sp(2)_omega^{+,-,0}."""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NotElliptic

SYMPL_TOL = 1e-9
EIG_TOL = 1e-9
DEG_TOL = 1e-8

J = np.array([[0.0, -1.0], [1.0, 0.0]])
G = -1j * J
M_PLUS = np.diag([2.0, 0.5])
M_MINUS = np.diag([-2.0, -0.5])


@dataclass(frozen=True)
class SymplecticMatrix2:
    """Real 2x2 matrix [[a, b], [c, d]] with ad - bc = 1 up to ``sympl_tol``."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.a, self.b, self.c, self.d)):
            raise InputError("matrix entries must be finite")

    @classmethod
    def from_array(cls, m, sympl_tol: float = SYMPL_TOL) -> "SymplecticMatrix2":
        m = np.asarray(m, dtype=float).reshape(2, 2)
        out = cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))
        if abs(out.det - 1.0) > sympl_tol:
            raise InputError(f"det = {out.det!r} is not 1 within {sympl_tol:g}")
        return out

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        return self.a + self.d

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, other: "SymplecticMatrix2") -> "SymplecticMatrix2":
        return SymplecticMatrix2.from_array(self.as_array() @ as_array(other), sympl_tol=1e-6)


def as_array(A) -> np.ndarray:
    if isinstance(A, SymplecticMatrix2):
        return A.as_array()
    return np.asarray(A, dtype=float).reshape(2, 2)


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


class EigenTag(enum.Enum):
    ELLIPTIC = "Elliptic"
    HYPERBOLIC_POSITIVE = "HyperbolicPositive"
    HYPERBOLIC_NEGATIVE = "HyperbolicNegative"
    PARABOLIC_PLUS = "ParabolicPlus"
    PARABOLIC_MINUS = "ParabolicMinus"


@dataclass(frozen=True)
class EigenClass:
    """Eigen-type of an Sp(2) matrix.

    ``value`` is the Krein-positive angle in (0, 2pi) for elliptic matrices, the
    eigenvalue of modulus < 1 for hyperbolic ones and +-1 for parabolic ones.
    """

    tag: EigenTag
    value: float

    @property
    def eigenvalues(self) -> tuple[complex, complex]:
        if self.tag is EigenTag.ELLIPTIC:
            lam = cmath.exp(1j * self.value)
            return lam, lam.conjugate()
        if self.tag in (EigenTag.PARABOLIC_PLUS, EigenTag.PARABOLIC_MINUS):
            return complex(self.value), complex(self.value)
        return complex(self.value), complex(1.0 / self.value)


@dataclass(frozen=True)
class OmegaPoint:
    """omega = exp(i phi) with phi in [0, pi]; omega and its conjugate are identified."""

    phi: float

    def __post_init__(self):
        if not (0.0 <= self.phi <= math.pi):
            raise InputError(f"phi must lie in [0, pi], got {self.phi!r}")

    @classmethod
    def from_angle(cls, angle: float) -> "OmegaPoint":
        """Fold an arbitrary angle onto the closed upper half circle."""
        a = math.fmod(angle, 2.0 * math.pi)
        if a < 0.0:
            a += 2.0 * math.pi
        if a > math.pi:
            a = 2.0 * math.pi - a
        return cls(min(max(a, 0.0), math.pi))

    @property
    def value(self) -> complex:
        return cmath.exp(1j * self.phi)


class Component(enum.Enum):
    PLUS = "Plus"
    MINUS = "Minus"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class ComponentTag:
    sign: Component
    d_value: float


def _phi(w) -> float:
    if isinstance(w, OmegaPoint):
        return w.phi
    return OmegaPoint(float(w)).phi


def krein_form(A, eigenvalue: complex) -> float:
    """<Gv, v> for an eigenvector v of ``eigenvalue`` (normalised to |v| = 1)."""
    m = as_array(A).astype(complex)
    # null vector of (A - lam I) from its better-conditioned row
    r = m - eigenvalue * np.eye(2)
    if abs(r[0, 0]) + abs(r[0, 1]) >= abs(r[1, 0]) + abs(r[1, 1]):
        v = np.array([r[0, 1], -r[0, 0]])
    else:
        v = np.array([r[1, 1], -r[1, 0]])
    v = v / np.linalg.norm(v)
    return float(np.vdot(v, G @ v).real)


def krein_sign(A, which: str = "upper", eig_tol: float = EIG_TOL) -> int:
    """Krein sign of the eigenvalue with positive (``"upper"``) or negative
    (``"lower"``) imaginary part."""
    m = as_array(A)
    tr = m[0, 0] + m[1, 1]
    if abs(tr) >= 2.0 - eig_tol:
        raise NotElliptic(f"trace {tr!r} is not inside (-2, 2)")
    th = math.acos(0.5 * tr)
    if which == "upper":
        lam = cmath.exp(1j * th)
    elif which == "lower":
        lam = cmath.exp(-1j * th)
    else:
        raise InputError("which must be 'upper' or 'lower'")
    return 1 if krein_form(m, lam) > 0.0 else -1


def classify_eigen(A, eig_tol: float = EIG_TOL) -> EigenClass:
    m = as_array(A)
    tr = m[0, 0] + m[1, 1]
    if abs(tr - 2.0) <= eig_tol:
        return EigenClass(EigenTag.PARABOLIC_PLUS, 1.0)
    if abs(tr + 2.0) <= eig_tol:
        return EigenClass(EigenTag.PARABOLIC_MINUS, -1.0)
    if tr > 2.0:
        lam = 0.5 * (tr - math.sqrt(tr * tr - 4.0))
        return EigenClass(EigenTag.HYPERBOLIC_POSITIVE, lam)
    if tr < -2.0:
        lam = 0.5 * (tr + math.sqrt(tr * tr - 4.0))
        return EigenClass(EigenTag.HYPERBOLIC_NEGATIVE, lam)
    th = math.acos(0.5 * tr)
    if krein_form(m, cmath.exp(1j * th)) > 0.0:
        return EigenClass(EigenTag.ELLIPTIC, th)
    return EigenClass(EigenTag.ELLIPTIC, 2.0 * math.pi - th)


def rotation(A, eig_tol: float = EIG_TOL) -> complex:
    """rho(A): exp(i theta) for elliptic A, +1 or -1 otherwise."""
    ec = classify_eigen(A, eig_tol)
    if ec.tag is EigenTag.ELLIPTIC:
        return cmath.exp(1j * ec.value)
    if ec.tag in (EigenTag.HYPERBOLIC_POSITIVE, EigenTag.PARABOLIC_PLUS):
        return 1.0 + 0.0j
    return -1.0 + 0.0j


def d_omega_complex(A, w) -> complex:
    """conj(omega) * det(A - omega I), evaluated in complex arithmetic."""
    om = cmath.exp(1j * _phi(w))
    m = as_array(A).astype(complex) - om * np.eye(2)
    return om.conjugate() * (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def d_omega(A, w) -> float:
    """Real value of D(omega) = conj(omega) det(A - omega I).

    Equal to 2 cos(phi) - tr(A) on Sp(2).  At omega = +-1 the determinant is
    expanded directly, which keeps the sign reliable for A close to +-I.
    """
    phi = _phi(w)
    m = as_array(A)
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    if phi == 0.0:
        return (a - 1.0) * (d - 1.0) - b * c
    if phi == math.pi:
        return -((a + 1.0) * (d + 1.0) - b * c)
    return 2.0 * math.cos(phi) - (a + d)


def classify_component(A, w, deg_tol: float = DEG_TOL) -> ComponentTag:
    dv = d_omega(A, w)
    if dv < -deg_tol:
        return ComponentTag(Component.PLUS, dv)
    if dv > deg_tol:
        return ComponentTag(Component.MINUS, dv)
    return ComponentTag(Component.DEGENERATE, dv)


def random_symplectic(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """A random element of Sp(2): rotation * diag(e^s, e^-s) * rotation * shear."""
    s = rng.normal(scale=scale)
    shear = np.array([[1.0, rng.normal(scale=scale)], [0.0, 1.0]])
    return (
        rotation_matrix(rng.uniform(0, 2 * math.pi))
        @ np.diag([math.exp(s), math.exp(-s)])
        @ rotation_matrix(rng.uniform(0, 2 * math.pi))
        @ shear
    )
