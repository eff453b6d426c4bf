"""Loop-space calculus for one-degree-of-freedom Lagrangians.

Loops are truncated trig series ``x(t) = a0 + sum a_j cos(j nu t) + b_j sin(j nu t)``
with ``nu = 2 pi / T``, coefficient vector ``c = [a0, a_1..a_N, b_1..b_N]``.
Integrals use the uniform M-point rule, which is exact for trig polynomials of
degree < M.  Gradients and Hessians are taken with respect to ``c``; the H^1
inner product is diagonal in this basis with weights ``W``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import (
    CollapseToEndpoint,
    DegenerateHessian,
    IndexMismatch,
    InputError,
    LegendreViolation,
    NoConvergence,
    NotAMinimizer,
)
from .sympath import HamiltonianSpec

DEFAULT_MODES = 64
GD_TOL = 1e-6
NEWTON_TOL = 1e-10
EIG_REL_CUTOFF = 1e-8

Fn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class LagrangianSpec:
    """L(t, x, p) with its first and second partials; callbacks take numpy arrays."""

    T: float
    L: Fn
    L_x: Fn
    L_p: Fn
    P: Fn
    Q: Fn
    R: Fn
    label: str = ""

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise InputError("period must be positive")


def pendulum_lagrangian(beta: float, T: float, forcing: Optional[Callable] = None) -> LagrangianSpec:
    """L = p^2/2 + beta cos x + x f(t); its extremals solve x'' + beta sin x = f."""
    f = forcing if forcing is not None else (lambda t: np.zeros_like(t))

    def L(t, x, p):
        return 0.5 * p * p + beta * np.cos(x) + x * f(t)

    def L_x(t, x, p):
        return -beta * np.sin(x) + f(t)

    def L_p(t, x, p):
        return p

    def P(t, x, p):
        return np.ones_like(x)

    def Q(t, x, p):
        return np.zeros_like(x)

    def R(t, x, p):
        return -beta * np.cos(x)

    return LagrangianSpec(float(T), L, L_x, L_p, P, Q, R, label=f"pendulum beta={beta:g}")


@lru_cache(maxsize=32)
def _basis(T: float, N: int, M: int):
    t = np.arange(M) * (T / M)
    nu = 2.0 * math.pi / T
    j = np.arange(1, N + 1)
    arg = np.outer(t, j) * nu
    c, s = np.cos(arg), np.sin(arg)
    E = np.hstack([np.ones((M, 1)), c, s])
    Ed = np.hstack([np.zeros((M, 1)), -nu * j * s, nu * j * c])
    l2 = np.concatenate([[T], np.full(2 * N, 0.5 * T)])
    freq = np.concatenate([[0.0], nu * j, nu * j])
    h1 = l2 * (1.0 + freq**2)
    for a in (t, E, Ed, l2, h1):
        a.setflags(write=False)
    return t, E, Ed, l2, h1


@dataclass(frozen=True, eq=False)
class LoopRepr:
    """A T-periodic loop as a trig series with N modes, sampled on M points."""

    coeffs: np.ndarray
    T: float
    N: int
    M: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (2 * self.N + 1,):
            raise InputError(f"expected {2 * self.N + 1} coefficients, got shape {c.shape}")
        if self.M < 4 * self.N + 4:
            raise InputError("quadrature grid needs M >= 4N + 4")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, value: float, T: float, N: int = DEFAULT_MODES, M: Optional[int] = None) -> "LoopRepr":
        c = np.zeros(2 * N + 1)
        c[0] = value
        return cls(c, float(T), N, M or 4 * N + 4)

    @classmethod
    def from_function(cls, x: Callable, T: float, N: int = DEFAULT_MODES, M: Optional[int] = None) -> "LoopRepr":
        """Least-squares (here exact interpolation) projection of samples of x."""
        M = M or 4 * N + 4
        t = np.arange(M) * (T / M)
        f = np.fft.rfft(np.asarray(x(t), dtype=float)) / M
        c = np.concatenate([[f[0].real], 2.0 * f[1 : N + 1].real, -2.0 * f[1 : N + 1].imag])
        return cls(c, float(T), N, M)

    def with_coeffs(self, coeffs) -> "LoopRepr":
        return replace(self, coeffs=np.asarray(coeffs, dtype=float))

    def resized(self, N: int, M: Optional[int] = None) -> "LoopRepr":
        c = np.zeros(2 * N + 1)
        k = min(N, self.N)
        c[0] = self.coeffs[0]
        c[1 : k + 1] = self.coeffs[1 : k + 1]
        c[N + 1 : N + 1 + k] = self.coeffs[self.N + 1 : self.N + 1 + k]
        return LoopRepr(c, self.T, N, M or 4 * N + 4)

    def shifted(self, delta: float) -> "LoopRepr":
        c = self.coeffs.copy()
        c[0] += delta
        return self.with_coeffs(c)

    @property
    def basis(self):
        return _basis(self.T, self.N, self.M)

    def grid(self) -> np.ndarray:
        return self.basis[0]

    def samples(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, x') on the quadrature grid."""
        _, E, Ed, _, _ = self.basis
        return E @ self.coeffs, Ed @ self.coeffs

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        nu = 2.0 * math.pi / self.T
        j = np.arange(1, self.N + 1)
        arg = np.multiply.outer(t, j) * nu
        return self.coeffs[0] + np.cos(arg) @ self.coeffs[1 : self.N + 1] + np.sin(arg) @ self.coeffs[self.N + 1 :]

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        nu = 2.0 * math.pi / self.T
        j = np.arange(1, self.N + 1)
        arg = np.multiply.outer(t, j) * nu
        return np.sin(arg) @ (-nu * j * self.coeffs[1 : self.N + 1]) + np.cos(arg) @ (nu * j * self.coeffs[self.N + 1 :])

    @property
    def l2_weights(self) -> np.ndarray:
        return self.basis[3]

    @property
    def h1_weights(self) -> np.ndarray:
        return self.basis[4]


class Kind(enum.Enum):
    MINIMIZER = "Minimizer"
    MOUNTAIN_PASS = "MountainPass"
    OTHER = "Other"


@dataclass
class CriticalPoint:
    loop: LoopRepr
    action: float
    grad_norm: float
    morse_index: int
    kind: Kind
    mp_value: Optional[float] = None
    eigenvalues: np.ndarray = field(default=None, repr=False)
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "action": self.action,
            "grad_norm": self.grad_norm,
            "morse_index": self.morse_index,
            "mp_value": self.mp_value,
            "N": self.loop.N,
            "T": self.loop.T,
            "coeffs": self.loop.coeffs.tolist(),
        }


# ---------------------------------------------------------------------------
# Functional, gradient, Hessian


def _check_period(spec: LagrangianSpec, loop: LoopRepr):
    if abs(spec.T - loop.T) > 1e-12 * spec.T:
        raise InputError(f"loop period {loop.T} does not match Lagrangian period {spec.T}")


def action_value(spec: LagrangianSpec, loop: LoopRepr) -> float:
    """A(x) = integral of L(t, x, x') over one period."""
    _check_period(spec, loop)
    t = loop.grid()
    x, p = loop.samples()
    return float(np.sum(spec.L(t, x, p)) * (loop.T / loop.M))


def _coeff_gradient(spec: LagrangianSpec, loop: LoopRepr) -> np.ndarray:
    t, E, Ed, _, _ = loop.basis
    x, p = loop.samples()
    h = loop.T / loop.M
    return h * (E.T @ spec.L_x(t, x, p) + Ed.T @ spec.L_p(t, x, p))


def action_gradient(spec: LagrangianSpec, loop: LoopRepr) -> LoopRepr:
    """L^2 gradient of the action as a loop: dA(x)[v] = integral of grad * v.

    Its vanishing is the Galerkin form of the Euler-Lagrange equation.
    """
    _check_period(spec, loop)
    return loop.with_coeffs(_coeff_gradient(spec, loop) / loop.l2_weights)


def euler_lagrange_residual(spec: LagrangianSpec, loop: LoopRepr) -> LoopRepr:
    """(d/dt) L_p - L_x projected onto the basis; the negative of the L^2 gradient."""
    g = action_gradient(spec, loop)
    return g.with_coeffs(-g.coeffs)


def grad_norm(spec: LagrangianSpec, loop: LoopRepr) -> float:
    """H^1-dual norm of the differential of the action."""
    g = _coeff_gradient(spec, loop)
    return float(math.sqrt(np.sum(g * g / loop.h1_weights)))


def second_variation(spec: LagrangianSpec, loop: LoopRepr) -> np.ndarray:
    """Hessian of the action in the coefficient coordinates."""
    _check_period(spec, loop)
    t, E, Ed, _, _ = loop.basis
    x, p = loop.samples()
    h = loop.T / loop.M
    P = spec.P(t, x, p) * h
    Q = spec.Q(t, x, p) * h
    R = spec.R(t, x, p) * h
    cross = Ed.T @ (Q[:, None] * E)
    H = Ed.T @ (P[:, None] * Ed) + cross + cross.T + E.T @ (R[:, None] * E)
    return 0.5 * (H + H.T)


def hessian_spectrum(spec: LagrangianSpec, loop: LoopRepr, metric: str = "h1") -> np.ndarray:
    """Eigenvalues of the second variation relative to the L^2 or H^1 inner product."""
    H = second_variation(spec, loop)
    w = loop.h1_weights if metric == "h1" else loop.l2_weights
    if metric not in ("h1", "l2"):
        raise InputError("metric must be 'h1' or 'l2'")
    s = 1.0 / np.sqrt(w)
    return np.linalg.eigvalsh(s[:, None] * H * s[None, :])


def morse_index(spec: LagrangianSpec, loop: LoopRepr, eig_cutoff: Optional[float] = None) -> int:
    """Number of negative eigenvalues of the second variation (H^1 metric).

    ``eig_cutoff`` defaults to 1e-8 times the largest |eigenvalue|; eigenvalues
    inside the band raise DegenerateHessian.
    """
    lam = hessian_spectrum(spec, loop, "h1")
    cut = eig_cutoff if eig_cutoff is not None else EIG_REL_CUTOFF * np.max(np.abs(lam))
    null = lam[np.abs(lam) <= cut]
    if null.size:
        raise DegenerateHessian(f"{null.size} eigenvalue(s) within {cut:.2e} of zero", lam)
    return int(np.sum(lam < -cut))


# ---------------------------------------------------------------------------
# Solvers


def newton_polish(
    spec: LagrangianSpec, loop: LoopRepr, tol: float = NEWTON_TOL, max_iter: int = 50
) -> tuple[LoopRepr, float, int]:
    """Newton's method on the coefficient gradient; returns (loop, grad_norm, iterations)."""
    c = loop.coeffs.copy()
    cur = loop
    gn = grad_norm(spec, cur)
    for it in range(max_iter):
        if gn <= tol:
            return cur, gn, it
        g = _coeff_gradient(spec, cur)
        H = second_variation(spec, cur)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError as exc:
            raise DegenerateHessian("singular Hessian during Newton polish") from exc
        # damp on increase of the gradient norm
        lam = 1.0
        for _ in range(30):
            trial = cur.with_coeffs(c + lam * step)
            gt = grad_norm(spec, trial)
            if gt < gn or gt <= tol:
                break
            lam *= 0.5
        c = c + lam * step
        cur = cur.with_coeffs(c)
        gn = gt
    if gn <= tol:
        return cur, gn, max_iter
    raise NoConvergence(f"Newton polish stalled at grad norm {gn:.3e}")


def _critical(spec, loop, kind, mp=None, iters=0, cutoff=None) -> CriticalPoint:
    lam = hessian_spectrum(spec, loop, "h1")
    return CriticalPoint(
        loop=loop,
        action=action_value(spec, loop),
        grad_norm=grad_norm(spec, loop),
        morse_index=morse_index(spec, loop, cutoff),
        kind=kind,
        mp_value=mp,
        eigenvalues=lam,
        iterations=iters,
    )


def find_minimizer(
    spec: LagrangianSpec,
    seed: LoopRepr,
    gd_tol: float = GD_TOL,
    newton_tol: float = NEWTON_TOL,
    max_iter: int = 20_000,
) -> CriticalPoint:
    """H^1-preconditioned steepest descent with Armijo backtracking, then Newton."""
    _check_period(spec, seed)
    w = seed.h1_weights
    loop = seed
    A = action_value(spec, loop)
    it = 0
    while True:
        g = _coeff_gradient(spec, loop)
        gn = math.sqrt(np.sum(g * g / w))
        if gn <= gd_tol:
            break
        it += 1
        if it > max_iter:
            raise NoConvergence(f"descent hit {max_iter} iterations at grad norm {gn:.3e}")
        d = -g / w
        slope = float(g @ d)
        s = 1.0
        while True:
            trial = loop.with_coeffs(loop.coeffs + s * d)
            At = action_value(spec, trial)
            if At <= A + 1e-4 * s * slope:
                break
            s *= 0.5
            if s < 1e-12:
                raise NoConvergence("line search failed")
        loop, A = trial, At
    loop, _, nit = newton_polish(spec, loop, newton_tol)
    cp = _critical(spec, loop, Kind.MINIMIZER, iters=it + nit)
    if cp.morse_index != 0:
        raise NotAMinimizer(f"descent ended at a critical point of Morse index {cp.morse_index}")
    return cp


def _reparametrize(nodes: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Redistribute path nodes to equal H^1 arc length (endpoints fixed)."""
    seg = np.sqrt(np.sum(np.diff(nodes, axis=0) ** 2 * w, axis=1))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0.0:
        return nodes
    target = np.linspace(0.0, s[-1], nodes.shape[0])
    out = np.empty_like(nodes)
    for k in range(nodes.shape[1]):
        out[:, k] = np.interp(target, s, nodes[:, k])
    out[0], out[-1] = nodes[0], nodes[-1]
    return out


def find_mountain_pass(
    spec: LagrangianSpec,
    qA: CriticalPoint,
    qB: CriticalPoint,
    n_nodes: int = 33,
    step: float = 0.2,
    climb_tol: float = GD_TOL,
    newton_tol: float = NEWTON_TOL,
    max_iter: int = 20_000,
) -> CriticalPoint:
    """Minimax critical point between two minimizers.

    A chain of ``n_nodes`` loops joins qA to qB.  Every interior node descends
    along the component of the (preconditioned) gradient normal to the chain,
    the highest node climbs along the chain while descending normally to it, and
    the nodes are kept at equal H^1 spacing.  Once the climbing node's gradient
    norm is below ``climb_tol`` it is Newton-polished and must have Morse index 1.
    """
    a, b = qA.loop, qB.loop
    if a.N != b.N or a.M != b.M or a.T != b.T:
        raise InputError("endpoints must share the same discretization")
    w = a.h1_weights
    nodes = np.linspace(0.0, 1.0, n_nodes)[:, None] * (b.coeffs - a.coeffs)[None, :] + a.coeffs[None, :]
    loops = [a.with_coeffs(c) for c in nodes]
    top = None
    for it in range(1, max_iter + 1):
        vals = np.array([action_value(spec, lp) for lp in loops])
        top = int(np.argmax(vals))
        if top == 0 or top == n_nodes - 1:
            raise CollapseToEndpoint(f"highest node is endpoint {top} (action {vals[top]:.12g})")
        grads = np.array([_coeff_gradient(spec, lp) for lp in loops])
        gtop = grads[top]
        if math.sqrt(np.sum(gtop * gtop / w)) <= climb_tol:
            break
        new = nodes.copy()
        for k in range(1, n_nodes - 1):
            # upwind tangent towards the higher neighbour
            if vals[k + 1] > vals[k] > vals[k - 1]:
                tau = nodes[k + 1] - nodes[k]
            elif vals[k + 1] < vals[k] < vals[k - 1]:
                tau = nodes[k] - nodes[k - 1]
            else:
                tau = nodes[k + 1] - nodes[k - 1]
            nrm = math.sqrt(np.sum(tau * tau * w))
            tau = tau / nrm if nrm > 0 else tau
            d = grads[k] / w  # H^1 Riesz representative
            along = float(np.sum(d * tau * w))
            if k == top:
                d = d - 2.0 * along * tau
            else:
                d = d - along * tau
            new[k] = nodes[k] - step * d
        climber = new[top].copy()
        nodes = _reparametrize(new, w)
        # keep the climbing image where it went; its neighbours are re-spaced
        nodes[top] = climber
        loops = [a.with_coeffs(c) for c in nodes]
    else:
        raise NoConvergence(f"mountain-pass chain did not converge in {max_iter} iterations")
    saddle, _, nit = newton_polish(spec, loops[top], newton_tol)
    cp = _critical(spec, saddle, Kind.MOUNTAIN_PASS, iters=it + nit)
    cp.mp_value = cp.action
    if cp.morse_index != 1:
        raise IndexMismatch(f"polished saddle has Morse index {cp.morse_index}, expected 1")
    if cp.action < max(qA.action, qB.action) - 1e-12 * (1.0 + abs(cp.action)):
        raise IndexMismatch("saddle action lies below an endpoint minimizer")
    return cp


def linearize_extremal(
    spec: LagrangianSpec, loop: LoopRepr, tail_tol: float = 1e-14, max_samples: int = 1 << 14
) -> HamiltonianSpec:
    """Quadratic Hamiltonian of the linearized flow along the loop, z = (p, q) ordering.

    S = [[1/P, -Q/P], [-Q/P, Q^2/P - R]], resampled into a trig series whose
    sample count is doubled until the spectral tail is negligible.
    """
    T = loop.T
    m = max(64, 2 * loop.M)
    while True:
        t = np.arange(m) * (T / m)
        x, p = loop(t), loop.derivative(t)
        P = np.asarray(spec.P(t, x, p), dtype=float) * np.ones(m)
        if np.any(P <= 0.0):
            k = int(np.argmin(P))
            raise LegendreViolation(f"L_pp = {P[k]:.3e} <= 0 at t = {t[k]:.6g}")
        Q = np.asarray(spec.Q(t, x, p), dtype=float) * np.ones(m)
        R = np.asarray(spec.R(t, x, p), dtype=float) * np.ones(m)
        rows = np.stack([1.0 / P, -Q / P, Q * Q / P - R])
        f = np.fft.rfft(rows, axis=1) / m
        k = (m - 1) // 2
        coeffs = np.concatenate([f[:, :1].real, 2.0 * f[:, 1 : k + 1].real, -2.0 * f[:, 1 : k + 1].imag], axis=1)
        scale = max(np.abs(coeffs).max(), 1e-300)
        half = k // 2
        tail = max(np.abs(coeffs[:, half + 1 : k + 1]).max(), np.abs(coeffs[:, k + half + 1 :]).max())
        if tail <= tail_tol * scale:
            # keep the resolved half of the spectrum
            keep = np.concatenate([coeffs[:, : half + 1], coeffs[:, k + 1 : k + 1 + half]], axis=1)
            return HamiltonianSpec.trig(T, keep, label="linearized extremal")
        if m >= max_samples:
            raise InputError("coefficients along the loop are not resolved by a trig series")
        m *= 2
