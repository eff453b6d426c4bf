"""Symplectic paths of T-periodic linear Hamiltonian systems and their indices.

A path is sampled on the adaptive integrator's nodes together with a continuous
lift of the rotation-function angle.  The omega-index is read off the lift at
the endpoint: the extension to M^+ or M^- stays inside one simply connected
component of Sp(2)_omega^{+/-}, whose rho-image is an arc avoiding exp(+-i phi),
so the extension contributes a snap to the nearest admissible multiple of pi.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import (
    CrossCheckMismatch,
    DegenerateEndpoint,
    InputError,
    LiftError,
    NonSymmetric,
    StepFailure,
)
from .sp2core import DEG_TOL, EIG_TOL, OmegaPoint, SymplecticMatrix2, d_omega

TWO_PI = 2.0 * math.pi
LIFT_TOL = 1e-8


# ---------------------------------------------------------------------------
# Hamiltonian coefficient data


def trig_fit(samples: np.ndarray) -> np.ndarray:
    """Trig coefficients ``[c0, a_1..a_K, b_1..b_K]`` per row of equispaced samples."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    m = samples.shape[1]
    f = np.fft.rfft(samples, axis=1) / m
    k = (m - 1) // 2
    out = np.empty((samples.shape[0], 2 * k + 1))
    out[:, 0] = f[:, 0].real
    out[:, 1 : k + 1] = 2.0 * f[:, 1 : k + 1].real
    out[:, k + 1 :] = -2.0 * f[:, 1 : k + 1].imag
    return out


def trig_eval(coeffs: np.ndarray, nu: float, t) -> np.ndarray:
    """Evaluate rows of trig coefficients at times ``t`` -> shape (rows, len(t))."""
    coeffs = np.atleast_2d(coeffs)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = (coeffs.shape[1] - 1) // 2
    j = np.arange(1, k + 1)
    arg = nu * np.outer(j, t)
    return coeffs[:, :1] + coeffs[:, 1 : k + 1] @ np.cos(arg) + coeffs[:, k + 1 :] @ np.sin(arg)


def _trim_trig(coeffs: np.ndarray, rel: float = 1e-17) -> np.ndarray:
    k = (coeffs.shape[1] - 1) // 2
    if k == 0:
        return coeffs
    scale = max(np.max(np.abs(coeffs)), 1e-300)
    mag = np.maximum(np.max(np.abs(coeffs[:, 1 : k + 1]), axis=0), np.max(np.abs(coeffs[:, k + 1 :]), axis=0))
    keep = np.nonzero(mag > rel * scale)[0]
    kk = int(keep[-1]) + 1 if keep.size else 0
    return np.concatenate([coeffs[:, :1], coeffs[:, 1 : kk + 1], coeffs[:, k + 1 : k + 1 + kk]], axis=1)


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """T-periodic symmetric S(t) in one of the kernel encodings.

    Build instances with :meth:`trig`, :meth:`constant`, :meth:`piecewise` or
    :meth:`from_callable`; the raw fields are the kernel inputs.
    """

    T: float
    kind: int
    d0: np.ndarray
    d1: np.ndarray
    smoothness: str = "smooth"
    label: str = ""

    @classmethod
    def trig(cls, T: float, coeffs, label: str = "") -> "HamiltonianSpec":
        coeffs = np.ascontiguousarray(np.atleast_2d(np.asarray(coeffs, dtype=float)))
        if coeffs.shape[0] != 3 or coeffs.shape[1] % 2 != 1:
            raise InputError("trig coefficients must have shape (3, 2K+1)")
        if not (T > 0 and math.isfinite(T)):
            raise InputError("period must be positive")
        return cls(float(T), kernels.KIND_TRIG, coeffs, np.array([TWO_PI / T]), "smooth", label)

    @classmethod
    def constant(cls, S, T: float = 1.0, label: str = "") -> "HamiltonianSpec":
        S = np.asarray(S, dtype=float).reshape(2, 2)
        if abs(S[0, 1] - S[1, 0]) > 1e-12 * max(1.0, np.abs(S).max()):
            raise NonSymmetric(f"S is not symmetric: {S.tolist()}")
        return cls.trig(T, np.array([[S[0, 0]], [S[0, 1]], [S[1, 1]]]), label)

    @classmethod
    def piecewise(cls, breaks, mats, label: str = "") -> "HamiltonianSpec":
        """Piecewise-constant S: ``mats[i]`` on ``[breaks[i], breaks[i+1])``, period ``breaks[-1]``."""
        breaks = np.asarray(breaks, dtype=float)
        mats = np.asarray(mats, dtype=float).reshape(-1, 2, 2)
        if breaks.ndim != 1 or breaks.size != mats.shape[0] + 1:
            raise InputError("need len(breaks) == len(mats) + 1")
        if breaks[0] != 0.0 or np.any(np.diff(breaks) <= 0):
            raise InputError("breakpoints must start at 0 and increase strictly")
        asym = np.abs(mats[:, 0, 1] - mats[:, 1, 0])
        if np.any(asym > 1e-12 * np.maximum(1.0, np.abs(mats).max(axis=(1, 2)))):
            raise NonSymmetric("piecewise S contains a non-symmetric matrix")
        d0 = np.ascontiguousarray(np.stack([mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 1]], axis=1))
        return cls(float(breaks[-1]), kernels.KIND_PIECEWISE, d0, breaks.copy(), "piecewise", label)

    @classmethod
    def from_callable(
        cls,
        S: Callable[[float], np.ndarray],
        T: float,
        smoothness: str = "smooth",
        breakpoints: Optional[Sequence[float]] = None,
        label: str = "",
        tail_tol: float = 1e-13,
        max_samples: int = 1 << 15,
    ) -> "HamiltonianSpec":
        """Encode an arbitrary callback.

        Smooth callbacks are resampled into a trig series (sample count doubled
        until the spectral tail is below ``tail_tol`` relative); piecewise ones
        are sampled at the midpoint of each piece.
        """
        probes = np.linspace(0.0, T, 7, endpoint=False) + 0.1234 * T / 7
        for t in probes:
            a = np.asarray(S(t), dtype=float).reshape(2, 2)
            b = np.asarray(S(t + T), dtype=float).reshape(2, 2)
            scale = max(1.0, np.abs(a).max())
            if abs(a[0, 1] - a[1, 0]) > 1e-12 * scale:
                raise NonSymmetric(f"S({t:.6g}) is not symmetric")
            if np.abs(a - b).max() > 1e-12 * scale:
                raise NonSymmetric(f"S is not {T:g}-periodic at t={t:.6g}")
        if smoothness == "piecewise":
            if breakpoints is None:
                raise InputError("piecewise callbacks need their breakpoints")
            br = np.asarray(sorted(set([0.0, *breakpoints, T])), dtype=float)
            br = br[(br >= 0) & (br <= T)]
            mids = 0.5 * (br[:-1] + br[1:])
            return cls.piecewise(br, [np.asarray(S(t), dtype=float) for t in mids], label)
        if smoothness != "smooth":
            raise InputError("smoothness must be 'smooth' or 'piecewise'")
        m = 64
        while True:
            ts = np.arange(m) * (T / m)
            vals = np.array([np.asarray(S(t), dtype=float).reshape(2, 2) for t in ts])
            samples = np.stack([vals[:, 0, 0], vals[:, 0, 1], vals[:, 1, 1]])
            coeffs = trig_fit(samples)
            k = (coeffs.shape[1] - 1) // 2
            scale = max(np.abs(coeffs).max(), 1e-300)
            tail = max(np.abs(coeffs[:, k // 2 + 1 : k + 1]).max(), np.abs(coeffs[:, k + k // 2 + 1 :]).max())
            if tail <= tail_tol * scale:
                return cls.trig(T, _trim_trig(coeffs), label)
            if m >= max_samples:
                raise InputError("S(t) is not resolved by a trig series; declare it piecewise")
            m *= 2

    def S(self, t: float) -> np.ndarray:
        """S(t) as a 2x2 array (right-continuous at breakpoints)."""
        if self.kind == kernels.KIND_TRIG:
            s = trig_eval(self.d0, self.d1[0], [t])[:, 0]
            s11, s12, s22 = s
        else:
            s11, s12, s22 = kernels.eval_s(self.kind, float(t), float(t), self.d0, self.d1)
        return np.array([[s11, s12], [s12, s22]])

    def stops(self, t0: float, t1: float) -> np.ndarray:
        """Breakpoints strictly inside (t0, t1) followed by t1."""
        if self.kind != kernels.KIND_PIECEWISE:
            return np.array([t1])
        T = self.T
        j0 = math.floor(t0 / T)
        j1 = math.ceil(t1 / T)
        pts = [j * T + b for j in range(j0, j1 + 1) for b in self.d1[:-1]]
        eps = 1e-12 * max(1.0, abs(t1))
        inner = sorted(p for p in pts if t0 + eps < p < t1 - eps)
        return np.array(inner + [t1])


@dataclass(frozen=True)
class StepControl:
    """Integrator tolerances.  ``hmax`` is a fraction of the period."""

    local_tol: float = 1e-12
    abs_tol: float = 1e-13
    hmax_fraction: float = 1.0 / 16.0
    max_bisect: int = 40
    max_steps: int = 5_000_000

    def __post_init__(self):
        if min(self.local_tol, self.abs_tol, self.hmax_fraction) <= 0:
            raise InputError("tolerances must be positive")


DEFAULT_STEP = StepControl()


def _run_kernel(mode, spec, y0, t0, t1, ctrl, lift0=0.0):
    status, times, ys, lift = kernels.integrate(
        mode,
        spec.kind,
        spec.d0,
        spec.d1,
        np.ascontiguousarray(y0, dtype=float),
        float(t0),
        spec.stops(t0, t1),
        ctrl.local_tol,
        ctrl.abs_tol,
        ctrl.hmax_fraction * spec.T,
        0.0,
        ctrl.max_bisect,
        float(lift0),
        ctrl.max_steps,
    )
    if status == kernels.STATUS_BISECT:
        raise StepFailure(f"lift bisection exceeded depth {ctrl.max_bisect} near t={times[-1]:.6g}")
    if status != kernels.STATUS_OK:
        raise StepFailure(f"integrator stopped (status {status}) near t={times[-1]:.6g}")
    return times, ys, lift


# ---------------------------------------------------------------------------
# Paths


@dataclass(eq=False)
class SampledSymplecticPath:
    """gamma on nodes ``0 = t_0 < ... < t_N`` with a continuous rho-angle lift."""

    times: np.ndarray
    mats: np.ndarray
    lift: np.ndarray
    period: float
    n_periods: int = 1
    spec: Optional[HamiltonianSpec] = None
    sampler: Optional[Callable[[float], np.ndarray]] = None
    step: StepControl = field(default=DEFAULT_STEP)

    @property
    def monodromy(self) -> np.ndarray:
        return self.mats[-1]

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    def parabolic_fraction(self, eig_tol: float = EIG_TOL) -> float:
        """Share of nodes whose trace sits within ``eig_tol`` of +-2."""
        tr = self.mats[:, 0, 0] + self.mats[:, 1, 1]
        return float(np.mean(np.abs(np.abs(tr) - 2.0) <= eig_tol))

    @property
    def lingers_parabolic(self) -> bool:
        return self.parabolic_fraction() > 0.1


def integrate_fundamental(
    spec: HamiltonianSpec, n_periods: int = 1, step: StepControl = DEFAULT_STEP
) -> SampledSymplecticPath:
    """Fundamental solution of dz/dt = J S(t) z over [0, n_periods T]."""
    if n_periods < 1:
        raise InputError("n_periods must be a positive integer")
    t1 = n_periods * spec.T
    times, ys, lift = _run_kernel(kernels.MODE_MATRIX, spec, np.array([1.0, 0.0, 0.0, 1.0]), 0.0, t1, step)
    return SampledSymplecticPath(times, ys.reshape(-1, 2, 2), lift, spec.T, n_periods, spec, None, step)


def flow_matrix(spec: HamiltonianSpec, Y0, t0: float, t1: float, step: StepControl = DEFAULT_STEP):
    """Nodes of the solution with Y(t0) = Y0; returns (times, mats, lift)."""
    Y0 = np.asarray(Y0, dtype=float).reshape(2, 2)
    lift0 = kernels.rho_angle(Y0[0, 0], Y0[0, 1], Y0[1, 0], Y0[1, 1])
    times, ys, lift = _run_kernel(kernels.MODE_MATRIX, spec, Y0.ravel(), t0, t1, step, lift0)
    return times, ys.reshape(-1, 2, 2), lift


def _track_lift(times, mats, refine, max_rounds: int = 10_000):
    times = np.asarray(times, dtype=float)
    mats = np.asarray(mats, dtype=float)
    for _ in range(max_rounds):
        lift, bad = kernels.unwrap_lift(np.ascontiguousarray(mats.reshape(-1, 4)), 0.0)
        if bad < 0:
            return times, mats, lift
        if refine is None:
            raise LiftError(f"lift jump of at least pi/2 between t={times[bad - 1]:.6g} and {times[bad]:.6g}")
        new_t, new_m = refine(times[bad - 1], mats[bad - 1], times[bad])
        if len(new_t) == 0:
            raise StepFailure(f"cannot refine lift near t={times[bad]:.6g}")
        times = np.concatenate([times[:bad], new_t, times[bad:]])
        mats = np.concatenate([mats[:bad], np.asarray(new_m).reshape(-1, 2, 2), mats[bad:]])
    raise StepFailure("lift refinement did not terminate")


def path_from_function(
    gamma: Callable[[float], np.ndarray], T: float, n_nodes: int = 65, max_depth: int = 40
) -> SampledSymplecticPath:
    """Sample a closed-form path gamma on [0, T]; the lift is refined by bisection."""
    times = np.linspace(0.0, T, n_nodes)
    mats = np.array([np.asarray(gamma(t), dtype=float).reshape(2, 2) for t in times])
    if np.abs(mats[0] - np.eye(2)).max() > 1e-12:
        raise InputError("gamma(0) must be the identity")
    min_gap = T * 2.0 ** (-max_depth)

    def refine(ta, _ma, tb):
        if tb - ta < min_gap:
            return [], []
        tm = 0.5 * (ta + tb)
        return [tm], [np.asarray(gamma(tm), dtype=float)]

    times, mats, lift = _track_lift(times, mats, refine)
    return SampledSymplecticPath(times, mats, lift, T, 1, None, gamma)


def iterate_path(path: SampledSymplecticPath, m: int) -> SampledSymplecticPath:
    """gamma^m(t) = gamma(t - jT) gamma(T)^j on [jT, (j+1)T]; the lift is re-tracked."""
    if path.n_periods != 1:
        raise InputError("iterate_path needs a path over exactly one period")
    if m < 1:
        raise InputError("m must be a positive integer")
    if m == 1:
        return path
    T = path.period
    MT = path.monodromy
    blocks_t = [path.times]
    blocks_m = [path.mats]
    powers = [np.eye(2)]
    Mj = np.eye(2)
    for j in range(1, m):
        Mj = Mj @ MT
        powers.append(Mj)
        blocks_t.append(path.times[1:] + j * T)
        blocks_m.append(path.mats[1:] @ Mj)
    times = np.concatenate(blocks_t)
    mats = np.concatenate(blocks_m)

    if path.spec is not None:
        spec, step = path.spec, path.step

        def refine(ta, ma, tb):
            ts, ms, _ = flow_matrix(spec, ma, ta, tb, step)
            return ts[1:-1], ms[1:-1]

    elif path.sampler is not None:
        gamma = path.sampler

        def refine(ta, _ma, tb):
            if tb - ta < T * 2.0**-40:
                return [], []
            tm = 0.5 * (ta + tb)
            j = min(int(tm // T), m - 1)
            return [tm], [np.asarray(gamma(tm - j * T)) @ powers[j]]

    else:
        refine = None

    times, mats, lift = _track_lift(times, mats, refine)
    return SampledSymplecticPath(times, mats, lift, T * m, 1, path.spec, None, path.step)


# ---------------------------------------------------------------------------
# Indices


def _phi_of(w) -> float:
    return w.phi if isinstance(w, OmegaPoint) else OmegaPoint(float(w)).phi


def index_omega(path: SampledSymplecticPath, w=0.0, deg_tol: float = DEG_TOL) -> int:
    """omega-index i_omega of the path (``w`` is an OmegaPoint or its angle phi)."""
    phi = _phi_of(w)
    A = path.monodromy
    dv = d_omega(A, phi)
    if abs(dv) <= deg_tol:
        raise DegenerateEndpoint(phi, dv, deg_tol)
    th = float(path.lift[-1])
    if dv < 0.0:
        k = round(th / TWO_PI)
        if abs(th - TWO_PI * k) >= phi + LIFT_TOL:
            raise LiftError(f"lift {th!r} inconsistent with Sp(2)_omega^+ endpoint (phi={phi!r})")
        return 2 * k
    k = math.floor(th / TWO_PI)
    alpha = th - TWO_PI * k
    if not (phi - LIFT_TOL <= alpha <= TWO_PI - phi + LIFT_TOL):
        raise LiftError(f"lift {th!r} inconsistent with Sp(2)_omega^- endpoint (phi={phi!r})")
    return 2 * k + 1


def index_i1(path: SampledSymplecticPath, deg_tol: float = DEG_TOL) -> int:
    return index_omega(path, 0.0, deg_tol)


def index_i2(path: SampledSymplecticPath, deg_tol: float = DEG_TOL) -> int:
    """Conley-Zehnder index of the double cover, cross-checked by i_1 + i_{-1}."""
    direct = index_omega(iterate_path(path, 2), 0.0, deg_tol)
    bott = index_omega(path, 0.0, deg_tol) + index_omega(path, math.pi, deg_tol)
    if direct != bott:
        raise CrossCheckMismatch(f"i2 from double cover = {direct}, from i1 + i_-1 = {bott}")
    return direct


@dataclass(frozen=True)
class BottResult:
    holds: bool
    lhs: int
    rhs: int
    terms: tuple  # ((phi, i_phi), ...) one entry per m-th root of z


def bott_check(path: SampledSymplecticPath, m: int, z=0.0, deg_tol: float = DEG_TOL) -> BottResult:
    """Compare i_z(gamma^m) with the sum of i_omega(gamma) over omega^m = z."""
    phi_z = _phi_of(z)
    terms = []
    cache = {}
    for l in range(m):
        w = OmegaPoint.from_angle((phi_z + TWO_PI * l) / m)
        key = round(w.phi, 14)
        if key not in cache:
            try:
                cache[key] = index_omega(path, w, deg_tol)
            except DegenerateEndpoint as exc:
                raise DegenerateEndpoint(w.phi, exc.d_value, deg_tol, f"root {l} of omega^{m} = z") from None
        terms.append((w.phi, cache[key]))
    try:
        lhs = index_omega(iterate_path(path, m), phi_z, deg_tol)
    except DegenerateEndpoint as exc:
        raise DegenerateEndpoint(phi_z, exc.d_value, deg_tol, f"iterate gamma^{m}") from None
    rhs = sum(i for _, i in terms)
    return BottResult(lhs == rhs, lhs, rhs, tuple(terms))


class Stability(enum.Enum):
    ELLIPTIC = "Elliptic"
    HYPERBOLIC_POSITIVE = "HyperbolicPositive"
    HYPERBOLIC_NEGATIVE = "HyperbolicNegative"
    DEGENERATE = "Degenerate"

    @property
    def is_hyperbolic(self) -> bool:
        return self in (Stability.HYPERBOLIC_POSITIVE, Stability.HYPERBOLIC_NEGATIVE)


def multipliers(M) -> tuple[complex, complex]:
    """Eigenvalues of an Sp(2) matrix, ordered (|lam| <= 1 or Im >= 0 first)."""
    M = np.asarray(SymplecticMatrix2.as_array(M) if isinstance(M, SymplecticMatrix2) else M, dtype=float)
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        r = math.sqrt(disc)
        big = 0.5 * (tr + math.copysign(r, tr)) if tr != 0.0 else 0.5 * r
        small = det / big if big != 0.0 else 0.0
        return complex(small), complex(big)
    im = 0.5 * math.sqrt(-disc)
    return complex(0.5 * tr, im), complex(0.5 * tr, -im)


def classify_stability(M, deg_tol: float = DEG_TOL) -> tuple[Stability, tuple[complex, complex]]:
    M = np.asarray(M.as_array() if isinstance(M, SymplecticMatrix2) else M, dtype=float)
    tr = M[0, 0] + M[1, 1]
    mult = multipliers(M)
    # well-conditioned distance to the parabolic set
    if min(abs(d_omega(M, 0.0)), abs(d_omega(M, math.pi))) <= deg_tol:
        return Stability.DEGENERATE, mult
    if tr > 2.0:
        return Stability.HYPERBOLIC_POSITIVE, mult
    if tr < -2.0:
        return Stability.HYPERBOLIC_NEGATIVE, mult
    return Stability.ELLIPTIC, mult


@dataclass(frozen=True)
class ParityCheck:
    consistent: bool
    i2: int
    verdict: Stability


def parity_stability_check(path: SampledSymplecticPath, deg_tol: float = DEG_TOL) -> ParityCheck:
    """i2 odd exactly when the monodromy is elliptic (double-cover parity law)."""
    verdict, _ = classify_stability(path.monodromy, deg_tol)
    if verdict is Stability.DEGENERATE:
        raise DegenerateEndpoint(0.0, d_omega(path.monodromy, 0.0), deg_tol, "monodromy is parabolic")
    i2 = index_i2(path, deg_tol)
    consistent = (i2 % 2 == 1) == (verdict is Stability.ELLIPTIC)
    return ParityCheck(consistent, i2, verdict)


@dataclass
class IndexReport:
    """Indices and Floquet data for one path over one period."""

    i1: Optional[int]
    i2: Optional[int]
    i_omega: dict
    multipliers: tuple
    stability: Stability
    degenerate_flags: tuple
    trace: float
    monodromy: np.ndarray
    iterates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def cplx(z):
            return [z.real, z.imag]

        return {
            "i1": self.i1,
            "i2": self.i2,
            "i_omega": [{"phi": phi, "index": i} for phi, i in sorted(self.i_omega.items())],
            "iterates": [{"m": m, "i1": i} for m, i in sorted(self.iterates.items())],
            "multipliers": [cplx(z) for z in self.multipliers],
            "stability": self.stability.value,
            "degenerate": list(self.degenerate_flags),
            "trace": self.trace,
            "monodromy": np.asarray(self.monodromy).tolist(),
        }


def index_report(
    path: SampledSymplecticPath,
    phis: Sequence[float] = (0.0, math.pi),
    deg_tol: float = DEG_TOL,
    max_iterate: int = 2,
) -> IndexReport:
    """Collect i1, i2, the requested omega-indices and i1 of iterates up to
    ``max_iterate``.  Degenerate values are recorded as ``None`` and flagged."""
    flags = []

    def safe(fn, tag):
        try:
            return fn()
        except DegenerateEndpoint:
            flags.append(tag)
            return None

    i_om = {}
    for phi in sorted(set([0.0, math.pi, *map(float, phis)])):
        i_om[phi] = safe(lambda: index_omega(path, phi, deg_tol), phi)
    i1 = i_om[0.0]
    iterates = {1: i1}
    i2 = None
    for m in range(2, max(2, max_iterate) + 1):
        val = safe(lambda: index_omega(iterate_path(path, m), 0.0, deg_tol), f"iterate {m}")
        iterates[m] = val
        if m == 2:
            i2 = val
    if i2 is not None and i1 is not None and i_om[math.pi] is not None:
        if i2 != i1 + i_om[math.pi]:
            raise CrossCheckMismatch(f"i2 = {i2} but i1 + i_-1 = {i1 + i_om[math.pi]}")
    verdict, mult = classify_stability(path.monodromy, deg_tol)
    wanted = set(map(float, phis)) | {0.0}
    return IndexReport(
        i1=i1,
        i2=i2,
        i_omega={phi: i for phi, i in i_om.items() if phi in wanted or phi == math.pi},
        multipliers=mult,
        stability=verdict,
        degenerate_flags=tuple(flags),
        trace=float(path.monodromy[0, 0] + path.monodromy[1, 1]),
        monodromy=path.monodromy.copy(),
        iterates={m: v for m, v in iterates.items() if m <= max_iterate},
    )


# ---------------------------------------------------------------------------
# Phase of a single solution


def phase_advance(
    spec: HamiltonianSpec, z0, t0: float, t1: float, step: StepControl = DEFAULT_STEP
) -> tuple[float, np.ndarray]:
    """Change of the continuous argument of z = (p, q) along the solution from z0.

    Integrates d theta / dt = z^T S z / |z|^2 together with z; the argument is
    measured with p on the horizontal axis.
    """
    z0 = np.asarray(z0, dtype=float)
    if not np.any(z0):
        raise InputError("initial direction must be nonzero")
    z0 = z0 / np.linalg.norm(z0)
    y0 = np.array([z0[0], z0[1], 0.0])
    _, ys, _ = _run_kernel(kernels.MODE_PHASE, spec, y0, t0, t1, step)
    return float(ys[-1, 2]), ys[-1, :2].copy()


def random_piecewise_spec(
    rng: np.random.Generator, max_pieces: int = 4, scale: float = 3.0, T: float = 1.0
) -> HamiltonianSpec:
    """Piecewise-constant S with 1..max_pieces random symmetric pieces on [0, T]."""
    n = int(rng.integers(1, max_pieces + 1))
    cuts = np.sort(rng.uniform(0.05, 0.95, size=n - 1)) * T
    breaks = np.concatenate([[0.0], cuts, [T]])
    if np.any(np.diff(breaks) <= 1e-6 * T):
        breaks = np.linspace(0.0, T, n + 1)
    mats = []
    for _ in range(n):
        a, b, c = rng.uniform(-scale, scale, size=3)
        mats.append([[a, b], [b, c]])
    return HamiltonianSpec.piecewise(breaks, mats, label="random piecewise")
