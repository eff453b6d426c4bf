"""Mathieu equation q'' + (omega^2 + eps cos 2t) q = 0: index-annotated stability chart.

The Hamiltonian is H = p^2/2 + (omega^2 + eps cos 2t) q^2 / 2 with period pi, so
S(t) = diag(1, omega^2 + eps cos 2t) in (p, q) ordering.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _io
from .errors import InputError, LostBracket
from .sp2core import DEG_TOL, d_omega
from .sympath import (
    DEFAULT_STEP,
    HamiltonianSpec,
    IndexReport,
    Stability,
    StepControl,
    index_report,
    integrate_fundamental,
    iterate_path,
    phase_advance,
)

PERIOD = math.pi
CURVE_TOL = 1e-9
RES_TOL = 1e-6


@dataclass(frozen=True)
class MathieuParams:
    omega2: float
    eps: float

    def __post_init__(self):
        if not (math.isfinite(self.omega2) and math.isfinite(self.eps)):
            raise InputError("parameters must be finite")
        if self.omega2 < 0:
            raise InputError(f"omega2 must be >= 0, got {self.omega2!r}")


def mathieu_spec(params: MathieuParams) -> HamiltonianSpec:
    c = np.zeros((3, 3))
    c[0, 0] = 1.0
    c[2, 0] = params.omega2
    c[2, 1] = params.eps
    return HamiltonianSpec.trig(PERIOD, c, label=f"mathieu omega2={params.omega2:g} eps={params.eps:g}")


def monodromy(omega2: float, eps: float, step: StepControl = DEFAULT_STEP) -> np.ndarray:
    return integrate_fundamental(mathieu_spec(MathieuParams(omega2, eps)), step=step).monodromy


# ---------------------------------------------------------------------------
# Scan


@dataclass
class ScanCell:
    params: MathieuParams
    tr1: float
    tr2: float
    report: IndexReport

    @property
    def degenerate(self) -> bool:
        return bool(self.report.degenerate_flags)

    def row(self) -> list:
        r = self.report
        return [
            self.params.omega2,
            self.params.eps,
            self.tr1,
            self.tr2,
            r.i1,
            r.i2,
            r.stability.value,
            int(self.degenerate),
        ]


SCAN_HEADER = ["omega2", "eps", "tr1", "tr2", "i1", "i2", "stability", "degenerate"]


def scan_cell(params: MathieuParams, deg_tol: float = DEG_TOL, step: StepControl = DEFAULT_STEP) -> ScanCell:
    path = integrate_fundamental(mathieu_spec(params), step=step)
    rep = index_report(path, deg_tol=deg_tol)
    M2 = iterate_path(path, 2).monodromy
    return ScanCell(params, rep.trace, float(M2[0, 0] + M2[1, 1]), rep)


def _axis(rng) -> np.ndarray:
    if isinstance(rng, (list, tuple)) and len(rng) == 3 and isinstance(rng[2], (int, np.integer)):
        lo, hi, n = rng
        if n < 1:
            raise InputError("grid resolution must be >= 1")
        return np.linspace(float(lo), float(hi), int(n)) if n > 1 else np.array([float(lo)])
    arr = np.asarray(rng, dtype=float).ravel()
    if arr.size == 0:
        raise InputError("empty grid axis")
    return arr


def scan_plane(
    omega2_axis,
    eps_axis,
    deg_tol: float = DEG_TOL,
    step: StepControl = DEFAULT_STEP,
    jobs: int = 1,
) -> list[ScanCell]:
    """Cells over the grid in row-major order (eps outer, omega2 inner).

    Axes are either explicit value lists or ``(lo, hi, n)`` triples.
    """
    w = _axis(omega2_axis)
    e = _axis(eps_axis)
    params = [MathieuParams(float(x), float(y)) for y in e for x in w]

    def work(p):
        return scan_cell(p, deg_tol, step)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(work, params))
    return [work(p) for p in params]


# ---------------------------------------------------------------------------
# Transition curves


def tongue_function(n: int, eps: float, step: StepControl = DEFAULT_STEP):
    """h(omega2) negative exactly inside tongue n: D(1) for even n, -D(-1) for odd n."""
    phi = 0.0 if n % 2 == 0 else math.pi
    sign = 1.0 if n % 2 == 0 else -1.0

    def h(omega2: float) -> float:
        return sign * d_omega(monodromy(omega2, eps, step), phi)

    return h


@dataclass
class TransitionCurve:
    n: int
    branch: str
    multiplier_at: int
    points: list = field(default_factory=list)  # (eps, omega2)
    residuals: list = field(default_factory=list)  # |tr -+ 2| per point
    pinched: list = field(default_factory=list)  # eps values where the tongue was unresolved


@dataclass
class TongueSlice:
    """Both boundaries of tongue n at one eps, and the deepest interior point."""

    n: int
    eps: float
    left: float
    right: float
    inner: float
    h_inner: float
    pinched: bool


def _locate(h, lo, hi, curve_tol, n, eps) -> TongueSlice:
    h_lo, h_hi = h(lo), h(hi)
    if h_lo <= 0.0 or h_hi <= 0.0:
        raise LostBracket(f"tongue {n} at eps={eps:g}: search window [{lo:.6g}, {hi:.6g}] does not enclose it")
    res = minimize_scalar(h, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14, "maxiter": 500})
    x, hx = float(res.x), float(res.fun)
    if hx >= 0.0:
        if hx <= curve_tol:
            return TongueSlice(n, eps, x, x, x, hx, True)
        raise LostBracket(f"tongue {n} at eps={eps:g}: no interior found (min h = {hx:.3e})")
    left = brentq(h, lo, x, xtol=1e-15, rtol=1e-15, maxiter=200)
    right = brentq(h, x, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return TongueSlice(n, eps, left, right, x, hx, False)


def tongue_ladder(
    n: int, eps_max: float, step: float = 0.01, curve_tol: float = CURVE_TOL, ctrl: StepControl = DEFAULT_STEP
) -> list[TongueSlice]:
    """Continue tongue n from (n^2, 0) up to eps_max.

    Boundaries move at most |d eps| in omega2 per unit eps, so each search
    window is the previous slice widened by one step on each side.
    """
    if n < 1:
        raise InputError("tongue label n must be >= 1")
    if step <= 0:
        raise InputError("need step > 0")
    sign = 1.0 if eps_max >= 0 else -1.0
    top = abs(eps_max)
    k_max = int(math.ceil(top / step - 1e-12))
    eps_values = [min(k * step, top) for k in range(1, k_max + 1)]
    out = [TongueSlice(n, 0.0, float(n * n), float(n * n), float(n * n), 0.0, True)]
    left = right = float(n * n)
    prev = 0.0
    for e in eps_values:
        d = abs(e - prev)
        lo, hi = left - d - 1e-9, right + d + 1e-9
        if lo <= 0.0:
            lo = max(lo, 0.0)
        sl = _locate(tongue_function(n, sign * e, ctrl), lo, hi, curve_tol, n, sign * e)
        out.append(sl)
        left, right, prev = sl.left, sl.right, e
    return out


def trace_transition_curves(
    n_max: int, eps_max: float, step: float = 0.01, curve_tol: float = CURVE_TOL, jobs: int = 1
) -> list[TransitionCurve]:
    """Left and right boundary curves of tongues 1..n_max for eps in [0, eps_max]."""
    if n_max < 1:
        raise InputError("n_max must be >= 1")

    def work(n):
        return n, tongue_ladder(n, eps_max, step, curve_tol)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            ladders = list(ex.map(work, range(1, n_max + 1)))
    else:
        ladders = [work(n) for n in range(1, n_max + 1)]
    curves = []
    for n, ladder in ladders:
        mult = 1 if n % 2 == 0 else -1
        target = 2.0 * mult
        for branch in ("left", "right"):
            c = TransitionCurve(n, branch, mult)
            for sl in ladder:
                x = sl.left if branch == "left" else sl.right
                c.points.append((sl.eps, x))
                c.residuals.append(abs(float(np.trace(monodromy(x, sl.eps))) - target))
                if sl.pinched and sl.eps > 0:
                    c.pinched.append(sl.eps)
            curves.append(c)
    return curves


CURVE_HEADER = ["n", "branch", "multiplier", "eps", "omega2"]


def curve_rows(curves: Sequence[TransitionCurve]):
    for c in curves:
        for e, x in c.points:
            yield [c.n, c.branch, c.multiplier_at, float(e), float(x)]


# ---------------------------------------------------------------------------
# Crossection at fixed eps


@dataclass
class Region:
    lo: float
    hi: float
    sample: float
    i1: Optional[int]
    i2: Optional[int]
    stability: Stability
    deg_tol: float
    d_plus: float
    d_minus: float


@dataclass
class Crossection:
    eps: float
    boundaries: list  # sorted omega2 values of tongue edges
    regions: list
    first_tongue_left: float

    @property
    def i1_sequence(self) -> list:
        return [r.i1 for r in self.regions]

    @property
    def i2_sequence(self) -> list:
        return [r.i2 for r in self.regions]

    @property
    def below_first_tip(self) -> bool:
        """The left edge of tongue 1 is still at positive omega2, so the first
        stable band exists at this eps."""
        return self.first_tongue_left > 0.0

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "below_first_tip": self.below_first_tip,
            "first_tongue_left": self.first_tongue_left,
            "boundaries": list(self.boundaries),
            "i1_sequence": self.i1_sequence,
            "i2_sequence": self.i2_sequence,
            "regions": [
                {
                    "lo": r.lo,
                    "hi": r.hi,
                    "sample_omega2": r.sample,
                    "i1": r.i1,
                    "i2": r.i2,
                    "stability": r.stability.value,
                    "deg_tol": r.deg_tol,
                    "D_plus1": r.d_plus,
                    "D_minus1": r.d_minus,
                }
                for r in self.regions
            ],
        }


FINE_STEP = StepControl(local_tol=1e-14, abs_tol=1e-15)


def certified_report(params: MathieuParams, safety: float = 100.0, floor: float = 1e-300):
    """Index report with a degeneracy threshold fitted to the integration error.

    D(+-1) of one and two covers is computed at two integrator tolerances; the
    threshold is ``safety`` times the largest discrepancy.  Returns the report
    and the threshold used.
    """
    spec = mathieu_spec(params)
    coarse = integrate_fundamental(spec, step=DEFAULT_STEP)
    fine = integrate_fundamental(spec, step=FINE_STEP)
    gaps = []
    for phi in (0.0, math.pi):
        gaps.append(abs(d_omega(coarse.monodromy, phi) - d_omega(fine.monodromy, phi)))
    c2, f2 = coarse.monodromy @ coarse.monodromy, fine.monodromy @ fine.monodromy
    gaps.append(abs(d_omega(c2, 0.0) - d_omega(f2, 0.0)))
    tol = max(safety * max(gaps), floor)
    return index_report(fine, deg_tol=tol), tol, fine


def crossection(eps: float = 0.5, n_max: int = 4, step: float = 0.01) -> Crossection:
    """Regions met by the horizontal line at ``eps`` for omega2 in [0, (n_max+1)^2).

    Tongue edges are traced by continuation from eps = 0.  Stable bands are
    sampled at their midpoints, tongues at their deepest interior point.
    """
    ladders = [tongue_ladder(n, eps, step) for n in range(1, n_max + 1)]
    slices = [lad[-1] for lad in ladders]
    edges = []
    samples = []
    prev = 0.0
    for sl in slices:
        if sl.pinched:
            raise LostBracket(f"tongue {sl.n} is not resolved at eps={eps:g}")
        samples.append((prev, sl.left, 0.5 * (max(prev, 0.0) + sl.left)))
        samples.append((sl.left, sl.right, sl.inner))
        edges += [sl.left, sl.right]
        prev = sl.right
    samples.append((prev, float((n_max + 1) ** 2), 0.5 * (prev + (n_max + 1) ** 2)))
    regions = []
    for lo, hi, x in samples:
        rep, tol, _ = certified_report(MathieuParams(x, eps))
        regions.append(
            Region(
                lo,
                hi,
                x,
                rep.i1,
                rep.i2,
                rep.stability if not rep.degenerate_flags else Stability.DEGENERATE,
                tol,
                d_omega(rep.monodromy, 0.0),
                d_omega(rep.monodromy, math.pi),
            )
        )
    return Crossection(eps, edges, regions, slices[0].left)


# ---------------------------------------------------------------------------
# Phase rotation of single solutions


@dataclass
class DeltaThetaRecord:
    params: MathieuParams
    direction: tuple
    k_periods: int
    delta_theta: float
    resonant: bool
    k_res: int

    def to_dict(self) -> dict:
        return {
            "omega2": self.params.omega2,
            "eps": self.params.eps,
            "p0": self.direction[0],
            "q0": self.direction[1],
            "k_periods": self.k_periods,
            "delta_theta": self.delta_theta,
            "resonant": self.resonant,
            "k": self.k_res,
        }


def delta_theta(
    params: MathieuParams, direction=(0.0, 1.0), k_periods: int = 1, res_tol: float = RES_TOL
) -> DeltaThetaRecord:
    """Rotation of the solution starting at ``direction`` = (p(0), q(0)) over k periods."""
    d = np.asarray(direction, dtype=float)
    if d.shape != (2,) or not np.any(d):
        raise InputError("initial direction must be a nonzero pair (p0, q0)")
    if k_periods < 1:
        raise InputError("k_periods must be >= 1")
    d = d / np.linalg.norm(d)
    dth, _ = phase_advance(mathieu_spec(params), d, 0.0, k_periods * PERIOD)
    k = int(round(dth / math.pi))
    return DeltaThetaRecord(params, (float(d[0]), float(d[1])), k_periods, dth, abs(dth - k * math.pi) <= res_tol, k)


def invariant_direction(params: MathieuParams) -> np.ndarray:
    """Unit eigenvector of a hyperbolic monodromy (for the expanding multiplier)."""
    M = monodromy(params.omega2, params.eps)
    lam, vec = np.linalg.eig(M)
    if np.any(np.abs(lam.imag) > 0):
        raise InputError("monodromy is not hyperbolic")
    v = vec[:, int(np.argmax(np.abs(lam.real)))].real
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# Output


def write_scan(cells: Sequence[ScanCell], csv_path: Optional[str] = None, json_path: Optional[str] = None) -> None:
    if csv_path:
        _io.atomic_write(csv_path, _io.csv_text(SCAN_HEADER, (c.row() for c in cells)))
    if json_path:
        _io.atomic_write(json_path, _io.json_text([dict(zip(SCAN_HEADER, c.row())) for c in cells]))


def write_curves(curves: Sequence[TransitionCurve], csv_path: str) -> None:
    _io.atomic_write(csv_path, _io.csv_text(CURVE_HEADER, curve_rows(curves)))
