"""Forced pendulum x'' + beta sin x = f(t): minimizer, mountain pass and their stability."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _io
from .actionlag import (
    DEFAULT_MODES,
    CriticalPoint,
    LoopRepr,
    find_minimizer,
    find_mountain_pass,
    linearize_extremal,
    pendulum_lagrangian,
)
from .errors import ConclusionViolated, DegenerateEndpoint, InputError
from .sp2core import DEG_TOL
from .sympath import (
    DEFAULT_STEP,
    HamiltonianSpec,
    IndexReport,
    Stability,
    StepControl,
    index_report,
    integrate_fundamental,
    phase_advance,
)


@dataclass(frozen=True)
class TrigForcing:
    """f(t) = sum_j cos[j-1] cos(j nu t) + sin[j-1] sin(j nu t), nu = 2 pi / T.

    There is no constant term, so the mean over a period is zero by construction.
    """

    T: float
    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cos", tuple(float(x) for x in self.cos))
        object.__setattr__(self, "sin", tuple(float(x) for x in self.sin))
        if not all(math.isfinite(x) for x in self.cos + self.sin):
            raise InputError("forcing coefficients must be finite")

    @classmethod
    def from_samples(cls, t, values, T: float, n_modes: int = 16) -> "TrigForcing":
        """Least-squares fit of ``n_modes`` harmonics plus a mean; the mean is dropped."""
        t = np.asarray(t, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.shape != v.shape or t.size == 0:
            raise InputError("need matching, non-empty time and value columns")
        n_modes = min(n_modes, max(0, (t.size - 1) // 2))
        nu = 2.0 * math.pi / T
        j = np.arange(1, n_modes + 1)
        A = np.hstack([np.ones((t.size, 1)), np.cos(np.outer(t, j) * nu), np.sin(np.outer(t, j) * nu)])
        c, *_ = np.linalg.lstsq(A, v, rcond=None)
        return cls(T, tuple(c[1 : n_modes + 1]), tuple(c[n_modes + 1 :]))

    @property
    def is_zero(self) -> bool:
        return not any(self.cos) and not any(self.sin)

    @property
    def mean(self) -> float:
        return 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        nu = 2.0 * math.pi / self.T
        out = np.zeros_like(t)
        for j, a in enumerate(self.cos, start=1):
            if a:
                out = out + a * np.cos(j * nu * t)
        for j, b in enumerate(self.sin, start=1):
            if b:
                out = out + b * np.sin(j * nu * t)
        return out

    def to_dict(self) -> dict:
        return {"cos": list(self.cos), "sin": list(self.sin)}


@dataclass(frozen=True)
class PendulumProblem:
    beta: float
    T: float
    forcing: TrigForcing

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise InputError(f"beta must be positive, got {self.beta!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise InputError(f"T must be positive, got {self.T!r}")
        if abs(self.forcing.T - self.T) > 1e-12 * self.T:
            raise InputError("forcing period differs from T")

    @classmethod
    def demo(cls) -> "PendulumProblem":
        T = 2.0 * math.pi
        return cls(0.2, T, TrigForcing(T, (0.1,)))

    @classmethod
    def from_dict(cls, d: dict) -> "PendulumProblem":
        try:
            beta = float(d["beta"])
            T = float(d["T"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"problem needs numeric 'beta' and 'T': {exc}") from None
        f = d.get("forcing") or {}
        if not isinstance(f, dict):
            raise InputError("'forcing' must be an object with 'cos' and 'sin' lists")
        return cls(beta, T, TrigForcing(T, f.get("cos", ()), f.get("sin", ())))

    @classmethod
    def from_json(cls, path: str) -> "PendulumProblem":
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: {exc}") from None

    @classmethod
    def from_csv(cls, path: str, beta: float, T: float, n_modes: int = 16) -> "PendulumProblem":
        """Time series with columns ``t,f`` (header optional), fitted and projected to zero mean."""
        ts, fs = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    ts.append(float(row[0]))
                    fs.append(float(row[1]))
                except (ValueError, IndexError):
                    if ts:
                        raise InputError(f"{path}: malformed row {row!r}") from None
        return cls(beta, T, TrigForcing.from_samples(ts, fs, T, n_modes))

    @property
    def ortega_condition(self) -> bool:
        """0 < beta <= (pi / T)^2."""
        return self.beta <= (math.pi / self.T) ** 2

    def lagrangian(self):
        return pendulum_lagrangian(self.beta, self.T, self.forcing)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "T": self.T, "forcing": self.forcing.to_dict()}


# ---------------------------------------------------------------------------
# Rotation of variational solutions


def rotation_spec(lin: HamiltonianSpec) -> HamiltonianSpec:
    """Swap to z = (x, y) with y = -x'; the argument is then measured from the x-axis."""
    d0 = np.ascontiguousarray(lin.d0[[2, 1, 0]])
    return HamiltonianSpec(lin.T, lin.kind, d0, lin.d1, lin.smoothness, lin.label)


@dataclass
class RotationBound:
    k: int
    directions: list
    delta_theta: list
    max_delta_theta: float
    bound: float
    path_rotation: float
    asserted: bool
    holds: bool

    @property
    def margin(self) -> float:
        return self.bound - self.max_delta_theta

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "delta_theta": self.delta_theta,
            "max_delta_theta": self.max_delta_theta,
            "bound": self.bound,
            "margin": self.margin,
            "path_rotation": self.path_rotation,
            "asserted": self.asserted,
            "holds": self.holds,
        }


def rotation_bound_check(
    problem: PendulumProblem,
    loop: LoopRepr,
    k: int,
    n_dirs: int = 8,
    strict_tol: float = 1e-9,
    step: StepControl = DEFAULT_STEP,
    lin: Optional[HamiltonianSpec] = None,
) -> RotationBound:
    """Argument change of (x, -x') over k periods for solutions of x'' + beta cos(u) x = 0.

    ``delta_theta`` lists one value per equispaced initial direction;
    ``path_rotation`` is the rho-angle lift of the fundamental solution at kT.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    lin = lin or linearize_extremal(problem.lagrangian(), loop)
    rot = rotation_spec(lin)
    angles = np.arange(n_dirs) * (math.pi / n_dirs)
    dirs = [(math.cos(a), math.sin(a)) for a in angles]
    dth = [phase_advance(rot, d, 0.0, k * problem.T, step)[0] for d in dirs]
    path = integrate_fundamental(lin, n_periods=k, step=step)
    mx = max(dth)
    bound = k * math.pi
    asserted = problem.ortega_condition and not problem.forcing.is_zero
    return RotationBound(
        k, dirs, dth, mx, bound, float(path.lift[-1]), asserted, bool(mx < bound - strict_tol)
    )


# ---------------------------------------------------------------------------
# Pipeline


@dataclass
class OrbitSummary:
    critical: CriticalPoint
    spec: HamiltonianSpec
    report: IndexReport

    @property
    def multipliers(self):
        return self.report.multipliers

    def to_dict(self) -> dict:
        mult = self.report.multipliers
        if all(abs(z.imag) == 0.0 for z in mult):
            mult_out = {"real": [z.real for z in mult]}
        else:
            mult_out = {"unit": [[z.real, z.imag] for z in mult], "angle": abs(math.atan2(mult[0].imag, mult[0].real))}
        d = self.critical.to_dict()
        d.update(
            {
                "i1": self.report.i1,
                "i2": self.report.i2,
                "trace": self.report.trace,
                "monodromy": np.asarray(self.report.monodromy).tolist(),
                "multipliers": mult_out,
                "stability": self.report.stability.value,
                "degenerate": list(map(str, self.report.degenerate_flags)),
            }
        )
        return d


@dataclass
class PendulumReport:
    problem: PendulumProblem
    q1: OrbitSummary
    q2: OrbitSummary
    delta_theta_k: dict
    checks: dict = field(default_factory=dict)
    asserted: bool = False

    @property
    def verdicts(self) -> dict:
        return {"q1": self.q1.report.stability, "q2": self.q2.report.stability}

    @property
    def bound_check(self) -> dict:
        return {k: r.holds for k, r in self.delta_theta_k.items()}

    def to_dict(self) -> dict:
        return {
            "problem": self.problem.to_dict(),
            "ortega_condition": self.problem.ortega_condition,
            "q1": self.q1.to_dict(),
            "q2": self.q2.to_dict(),
            "delta_theta": {str(k): r.to_dict() for k, r in sorted(self.delta_theta_k.items())},
            "verdicts": {k: v.value for k, v in self.verdicts.items()},
            "checks": self.checks,
            "conclusions_asserted": self.asserted,
        }

    def write_json(self, path: str) -> None:
        _io.atomic_write(path, _io.json_text(self.to_dict()))


def _summary(problem, cp, deg_tol, step) -> OrbitSummary:
    lin = linearize_extremal(problem.lagrangian(), cp.loop)
    path = integrate_fundamental(lin, step=step)
    return OrbitSummary(cp, lin, index_report(path, deg_tol=deg_tol))


def _translated(cp: CriticalPoint, delta: float) -> CriticalPoint:
    return CriticalPoint(
        cp.loop.shifted(delta), cp.action, cp.grad_norm, cp.morse_index, cp.kind, cp.mp_value, cp.eigenvalues
    )


def solve_pendulum(
    problem: PendulumProblem,
    N: int = DEFAULT_MODES,
    M: Optional[int] = None,
    deg_tol: float = DEG_TOL,
    step: StepControl = DEFAULT_STEP,
    seed: Optional[LoopRepr] = None,
) -> PendulumReport:
    """Minimizer q1, mountain pass q2 between q1 and q1 + 2 pi, their indices and
    stability, and the rotation bound along q2."""
    spec = problem.lagrangian()
    seed = seed or LoopRepr.constant(math.pi, problem.T, N, M)
    q1 = find_minimizer(spec, seed)
    q2 = find_mountain_pass(spec, q1, _translated(q1, 2.0 * math.pi))
    s1 = _summary(problem, q1, deg_tol, step)
    s2 = _summary(problem, q2, deg_tol, step)
    rot = {k: rotation_bound_check(problem, q2.loop, k, step=step, lin=s2.spec) for k in (1, 2)}
    report = PendulumReport(problem, s1, s2, rot)

    nondeg = not s1.report.degenerate_flags and not s2.report.degenerate_flags
    checks = {
        "morse_equals_i1_q1": s1.report.i1 == q1.morse_index if s1.report.i1 is not None else None,
        "morse_equals_i1_q2": s2.report.i1 == q2.morse_index if s2.report.i1 is not None else None,
        "q1_hyperbolic_positive": s1.report.stability is Stability.HYPERBOLIC_POSITIVE,
        "q2_elliptic": s2.report.stability is Stability.ELLIPTIC,
        "i1_q2_is_1": s2.report.i1 == 1,
        "i2_q2_is_1": s2.report.i2 == 1,
        "i2_at_most_1": all(s.report.i2 is not None and s.report.i2 <= 1 for s in (s1, s2)),
        "rotation_bound": all(r.holds for r in rot.values()),
        "nondegenerate": nondeg,
    }
    report.checks = checks
    report.asserted = problem.ortega_condition and not problem.forcing.is_zero and nondeg
    if report.asserted:
        failed = [k for k, v in checks.items() if v is not True]
        if failed:
            raise ConclusionViolated(f"stability conclusions failed: {', '.join(failed)}", report.to_dict())
    elif nondeg and (checks["morse_equals_i1_q1"] is False or checks["morse_equals_i1_q2"] is False):
        raise ConclusionViolated("Morse index differs from i1", report.to_dict())
    return report
