import json
import math

import numpy as np
import pytest

from oracles import pendulum_periodic_orbit
from sp2index.actionlag import LoopRepr
from sp2index.errors import InputError
from sp2index.pendulum import PendulumProblem, TrigForcing, rotation_bound_check, solve_pendulum
from sp2index.sympath import Stability, phase_advance

T = 2 * math.pi


@pytest.fixture(scope="module")
def demo():
    return solve_pendulum(PendulumProblem.demo())


@pytest.fixture(scope="module")
def free():
    return solve_pendulum(PendulumProblem(0.2, T, TrigForcing(T)))


def test_problem_validation():
    with pytest.raises(InputError):
        PendulumProblem(0.0, T, TrigForcing(T))
    with pytest.raises(InputError):
        PendulumProblem(0.2, -1.0, TrigForcing(T))
    with pytest.raises(InputError):
        PendulumProblem(0.2, T, TrigForcing(1.0))
    assert PendulumProblem.demo().ortega_condition
    assert not PendulumProblem(0.3, T, TrigForcing(T)).ortega_condition


def test_forcing_zero_mean_and_values():
    f = TrigForcing(T, (0.1, 0.0, 0.2), (0.05,))
    t = np.arange(64) * T / 64
    assert f.mean == 0.0
    assert abs(np.mean(f(t))) < 1e-16
    assert np.allclose(f(t), 0.1 * np.cos(t) + 0.2 * np.cos(3 * t) + 0.05 * np.sin(t))


def test_forcing_from_samples_projects_mean(tmp_path):
    t = np.linspace(0, T, 50, endpoint=False)
    v = 0.7 + 0.1 * np.cos(t) - 0.3 * np.sin(2 * t)
    f = TrigForcing.from_samples(t, v, T, 4)
    assert np.allclose(f.cos, [0.1, 0, 0, 0], atol=1e-12) and np.allclose(f.sin, [0, -0.3, 0, 0], atol=1e-12)
    path = tmp_path / "f.csv"
    path.write_text("t,f\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, v)))
    prob = PendulumProblem.from_csv(str(path), 0.2, T, 4)
    assert np.allclose(prob.forcing.cos, f.cos)


def test_problem_json(tmp_path):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"beta": 0.2, "T": T, "forcing": {"cos": [0.1], "sin": []}}))
    prob = PendulumProblem.from_json(str(p))
    assert prob == PendulumProblem.demo()
    p.write_text("{")
    with pytest.raises(InputError):
        PendulumProblem.from_json(str(p))
    with pytest.raises(InputError):
        PendulumProblem.from_dict({"T": 1.0})


def test_demo_conclusions(demo):
    assert demo.asserted and all(v is True for v in demo.checks.values())
    q1, q2 = demo.q1, demo.q2
    assert q1.report.stability is Stability.HYPERBOLIC_POSITIVE
    assert (q1.report.i1, q1.report.i2) == (0, 0)
    assert q2.report.stability is Stability.ELLIPTIC
    assert (q2.report.i1, q2.report.i2) == (1, 1)
    assert q1.critical.morse_index == 0 and q2.critical.morse_index == 1
    lam = q1.multipliers
    assert all(z.imag == 0 and z.real > 0 and abs(z.real - 1) > 1e-3 for z in lam)
    assert all(abs(abs(z) - 1) < 1e-9 for z in q2.multipliers)


def test_demo_matches_shooting_oracle(demo):
    for summary, seed in ((demo.q1, math.pi), (demo.q2, 2 * math.pi)):
        x0, v0, M = pendulum_periodic_orbit(0.2, T, 0.1, seed)
        assert abs(summary.critical.loop(0.0) - x0) < 1e-8
        assert abs(summary.report.trace - np.trace(M)) < 1e-6


def test_free_pendulum_equilibria(free):
    assert not free.asserted  # f = 0 is outside the asserted regime
    assert abs(free.q1.critical.loop.coeffs[0] - math.pi) < 1e-10
    assert abs(free.q2.critical.loop.coeffs[0] - 2 * math.pi) < 1e-10
    assert free.q2.critical.morse_index == 1
    w = math.sqrt(0.2) * T
    z = free.q2.multipliers[0]
    assert abs(abs(math.atan2(z.imag, z.real)) - w) < 1e-9
    assert abs(free.q1.report.trace - 2 * math.cosh(w)) < 1e-8


def test_gating_above_bound():
    rep = solve_pendulum(PendulumProblem(0.3, T, TrigForcing(T, (0.1,))))
    assert not rep.asserted
    assert rep.q1.critical.morse_index == rep.q1.report.i1


def test_harmonic_rotation_rate(free):
    for k in (1, 2):
        r = free.delta_theta_k[k]
        assert abs(r.path_rotation - k * T * math.sqrt(0.2)) < 1e-8
        assert r.holds and not r.asserted


def test_rotation_bound_demo(demo):
    for k in (1, 2):
        r = demo.delta_theta_k[k]
        assert r.asserted and r.holds and len(r.delta_theta) == 8
        assert r.margin > 0


def test_rotation_doubling_consistency(demo):
    prob = PendulumProblem.demo()
    from sp2index.pendulum import rotation_spec

    rot = rotation_spec(demo.q2.spec)
    d = (0.6, 0.8)
    full, _ = phase_advance(rot, d, 0.0, 2 * T)
    a, z = phase_advance(rot, d, 0.0, T)
    b, _ = phase_advance(rot, z, T, 2 * T)
    assert abs(full - (a + b)) < 1e-8
    r = rotation_bound_check(prob, demo.q2.critical.loop, 2)
    assert abs(r.max_delta_theta - demo.delta_theta_k[2].max_delta_theta) < 1e-12


def test_translated_seed_reproduces_report(demo):
    prob = PendulumProblem.demo()
    rep = solve_pendulum(prob, seed=LoopRepr.constant(3 * math.pi, T))
    assert rep.q1.report.i1 == demo.q1.report.i1 and rep.q2.report.i2 == demo.q2.report.i2
    assert abs(rep.q1.critical.action - demo.q1.critical.action) < 1e-10
    assert abs(rep.q2.report.trace - demo.q2.report.trace) < 1e-9


def test_report_json(tmp_path, demo):
    path = tmp_path / "r.json"
    demo.write_json(str(path))
    d = json.loads(path.read_text())
    assert d["verdicts"] == {"q1": "HyperbolicPositive", "q2": "Elliptic"}
    assert "real" in d["q1"]["multipliers"] and "unit" in d["q2"]["multipliers"]
    assert d["delta_theta"]["2"]["holds"] is True
    assert len(d["q2"]["coeffs"]) == 129
