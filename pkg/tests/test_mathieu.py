import csv
import json
import math

import numpy as np
import pytest

from oracles import floquet_monodromy, hill_tongue_edges, mathieu_S, mathieu_trace
from sp2index.errors import InputError, LostBracket
from sp2index.mathieu import (
    MathieuParams,
    certified_report,
    crossection,
    delta_theta,
    invariant_direction,
    mathieu_spec,
    scan_cell,
    scan_plane,
    tongue_function,
    tongue_ladder,
    trace_transition_curves,
    write_curves,
    write_scan,
)
from sp2index.sympath import Stability, integrate_fundamental


def test_params_validation():
    with pytest.raises(InputError):
        MathieuParams(-1.0, 0.0)
    with pytest.raises(InputError):
        MathieuParams(float("nan"), 0.0)


def test_spec_coefficients():
    spec = mathieu_spec(MathieuParams(2.0, 0.3))
    assert spec.T == math.pi
    for t in (0.0, 0.4, 2.0):
        assert np.allclose(spec.S(t), np.diag([1.0, 2.0 + 0.3 * math.cos(2 * t)]), atol=1e-15)


def test_spec_examples():
    p = integrate_fundamental(mathieu_spec(MathieuParams(2.25, 0.0)))
    assert abs(np.trace(p.monodromy) - 2 * math.cos(1.5 * math.pi)) < 1e-10
    free = integrate_fundamental(mathieu_spec(MathieuParams(0.0, 0.0))).monodromy
    assert np.allclose(free, [[1.0, 0.0], [math.pi, 1.0]], atol=1e-12)
    assert np.trace(integrate_fundamental(mathieu_spec(MathieuParams(1.0, 0.2))).monodromy) < -2.0
    assert mathieu_trace(1.0, 0.2) < -2.0


def test_scan_cell_examples():
    c = scan_cell(MathieuParams(2.25, 0.0))
    assert (c.report.i1, c.report.i2, c.report.stability) == (1, 3, Stability.ELLIPTIC)
    c = scan_cell(MathieuParams(1.0, 0.4))
    assert c.report.i2 % 2 == 0 and c.report.stability.is_hyperbolic
    assert abs(c.tr1 - mathieu_trace(1.0, 0.4)) < 1e-9
    assert abs(c.tr2 - (c.tr1**2 - 2)) < 1e-9


def test_scan_order_and_flags():
    cells = scan_plane((0.5, 9.0, 10), (0.0, 1.0, 5))
    assert len(cells) == 50
    assert [(c.params.omega2, c.params.eps) for c in cells[:2]] == [(0.5, 0.0), (cells[1].params.omega2, 0.0)]
    assert cells[10].params.eps == 0.25
    for c in cells:
        if not c.degenerate:
            assert (c.report.i2 % 2 == 1) == (c.report.stability is Stability.ELLIPTIC)


def test_scan_parallel_is_deterministic():
    a = scan_plane([0.3, 1.1, 2.0, 4.1], [0.0, 0.5], jobs=1)
    b = scan_plane([0.3, 1.1, 2.0, 4.1], [0.0, 0.5], jobs=4)
    assert [c.row() for c in a] == [c.row() for c in b]


def test_scan_flags_degenerate_cells():
    c = scan_cell(MathieuParams(1.0, 0.0))
    assert c.degenerate and c.report.i2 is None


def test_mirror_symmetry_in_eps():
    for w2, e in [(1.3, 0.4), (4.2, 0.9), (0.3, 1.2)]:
        a = scan_cell(MathieuParams(w2, e))
        b = scan_cell(MathieuParams(w2, -e))
        assert abs(a.tr1 - b.tr1) < 1e-10
        assert (a.report.i1, a.report.i2) == (b.report.i1, b.report.i2)


# transition curves -----------------------------------------------------------


def test_tongue_function_sign():
    assert tongue_function(1, 0.3)(1.0) < 0
    assert tongue_function(1, 0.3)(2.0) > 0
    assert tongue_function(2, 0.5)(4.01) < 0
    assert tongue_function(2, 0.5)(3.0) > 0


def test_first_tongue_small_eps_asymptotics():
    curves = trace_transition_curves(1, 0.1, 0.01)
    left, right = curves
    assert left.points[0] == (0.0, 1.0) and right.points[0] == (0.0, 1.0)
    e, l = left.points[-1]
    _, r = right.points[-1]
    assert abs(e - 0.1) < 1e-15
    assert abs(l - 0.95) < 0.01 and abs(r - 1.05) < 0.01
    hl, hr = hill_tongue_edges(1, 0.1)
    assert abs(l - hl) < 1e-9 and abs(r - hr) < 1e-9
    assert max(left.residuals + right.residuals) <= 1e-9
    assert left.multiplier_at == -1


def test_curves_approach_emanation_points():
    ladder = tongue_ladder(1, 0.01, 0.001)
    assert abs(ladder[1].left - 1.0) < 0.002 and abs(ladder[1].right - 1.0) < 0.002


@pytest.mark.parametrize("n,eps", [(2, 0.5), (3, 0.5), (2, 1.0)])
def test_tongue_edges_match_hill_method(n, eps):
    sl = tongue_ladder(n, eps, 0.05)[-1]
    hl, hr = hill_tongue_edges(n, eps)
    assert abs(sl.left - hl) < 1e-8 and abs(sl.right - hr) < 1e-8
    target = 2.0 if n % 2 == 0 else -2.0
    assert abs(mathieu_trace(sl.left, eps) - target) < 1e-8


def test_pinched_tongue_recorded():
    # tongue 4 at eps = 0.05 is narrower than the root finder can resolve
    sl = tongue_ladder(4, 0.05, 0.05)[-1]
    assert sl.pinched and abs(tongue_function(4, 0.05)(sl.left)) <= 1e-9


def test_lost_bracket_when_curve_leaves_window():
    # the left edge of tongue 1 crosses omega2 = 0 near eps = 1.8
    with pytest.raises(LostBracket):
        tongue_ladder(1, 2.5, 0.05)


def test_i1_changes_only_at_plus_one_curves():
    eps = 0.5
    ladders = {n: tongue_ladder(n, eps, 0.05)[-1] for n in (1, 2, 3)}
    for n, sl in ladders.items():
        below = scan_cell(MathieuParams(sl.left - 0.02, eps)).report
        above = scan_cell(MathieuParams(sl.right + 0.02, eps)).report
        if n % 2 == 0:
            assert above.i1 == below.i1 + 2
            assert above.i_omega[math.pi] == below.i_omega[math.pi]
        else:
            assert above.i1 == below.i1
            assert above.i_omega[math.pi] == below.i_omega[math.pi] + 2


# crossection -----------------------------------------------------------------


def test_crossection_sequences():
    cs = crossection(0.5)
    assert cs.below_first_tip
    assert cs.i1_sequence == [1, 1, 1, 2, 3, 3, 3, 4, 5]
    assert cs.i2_sequence == list(range(1, 10))
    assert all(b - a == 1 for a, b in zip(cs.i2_sequence, cs.i2_sequence[1:]))
    for r in cs.regions:
        assert (r.i2 % 2 == 1) == (r.stability is Stability.ELLIPTIC)
    # the fourth tongue is only ~3e-6 wide; its sample is certified, not rounded
    r8 = cs.regions[7]
    assert r8.hi - r8.lo < 1e-5 and abs(r8.d_plus) > r8.deg_tol
    assert cs.to_dict()["i2_sequence"] == list(range(1, 10))


def test_certified_report_threshold_small_inside_thin_tongue():
    sl = tongue_ladder(3, 0.5, 0.05)[-1]
    rep, tol, _ = certified_report(MathieuParams(sl.inner, 0.5))
    assert tol < 1e-12 and rep.i2 == 6


# delta theta -----------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_delta_theta_integer_frequency_is_resonant(n):
    rec = delta_theta(MathieuParams(n * n, 0.0), (-n * math.sin(0.0), math.cos(0.0)))
    assert abs(rec.delta_theta - n * math.pi) < 1e-9 and rec.resonant and rec.k_res == n


def test_delta_theta_noninteger_rotation_solution():
    # along the axis directions the argument advances exactly like R(wt) after whole quarter turns
    w = 1.5
    rec = delta_theta(MathieuParams(w * w, 0.0), (0.0, 1.0), k_periods=4)
    assert abs(rec.delta_theta - 4 * w * math.pi) < 1e-8
    p = integrate_fundamental(mathieu_spec(MathieuParams(w * w, 0.0)))
    assert abs(p.lift[-1] - w * math.pi) < 1e-9


def test_delta_theta_resonant_only_on_invariant_line():
    params = MathieuParams(1.0, 0.4)
    v = invariant_direction(params)
    on = delta_theta(params, (v[0], v[1]))
    assert on.resonant
    M = floquet_monodromy(mathieu_S(1.0, 0.4), math.pi)
    w = M @ v
    assert abs(v[0] * w[1] - v[1] * w[0]) < 1e-9  # oracle: v is an eigenvector
    off = delta_theta(params, (v[0] + 0.3, v[1] - 0.2))
    assert not off.resonant


def test_delta_theta_validation():
    with pytest.raises(InputError):
        delta_theta(MathieuParams(1.0, 0.0), (0.0, 0.0))
    with pytest.raises(InputError):
        invariant_direction(MathieuParams(2.25, 0.0))


# output ----------------------------------------------------------------------


def test_writers_round_trip(tmp_path):
    cells = scan_plane([0.37, 2.9], [0.1])
    write_scan(cells, tmp_path / "s.csv", tmp_path / "s.json")
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert list(rows[0]) == ["omega2", "eps", "tr1", "tr2", "i1", "i2", "stability", "degenerate"]
    assert float(rows[0]["tr1"]) == cells[0].tr1
    data = json.load(open(tmp_path / "s.json"))
    assert data[1]["tr2"] == cells[1].tr2
    curves = trace_transition_curves(1, 0.02, 0.01)
    write_curves(curves, tmp_path / "c.csv")
    rows = list(csv.reader(open(tmp_path / "c.csv")))
    assert rows[0] == ["n", "branch", "multiplier", "eps", "omega2"]
    assert float(rows[-1][4]) == curves[-1].points[-1][1]
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp")]
