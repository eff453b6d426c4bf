"""Inner loops: coefficient evaluation, Dormand-Prince stepping, rho-angle lift.

Everything here works on plain floats and float64 arrays so it can be compiled
by numba or run interpreted (see ``_jit``).  Coefficient functions S(t) come in
two encodings:

* ``KIND_TRIG``: ``d0`` has shape (3, 2K+1), one row per entry (s11, s12, s22)
  laid out as ``[c0, a_1..a_K, b_1..b_K]``; ``d1 = [nu]`` is the base angular
  frequency, so ``s(t) = c0 + sum a_j cos(j nu t) + b_j sin(j nu t)``.
* ``KIND_PIECEWISE``: ``d0`` has shape (n, 3) with the constant entries of each
  piece and ``d1`` holds the n+1 breakpoints ``0 = t_0 < ... < t_n = T``.

State ordering is z = (p, q) and the flow is dz/dt = J S z with
J = [[0, -1], [1, 0]].
"""

import math

import numpy as np

from ._jit import jit

KIND_TRIG = 0
KIND_PIECEWISE = 1

MODE_MATRIX = 0
MODE_PHASE = 1

STATUS_OK = 0
STATUS_BISECT = 1
STATUS_MAXSTEPS = 2
STATUS_UNDERFLOW = 3

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# Dormand-Prince 5(4)
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@jit
def rho_angle(a, b, c, d):
    """Angle in [0, 2pi) of the rotation function of [[a, b], [c, d]].

    Elliptic matrices get their Krein-positive angle.  With the eigenvector
    v = (b, lam - a) the Krein form is <Gv, v> = -2 b sin(theta); since bc < 0
    for elliptic matrices the sign test uses c - b, which never cancels.
    """
    tr = a + d
    if tr >= 2.0:
        return 0.0
    if tr <= -2.0:
        return math.pi
    th = math.acos(0.5 * tr)
    if c - b > 0.0:
        return th
    return TWO_PI - th


@jit
def wrap_angle(x):
    """Reduce to [-pi, pi)."""
    return x - TWO_PI * math.floor((x + math.pi) / TWO_PI)


@jit
def eval_s(kind, t, tsel, d0, d1):
    """Entries (s11, s12, s22) of S at time t.

    ``tsel`` picks the piece for piecewise-constant data; the integrator passes
    the midpoint of the current step so stages on a breakpoint see the correct
    one-sided value.
    """
    if kind == KIND_TRIG:
        s11 = d0[0, 0]
        s12 = d0[1, 0]
        s22 = d0[2, 0]
        nk = (d0.shape[1] - 1) // 2
        if nk > 0:
            arg = d1[0] * t
            c1 = math.cos(arg)
            sn1 = math.sin(arg)
            ck = c1
            sk = sn1
            for j in range(1, nk + 1):
                s11 += d0[0, j] * ck + d0[0, nk + j] * sk
                s12 += d0[1, j] * ck + d0[1, nk + j] * sk
                s22 += d0[2, j] * ck + d0[2, nk + j] * sk
                ck, sk = ck * c1 - sk * sn1, sk * c1 + ck * sn1
        return s11, s12, s22
    period = d1[d1.shape[0] - 1]
    tau = tsel - period * math.floor(tsel / period)
    n = d0.shape[0]
    i = 0
    while i < n - 1 and tau >= d1[i + 1]:
        i += 1
    return d0[i, 0], d0[i, 1], d0[i, 2]


@jit
def rhs(mode, kind, t, tsel, d0, d1, y, out):
    s11, s12, s22 = eval_s(kind, t, tsel, d0, d1)
    if mode == MODE_MATRIX:
        # Y = [[y0, y1], [y2, y3]], dY = J S Y
        out[0] = -s12 * y[0] - s22 * y[2]
        out[1] = -s12 * y[1] - s22 * y[3]
        out[2] = s11 * y[0] + s12 * y[2]
        out[3] = s11 * y[1] + s12 * y[3]
    else:
        p = y[0]
        q = y[1]
        out[0] = -s12 * p - s22 * q
        out[1] = s11 * p + s12 * q
        out[2] = (s11 * p * p + 2.0 * s12 * p * q + s22 * q * q) / (p * p + q * q)


@jit
def _grow(times, ys, lift, n):
    cap = 2 * times.shape[0]
    t2 = np.empty(cap)
    y2 = np.empty((cap, ys.shape[1]))
    l2 = np.empty(cap)
    t2[:n] = times[:n]
    y2[:n] = ys[:n]
    l2[:n] = lift[:n]
    return t2, y2, l2


@jit
def integrate(mode, kind, d0, d1, y0, t0, bounds, rtol, atol, hmax, h0, max_bisect, lift0, max_steps):
    """Adaptive DP5(4) from t0 through the increasing segment ends ``bounds``.

    Steps never cross a segment end.  In matrix mode the state is renormalised
    to det = 1 after every accepted step and the rho-angle lift is tracked; a
    step whose lift increment reaches pi/2 is halved, up to ``max_bisect``
    consecutive times.  Returns (status, times, states, lift).
    """
    dim = y0.shape[0]
    cap = 256
    times = np.empty(cap)
    ys = np.empty((cap, dim))
    lift = np.empty(cap)
    times[0] = t0
    ys[0] = y0
    lift[0] = lift0
    n = 1

    y = y0.copy()
    ynew = np.empty(dim)
    ytmp = np.empty(dim)
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    k5 = np.empty(dim)
    k6 = np.empty(dim)
    k7 = np.empty(dim)

    t = t0
    t_end = bounds[bounds.shape[0] - 1]
    h = h0
    if h <= 0.0:
        h = (t_end - t0) / 64.0
    if h > hmax:
        h = hmax
    ang_prev = 0.0
    if mode == MODE_MATRIX:
        ang_prev = rho_angle(y[0], y[1], y[2], y[3])
    lift_prev = lift0
    nbis = 0
    steps = 0

    for seg in range(bounds.shape[0]):
        seg_end = bounds[seg]
        while t < seg_end:
            steps += 1
            if steps > max_steps:
                return STATUS_MAXSTEPS, times[:n], ys[:n], lift[:n]
            last = False
            if t + h >= seg_end - 1e-13 * max(1.0, abs(seg_end)):
                h = seg_end - t
                last = True
            if h <= 1e-14 * max(1.0, abs(t)):
                return STATUS_UNDERFLOW, times[:n], ys[:n], lift[:n]
            tsel = t + 0.5 * h

            rhs(mode, kind, t, tsel, d0, d1, y, k1)
            for i in range(dim):
                ytmp[i] = y[i] + h * A21 * k1[i]
            rhs(mode, kind, t + C2 * h, tsel, d0, d1, ytmp, k2)
            for i in range(dim):
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            rhs(mode, kind, t + C3 * h, tsel, d0, d1, ytmp, k3)
            for i in range(dim):
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            rhs(mode, kind, t + C4 * h, tsel, d0, d1, ytmp, k4)
            for i in range(dim):
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            rhs(mode, kind, t + C5 * h, tsel, d0, d1, ytmp, k5)
            for i in range(dim):
                ytmp[i] = y[i] + h * (
                    A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
                )
            rhs(mode, kind, t + h, tsel, d0, d1, ytmp, k6)
            for i in range(dim):
                ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            rhs(mode, kind, t + h, tsel, d0, d1, ynew, k7)

            err = 0.0
            for i in range(dim):
                e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                err += (e / sc) ** 2
            err = math.sqrt(err / dim)

            if err > 1.0:
                fac = max(0.2, 0.9 * err ** -0.2)
                h = h * fac
                continue

            if mode == MODE_MATRIX:
                det = ynew[0] * ynew[3] - ynew[1] * ynew[2]
                s = 1.0 / math.sqrt(det)
                for i in range(4):
                    ynew[i] *= s
                ang = rho_angle(ynew[0], ynew[1], ynew[2], ynew[3])
                dth = wrap_angle(ang - ang_prev)
                if abs(dth) >= HALF_PI:
                    nbis += 1
                    if nbis > max_bisect:
                        return STATUS_BISECT, times[:n], ys[:n], lift[:n]
                    h = 0.5 * h
                    continue
                ang_prev = ang
                lift_prev = lift_prev + dth
            nbis = 0

            if last:
                t = seg_end
            else:
                t = t + h
            for i in range(dim):
                y[i] = ynew[i]
            if n == times.shape[0]:
                times, ys, lift = _grow(times, ys, lift, n)
            times[n] = t
            ys[n] = y
            lift[n] = lift_prev
            n += 1

            if err < 1e-10:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * fac, hmax)
    return STATUS_OK, times[:n], ys[:n], lift[:n]


@jit
def unwrap_lift(ys, lift0):
    """Continuous rho-angle lift along matrix nodes (rows a, b, c, d).

    Returns the lift and the index of the first node whose increment reaches
    pi/2, or -1 when the whole sequence satisfies the contract.
    """
    n = ys.shape[0]
    out = np.empty(n)
    out[0] = lift0
    prev = rho_angle(ys[0, 0], ys[0, 1], ys[0, 2], ys[0, 3])
    bad = -1
    for k in range(1, n):
        ang = rho_angle(ys[k, 0], ys[k, 1], ys[k, 2], ys[k, 3])
        d = wrap_angle(ang - prev)
        if bad < 0 and abs(d) >= HALF_PI:
            bad = k
        out[k] = out[k - 1] + d
        prev = ang
    return out, bad


@jit
def rho_angles(ys):
    n = ys.shape[0]
    out = np.empty(n)
    for k in range(n):
        out[k] = rho_angle(ys[k, 0], ys[k, 1], ys[k, 2], ys[k, 3])
    return out
