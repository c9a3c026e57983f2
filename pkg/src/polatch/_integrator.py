"""Adaptive Dormand-Prince 5(4) stepper for the two-mode EOM, jitted.

The rotating-frame equations are non-stiff but carry a fast eigenvalue
(the far-detuned normal mode), so an explicit Runge-Kutta pair with
error-controlled steps is the right tool; the step size is bounded by
that mode's stability limit, which makes per-step overhead the dominant
cost.  Hence a compiled kernel rather than a generic library driver:
sweeping a 100x100 protocol map means ~1e8 stage evaluations.

State vector convention: (alpha, gamma) as two complex scalars,
reported as float samples [Re a, Im a, Re c, Im c].  The drive envelope
is piecewise linear between knots; every knot is a hard step boundary
so the integrand stays smooth inside each step.  Requested sample times
are hit exactly (no dense-output interpolation error).
"""

from __future__ import annotations

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NOT_FINITE = 2
STATUS_STEP_BUDGET = 3

_MAX_STEPS = 200_000_000


@njit(cache=True, inline="always")
def _envelope(t, tk, ak):
    if t <= tk[0]:
        return ak[0]
    for i in range(tk.shape[0] - 1):
        if t <= tk[i + 1]:
            dt = tk[i + 1] - tk[i]
            if dt <= 0.0:
                return ak[i + 1]
            w = (t - tk[i]) / dt
            return ak[i] + w * (ak[i + 1] - ak[i])
    return ak[ak.shape[0] - 1]


@njit(cache=True, inline="always")
def _rhs(t, a, c, ka2, da, ua, g, kc2, dc, tk, ak):
    om = _envelope(t, tk, ak)
    n_a = a.real * a.real + a.imag * a.imag
    fa = -(ka2 - 1j * da) * a + 1j * ua * n_a * a - 1j * g * c
    fc = -(kc2 - 1j * dc) * c - 1j * om - 1j * g * a
    return fa, fc


@njit(cache=True)
def integrate_dp5(a0, c0, t0, tk, ak, ka2, da, ua, g, kc2, dc,
                  t_out, rtol, atol):
    """Integrate from t0 through every time in t_out (sorted ascending).

    Returns (samples, status, t_fail) where samples[k] holds the state
    at t_out[k] as 4 floats.  Envelope knots tk are respected as step
    boundaries.
    """
    n_out = t_out.shape[0]
    out = np.empty((n_out, 4))
    a = a0
    c = c0
    t = t0

    # initial step guess from the fastest linear scale
    fast = abs(da) + abs(dc) + g + ka2 + kc2 + 1e3
    h = 0.05 / fast

    i_out = 0
    i_knot = 0
    n_knots = tk.shape[0]
    have_k1 = False
    k1a = 0.0 + 0.0j
    k1c = 0.0 + 0.0j
    steps = 0

    while i_out < n_out:
        t_target = t_out[i_out]
        if t_target <= t + 1e-16 * max(1.0, abs(t)):
            out[i_out, 0] = a.real
            out[i_out, 1] = a.imag
            out[i_out, 2] = c.real
            out[i_out, 3] = c.imag
            i_out += 1
            continue
        # next hard boundary: envelope knot or output time
        while i_knot < n_knots and tk[i_knot] <= t + 1e-16 * max(1.0, abs(t)):
            i_knot += 1
            have_k1 = False  # envelope slope may jump here
        t_stop = t_target
        if i_knot < n_knots and tk[i_knot] < t_stop:
            t_stop = tk[i_knot]

        if h > t_stop - t:
            h = t_stop - t

        if not have_k1:
            k1a, k1c = _rhs(t, a, c, ka2, da, ua, g, kc2, dc, tk, ak)
            have_k1 = True

        # Dormand-Prince stages
        ya = a + h * (0.2 * k1a)
        yc = c + h * (0.2 * k1c)
        k2a, k2c = _rhs(t + 0.2 * h, ya, yc, ka2, da, ua, g, kc2, dc, tk, ak)

        ya = a + h * (0.075 * k1a + 0.225 * k2a)
        yc = c + h * (0.075 * k1c + 0.225 * k2c)
        k3a, k3c = _rhs(t + 0.3 * h, ya, yc, ka2, da, ua, g, kc2, dc, tk, ak)

        ya = a + h * ((44.0 / 45.0) * k1a - (56.0 / 15.0) * k2a
                      + (32.0 / 9.0) * k3a)
        yc = c + h * ((44.0 / 45.0) * k1c - (56.0 / 15.0) * k2c
                      + (32.0 / 9.0) * k3c)
        k4a, k4c = _rhs(t + 0.8 * h, ya, yc, ka2, da, ua, g, kc2, dc, tk, ak)

        ya = a + h * ((19372.0 / 6561.0) * k1a - (25360.0 / 2187.0) * k2a
                      + (64448.0 / 6561.0) * k3a - (212.0 / 729.0) * k4a)
        yc = c + h * ((19372.0 / 6561.0) * k1c - (25360.0 / 2187.0) * k2c
                      + (64448.0 / 6561.0) * k3c - (212.0 / 729.0) * k4c)
        k5a, k5c = _rhs(t + (8.0 / 9.0) * h, ya, yc, ka2, da, ua, g, kc2, dc,
                        tk, ak)

        ya = a + h * ((9017.0 / 3168.0) * k1a - (355.0 / 33.0) * k2a
                      + (46732.0 / 5247.0) * k3a + (49.0 / 176.0) * k4a
                      - (5103.0 / 18656.0) * k5a)
        yc = c + h * ((9017.0 / 3168.0) * k1c - (355.0 / 33.0) * k2c
                      + (46732.0 / 5247.0) * k3c + (49.0 / 176.0) * k4c
                      - (5103.0 / 18656.0) * k5c)
        k6a, k6c = _rhs(t + h, ya, yc, ka2, da, ua, g, kc2, dc, tk, ak)

        # 5th-order solution
        y1a = a + h * ((35.0 / 384.0) * k1a + (500.0 / 1113.0) * k3a
                       + (125.0 / 192.0) * k4a - (2187.0 / 6784.0) * k5a
                       + (11.0 / 84.0) * k6a)
        y1c = c + h * ((35.0 / 384.0) * k1c + (500.0 / 1113.0) * k3c
                       + (125.0 / 192.0) * k4c - (2187.0 / 6784.0) * k5c
                       + (11.0 / 84.0) * k6c)
        k7a, k7c = _rhs(t + h, y1a, y1c, ka2, da, ua, g, kc2, dc, tk, ak)

        # embedded 4th-order error estimate
        ea = h * ((71.0 / 57600.0) * k1a - (71.0 / 16695.0) * k3a
                  + (71.0 / 1920.0) * k4a - (17253.0 / 339200.0) * k5a
                  + (22.0 / 525.0) * k6a - (1.0 / 40.0) * k7a)
        ec = h * ((71.0 / 57600.0) * k1c - (71.0 / 16695.0) * k3c
                  + (71.0 / 1920.0) * k4c - (17253.0 / 339200.0) * k5c
                  + (22.0 / 525.0) * k6c - (1.0 / 40.0) * k7c)

        if not (np.isfinite(y1a.real) and np.isfinite(y1a.imag)
                and np.isfinite(y1c.real) and np.isfinite(y1c.imag)):
            return out, STATUS_NOT_FINITE, t

        # RMS error over the 4 real components
        err = 0.0
        comp_e = (ea.real, ea.imag, ec.real, ec.imag)
        comp_0 = (a.real, a.imag, c.real, c.imag)
        comp_1 = (y1a.real, y1a.imag, y1c.real, y1c.imag)
        for j in range(4):
            big = abs(comp_0[j])
            if abs(comp_1[j]) > big:
                big = abs(comp_1[j])
            sc = atol + rtol * big
            q = comp_e[j] / sc
            err += q * q
        err = np.sqrt(err / 4.0)

        if err <= 1.0:
            t_new = t + h
            a = y1a
            c = y1c
            t = t_new
            k1a, k1c = k7a, k7c  # FSAL
            have_k1 = True
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * err ** -0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h *= fac
            if t >= t_target - 1e-16 * max(1.0, abs(t_target)):
                out[i_out, 0] = a.real
                out[i_out, 1] = a.imag
                out[i_out, 2] = c.real
                out[i_out, 3] = c.imag
                i_out += 1
        else:
            fac = 0.9 * err ** -0.2
            if fac < 0.1:
                fac = 0.1
            h *= fac

        if h < 1e-18 * max(1.0, abs(t)):
            return out, STATUS_STEP_UNDERFLOW, t
        steps += 1
        if steps > _MAX_STEPS:
            return out, STATUS_STEP_BUDGET, t

    return out, STATUS_OK, t
