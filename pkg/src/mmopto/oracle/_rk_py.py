"""Pure-Python Dormand-Prince 5(4) integrator.

Same algorithm, step control and return contract as the compiled
``_rk.dopri5``; used when the extension is not built.  Roughly two orders
of magnitude slower.
"""

import numpy as np

A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def dopri5(L, b, g, half_gamma, omega_m, y0, dt, n_samples, stride, rtol, atol, blowup):
    n = b.shape[0]
    L = np.asarray(L)
    b = np.asarray(b)
    g = np.asarray(g)
    mech_coeff = half_gamma + 1j * omega_m

    def rhs(y):
        a, c = y[:n], y[n]
        z = 2.0 * c.real
        dy = np.empty(n + 1, dtype=complex)
        dy[:n] = b - 1j * g * z * a - L @ a
        dy[n] = -mech_coeff * c - 1j * np.dot(g, a.real**2 + a.imag**2)
        return dy

    out = np.empty((n_samples, n + 1), dtype=complex)
    y = np.array(y0, dtype=complex)
    out[0] = y
    k1 = rhs(y)
    h = dt
    n_steps = n_rej = 0
    n_done = n_samples
    bad = False
    for s in range(1, n_samples):
        for _ in range(stride):
            left = dt
            h = min(h, dt)
            while left > 0.0:
                last = h >= left
                if last:
                    h = left
                k = [k1]
                for stage in range(1, 6):
                    yt = y + h * sum(a * kk for a, kk in zip(A[stage], k))
                    k.append(rhs(yt))
                yn = y + h * sum(bb * kk for bb, kk in zip(B, k))
                k.append(rhs(yn))
                ei = h * sum(ee * kk for ee, kk in zip(E, k))
                sc = atol + rtol * np.maximum(np.abs(y), np.abs(yn))
                err = float(np.max(np.abs(ei) / sc))
                if not np.isfinite(err):
                    bad = True
                    break
                if err <= 1.0:
                    n_steps += 1
                    y, k1 = yn, k[6]
                    left = 0.0 if last else left - h
                    fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err**-0.2)
                    h = min(h * fac, dt)
                else:
                    n_rej += 1
                    h *= max(0.2, 0.9 * err**-0.2)
                    if h < dt * 1e-10:
                        bad = True
                        break
            if bad or not np.all(np.isfinite(y)) or abs(y[n]) > blowup:
                bad = True
                break
        if bad:
            n_done = s
            break
        out[s] = y
    return out, n_done, n_steps, n_rej
