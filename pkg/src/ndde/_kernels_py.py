"""Pure-Python stepping kernel.

Mirrors ``_kernels.pyx`` operation for operation, so results agree bit for
bit with the compiled build (both use the C library ``tanh`` and the same
evaluation order).
"""
import math


def euler_elementwise(states, R, L, delta, a, c, b, use_tanh):
    """Advance ``y' = a*g(y(t - R*delta)) + c*y(t) + b`` in place.

    ``states`` has ``R + L + 1`` rows; rows ``0..R`` hold the history and
    rows ``R+1..R+L`` are overwritten. Returns -1 on success, otherwise the
    step index whose field value or update was not finite.
    """
    m = states.shape[1]
    rows = states.tolist()
    a = [float(v) for v in a]
    c = [float(v) for v in c]
    b = [float(v) for v in b]
    delta = float(delta)
    isfinite = math.isfinite
    tanh = math.tanh
    failed = -1
    for step in range(L):
        cur = rows[R + step]
        lag = rows[step]
        nxt = [0.0] * m
        for i in range(m):
            g = tanh(lag[i]) if use_tanh else lag[i]
            f = a[i] * g + c[i] * cur[i] + b[i]
            y = cur[i] + delta * f
            if not (isfinite(f) and isfinite(y)):
                failed = step
                break
            nxt[i] = y
        if failed >= 0:
            break
        rows[R + step + 1] = nxt
    states[:] = rows
    return failed
