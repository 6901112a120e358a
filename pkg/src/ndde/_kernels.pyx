# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernel (see ``_kernels_py`` for the reference version)."""
from libc.math cimport tanh, isfinite


def euler_elementwise(double[:, ::1] states, Py_ssize_t R, Py_ssize_t L,
                      double delta, double[::1] a, double[::1] c,
                      double[::1] b, bint use_tanh):
    cdef Py_ssize_t m = states.shape[1]
    cdef Py_ssize_t step, i
    cdef double g, f, y
    cdef Py_ssize_t failed = -1
    with nogil:
        for step in range(L):
            for i in range(m):
                if use_tanh:
                    g = tanh(states[step, i])
                else:
                    g = states[step, i]
                f = a[i] * g + c[i] * states[R + step, i] + b[i]
                y = states[R + step, i] + delta * f
                if not (isfinite(f) and isfinite(y)):
                    failed = step
                    break
                states[R + step + 1, i] = y
            if failed >= 0:
                break
    return failed
