import os
import subprocess
import sys

import numpy as np
import pytest

from ndde import kernels
from ndde.dde_core import euler_solve, linear_delay_field, make_grid, tanh_delay_field

needs_compiled = pytest.mark.skipif(kernels.compiled_euler_elementwise is None,
                                    reason="compiled extension not built")


def _backend(env_extra):
    env = dict(os.environ, **env_extra)
    res = subprocess.run([sys.executable, "-c", "from ndde import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    return res.stdout.strip()


def test_pure_python_switch():
    assert _backend({"NDDE_PURE_PYTHON": "1"}) == "python"


@needs_compiled
def test_compiled_is_default():
    env = {k: v for k, v in os.environ.items() if k != "NDDE_PURE_PYTHON"}
    res = subprocess.run([sys.executable, "-c", "from ndde import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert res.stdout.strip() == "compiled"


@needs_compiled
@pytest.mark.parametrize("use_tanh", [False, True])
@pytest.mark.parametrize("seed", range(5))
def test_backends_bit_identical(seed, use_tanh):
    rng = np.random.default_rng(seed)
    width = int(rng.integers(1, 5))
    R, L = int(rng.integers(0, 30)), int(rng.integers(1, 200))
    a, c, b = (rng.normal(size=width) for _ in range(3))
    states = np.zeros((R + L + 1, width))
    states[: R + 1] = rng.normal(size=width)
    s1, s2 = states.copy(), states.copy()
    kernels.python_euler_elementwise(s1, R, L, 0.01, a, c, b, use_tanh)
    kernels.compiled_euler_elementwise(s2, R, L, 0.01, a, c, b, use_tanh)
    assert np.array_equal(s1, s2)


@pytest.mark.parametrize("fld", [linear_delay_field(-1.0, 0.25), tanh_delay_field(1.3, 0.5, c=-0.2, b=0.1)],
                         ids=["linear", "tanh"])
def test_kernel_matches_generic_solver(fld):
    grid = make_grid(1.0, 200, fld.tau)
    fast = euler_solve(fld, 0.7, grid)
    slow = euler_solve(fld, 0.7, grid, use_kernel=False)
    assert np.array_equal(fast.states, slow.states)
