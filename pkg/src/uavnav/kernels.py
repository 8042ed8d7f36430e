"""Tick-integration hot loops.

The episode executor spends essentially all of its simulated time inside two
inner loops: propagating the UAV state under a constant rc command for N ticks,
and advancing scene targets (with bound reflection) for N ticks.  Both are
written once as plain Python/NumPy functions and, when numba is available,
compiled with ``@njit``.  Set ``UAVNAV_NO_NUMBA=1`` to force the pure-Python
fallback.

Each backend is fully deterministic, but the two may disagree by ~1 ulp per
tick (LLVM contracts a*b+c into fused multiply-adds), so trajectory records
carry the backend name and replays require the same backend.

Run ``python benchmarks/bench_kernels.py`` to compare the two paths.
"""

import math
import os

import numpy as np

DISABLE_ENV = "UAVNAV_NO_NUMBA"


def _rc_block_py(out, x, y, z, yaw, vx_b, vy_b, vz_b, yaw_rate, dt):
    """Integrate n ticks of a constant body-frame velocity command.

    ``out`` is an (n, 4) float64 array receiving the post-tick state rows
    (x, y, z, yaw).  Body frame is right/forward/up; yaw is measured clockwise
    from world +y viewed from above, so world-from-body is Rz(-yaw).  Each tick
    translates with the yaw held at its start-of-tick value, then integrates
    the yaw rate.
    """
    n = out.shape[0]
    for i in range(n):
        c = math.cos(yaw)
        s = math.sin(yaw)
        x += (c * vx_b + s * vy_b) * dt
        y += (-s * vx_b + c * vy_b) * dt
        z += vz_b * dt
        yaw += yaw_rate * dt
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = z
        out[i, 3] = yaw
    return out


def _targets_block_py(pos_out, vel_out, pos, vel, lo, hi, dt):
    """Advance k targets for n ticks with clamp-and-reflect at world bounds.

    ``pos``/``vel`` are (k, 3) working arrays mutated in place to the final
    tick; per-tick snapshots are written to ``pos_out``/``vel_out`` (n, k, 3).
    A component that would leave [lo, hi] is clamped onto the bound and its
    velocity component negated.
    """
    n = pos_out.shape[0]
    k = pos.shape[0]
    for i in range(n):
        for j in range(k):
            for a in range(3):
                p = pos[j, a] + vel[j, a] * dt
                v = vel[j, a]
                if p < lo[a]:
                    p = lo[a]
                    v = -v
                elif p > hi[a]:
                    p = hi[a]
                    v = -v
                pos[j, a] = p
                vel[j, a] = v
                pos_out[i, j, a] = p
                vel_out[i, j, a] = v
    return pos_out


def _want_numba() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip().lower() not in ("1", "true", "yes")


HAS_NUMBA = False
if _want_numba():
    try:
        from numba import njit

        rc_block = njit(cache=True)(_rc_block_py)
        targets_block = njit(cache=True)(_targets_block_py)
        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - exercised via env flag instead
        pass

if not HAS_NUMBA:
    rc_block = _rc_block_py
    targets_block = _targets_block_py

BACKEND = "numba" if HAS_NUMBA else "python"

_warmed = False


def warmup() -> None:
    """Trigger JIT compilation once so episode timings exclude compile cost."""
    global _warmed
    if _warmed:
        return
    out = np.empty((2, 4), dtype=np.float64)
    rc_block(out, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.0, 0.01, 0.1)
    pos = np.zeros((1, 3), dtype=np.float64)
    vel = np.full((1, 3), 0.1, dtype=np.float64)
    pos_out = np.empty((2, 1, 3), dtype=np.float64)
    vel_out = np.empty((2, 1, 3), dtype=np.float64)
    targets_block(pos_out, vel_out, pos, vel, np.full(3, -1.0), np.full(3, 1.0), 0.1)
    _warmed = True
