"""Benchmark the tick-integration kernels: numba JIT vs pure-Python fallback.

Run:  python benchmarks/bench_kernels.py
(Set UAVNAV_NO_NUMBA=1 before importing to force the whole package onto the
fallback path; this script always times both variants explicitly.)
"""

from __future__ import annotations

import time

import numpy as np

from uavnav import kernels


def _time(fn, *args, n_warmup: int = 2, n_runs: int = 5) -> float:
    for _ in range(n_warmup):
        fn(*args)
    times = []
    for _ in range(n_runs):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return float(np.mean(times))


def bench_rc_block(n_ticks: int = 1_000_000) -> None:
    print(f"--- rc_block: {n_ticks:,} ticks of one velocity command ---")
    out = np.empty((n_ticks, 4), dtype=np.float64)
    args = (out, 0.0, 0.0, 1.5, 0.1, 0.2, 0.5, 0.05, 0.3, 0.1)

    t_py = _time(kernels._rc_block_py, *args)
    print(f"python: {t_py * 1000:8.2f} ms")
    if kernels.HAS_NUMBA:
        t_nb = _time(kernels.rc_block, *args)
        print(f"numba:  {t_nb * 1000:8.2f} ms   speedup {t_py / t_nb:6.1f}x")
    else:
        print("numba:  unavailable (UAVNAV_NO_NUMBA set or numba not installed)")


def bench_targets_block(n_ticks: int = 200_000, n_targets: int = 8) -> None:
    print(f"--- targets_block: {n_ticks:,} ticks x {n_targets} targets ---")
    rng = np.random.default_rng(0)
    lo = np.array([-50.0, -50.0, 0.0])
    hi = np.array([50.0, 50.0, 30.0])
    pos0 = rng.uniform(-40, 40, size=(n_targets, 3))
    vel0 = rng.uniform(-0.5, 0.5, size=(n_targets, 3))
    pos_out = np.empty((n_ticks, n_targets, 3), dtype=np.float64)
    vel_out = np.empty((n_ticks, n_targets, 3), dtype=np.float64)

    def run_py():
        kernels._targets_block_py(pos_out, vel_out, pos0.copy(), vel0.copy(), lo, hi, 0.1)

    def run_nb():
        kernels.targets_block(pos_out, vel_out, pos0.copy(), vel0.copy(), lo, hi, 0.1)

    t_py = _time(run_py)
    print(f"python: {t_py * 1000:8.2f} ms")
    if kernels.HAS_NUMBA:
        t_nb = _time(run_nb)
        print(f"numba:  {t_nb * 1000:8.2f} ms   speedup {t_py / t_nb:6.1f}x")
    else:
        print("numba:  unavailable (UAVNAV_NO_NUMBA set or numba not installed)")


def bench_episode() -> None:
    """End-to-end: one long-horizon closed-loop episode on the active backend."""
    from uavnav.config import EpisodeConfig
    from uavnav.harness import run_episode_file
    from uavnav import scenes_dir

    kernels.warmup()
    path = scenes_dir() / "longh_02.json"
    t0 = time.perf_counter()
    metrics, _ = run_episode_file(EpisodeConfig(seed=0), path)
    wall = time.perf_counter() - t0
    print(f"--- episode longh_02 ({kernels.BACKEND} backend) ---")
    print(f"terminal={metrics.terminal}  sim_time={metrics.sim_time:.1f}s  wall={wall * 1000:.1f} ms")


def main() -> None:
    print(f"active backend: {kernels.BACKEND}\n")
    bench_rc_block()
    print()
    bench_targets_block()
    print()
    bench_episode()


if __name__ == "__main__":
    main()
