"""Benchmark the jitted kernels against the pure-NumPy fallbacks.

Times both implementations of each hot kernel on synthetic workloads sized
like a real run (and on the actual flagship model), then prints a table.

    python3 benchmarks/bench_kernels.py [--repeat 20]

The library itself selects the backend at import time from INFODEP_NUMBA;
this script imports both implementation sets explicitly, so it can compare
them in one process.
"""

import argparse
import time

import numpy as np

from infodep import _kernels as K
from infodep.model import builtin
from infodep.precedence import precedes
from infodep.solvability import sample_profiles, solve


def timeit(fn, repeat):
    fn()  # warmup / JIT
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench_group_constant(repeat):
    rng = np.random.default_rng(0)
    n, n_codes = 500_000, 8192
    codes = rng.integers(0, n_codes, n)
    vals = codes % 17
    out = {"numpy": timeit(lambda: K.group_constant_numpy(codes, vals, n_codes), repeat)}
    if K.NUMBA_ACTIVE:
        out["numba"] = timeit(lambda: K.group_constant_numba(codes, vals, n_codes), repeat)
    return out


def bench_solve_counts(repeat):
    rng = np.random.default_rng(1)
    n_agents, n_configs, n_omega = 6, 262_144, 4096
    atoms = rng.integers(0, 64, (n_agents, n_configs))
    uvals = rng.integers(0, 2, (n_agents, n_configs))
    tables = rng.integers(0, 2, 64 * n_agents)
    offsets = np.arange(n_agents, dtype=np.int64) * 64
    out = {"numpy": timeit(
        lambda: K.solve_counts_numpy(tables, offsets, atoms, uvals, n_omega), repeat
    )}
    if K.NUMBA_ACTIVE:
        out["numba"] = timeit(
            lambda: K.solve_counts_numba(tables, offsets, atoms, uvals, n_omega), repeat
        )
    return out


def bench_scan_profiles(repeat):
    # nature-measurable fields make every profile solvable, so the scan
    # really visits all 4096 profiles instead of exiting at the first failure
    n_agents, n_omega = 3, 64
    n_configs = n_omega * 2 ** n_agents
    idx = np.arange(n_configs, dtype=np.int64)
    atoms = np.stack([(idx % n_omega) % 4 for _ in range(n_agents)])
    uvals = np.stack([(idx // n_omega >> a) & 1 for a in range(n_agents)])
    # all 16 policies per agent over 4 atoms -> 4096 profiles
    ks = np.arange(16, dtype=np.int64)[:, None]
    powers = 2 ** np.arange(4, dtype=np.int64)[None, :]
    per_agent = ((ks // powers) % 2).ravel()
    all_tables = np.concatenate([per_agent] * n_agents)
    pol_offsets = np.arange(n_agents, dtype=np.int64) * per_agent.size
    n_pols = np.full(n_agents, 16, dtype=np.int64)
    atom_counts = np.full(n_agents, 4, dtype=np.int64)
    args = (all_tables, pol_offsets, n_pols, atom_counts, atoms, uvals, n_omega, 4096)
    assert K.scan_profiles_numpy(*args) == -1
    out = {"numpy": timeit(lambda: K.scan_profiles_numpy(*args), repeat)}
    if K.NUMBA_ACTIVE:
        out["numba"] = timeit(lambda: K.scan_profiles_numba(*args), repeat)
    return out


def bench_end_to_end(repeat):
    """Whole-pipeline sanity: precedence + 50 closed-loop solves on the flagship."""
    m = builtin("witsenhausen-xor")
    profiles = sample_profiles(m, 50, 0)

    def run():
        precedes(m)
        for p in profiles:
            solve(m, p)

    return {"selected ({})".format(K.active_backend()): timeit(run, repeat)}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    if not K.NUMBA_ACTIVE:
        print("note: numba backend unavailable or disabled; comparing against itself")

    benches = [
        ("group_constant (500k rows)", bench_group_constant),
        ("solve_counts (262k configs)", bench_solve_counts),
        ("scan_profiles (4096 profiles)", bench_scan_profiles),
        ("precedence + 50 solves (xor model)", bench_end_to_end),
    ]
    print(f"{'kernel':38s} {'backend':18s} {'ms/call':>10s}")
    for name, fn in benches:
        results = fn(args.repeat)
        for backend, sec in results.items():
            print(f"{name:38s} {backend:18s} {sec * 1e3:10.3f}")
        if len(results) == 2:
            a, b = results.get("numba"), results.get("numpy")
            if a and b:
                print(f"{'':38s} {'speedup':18s} {b / a:10.1f}x")


if __name__ == "__main__":
    main()
