"""Time stiffness assembly and basis tabulation on the numpy and numba backends.

    python3 benchmarks/bench_assembly.py --geometry disk --levels 3 5 --repeat 5

Each configuration is warmed up once (so JIT compilation is excluded), then
timed ``--repeat`` times; the best time is reported. The assembled matrices of
every backend are compared against the numpy result.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from sbiga import _accel, assembly, domains
from sbiga.geometry import refine_uniform
from sbiga.splines import basis_table


def _best(func, repeat):
    func()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(tag: str, level: int, repeat: int, threads: int) -> list[tuple]:
    g = refine_uniform(domains.builtin(tag), level)
    dm = assembly.build_dofmap(g)
    configs = [("numpy", 1), ("numba", 1)]
    if threads > 1:
        configs.append(("numba", threads))
    t = np.linspace(0.0, 1.0, 200_000)
    rows, ref = [], None
    for name, n in configs:
        _accel.set_backend(name)
        _accel.set_threads(n)
        try:
            ta, system = _best(lambda: assembly.assemble_standard(g, dm), repeat)
            tb, _ = _best(lambda: basis_table(g.circ_kv, t, 1), repeat)
        finally:
            _accel.set_threads(1)
        if ref is None:
            ref = system.full_matrix
        gap = abs(system.full_matrix - ref).max() / abs(ref).max()
        rows.append((tag, level, dm.n_unknowns, f"{name}x{n}", ta, tb, gap))
    return rows


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--geometry", default="disk", choices=domains.BUILTIN_TAGS)
    ap.add_argument("--levels", type=int, nargs="+", default=[3, 4, 5])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args(argv)

    previous = _accel.backend()
    print(f"{'geometry':<18}{'level':>6}{'dofs':>8}  {'backend':<10}{'assemble s':>12}{'basis s':>10}{'rel gap':>10}")
    try:
        for level in args.levels:
            for tag, lev, dofs, name, ta, tb, gap in run(args.geometry, level, args.repeat, args.threads):
                print(f"{tag:<18}{lev:>6}{dofs:>8}  {name:<10}{ta:>12.4f}{tb:>10.4f}{gap:>10.1e}")
    finally:
        _accel.set_backend(previous)


if __name__ == "__main__":
    main()
