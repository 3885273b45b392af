"""Compiled vs pure-Python kernel throughput on identical random streams.

    python benchmarks/bench_kernels.py [--paths N] [--repeat R]

Both backends consume the same variates, so the benchmark also checks that
their outputs agree exactly.
"""

import argparse
import time
from pathlib import Path

from regime_ruin import kernels
from regime_ruin.config import parse_config
from regime_ruin.simulate import SimConfig, sample_cycle_pairs, sample_Y_inf_many

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def timed(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    names = kernels.available_backends()
    if "cython" not in names:
        print("compiled kernels not built; only the python backend is available")
    cases = [
        ("cycle_pair", "three_regimes.toml",
         lambda spec, cfg: sample_cycle_pairs(spec, 0, cfg)[1].tolist()),
        ("y_inf", "asymmetric_k2.toml",
         lambda spec, cfg: sample_Y_inf_many(spec, 0, cfg)[0].tolist()),
    ]
    print(f"{'kernel':<12}{'config':<22}" + "".join(f"{n + ' [s]':>14}" for n in names)
          + f"{'speedup':>10}{'identical':>11}")
    for label, cfg_name, fn in cases:
        spec = parse_config(CONFIGS / cfg_name).model
        cfg = SimConfig(n_paths=args.paths, seed=1)
        times, outs = {}, {}
        for name in names:
            prev = kernels.use_backend(name)
            try:
                times[name], outs[name] = timed(lambda: fn(spec, cfg), args.repeat)
            finally:
                kernels.use_backend(prev)
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        same = len({tuple(v) for v in outs.values()}) == 1
        print(f"{label:<12}{cfg_name:<22}" + "".join(f"{times[n]:>14.3f}" for n in names)
              + f"{speedup:>9.1f}x{str(same):>11}")


if __name__ == "__main__":
    main()
