"""Compare the compiled value-network kernels against the numpy fallback.

Times forward and backward passes at the batch and layer shapes the
training loop actually uses, one row per agent-size configuration.

    python3 benchmarks/bench_kernels.py [--repeats 200]
"""

import argparse
import statistics
import time

import numpy as np

from bluewall.agents.mlp import HIDDEN_UNITS
from bluewall.agents.obs import AGENT_TYPES, action_dim, observation_dim
from bluewall.kernels import fallback

try:
    from bluewall.kernels import _core
except ImportError:
    _core = None

BATCH = 64

# one row per capacity, sized by the widest agent observation
SHAPES = [
    ("cap30", max(observation_dim(t, 30) for t in AGENT_TYPES),
     max(action_dim(t, 30) for t in AGENT_TYPES)),
    ("cap100", max(observation_dim(t, 100) for t in AGENT_TYPES),
     max(action_dim(t, 100) for t in AGENT_TYPES)),
]


def time_call(fn, args, repeats):
    best = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best.append(time.perf_counter() - start)
    return statistics.median(best) * 1e6


def bench(impl, in_dim, out_dim, repeats):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((BATCH, in_dim))
    w1 = rng.standard_normal((in_dim, HIDDEN_UNITS)) * 0.05
    b1 = np.zeros(HIDDEN_UNITS)
    w2 = rng.standard_normal((HIDDEN_UNITS, HIDDEN_UNITS)) * 0.05
    b2 = np.zeros(HIDDEN_UNITS)
    w3 = rng.standard_normal((HIDDEN_UNITS, out_dim)) * 0.05
    b3 = np.zeros(out_dim)
    h1, h2, out = impl.mlp_forward(x, w1, b1, w2, b2, w3, b3)
    dout = np.ones_like(out) / BATCH
    fwd = time_call(impl.mlp_forward, (x, w1, b1, w2, b2, w3, b3), repeats)
    bwd = time_call(impl.mlp_backward, (x, h1, h2, w2, w3, dout), repeats)
    return fwd, bwd


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200,
                        help="timing repeats per cell (median reported)")
    args = parser.parse_args()

    impls = [("numpy", fallback)]
    if _core is not None:
        impls.append(("compiled", _core))
    else:
        print("compiled extension not importable; timing fallback only")

    print(f"batch {BATCH}, hidden {HIDDEN_UNITS}x{HIDDEN_UNITS}, "
          f"median of {args.repeats} runs, microseconds")
    header = f"{'shape':10s} {'dims':>14s}"
    for name, _ in impls:
        header += f" {name + ' fwd':>14s} {name + ' bwd':>14s}"
    print(header)
    for label, in_dim, out_dim in SHAPES:
        row = f"{label:10s} {f'{in_dim}->{out_dim}':>14s}"
        for _, impl in impls:
            fwd, bwd = bench(impl, in_dim, out_dim, args.repeats)
            row += f" {fwd:14.1f} {bwd:14.1f}"
        print(row)
    if _core is not None:
        fwd_np, bwd_np = bench(fallback, *SHAPES[0][1:], args.repeats)
        fwd_c, bwd_c = bench(_core, *SHAPES[0][1:], args.repeats)
        print(f"\ncap30 speedup: forward x{fwd_np / fwd_c:.2f}, "
              f"backward x{bwd_np / bwd_c:.2f}")


if __name__ == "__main__":
    main()
