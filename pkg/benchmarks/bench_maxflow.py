"""Time the compiled and pure-Python max-flow kernels on the same networks.

    python3 benchmarks/bench_maxflow.py --sizes 200 1000 4000 --repeat 3
"""
import argparse
import random
import time

from pipingbot.damage import BACKENDS, Algorithm, build_flow_network, max_flow_result, parse_topology


def city(n_consumers: int, seed: int = 0) -> str:
    """A tree of districts with random cross-links, every other home irrigated."""
    rng = random.Random(seed)
    districts = max(1, n_consumers // 50)
    lines = ["[reservoirs]", "tower 3785", "lake 400000", "[junctions]"]
    lines += [f"d{i}" for i in range(districts)]
    lines.append("[consumers]")
    lines += [f"h{i} {'irrigated' if i % 2 == 0 else 'plain'}" for i in range(n_consumers)]
    lines.append("[pipes]")
    for i in range(districts):
        lines.append(f"{rng.choice(['tower', 'lake'])} d{i} {rng.randint(20, 200)}")
        if i:
            lines.append(f"d{i} d{rng.randrange(i)} {rng.randint(5, 50)}")
    for i in range(n_consumers):
        lines.append(f"d{rng.randrange(districts)} h{i} {rng.randint(1, 8)}")
    return "\n".join(lines)


def bench(net, algorithm, backend, repeat):
    best = float("inf")
    value = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = max_flow_result(net, algorithm, backend).value
        best = min(best, time.perf_counter() - t0)
    return best, value


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sizes", type=int, nargs="+", default=[200, 1000, 4000])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if "cython" not in BACKENDS:
        print("compiled kernels not built; only the Python backend is available")
    print(f"{'consumers':>9} {'algorithm':>12} " + " ".join(f"{b:>10}" for b in BACKENDS) + "  speedup")
    for n in args.sizes:
        net = build_flow_network(parse_topology(city(n, seed=n)), 2.795)
        for algorithm in Algorithm:
            times = {}
            values = set()
            for backend in BACKENDS:
                times[backend], v = bench(net, algorithm, backend, args.repeat)
                values.add(v)
            assert len(values) == 1, f"backends disagree: {values}"
            speedup = times["python"] / times["cython"] if "cython" in times else 1.0
            print(f"{n:>9} {algorithm.value:>12} " + " ".join(f"{times[b] * 1e3:>8.2f}ms" for b in BACKENDS)
                  + f"  {speedup:>6.1f}x")


if __name__ == "__main__":
    main()
