"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run directly: ``python benchmarks/bench_kernels.py``.  The numba paths are
warmed once before timing so compilation does not pollute the numbers.
"""

import time

import numpy as np

from rbsdetree import _kernels
from rbsdetree.instances import make_tree
from rbsdetree.stopping import _subtree_layout
from rbsdetree.rbsde import running_gains


def _timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def enumeration_inputs():
    """The largest binomial instance under the cap: 15 interior nodes."""
    rng = np.random.default_rng(0)
    from rbsdetree.instances import linear_barrier, terminal_payoff
    from rbsdetree.rbsde import GeneratorSpec

    tree = make_tree(4, 1.0, ("a",), rate=0.0)
    xi = terminal_payoff(tree, w=1.0)
    gen = GeneratorSpec(
        xi=xi,
        h=linear_barrier(tree, base=rng.uniform(-0.5, 0.5, size=5), xi=xi, leaf_slack=0.0),
        f_levels=[rng.normal(size=tree.level_size(k)) for k in range(4)],
    )
    strides, offsets, n_interior = _subtree_layout(tree, 0, 0)
    f_levels, g_levels = gen.given_levels(tree)
    cum = running_gains(tree, f_levels, g_levels)
    n_paths = strides[-1]
    path_nodes = np.empty((n_paths, tree.n_steps), dtype=np.int64)
    reward_stop = np.empty((n_paths, tree.n_steps))
    for depth in range(tree.n_steps):
        local = (np.arange(n_paths) * strides[depth]) // strides[-1]
        path_nodes[:, depth] = offsets[depth] + local
        reward_stop[:, depth] = cum[depth][local] + gen.h[depth][local]
    reward_leaf = cum[-1] + gen.xi
    probs = tree.prob[-1]
    # pad the layout to the full 20-interior budget by replicating levels
    return path_nodes, reward_stop, reward_leaf, probs, n_interior


def bench_enumeration():
    args = enumeration_inputs()
    n_interior = args[-1]
    print(f"rule enumeration over 2^{n_interior} = {1 << n_interior} rules")
    t_np = _timeit(lambda: _kernels.enumerate_rules_numpy(*args))
    print(f"  numpy : {t_np * 1e3:9.2f} ms")
    if _kernels.HAVE_NUMBA:
        _kernels.enumerate_rules_numba(*args)  # warm-up / compile
        t_nb = _timeit(lambda: _kernels.enumerate_rules_numba(*args))
        print(f"  numba : {t_nb * 1e3:9.2f} ms   ({t_np / t_nb:5.1f}x speedup)")
        a = _kernels.enumerate_rules_numpy(*args)
        b = _kernels.enumerate_rules_numba(*args)
        assert np.allclose(a, b, atol=1e-12), "backends disagree"
    else:
        print("  numba : unavailable")


def bench_simulation(n_paths=2_000_000):
    p = -np.expm1(-np.full(16, 0.08))
    print(f"event-count simulation: {n_paths} paths x {len(p)} steps")
    t_np = _timeit(lambda: _kernels.simulate_event_counts_numpy(p, n_paths, 1, chunk=4096))
    print(f"  numpy : {t_np * 1e3:9.2f} ms")
    if _kernels.HAVE_NUMBA:
        _kernels.simulate_event_counts_numba(p, 1000, 1)  # warm-up / compile
        t_nb = _timeit(lambda: _kernels.simulate_event_counts_numba(p, n_paths, 1))
        print(f"  numba : {t_nb * 1e3:9.2f} ms   ({t_np / t_nb:5.1f}x speedup)")
    else:
        print("  numba : unavailable")


if __name__ == "__main__":
    bench_enumeration()
    bench_simulation()
