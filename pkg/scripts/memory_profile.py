"""Synopsis size trace over a long stream.

Tracks stored real vectors (tree prototypes + archive prototypes) per
window on a blob stream, decomposed into tree and archive shares, and
summarizes the tail of the run: mean level, worst per-window swing,
quarter means. The count is sampled right after each window commit,
when the dominance re-screen has just collapsed the front; the idle
phase then refills it, so per-window samples oscillate around a flat
level rather than sitting on it.

    python3 scripts/memory_profile.py --windows 1000 --trace /tmp/trace.csv
"""

import argparse

import numpy as np

from mostream import StreamConfig
from mostream.engine import initialize, on_idle, process_window
from mostream.evolution import IdleBudget
from mostream.stream_io import gen_blobs


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--windows", type=int, default=1000)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--sep", type=float, default=10.0)
    ap.add_argument("--stddev", type=float, default=0.5)
    ap.add_argument("--window-size", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trace", default=None, help="optional per-window CSV output")
    args = ap.parse_args()

    per_blob = args.windows * args.window_size // args.k
    batches = gen_blobs(
        k=args.k,
        per_blob=per_blob,
        sep=args.sep,
        stddev=args.stddev,
        window_size=args.window_size,
        seed=args.seed,
    )
    cfg = StreamConfig(window_size=args.window_size, rng_seed=args.seed)

    state = None
    rows = []
    for batch in batches:
        if state is None:
            state = initialize(batch, cfg)
        else:
            process_window(state, batch)
        tree_nodes = state.tree.node_count()
        archive_k = sum(s.k for s in state.archive)
        rows.append((batch.window_id, tree_nodes, archive_k, tree_nodes + archive_k))
        on_idle(state, IdleBudget(cfg.idle_generations_cap))

    trace = np.array(rows, dtype=float)
    if args.trace:
        np.savetxt(
            args.trace,
            trace,
            fmt="%d",
            delimiter=",",
            header="window_id,tree_nodes,archive_k,stored_total",
            comments="",
        )
        print(f"wrote {args.trace}")

    total = trace[:, 3]
    tail = total[len(total) // 5 :]  # final 80 percent
    band = np.abs(tail - tail.mean()).max() / tail.mean()
    quarters = [float(c.mean()) for c in np.array_split(tail, 4)]
    print(f"windows {len(total)}, points {len(total) * args.window_size}")
    print(f"peak stored {int(total.max())}  (tree peak {int(trace[:, 1].max())}, archive peak {int(trace[:, 2].max())})")
    print(f"tail mean {tail.mean():.1f}  per-window band +-{band:.0%}")
    print(f"tail quarter means {np.round(quarters, 1).tolist()}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
