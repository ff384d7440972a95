"""Compare the compiled LSTM kernel against the NumPy fallback.

Two views: a microbenchmark of the raw forward/backward kernels on
character-encoding-shaped batches, and an end-to-end timing of one
training pass over a small synthetic corpus under each backend (the
end-to-end runs re-exec this script with SEQTAB_KERNEL pinned, since the
backend is chosen at import time).

Usage:
    python3 benchmarks/bench_kernels.py            # both views
    python3 benchmarks/bench_kernels.py --micro    # kernels only
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from seqtab.kernels import lstm_numpy

try:
    from seqtab.kernels import lstm_cython
except ImportError:
    lstm_cython = None

# (T, B, D, H): sequence length, batch, input width, hidden width.
# Shapes mirror the encoder's real workloads: many short cell strings,
# a few longer questions, both at training widths.
SHAPES = [
    (6, 32, 32, 64),
    (12, 8, 32, 64),
    (6, 64, 100, 256),
    (30, 4, 100, 256),
]


def _inputs(rng, T, B, D, H):
    scale = 0.1
    return (
        (rng.standard_normal((T, B, D)) * scale).astype(np.float32),
        (rng.standard_normal((4 * H, D)) * scale).astype(np.float32),
        (rng.standard_normal((4 * H, H)) * scale).astype(np.float32),
        (rng.standard_normal(4 * H) * scale).astype(np.float32),
        np.zeros(H, dtype=np.float32),
        np.zeros(H, dtype=np.float32),
    )


def _time(fn, repeats=7, inner=5):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best.append((time.perf_counter() - t0) / inner)
    return min(best), statistics.median(best)


def run_micro():
    rng = np.random.default_rng(0)
    backends = [("numpy", lstm_numpy)]
    if lstm_cython is not None:
        backends.append(("cython", lstm_cython))
    else:
        print("compiled extension not importable; numpy only", file=sys.stderr)

    print(f"{'shape (T,B,D,H)':>18}  {'pass':>12}  "
          + "  ".join(f"{name:>10}" for name, _ in backends)
          + ("  speedup" if len(backends) == 2 else ""))
    for shape in SHAPES:
        X, Wx, Wh, b, h0, c0 = _inputs(rng, *shape)
        for label in ("forward", "fwd+bwd"):
            row = []
            for _, mod in backends:
                if label == "forward":
                    fn = lambda: mod.lstm_forward(X, Wx, Wh, b, h0, c0)
                else:
                    H, cache = mod.lstm_forward(X, Wx, Wh, b, h0, c0)
                    dh = np.ones_like(H[-1])
                    fn = lambda: mod.lstm_backward(dh, cache)
                best, _ = _time(fn)
                row.append(best)
            cells = "  ".join(f"{t * 1e3:>8.2f}ms" for t in row)
            speedup = f"  {row[0] / row[1]:>6.2f}x" if len(row) == 2 else ""
            print(f"{str(shape):>18}  {label:>12}  {cells}{speedup}")


def run_end_to_end():
    for backend in ("numpy", "cython"):
        env = dict(os.environ, SEQTAB_KERNEL=backend)
        proc = subprocess.run(
            [sys.executable, __file__, "--epoch-probe"],
            env=env,
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            print(f"{backend:>8}: unavailable ({proc.stderr.strip().splitlines()[-1]})")
            continue
        print(f"{backend:>8}: {proc.stdout.strip()}")


def run_epoch_probe():
    """One timed training epoch on a small corpus; prints seconds."""
    from seqtab import kernels
    from seqtab.synth import SyntheticSpec, generate_synthetic
    from seqtab.tables import QuestionClass
    from seqtab.trainer import TrainConfig, initial_loss, train

    spec = SyntheticSpec(
        n_tables=8,
        sequence_length_range=(2, 3),
        class_mix={QuestionClass.SELECT_COLUMN: 1.0},
        seed=1,
        key_alphabet="abc",
        question_style="terse",
    )
    corpus = generate_synthetic(spec)
    config = TrainConfig(epochs=1, d=64, char_dim=32, seed=0, dev_fraction=0.3)
    initial_loss(corpus, config)  # warm caches outside the timer
    t0 = time.perf_counter()
    train(corpus, config)
    print(f"backend={kernels.backend_name} one epoch on "
          f"{corpus.n_questions} questions: {time.perf_counter() - t0:.2f}s")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--micro", action="store_true", help="kernel microbenchmark only")
    ap.add_argument("--epoch-probe", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.epoch_probe:
        run_epoch_probe()
        return
    run_micro()
    if not args.micro:
        print()
        run_end_to_end()


if __name__ == "__main__":
    main()
