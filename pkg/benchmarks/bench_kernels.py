"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Also times one CNN training batch end to end on each backend.
"""

import argparse
import timeit

import numpy as np

from trustscope import kernels
from trustscope.data.preprocess import preprocess
from trustscope.data.synthetic import generate_dataset
from trustscope.models import init_model, loss_and_grads

try:
    from trustscope import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def cases():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(32, 32, 32, 16))
    cols = kernels.im2col_numpy(x, 3, 1)
    g = rng.normal(size=cols.shape)
    z = rng.normal(size=200_000)
    _, t = kernels.gelu_forward_numpy(z)
    dz = rng.normal(size=z.shape)
    return [
        ("im2col 32x32x32x16 k3", lambda: kernels.im2col_numpy(x, 3, 1),
         lambda: compiled.im2col(x, 3, 1)),
        ("col2im 32x32x32x16 k3", lambda: kernels.col2im_numpy(g, 32, 32, 32, 16, 3, 1),
         lambda: compiled.col2im(g, 32, 32, 32, 16, 3, 1)),
        ("gelu backward 2e5", lambda: kernels.gelu_backward_numpy(dz, z, t),
         lambda: compiled.gelu_backward(dz, z, t)),
    ]


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if compiled is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return
    print(f"{'kernel':<26}{'numpy ms':>10}{'compiled ms':>13}{'speedup':>9}  identical")
    for name, slow, fast in cases():
        a, b = slow(), fast()
        same = a.tobytes() == b.tobytes()
        ts, tf = best_of(slow, args.repeat), best_of(fast, args.repeat)
        print(f"{name:<26}{ts * 1e3:>10.2f}{tf * 1e3:>13.2f}{ts / tf:>8.1f}x  {same}")

    batch = np.stack([preprocess(s) for s in generate_dataset(32, seed=0)])
    labels = np.arange(32) % 2
    model = init_model("cnn_toy")
    step = lambda: loss_and_grads(model, batch, labels)  # noqa: E731
    tf = best_of(step, args.repeat)
    saved = kernels._compiled
    kernels._compiled = None
    try:
        ts = best_of(step, args.repeat)
    finally:
        kernels._compiled = saved
    print(f"{'cnn batch-32 fwd+bwd':<26}{ts * 1e3:>10.2f}{tf * 1e3:>13.2f}{ts / tf:>8.1f}x")


if __name__ == "__main__":
    main()
