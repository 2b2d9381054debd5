"""Compare the compiled and numpy convolution backends.

Times forward and backward of one dilated 2-D convolution at the shapes a
training epoch uses, plus a few full training epochs, for each backend.

    python3 benchmarks/bench_conv.py [--channels 8] [--repeat 5]
"""

import argparse
import time

import numpy as np

from jointinv import kernels, model


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bench_layer(backend, n, c, d, m, kernel, dilation, repeat):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(n, c, d, m))
    k = rng.normal(size=(c, c) + kernel) * 0.1
    b = rng.normal(size=c)
    g = rng.normal(size=(n, c, d, m))
    flops = 2.0 * n * c * c * kernel[0] * kernel[1] * d * m
    fwd = best_of(lambda: kernels.conv2d_forward(x, k, b, dilation, backend=backend), repeat)
    bwd = best_of(lambda: kernels.conv2d_backward(x, k, g, dilation, backend=backend), repeat)
    return fwd, bwd, flops


def bench_epoch(backend, channels, repeat):
    from jointinv import data, trainer
    s1, s2 = data.default_specs(0)
    v1, v2 = data.make_scenario(s1, s2)
    d1 = data.build_dataset(v1.seismic, v1.impedance, data.sample_wells(v1.seismic.n_traces, 51), 7)
    d2 = data.build_dataset(v2.seismic, v2.impedance, data.sample_wells(v2.seismic.n_traces, 12), 7)
    net = model.build_network(model.ModelConfig(channels=channels), 0)
    old = kernels.BACKEND
    kernels.set_backend(backend)
    try:
        cfg = trainer.TrainConfig(epochs=repeat)
        t = time.perf_counter()
        trainer.train_joint(net, net, d1, d2, cfg)
        return (time.perf_counter() - t) / repeat
    finally:
        kernels.set_backend(old)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--channels", type=int, default=model.ModelConfig().channels)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-epoch", action="store_true", help="skip the full-epoch timing")
    args = ap.parse_args()

    backends = ["python"] + (["compiled"] if kernels.compiled_available() else [])
    print(f"backends: {', '.join(backends)}")
    shapes = [(1, 1), (4, 1), (16, 1)]
    print(f"{'dilation':>10} {'backend':>9} {'fwd ms':>8} {'bwd ms':>8} {'fwd GF/s':>9} {'bwd GF/s':>9}")
    for dil in shapes:
        for be in backends:
            fwd, bwd, flops = bench_layer(be, 75, args.channels, 64, 7, (5, 3), dil, args.repeat)
            print(f"{str(dil):>10} {be:>9} {fwd * 1e3:8.2f} {bwd * 1e3:8.2f} "
                  f"{flops / fwd / 1e9:9.2f} {2 * flops / bwd / 1e9:9.2f}")
    if not args.no_epoch:
        print("\njoint training epoch (both surveys, full batch)")
        res = {be: bench_epoch(be, args.channels, args.repeat) for be in backends}
        for be, t in res.items():
            print(f"{be:>9}: {t * 1e3:8.1f} ms/epoch")
        if len(res) == 2:
            print(f"speedup: {res['python'] / res['compiled']:.2f}x")


if __name__ == "__main__":
    main()
