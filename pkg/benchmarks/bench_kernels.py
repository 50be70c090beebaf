"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 1024 8192 65536] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from hardygauge import _kernels_py

try:
    from hardygauge import _kernels
except ImportError:
    _kernels = None


def _inputs(n, rng):
    f = rng.uniform(0.1, 1.0, n)
    cl, cr = rng.uniform(0.0, 1e-3, n - 1), rng.uniform(0.0, 1e-3, n - 1)
    dw, dv = rng.uniform(0.0, 1e-3, n), rng.uniform(1e-4, 1e-3, n)
    return f, cl, cr, dw, dv


def _calls(mod, f, cl, cr, dw, dv):
    return {
        "hardy_apply": lambda: mod.hardy_apply(f, 0.1, cl, cr),
        "hardy_adjoint": lambda: mod.hardy_adjoint(f, 0.1, cl, cr),
        "ratio_grad p=q=2": lambda: mod.hardy_ratio_grad(f, 0.1, cl, cr, dw, dv, 2.0, 2.0),
        "ratio_grad p=3 q=1.5": lambda: mod.hardy_ratio_grad(f, 0.1, cl, cr, dw, dv, 3.0, 1.5),
        "spectral_matvec": lambda: mod.spectral_matvec(f, 0.1, cl, cr, dw, 1 / np.sqrt(dv)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 8192, 65536])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'n':>8}{'python [us]':>14}{'compiled [us]':>15}{'speedup':>9}")
    for n in args.sizes:
        data = _inputs(n, rng)
        py = _calls(_kernels_py, *data)
        cc = _calls(_kernels, *data) if _kernels else {}
        for name, fn in py.items():
            number = max(1, 200000 // n)
            t_py = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number * 1e6
            if name in cc:
                t_c = min(timeit.repeat(cc[name], number=number, repeat=args.repeat)) / number * 1e6
                print(f"{name:<22}{n:>8}{t_py:>14.1f}{t_c:>15.1f}{t_py / t_c:>8.1f}x")
            else:
                print(f"{name:<22}{n:>8}{t_py:>14.1f}{'-':>15}{'-':>9}")


if __name__ == "__main__":
    main()
