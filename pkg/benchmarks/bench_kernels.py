"""Compare the compiled tree kernels against the numpy fallback.

Kernel timings run both modules side by side in one process. The
end-to-end forest fit runs once per backend in a subprocess, because the
backend is chosen at import time.

    python benchmarks/bench_kernels.py [--rows 600] [--features 45] [--trees 50] [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from physiofuse import _core, models
from physiofuse._core import _kernels_py
from physiofuse.dataset import FeatureMatrix
from physiofuse.models.tree import presort


def _data(rows, features, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 3, rows)
    X = rng.standard_normal((rows, features)) + y[:, None] * rng.uniform(0, 0.5, features)
    return FeatureMatrix(tuple(f"f{j}" for j in range(features)), X, y,
                         tuple(("s", i) for i in range(rows)))


def _best(fn, repeat):
    number = 1
    while min(timeit.repeat(fn, number=number, repeat=1)) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_timings(rows, features, repeat):
    compiled = _core.compiled_module()
    if compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    data = _data(rows, features)
    X, y = data.X, data.y.astype(np.intp)
    counts = np.ones(rows, dtype=np.intp)
    order = presort(X)
    feats = np.arange(features, dtype=np.intp)
    rng = np.random.default_rng(1)
    g, h = rng.standard_normal(rows), rng.uniform(0.05, 0.25, rows)
    model = models.fit("RF", data, models.TrainConfig(rf=models.RFConfig(n_trees=1)))
    t = model.trees[0]
    tree_args = (t.left, t.right, t.feature, t.threshold)

    cases = {
        "best_split_gini": lambda m: m.best_split_gini(X, y, counts, order, feats, 3, 1),
        "best_split_gain": lambda m: m.best_split_gain(X, g, h, counts, order, feats, 1.0, 1, 0.0),
        "apply_tree": lambda m: m.apply_tree(*tree_args, X),
        "tree_shap (50 rows)": lambda m: m.tree_shap(*tree_args, t.value, t.cover, X[:50],
                                                     t.max_depth),
    }
    out = {}
    for name, call in cases.items():
        out[name] = (_best(lambda: call(compiled), repeat), _best(lambda: call(_kernels_py), repeat))
    return out


def fit_once(rows, features, trees):
    """Seconds for one random-forest fit with the active backend."""
    data = _data(rows, features)
    cfg = models.TrainConfig(rf=models.RFConfig(n_trees=trees))
    t0 = time.perf_counter()
    models.fit("RF", data, cfg)
    return {"backend": _core.BACKEND, "seconds": time.perf_counter() - t0}


def fit_timings(rows, features, trees):
    here = os.path.dirname(os.path.abspath(__file__))
    code = (f"import sys, json; sys.path.insert(0, {here!r}); import bench_kernels as b; "
            f"print(json.dumps(b.fit_once({rows}, {features}, {trees})))")
    out = {}
    for pure in ("0", "1"):
        env = dict(os.environ, PHYSIOFUSE_PURE_PYTHON=pure)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True)
        doc = json.loads(res.stdout.strip().splitlines()[-1])
        out[doc["backend"]] = doc["seconds"]
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=600)
    ap.add_argument("--features", type=int, default=45)
    ap.add_argument("--trees", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"rows={args.rows} features={args.features}")
    print(f"{'kernel':<22}{'compiled':>12}{'fallback':>12}{'speedup':>10}")
    for name, (c, p) in kernel_timings(args.rows, args.features, args.repeat).items():
        print(f"{name:<22}{c * 1e3:>10.3f}ms{p * 1e3:>10.3f}ms{p / c:>9.1f}x")
    fit = fit_timings(args.rows, args.features, args.trees)
    c, p = fit["compiled"], fit["python"]
    print(f"{f'RF fit ({args.trees} trees)':<22}{c:>11.3f}s{p:>11.3f}s{p / c:>9.1f}x")


if __name__ == "__main__":
    main()
