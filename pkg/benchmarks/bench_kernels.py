"""Compare the compiled and pure-Python multiset kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times the four kernels on count vectors of growing size, then the end-to-end
banker validation under each backend (run in a subprocess so the backend
choice made at import time is honoured).
"""
import argparse
import os
import subprocess
import sys
import timeit

from utiliproc import _core_py

try:
    from utiliproc import _core
except ImportError:
    _core = None

VECTORS = {
    "4 atoms": (1, 1, 1, 1),
    "8 atoms": (1,) * 8,
    "6 atoms cap 2": (2,) * 6,
    "10 atoms": (1,) * 10,
}

END_TO_END = """
import time
from utiliproc.modelfile import parse_model
from utiliproc.validate import validate_model
from utiliproc import BACKEND
m = parse_model(open({path!r}).read())
t = time.perf_counter()
validate_model(m)
print(BACKEND, time.perf_counter() - t)
"""


def bench(mod, counts, repeat):
    caps = tuple(c * 2 for c in counts)
    half = tuple(c // 2 for c in counts)
    calls = {
        "split_pairs": lambda: mod.split_pairs(counts),
        "add_within": lambda: mod.add_within(half, half, caps),
        "sub_if_contained": lambda: mod.sub_if_contained(counts, half),
    }
    return {k: min(timeit.repeat(f, number=200, repeat=repeat)) / 200 for k, f in calls.items()}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if _core is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'vector':<16}{'kernel':<18}{'python us':>12}{'cython us':>12}{'speedup':>9}")
    for label, counts in VECTORS.items():
        py = bench(_core_py, counts, args.repeat)
        cy = bench(_core, counts, args.repeat) if _core else {}
        for k, t in py.items():
            c = cy.get(k)
            extra = f"{c * 1e6:>12.2f}{t / c:>9.1f}" if c else f"{'-':>12}{'-':>9}"
            print(f"{label:<16}{k:<18}{t * 1e6:>12.2f}{extra}")
    model = os.path.join(os.path.dirname(__file__), "..", "models", "banker.upm")
    code = END_TO_END.format(path=os.path.abspath(model))
    for pure in ("1", "0"):
        env = dict(os.environ, UTILIPROC_PURE=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"validate banker.upm with {backend} kernels: {float(seconds):.3f} s")


if __name__ == "__main__":
    main()
