"""Compare the compiled and pure-Python P1 assembly kernels.

Usage: python3 benchmarks/bench_assembly.py [--repeat N] [--sizes 16,32,64]
"""
import argparse
import timeit

import numpy as np

from dtnjordan.instances import make_rng, random_coefficients
from dtnjordan.kernels import compiled_assemble_p1, python_assemble_p1
from dtnjordan.mesh import build_interval_mesh, build_rectangle_mesh


def _case(domain, seed=0):
    c = random_coefficients(make_rng(seed), domain)
    return (domain.node_coordinates, domain.elements, c.c_principal, c.b_conv, c.c_conv,
            c.c_zero)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="16,32,64")
    args = ap.parse_args(argv)
    compiled = compiled_assemble_p1()
    if compiled is None:
        print("compiled kernel not built; run `python3 setup.py build_ext --inplace`")
    sizes = [int(s) for s in args.sizes.split(",")]
    cases = [(f"interval n={50 * s}", build_interval_mesh(50 * s)) for s in sizes]
    cases += [(f"rectangle {s}x{s}", build_rectangle_mesh(s, s, 1.0, 1.0)) for s in sizes]
    print(f"{'mesh':<22}{'elements':>9}{'python ms':>12}{'cython ms':>12}{'speedup':>9}"
          f"{'max diff':>11}")
    for label, dom in cases:
        data = _case(dom)
        t_py = min(timeit.repeat(lambda: python_assemble_p1(*data), number=1,
                                 repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{label:<22}{dom.n_elements:>9}{t_py:>12.2f}{'-':>12}{'-':>9}{'-':>11}")
            continue
        t_cy = min(timeit.repeat(lambda: compiled(*data), number=1, repeat=args.repeat)) * 1e3
        diff = max(np.abs(a - b).max() for a, b in zip(python_assemble_p1(*data), compiled(*data)))
        print(f"{label:<22}{dom.n_elements:>9}{t_py:>12.2f}{t_cy:>12.2f}{t_py / t_cy:>9.1f}"
              f"{diff:>11.1e}")


if __name__ == "__main__":
    main()
