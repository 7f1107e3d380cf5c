#!/usr/bin/env python3
"""Move the octagon's edge vectors by eps and track one crooked curve.

Opposite sides stay parallel and equal, so the gluing survives.  For each eps
the curve is re-tightened from the same crossing path and compared with the
unperturbed answer.
"""

import argparse
import math

import numpy as np

from flatspec.curves import CurvePath, classify, tighten
from flatspec.sl2opt import infimal_length
from flatspec.surface import build_surface, bundled_surface, regular_octagon_spec
from flatspec.zonogon import auxiliary_polygon, hausdorff

DEFAULT_PATH = [[1, 0.54, -1], [3, 0.37, 1], [1, 0.26, -1]]


def perturbed_octagon(eps, direction):
    e = [np.array([math.cos(i * math.pi / 4), math.sin(i * math.pi / 4)]) + eps * direction[i] for i in range(4)]
    e += [-v for v in e]
    spec = regular_octagon_spec()
    spec["polygons"][0]["vertices"] = np.vstack([[0.0, 0.0], np.cumsum(e, axis=0)[:-1]]).tolist()
    return build_surface(spec)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--eps", default="1e-1,1e-2,1e-3,1e-4,1e-5")
    ap.add_argument("--seed", type=int, default=108)
    args = ap.parse_args()

    path = CurvePath.from_json({"type": "path", "crossings": DEFAULT_PATH})
    direction = np.random.default_rng(args.seed).normal(size=(4, 2))
    base = tighten(bundled_surface("octagon"), path)
    Z0 = auxiliary_polygon(base)
    il0 = infimal_length(Z0).value
    print(f"base: {classify(base)} length={base.length:.12g} area={Z0.area:.12g} il={il0:.12g}")
    print("eps,kind,edges,d_H,d_area,d_il")
    for eps in (float(x) for x in args.eps.split(",")):
        rep = tighten(perturbed_octagon(eps, direction), path)
        Z = auxiliary_polygon(rep)
        d = (hausdorff(Z, Z0), abs(Z.area - Z0.area), abs(infimal_length(Z).value - il0))
        print(f"{eps:g},{classify(rep)},{len(rep.edges)}," + ",".join(f"{x:.6e}" for x in d))


if __name__ == "__main__":
    main()
