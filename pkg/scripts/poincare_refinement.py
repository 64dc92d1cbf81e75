"""lambda1 of the coupled Poincare problem under mesh refinement, with observed orders."""
import argparse
from dataclasses import dataclass

import numpy as np

from bulkface import build_rectangle_geometry
from bulkface.analysis import poincare_constant


@dataclass
class RefinementConfig:
    sizes: tuple = (4, 8, 16, 32, 64)
    mode: str = "full"
    transmission: tuple = (1.0, 1.0, 1.0)


def main(cfg: RefinementConfig):
    lams = []
    for n in cfg.sizes:
        rep = poincare_constant(build_rectangle_geometry(n, n, cfg.mode), cfg.transmission)
        lams.append(rep.lambda1)
        print(f"n={n:3d} lambda1={rep.lambda1:.10f} C={rep.C:.10f} "
              f"residual={rep.residual:.1e} iterations={rep.iterations}")
    d = np.abs(np.diff(lams))
    for n, order in zip(cfg.sizes[2:], np.log2(d[:-1] / d[1:])):
        print(f"observed order up to n={n}: {order:.3f}")
    if cfg.mode == "bulk_only":
        print(f"pi^2 = {np.pi ** 2:.10f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    p.add_argument("--mode", default="full", choices=["full", "upper_only", "bulk_only"])
    p.add_argument("--transmission", type=float, nargs=3, default=[1.0, 1.0, 1.0])
    a = p.parse_args()
    main(RefinementConfig(tuple(a.sizes), a.mode, tuple(a.transmission)))
