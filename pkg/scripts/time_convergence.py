"""Temporal self-convergence of implicit Euler on the entropic benchmark."""
import argparse
import math
from dataclasses import dataclass

import numpy as np

from bulkface import (ClampBounds, CoefficientModel, ForcingModel, ScalarLaw, StateVector,
                      TimeStepConfig, TransmissionLaw, build_rectangle_geometry, run)


@dataclass
class ConvergenceConfig:
    nx: int = 16
    t_end: float = 0.5
    steps: tuple = (20, 40, 80, 160, 320)


def main(cfg: ConvergenceConfig):
    geom = build_rectangle_geometry(cfg.nx, cfg.nx, "full")
    ent = ScalarLaw("entropic")
    model = CoefficientModel(ent, ent, ent, TransmissionLaw("constant", 1.0), TransmissionLaw("zero"),
                             TransmissionLaw("constant", 1.0), ClampBounds(0.5, 3.0))
    u0 = StateVector.piecewise(geom, 2.0, 1.0, 1.5)
    finals = [run(geom, model, ForcingModel(), u0,
                  TimeStepConfig(dt=cfg.t_end / n, t_end=cfg.t_end)).final_state.flat
              for n in cfg.steps]
    diffs = [np.max(np.abs(a - b)) for a, b in zip(finals, finals[1:])]
    for i, d in enumerate(diffs):
        line = f"{cfg.steps[i]:4d} -> {cfg.steps[i + 1]:4d} steps: sup difference {d:.4e}"
        if i:
            line += f", observed order {math.log2(diffs[i - 1] / d):.3f}"
        print(line)


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--nx", type=int, default=16)
    p.add_argument("--steps", type=int, nargs="+", default=[20, 40, 80, 160, 320])
    a = p.parse_args()
    main(ConvergenceConfig(a.nx, 0.5, tuple(a.steps)))
