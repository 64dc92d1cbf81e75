"""Porous medium / fast diffusion sweep over the exponent on the unit square."""
import argparse
from dataclasses import dataclass

import numpy as np

from bulkface import (CoefficientModel, ForcingModel, ScalarLaw, StateVector, TimeStepConfig,
                      build_rectangle_geometry, default_clamp, run)
from bulkface import analysis


@dataclass
class SweepConfig:
    nx: int = 16
    rhos: tuple = (0.5, 1.0, 2.0, 3.0, 4.0)
    dt: float = 0.01
    t_end: float = 2.0


def main(cfg: SweepConfig):
    geom = build_rectangle_geometry(cfg.nx, cfg.nx, "bulk_only")
    u0 = StateVector.from_function(geom, lambda x, y: 1 + 0.5 * np.cos(np.pi * x) * np.cos(np.pi * y))
    print("rho   final_spread  min_u     delta_hat  r2")
    for rho in cfg.rhos:
        law = ScalarLaw("power", rho, rho)
        model = CoefficientModel(law, law, law, clamp=default_clamp([law], 0.5, 1.5))
        trace = run(geom, model, ForcingModel(), u0, TimeStepConfig(dt=cfg.dt, t_end=cfg.t_end))
        fit = analysis.fit_decay_rate(trace, trace.u_infinity)
        print(f"{rho:4g}  {np.ptp(trace.final_state.flat):.3e}     "
              f"{min(d.min_u for d in trace.diagnostics):.5f}   {fit.delta_hat:.4f}     {fit.r_squared:.5f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--rhos", type=float, nargs="+", default=[0.5, 1.0, 2.0, 3.0, 4.0])
    p.add_argument("--nx", type=int, default=16)
    a = p.parse_args()
    main(SweepConfig(a.nx, tuple(a.rhos)))
