"""Coupled bulk-interface nonlinear diffusion on a split unit square."""
from .assembly import (StateVector, assemble_mass, assemble_operator, assemble_rhs,
                       assemble_stiffness, assemble_transmission, capacity_weights)
from .coefficients import (ClampBounds, CoefficientModel, ForcingLaw, ForcingModel,
                           OnsagerDirectModel, OnsagerModel, ScalarLaw, TransmissionLaw,
                           allen_cahn_forcing, audit_assumptions, default_clamp,
                           onsager_to_u_model)
from .errors import (BulkfaceError, ConfigurationError, EigenNotConverged,
                     InsufficientDecayData, LinearSolveFailed, ModeError, PicardDiverged,
                     StepSizeUnderflow)
from .mesh import CoupledGeometry, build_rectangle_geometry
from .timestepper import SimulationTrace, StepDiagnostics, TimeStepConfig, run, step_implicit

__version__ = "0.1.0"
