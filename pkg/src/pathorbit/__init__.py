"""Path following for underactuated mechanical systems by orbital stabilization.

The package builds a guiding oscillator whose limit cycle is an
implicit planar curve, immerses it into a plant through static state
feedback on an off-the-manifold coordinate, and verifies the resulting
invariance and convergence claims numerically.
"""
from .curves import (AmbiguousSignError, CriticalSetReport, DegenerateCurveError,
                     ImplicitCurve, cassini_oval, check_critical_levels, circle,
                     ellipse, eval_phi, find_critical_points, sample_zero_points,
                     zero_contour_segments)
from .target import J0, TargetOscillator, TargetTrajectory, phase_portrait
from .plants import GainReport, LtiPlant, PlantState, VesselPlant
from .control import (ComparisonOrbitalController, LtiPathController, ManifoldCheck,
                      VesselIntegralController, VesselPathController,
                      assemble_on_manifold, internal_gain_monitor, off_manifold,
                      verify_immersion, verify_implicit_manifold)
from .sim import (DivergenceError, Metrics, SimConfig, Trajectory, compute_metrics,
                  rk4_step, run_closed_loop, save_trajectory_csv)
from .scenarios import (ConfigError, Scenario, builtin_scenarios, load_scenario,
                        run_scenario, sweep)

__version__ = "0.1.0"
