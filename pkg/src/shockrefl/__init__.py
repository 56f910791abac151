"""Regular shock reflection-diffraction by wedges in self-similar potential flow."""

from .gas import GasModel
from .states import (
    IncidentShock,
    NormalReflection,
    UniformState,
    evaluate_state,
    normal_reflection,
    paper_u1,
    rh_residual,
    solve_state1,
    state0,
)
from .polar import (
    Branch,
    Classification,
    PolarSolution,
    TransitionAngles,
    critical_density,
    detachment_angle,
    polar_residual,
    reflection_point,
    solve_state2,
    sonic_angle,
    sweep,
    transition_angles,
)

__version__ = "0.1.0"
