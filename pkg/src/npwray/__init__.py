"""Ray tracing of non-uniform plane waves through lossy stratified media."""

from .errors import (
    CancellationUnderflow,
    ConfigError,
    GrazingDegenerate,
    GridFormatError,
    NoPhysicalRoot,
    NPWError,
    NumericalFailure,
    TotalInternalReflection,
)
from .field import (
    ComplexRefractivity,
    RefractivityGrid2D,
    load_grid,
    save_grid,
    synthetic_scenario,
)
from .raytracer import MethodKind, link_sweep, shoot_to_receiver, trace_ray
from .solver import (
    ApparentWave,
    MediumPair,
    diagnostics,
    medium1_apparent,
    medium2_apparent_stable,
    solve_interface,
)

__version__ = "0.1.0"
