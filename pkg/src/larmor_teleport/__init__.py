"""Gaussian model of light scattering off a Larmor-precessing atomic ensemble.

Covers the multimode light-atom state, teleportation of light onto atoms
and spin-squeezing readout, plus a discretized-propagation cross-check.
"""

from .gaussian_core import (
    CANONICAL_LAYOUT,
    GaussianState,
    HomodyneSpec,
    LinearMap,
    QuadratureLayout,
    apply_map,
    entropy_vn,
    homodyne_condition,
    ppt_inseparable,
    reduce,
    symplectic_eigenvalues,
    vacuum_state,
)
from .scattering_model import (
    InteractionParams,
    PhysicalParams,
    TemporalMode,
    cesium_d2_example,
    coupling_from_physical,
    interaction_map,
    qnd_map,
)
from .squeezing_readout import ReadoutSpec, estimate_spin_mean, readout_condition
from .teleportation import (
    CoherentInput,
    Gains,
    NoiseParams,
    average_fidelity_gaussian,
    classical_benchmark,
    optimize_gains,
    teleport_closed_form,
    teleport_noisy,
)

__version__ = "0.1.0"
