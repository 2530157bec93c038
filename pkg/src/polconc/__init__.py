"""Linear-optical entanglement concentration of single polarization-entangled photon pairs."""

from .dilation import PovmPair, apply_povm, build_dilation, simulate_netlist
from .lorentz import lorentz_normal_form
from .measures import concurrence, entanglement_of_formation
from .optics import SprParams, hwp_matrix, qwp_matrix, ry, spr_matrix, synthesize_spr
from .protocols import (
    PureConcentrationSpec,
    VbsParams,
    execute_plan,
    plan_mixed,
    plan_pure,
    quasi_distill,
    vbs_to_plan,
)
from .qstate import density_to_rmatrix, partial_trace, rmatrix_to_density
from .tomography import reconstruct, simulate_counts

__version__ = "0.1.0"
