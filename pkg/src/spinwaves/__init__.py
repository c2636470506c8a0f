"""Collective emission from spin waves stored in cold atomic ensembles.

Simulation library for phase-matched retrieval: frozen atomic clouds,
timed-Dicke coupling functions with brute-force oracles, pair radiation
kernels and collective decay rates, retrieval dynamics with the two-photon
cascade, and interaction-induced dephasing of multiple excitations.
"""

__version__ = "0.1.0"

from .dephasing import (
    InteractionModel,
    StateAmplitudes,
    g2_asymptotic,
    g2_of_T,
    g2_zero,
    overlap_nonsymmetric_2,
    overlap_symmetric,
    overlap_symmetric_mc,
    phase_matrix,
)
from .dicke import (
    oracle_matrix_element,
    rank_tuple,
    s_function,
    structure_factor,
    unrank_tuple,
    v_down,
    v_ground,
    v_nn,
)
from .dynamics import (
    AmplitudeTrace,
    ModeGrid,
    PulseProfile,
    cascade_two_photon,
    e0_of_t,
    emission_spectrum,
    excitation_bookkeeping,
    mode_amplitude,
    phase_matched_weights,
    single_exc_ode_oracle,
    validity_check,
)
from .ensemble import (
    AtomicEnsemble,
    Geometry,
    PhysicalUnits,
    generate_ensemble,
    load_ensemble,
    pair_separations,
    save_ensemble,
)
from .radiative import decay_matrix, f_complex, f_pair, f_quadrature, gamma_n, symmetric_mode

__all__ = [
    "AmplitudeTrace",
    "AtomicEnsemble",
    "Geometry",
    "InteractionModel",
    "ModeGrid",
    "PhysicalUnits",
    "PulseProfile",
    "StateAmplitudes",
    "cascade_two_photon",
    "decay_matrix",
    "e0_of_t",
    "emission_spectrum",
    "excitation_bookkeeping",
    "f_complex",
    "f_pair",
    "f_quadrature",
    "g2_asymptotic",
    "g2_of_T",
    "g2_zero",
    "gamma_n",
    "generate_ensemble",
    "load_ensemble",
    "mode_amplitude",
    "oracle_matrix_element",
    "overlap_nonsymmetric_2",
    "overlap_symmetric",
    "overlap_symmetric_mc",
    "pair_separations",
    "phase_matched_weights",
    "phase_matrix",
    "rank_tuple",
    "s_function",
    "save_ensemble",
    "single_exc_ode_oracle",
    "structure_factor",
    "symmetric_mode",
    "unrank_tuple",
    "v_down",
    "v_ground",
    "v_nn",
    "validity_check",
]
