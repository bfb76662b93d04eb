"""Qubit and phonon-mode simulations: MS gate, exchange sequences, light-shift gate."""
from .states import (CutoffError, HilbertSpec, QuantumState, basis_state, bell_fidelity,
                     bell_target, evolve_lindblad, evolve_pure, populations_and_parity)
from .ms import (ClosureError, MSGateConfig, cutoff_convergence, ms_case, ms_evolve,
                 ms_infidelity, ms_table)
from .sequences import appendix_c_sequence, exchange_coupling, sideband_pulse
from .lightshift import (LightShiftConfig, LightShiftGeometry, default_config,
                         fidelity_scan_vs_omega, ideal_state, lightshift_coupling_matrix,
                         lightshift_evolve, lightshift_geometry, peak_fidelity)
