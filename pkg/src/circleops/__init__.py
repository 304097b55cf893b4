"""Operator calculus on the circle: formal symbols, Fourier-matrix
realizations, zeta-regularized traces, the Schwinger cocycle, and the group
of diffeomorphism-phase Fourier integral operators."""

from .trigpoly import TrigPoly, BandwidthOverflow, bandwidth_cap, set_bandwidth_cap
from .symbols import (FormalSymbol, HomogComponent, builtin, bracket_log_weight,
                      commutator, compose, linear_combine, parity_class,
                      pushforward_diffeo_leading, split_minus, split_plus,
                      sym_abs_derivative, sym_abs_power, sym_derivative,
                      sym_identity, sym_laplacian_weight, sym_log_abs,
                      sym_log_laplacian_weight, sym_multiplication,
                      sym_proj_minus, sym_proj_plus, sym_sign,
                      sym_sign_connection, wodzicki_res, random_symbol)
from .diffeo import Diffeo, NewtonError, random_diffeo
from .quantize import (DecayReport, GLResReport, ModeGrid, OpMatrix,
                       diffeo_matrix, gl_res_witness, realize,
                       reflection_matrix, rotation_matrix, sign_matrix,
                       smoothing_decay_profile, symbol_chain_diagonal)
from .zetatrace import (ContinuationError, HeatFitReport, LaurentAtZero,
                        TraceOperand, Weight, abs_weight, bracket_trace_check,
                        heat_trace, heat_trace_oracle,
                        kontsevich_vishik_trace, laplace_weight,
                        matrix_power_trace, tr_q, tr_q_conjugated,
                        trace_power, zeta_direct, zeta_laurent,
                        conjugated_symbol, weight_log_correction)
from .cocycle import (CONVENTIONS, CocycleIdentityReport, EpsilonSpec,
                      NonHilbertSchmidt, cocycle_identity_check,
                      multiplication_cocycle_table, schwinger,
                      schwinger_mode_pair)
from .fiogroup import (ExactnessReport, FIOElement, exactness_check,
                       fio_inverse, fio_multiply, holonomy_gauge_defect,
                       holonomy_section, invert_order0_symbol,
                       kernel_peak_displacement, phase_projection,
                       pseudolocality_witness, random_fio_element)

__version__ = "0.1.0"
