"""Smoothing unitary equivalence to bi-Carleman operators with wavelet kernels."""
from .estimator import CarlemanSmoother
from .families import make_family, rank_one
from .operators import (OperatorFamily, OperatorSpec, SchmidtSystem, adjoint_apply, apply,
                        family_decay, nuclear_budget, project_E, quarter_power, schmidt,
                        schwarz_chain, split)
from .pairing import (PairingPlan, build_plan, complete_y, norm_tables, read_manifest, select_h,
                      select_x, write_manifest)
from .transform import (SmoothKernel, TruncationReport, UnitaryMap, build_unitary,
                        carleman_section, conjugate, eval_kernel, expand_image,
                        image_coefficients, synthesize_kernel)
from .verification import (CheckRecord, VerificationReport, check_action,
                           check_adjoint_symmetry, check_carleman, check_linear_combination,
                           check_mercer_closure, check_vanish_at_infinity, run_kernel_suite)
from .wavelet import (BasisEnumeration, BellFunction, MotherWavelet, bound_tables, eval_atom,
                      eval_mother, fourier_gram, gram_matrix, make_bell)

__version__ = "0.1.0"
