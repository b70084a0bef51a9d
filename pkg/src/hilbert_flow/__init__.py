"""Discrete Hilbert and Kak–Hilbert transform flows, their sampling
reconstructions and Riesz–Boas interpolation operators on ℓ² sequences."""
from .flow import FlowRequest, SeriesOrder, flow, flow_h, flow_h_series, flow_kak, flow_kak_series, flow_norm, series_order
from .hilbert_ops import (
    HTILDE,
    H,
    KAK,
    ApplyPlan,
    BudgetInfeasible,
    Method,
    OperatorKind,
    apply_h,
    apply_h_power,
    apply_htilde,
    apply_kak,
    apply_op,
    estimate_operator_norm,
    fast_toeplitz_apply,
    kak_power,
    toeplitz_apply,
)
from .riesz_boas import (
    RbCoeffTable,
    apply_q,
    apply_rb,
    apply_rb_even,
    apply_rb_odd,
    apply_rb_power,
    coeff_A,
    coeff_B,
    convergence_probe,
    flow_rb_identity_check,
)
from .sampling import (
    IrregularNodes,
    SamplingPlan,
    higgins_G,
    reconstruct_flow_sst,
    reconstruct_flow_vt,
    reconstruct_phi_fst,
    reconstruct_psi_irregular,
    sinc,
    sinc_deriv,
)
from .seq_core import Sequence, TailBudget, Window, inner, norm, random_sequence, signed_shift
from .trajectories import QuadratureSpec, TrajectoryPair, parseval_check, phi, psi
