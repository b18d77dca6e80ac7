"""Exact symbolic kernel for presented monogenic regular (a,b)-modules."""

from .series import Q, TruncSeries, scalar, scalar_str, solve_euler
from .ahat import (
    AhatElement,
    ChangeOfVariable,
    eta_morphism,
    reduce_mod_annihilator,
    theta_morphism,
)
from .frescos import (
    AbModule,
    IsoResult,
    Presentation,
    Submodule,
    annihilator_coefficients,
    annihilator_element,
    bernstein_element,
    bernstein_polynomial,
    delta_invariant,
    dual_generator,
    dual_twisted,
    fundamental_invariants,
    is_isomorphic,
    jh_factorize,
    kernel_K,
    presentation,
    primitive_part,
    quotient,
    realize,
    reduce_to_versal,
    saturation,
    semisimple_part,
    sharp_filtration_index,
    ss_depth,
    standard_generator,
    subquotient_presentation,
    y_support,
)
from .chgvar import (
    ProbeReport,
    push_presentation,
    quasi_invariance_probe,
    rank1_adapt,
    theta_push,
)
from .classify3 import Rank3NormalForm, alpha2, gamma3, normal_form_rank3, pi_ij
from . import errors

__all__ = [
    "AbModule",
    "AhatElement",
    "ChangeOfVariable",
    "IsoResult",
    "Presentation",
    "ProbeReport",
    "Q",
    "Rank3NormalForm",
    "Submodule",
    "TruncSeries",
    "alpha2",
    "annihilator_coefficients",
    "annihilator_element",
    "bernstein_element",
    "bernstein_polynomial",
    "delta_invariant",
    "dual_generator",
    "dual_twisted",
    "errors",
    "eta_morphism",
    "fundamental_invariants",
    "gamma3",
    "is_isomorphic",
    "jh_factorize",
    "kernel_K",
    "normal_form_rank3",
    "pi_ij",
    "presentation",
    "primitive_part",
    "push_presentation",
    "quasi_invariance_probe",
    "quotient",
    "rank1_adapt",
    "realize",
    "reduce_mod_annihilator",
    "reduce_to_versal",
    "saturation",
    "scalar",
    "scalar_str",
    "semisimple_part",
    "sharp_filtration_index",
    "solve_euler",
    "ss_depth",
    "standard_generator",
    "subquotient_presentation",
    "theta_morphism",
    "theta_push",
    "y_support",
]
