"""Numerical laboratory for ergodic averages along sparse sequences built from interval conditions."""

from .torus import (
    PhaseTerm,
    PrecisionOverflowError,
    PrecisionReal,
    TorusValue,
    convergents,
    dirichlet_approx,
    dist_to_integers,
    eval_phase,
    frac_fixed64,
    make_constant,
)
from .sequences import (
    INTERVALS,
    ExponentSchedule,
    Region,
    SequenceVariant,
    TrigPoly,
    alternating_weight,
    build_schedule,
    classify_interval,
    default_beta_grid,
    default_schedule,
    enumerate_S,
    estimate_J,
    member,
)
from .averaging import (
    AverageTrace,
    EtaProfile,
    cauchy_defect,
    divergence_gap,
    eta_checks,
    exp_average_trace,
    weighted_sup_average,
    wierdl_concatenate,
)
from .expsums import check_bsg, check_gsb, gsb_constant, pkey_threshold_scan, vdc_check
from .pet import HPoly, HPolyFamily, delta_iter, family_type, pet_run, type_lex_less, vdc_step
from .systems import CharacterFn, RotationSystem, SkewSystemT3, iterate_R, lflw_reduction_check, multi_average

__version__ = "0.1.0"

__all__ = [
    "PhaseTerm",
    "PrecisionOverflowError",
    "PrecisionReal",
    "TorusValue",
    "convergents",
    "dirichlet_approx",
    "dist_to_integers",
    "eval_phase",
    "frac_fixed64",
    "make_constant",
    "INTERVALS",
    "ExponentSchedule",
    "Region",
    "SequenceVariant",
    "TrigPoly",
    "alternating_weight",
    "build_schedule",
    "classify_interval",
    "default_beta_grid",
    "default_schedule",
    "enumerate_S",
    "estimate_J",
    "member",
    "AverageTrace",
    "EtaProfile",
    "cauchy_defect",
    "divergence_gap",
    "eta_checks",
    "exp_average_trace",
    "weighted_sup_average",
    "wierdl_concatenate",
    "check_bsg",
    "check_gsb",
    "gsb_constant",
    "pkey_threshold_scan",
    "vdc_check",
    "HPoly",
    "HPolyFamily",
    "delta_iter",
    "family_type",
    "pet_run",
    "type_lex_less",
    "vdc_step",
    "CharacterFn",
    "RotationSystem",
    "SkewSystemT3",
    "iterate_R",
    "lflw_reduction_check",
    "multi_average",
]
