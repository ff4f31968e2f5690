"""Qudit-register simulation and symmetrized-overlap estimation.

The package computes weights Q^(k)(c^n) = |<c^n| P_k |psi>|^2 -- the overlap
of a target word with the input state symmetrized over its first k wires --
by preparing labelled-swap circuits on a small state-vector simulator and
driving them with an adaptive fixed-point search, then checks everything
against a brute-force permutation sum.
"""

from .afga import (AFGAConfig, BlochState, HypothesisReadout, TrialRecord,
                   afga_schedule, bloch_trajectory, drive_states, mean_filter,
                   mmm_filter, run_blind_targeting, step_bloch, tth_readout)
from .labellers import LabellerSpec, build_labeller, build_labeller_dagger, labeller_matrix
from .methods import (MethodInstance, RescaleRecipe, SymResult, canonical_norm,
                      parse_instance_file, prepare_s_method_a, prepare_s_method_b,
                      rescale_bounded, rescale_norm, run_instance, run_method_a,
                      run_method_b)
from .permutations import (Permutation, Symmetrizer, enumerate_sym,
                           oracle_symmetrized_amplitude, read_amplitude_table,
                           write_amplitude_table)
from .sim import GateOp, Projector, RegisterLayout, StateVector, apply_circuit, apply_gate

__version__ = "0.1.0"

__all__ = [
    "AFGAConfig", "BlochState", "GateOp", "HypothesisReadout", "LabellerSpec",
    "MethodInstance", "Permutation", "Projector", "RegisterLayout",
    "RescaleRecipe", "StateVector", "SymResult", "Symmetrizer", "TrialRecord",
    "afga_schedule", "apply_circuit", "apply_gate", "bloch_trajectory",
    "build_labeller", "build_labeller_dagger", "canonical_norm", "drive_states",
    "enumerate_sym", "labeller_matrix", "mean_filter", "mmm_filter",
    "oracle_symmetrized_amplitude", "parse_instance_file", "prepare_s_method_a",
    "prepare_s_method_b", "read_amplitude_table", "rescale_bounded",
    "rescale_norm", "run_blind_targeting", "run_instance", "run_method_a",
    "run_method_b", "step_bloch", "tth_readout", "write_amplitude_table",
]
