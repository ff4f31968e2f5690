"""One-hot labelling cascades of anti-controlled R_y rotations.

A labeller on lam qubits spreads an all-zero label register over one-hot
labels: variant m=1 keeps the all-zero label with the same weight as the
one-hots (lam+1 outcomes, weight 1/sqrt(lam+1) each), variant m=0 drops it
(lam outcomes, weight 1/sqrt(lam)).  Tagging each one-hot with a unitary and
undoing the spread realizes a uniformly weighted sum of unitaries on the
label-zero component; see :func:`label_uniform_family`.

The gate sequence (application order) is: R_y(theta_0) on wire 0, then for
r = 1..lam-1 an R_y(theta_r) on wire r anti-controlled on wires 0..r-1 all
being |0>.  Matrix-element law for the first column, with C_r = cos(theta_r)
and S_r = sin(theta_r):

    <one-hot at k| V |0^lam> = S_k * prod_{r<k} C_r
    <0^lam|        V |0^lam> = prod_r C_r
    all other first-column entries vanish.

Requiring all surviving weights equal fixes the angles uniquely:
sin(theta_r) = sqrt(1/(lam+1-r)) for m=1 and sqrt(1/(lam-r)) for m=0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .sim import GateOp, Projector, RegisterLayout, StateVector, apply_circuit, ry


@dataclass(frozen=True)
class LabellerSpec:
    """Angle table for one labelling cascade.

    lam: number of label qubits (>= 1).  m: 1 keeps the all-zero label in the
    output superposition, 0 suppresses it (theta_{lam-1} = pi/2).
    """

    lam: int
    m: int

    def __post_init__(self) -> None:
        if self.lam < 1:
            raise ValueError("lam must be >= 1")
        if self.m not in (0, 1):
            raise ValueError("variant m must be 0 or 1")

    @property
    def sines(self) -> tuple[float, ...]:
        base = self.lam + self.m
        return tuple(math.sqrt(1.0 / (base - r)) for r in range(self.lam))

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(math.asin(s) for s in self.sines)

    @property
    def weight(self) -> float:
        """Common magnitude of the surviving output amplitudes."""
        return math.sqrt(1.0 / (self.lam + self.m))


def build_labeller(spec: LabellerSpec, wires: list[str] | tuple[str, ...]) -> list[GateOp]:
    """Cascade gates in application order; wires[r] carries R_y(theta_r).

    The returned list starts with the uncontrolled R_y(theta_0); each later
    rotation is anti-controlled on every earlier wire (all |0>).
    """
    if len(wires) != spec.lam:
        raise ValueError(f"labeller needs {spec.lam} wires, got {len(wires)}")
    gates = []
    for r, theta in enumerate(spec.angles):
        ctrl = Projector.on({w: 0 for w in wires[:r]})
        gates.append(GateOp.unitary(ry(theta), wires[r], control=ctrl))
    return gates


def build_labeller_dagger(spec: LabellerSpec, wires) -> list[GateOp]:
    """Inverse cascade (reversed gates, each inverted)."""
    return [g.dagger() for g in reversed(build_labeller(spec, wires))]


@lru_cache(maxsize=None)
def _labeller_layout(lam: int) -> RegisterLayout:
    return RegisterLayout((f"q{r}", 2) for r in range(lam))


def _apply_to(spec: LabellerSpec, digits: dict[str, int]) -> StateVector:
    layout = _labeller_layout(spec.lam)
    wires = [f"q{r}" for r in range(spec.lam)]
    start = StateVector.basis(layout, digits)
    return apply_circuit(start, build_labeller(spec, wires))


def apply_v1_to_zero(lam: int) -> StateVector:
    """m=1 labeller on |0^lam>: uniform 1/sqrt(lam+1) over |0> and one-hots."""
    return _apply_to(LabellerSpec(lam, 1), {})


def apply_v1_to_top_one(lam: int) -> StateVector:
    """m=1 labeller on the one-hot input with the 1 on the top wire (lam-1).

    The |0^lam> output amplitude is -1/sqrt(lam+1); the remaining lam
    amplitudes are +1/sqrt(lam+1) and sit on the kets that keep the top wire
    at |1> (the top one-hot itself plus, for lam > 1, the pairs
    {top, r} for r < lam-1 -- nothing below the top wire can clear it).
    """
    return _apply_to(LabellerSpec(lam, 1), {f"q{lam - 1}": 1})


def apply_v0_to_zero(lam: int) -> StateVector:
    """m=0 labeller on |0^lam>: uniform 1/sqrt(lam) over one-hots, none on |0>."""
    return _apply_to(LabellerSpec(lam, 0), {})


def labeller_matrix(spec: LabellerSpec) -> np.ndarray:
    """Dense 2^lam matrix of the cascade (columns = outputs of basis inputs)."""
    layout = _labeller_layout(spec.lam)
    wires = [f"q{r}" for r in range(spec.lam)]
    gates = build_labeller(spec, wires)
    cols = []
    for i in range(layout.size):
        start = StateVector.basis(layout, layout.digits_of(i))
        cols.append(apply_circuit(start, gates).amps)
    return np.array(cols).T


def label_uniform_family(labelled_gates: list[GateOp | list[GateOp]],
                         label_wires: list[str] | tuple[str, ...]) -> list[GateOp]:
    """Uniformly weighted sum of {identity} + the given gates, via labels.

    With lam = len(label_wires) = len(labelled_gates): spreads the label
    register (m=1 cascade), applies labelled_gates[j] controlled on label
    wire j being |1>, and undoes the spread.  On the all-zero-label component
    of the output, the rest of the register holds

        (1/(lam+1)) * (1 + sum_j U_j) |input>.

    The label wires must start in |0^lam>; callers are expected to project or
    flag on that pattern afterwards.
    """
    lam = len(label_wires)
    if len(labelled_gates) != lam:
        raise ValueError(f"need {lam} labelled gates, got {len(labelled_gates)}")
    spec = LabellerSpec(lam, 1)
    gates: list[GateOp] = build_labeller(spec, label_wires)
    # Highest label first; order is invisible on one-hot label components
    # (the only ones a fresh spread produces) but mirrors the cascade
    # diagrams this implements.
    for wire, entry in zip(reversed(label_wires), reversed(labelled_gates)):
        ctrl = Projector.on({wire: 1})
        for g in [entry] if isinstance(entry, GateOp) else entry:
            if wire in g.wires or wire in g.control.wires:
                raise ValueError("labelled gate must not touch its own label wire")
            gates.append(g.controlled_on(ctrl))
    gates.extend(build_labeller_dagger(spec, label_wires))
    return gates


def build_swap_stage(level: int, alpha_wires: list[str] | tuple[str, ...],
                     label_wires: list[str] | tuple[str, ...]) -> list[GateOp]:
    """Stage `level` of the symmetrizing cascade on the alpha register.

    Realizes the uniform sum (1/(level+2)) * (1 + sum_{j=0..level}
    swap(alpha_{level-j}, alpha_{level+1})) on the label-zero component, using
    level+1 label wires.  Stage 0 mixes the first two alpha wires; each later
    stage folds wire level+1 into the block symmetrized so far.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if len(label_wires) != level + 1:
        raise ValueError(f"stage {level} needs {level + 1} label wires")
    if len(alpha_wires) < level + 2:
        raise ValueError(f"stage {level} needs at least {level + 2} alpha wires")
    swaps = [GateOp.swap(alpha_wires[level - j], alpha_wires[level + 1])
             for j in range(level + 1)]
    return label_uniform_family(swaps, label_wires)
