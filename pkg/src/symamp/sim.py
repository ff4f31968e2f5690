"""Dense state-vector simulation of a small register of named qudits.

A register is an ordered list of wires, wire ``j`` carrying a qudit of
dimension ``d_j >= 2``.  Basis states are digit tuples ``(x_0, ..., x_{m-1})``
indexed by wire position and stored at the mixed-radix flat index

    index(x) = sum_j x_j * prod_{i<j} d_i

so wire 0 is the least-significant digit.  Human-readable strings follow ket
convention and print the highest wire first; all programmatic interfaces use
wire-indexed tuples.

Everything here is plain ``numpy`` on dense ``complex128`` arrays.  The
registers this package targets stay below ~2**14 amplitudes, so no sparsity
or tensor-network machinery is warranted.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

#: Default tolerance for identities that should hold to double precision.
ATOL = 1e-12


# ---------------------------------------------------------------------------
# Register layout
# ---------------------------------------------------------------------------


class RegisterLayout:
    """Immutable description of a register: wire names, order and dimensions.

    Parameters
    ----------
    wires:
        Iterable of ``(name, dimension)`` pairs, least significant wire first.
        Names must be unique non-empty strings; dimensions must be >= 2.
    """

    __slots__ = ("_names", "_dims", "_axis_of", "_strides", "size")

    def __init__(self, wires: Iterable[tuple[str, int]]):
        names: list[str] = []
        dims: list[int] = []
        for name, dim in wires:
            if not isinstance(name, str) or not name:
                raise ValueError(f"wire name must be a non-empty string, got {name!r}")
            if name in names:
                raise ValueError(f"duplicate wire name {name!r}")
            if not isinstance(dim, int) or dim < 2:
                raise ValueError(f"wire {name!r} needs integer dimension >= 2, got {dim!r}")
            names.append(name)
            dims.append(dim)
        if not names:
            raise ValueError("register needs at least one wire")
        self._names = tuple(names)
        self._dims = tuple(dims)
        self._axis_of = {name: j for j, name in enumerate(names)}
        strides = []
        acc = 1
        for d in dims:
            strides.append(acc)
            acc *= d
        self._strides = tuple(strides)
        self.size = acc

    # -- basic queries ------------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def dims(self) -> tuple[int, ...]:
        return self._dims

    @property
    def num_wires(self) -> int:
        return len(self._names)

    def wire_index(self, name: str) -> int:
        try:
            return self._axis_of[name]
        except KeyError:
            raise KeyError(f"no wire named {name!r} in register {self._names}") from None

    def dim(self, name: str) -> int:
        return self._dims[self.wire_index(name)]

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        """Shape of the amplitude tensor: highest wire is the first axis."""
        return tuple(reversed(self._dims))

    def tensor_axis(self, name: str) -> int:
        """Axis of ``name`` in a tensor of shape :attr:`tensor_shape`."""
        return self.num_wires - 1 - self.wire_index(name)

    # -- index arithmetic ----------------------------------------------------

    def index_of(self, digits: Sequence[int]) -> int:
        """Flat index of the basis state with the given wire-indexed digits."""
        if len(digits) != self.num_wires:
            raise ValueError(f"expected {self.num_wires} digits, got {len(digits)}")
        idx = 0
        for x, d, s, name in zip(digits, self._dims, self._strides, self._names):
            if not 0 <= x < d:
                raise ValueError(f"digit {x} out of range for wire {name!r} (dim {d})")
            idx += x * s
        return idx

    def digits_of(self, index: int) -> tuple[int, ...]:
        """Wire-indexed digit tuple of a flat index."""
        if not 0 <= index < self.size:
            raise ValueError(f"index {index} out of range for register of size {self.size}")
        out = []
        for d in self._dims:
            out.append(index % d)
            index //= d
        return tuple(out)

    def all_digit_tuples(self) -> Iterable[tuple[int, ...]]:
        """All basis digit tuples in flat-index order."""
        for i in range(self.size):
            yield self.digits_of(i)

    def ket_str(self, digits: Sequence[int]) -> str:
        """Render digits as a ket string, highest wire first."""
        return "|" + ",".join(str(x) for x in reversed(list(digits))) + ">"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, RegisterLayout)
            and self._names == other._names
            and self._dims == other._dims
        )

    def __hash__(self) -> int:
        return hash((self._names, self._dims))

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}:{d}" for n, d in zip(self._names, self._dims))
        return f"RegisterLayout({inner})"


# ---------------------------------------------------------------------------
# State vectors
# ---------------------------------------------------------------------------


class StateVector:
    """A normalized pure state over a :class:`RegisterLayout`.

    Amplitudes are stored as a flat ``complex128`` array in mixed-radix order.
    Construction normalizes a copy of the input and rejects the zero vector;
    use :meth:`raw` when an unnormalized container is genuinely needed (e.g.
    fixed sign patterns used as measurement hypotheses).
    """

    __slots__ = ("layout", "amps")

    def __init__(self, layout: RegisterLayout, amps: np.ndarray | Sequence[complex]):
        arr = np.asarray(amps, dtype=np.complex128).reshape(-1).copy()
        if arr.size != layout.size:
            raise ValueError(f"expected {layout.size} amplitudes, got {arr.size}")
        nrm = float(np.linalg.norm(arr))
        if nrm < 1e-300:
            raise ValueError("cannot normalize the zero vector")
        if abs(nrm - 1.0) > 1e-9:
            arr /= nrm
        self.layout = layout
        self.amps = arr

    @classmethod
    def raw(cls, layout: RegisterLayout, amps: np.ndarray) -> "StateVector":
        """Wrap amplitudes without copying or normalizing (trusted callers)."""
        obj = object.__new__(cls)
        obj.layout = layout
        obj.amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        return obj

    @classmethod
    def basis(cls, layout: RegisterLayout, digits: Mapping[str, int] | Sequence[int]) -> "StateVector":
        """Basis state from a full digit tuple or a {wire: digit} mapping.

        Wires missing from a mapping default to digit 0.
        """
        if isinstance(digits, Mapping):
            full = [0] * layout.num_wires
            for name, val in digits.items():
                full[layout.wire_index(name)] = val
            digits = full
        amps = np.zeros(layout.size, dtype=np.complex128)
        amps[layout.index_of(digits)] = 1.0
        return cls.raw(layout, amps)

    # -- views and queries ---------------------------------------------------

    @property
    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped so the highest wire is the first axis."""
        return self.amps.reshape(self.layout.tensor_shape)

    def amplitude(self, digits: Mapping[str, int] | Sequence[int]) -> complex:
        if isinstance(digits, Mapping):
            full = [0] * self.layout.num_wires
            for name, val in digits.items():
                full[self.layout.wire_index(name)] = val
            digits = full
        return complex(self.amps[self.layout.index_of(digits)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def inner(self, other: "StateVector") -> complex:
        """Hermitian inner product <self|other>."""
        if self.layout != other.layout:
            raise ValueError("inner product requires matching layouts")
        return complex(np.vdot(self.amps, other.amps))

    def copy(self) -> "StateVector":
        return StateVector.raw(self.layout, self.amps.copy())

    def __repr__(self) -> str:
        terms = []
        for i in np.flatnonzero(np.abs(self.amps) > 1e-9)[:6]:
            terms.append(f"{self.amps[i]:.3g}{self.layout.ket_str(self.layout.digits_of(int(i)))}")
        body = " + ".join(terms) if terms else "0"
        return f"StateVector({body}{' + ...' if np.count_nonzero(np.abs(self.amps) > 1e-9) > 6 else ''})"


# ---------------------------------------------------------------------------
# Projectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Projector:
    """Product of single-wire digit projectors: P = prod_w |v_w><v_w|.

    ``factors`` is a tuple of ``(wire, digit)`` pairs.  An empty tuple is the
    identity.  Used both as a gate control condition and as a basis-pattern
    selector in :func:`decompose_by_projector`.
    """

    factors: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for wire, _ in self.factors:
            if wire in seen:
                raise ValueError(f"projector constrains wire {wire!r} twice")
            seen.add(wire)

    @classmethod
    def on(cls, assignments: Mapping[str, int]) -> "Projector":
        return cls(tuple(sorted(assignments.items())))

    def conjoin(self, other: "Projector") -> "Projector":
        return Projector(tuple(sorted(self.factors + other.factors)))

    @property
    def wires(self) -> tuple[str, ...]:
        return tuple(w for w, _ in self.factors)

    def mask(self, layout: RegisterLayout) -> np.ndarray:
        """Boolean tensor (shape = layout.tensor_shape) selecting the pattern."""
        mask = np.ones(layout.tensor_shape, dtype=bool)
        for wire, digit in self.factors:
            d = layout.dim(wire)
            if not 0 <= digit < d:
                raise ValueError(f"projector digit {digit} out of range on wire {wire!r}")
            ax = layout.tensor_axis(wire)
            sel = np.zeros(d, dtype=bool)
            sel[digit] = True
            shape = [1] * layout.num_wires
            shape[ax] = d
            mask = mask & sel.reshape(shape)
        return mask

    def expectation(self, state: StateVector) -> float:
        """<state| P |state> -- the probability of the projected pattern."""
        t = state.tensor
        return float(np.sum(np.abs(t[self.mask(state.layout)]) ** 2))


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------


class GateOp:
    """One primitive operation: a single-wire unitary, a swap of two
    same-dimension wires, or a global phase -- each optionally controlled by a
    :class:`Projector` (the operation acts on the projected subspace and the
    identity acts on its complement).

    Build instances through :meth:`unitary`, :meth:`swap` and
    :meth:`global_phase`.
    """

    __slots__ = ("kind", "matrix", "wires", "phase", "control")

    def __init__(self, kind: str, *, matrix: np.ndarray | None, wires: tuple[str, ...],
                 phase: complex | None, control: Projector):
        self.kind = kind
        self.matrix = matrix
        self.wires = wires
        self.phase = phase
        self.control = control

    @classmethod
    def unitary(cls, matrix: np.ndarray, wire: str, control: Projector | None = None) -> "GateOp":
        mat = np.asarray(matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("gate matrix must be square")
        if not np.allclose(mat.conj().T @ mat, np.eye(mat.shape[0]), atol=1e-10):
            raise ValueError("gate matrix is not unitary")
        return cls("unitary", matrix=mat, wires=(wire,), phase=None,
                   control=control or Projector())

    @classmethod
    def swap(cls, wire_a: str, wire_b: str, control: Projector | None = None) -> "GateOp":
        if wire_a == wire_b:
            raise ValueError("swap needs two distinct wires")
        return cls("swap", matrix=None, wires=(wire_a, wire_b), phase=None,
                   control=control or Projector())

    @classmethod
    def global_phase(cls, phase: complex, control: Projector | None = None) -> "GateOp":
        if abs(abs(phase) - 1.0) > 1e-10:
            raise ValueError("phase factor must have unit modulus")
        return cls("phase", matrix=None, wires=(), phase=complex(phase),
                   control=control or Projector())

    def controlled_on(self, extra: Projector) -> "GateOp":
        """Same operation with additional control factors conjoined."""
        return GateOp(self.kind, matrix=self.matrix, wires=self.wires,
                      phase=self.phase, control=self.control.conjoin(extra))

    def dagger(self) -> "GateOp":
        if self.kind == "unitary":
            return GateOp("unitary", matrix=self.matrix.conj().T, wires=self.wires,
                          phase=None, control=self.control)
        if self.kind == "phase":
            return GateOp("phase", matrix=None, wires=(), phase=self.phase.conjugate(),
                          control=self.control)
        return self  # swaps are involutions

    def __repr__(self) -> str:
        ctrl = f" if {dict(self.control.factors)}" if self.control.factors else ""
        if self.kind == "swap":
            return f"GateOp(swap {self.wires[0]}<->{self.wires[1]}{ctrl})"
        if self.kind == "phase":
            return f"GateOp(phase {self.phase:.4g}{ctrl})"
        return f"GateOp(unitary on {self.wires[0]}{ctrl})"


# -- common small matrices ---------------------------------------------------

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)


def ry(theta: float) -> np.ndarray:
    """exp(-i * sigma_y * theta): real rotation [[c, -s], [s, c]]."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def householder_uniform(d: int) -> np.ndarray:
    """Real orthogonal d x d matrix whose first column is the uniform vector.

    For d = 2 this is the Hadamard matrix.  Built as the reflection
    2|w><w| - 1 with w = (e_0 + u)/|e_0 + u| and u the uniform unit vector,
    which fixes the e_0 -> u map and is symmetric (hence an involution).
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    u = np.full(d, 1.0 / math.sqrt(d))
    w = u + np.eye(d)[0]
    w /= np.linalg.norm(w)
    mat = 2.0 * np.outer(w, w) - np.eye(d)
    return mat.astype(np.complex128)


# ---------------------------------------------------------------------------
# Applying gates
# ---------------------------------------------------------------------------


def _apply_single_wire(tensor: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(mat, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Apply one :class:`GateOp`, returning a new state."""
    layout = state.layout
    t = state.tensor

    if gate.control.factors:
        mask = gate.control.mask(layout)
        kept = np.where(mask, 0.0, t)
        active = np.where(mask, t, 0.0)
    else:
        kept = None
        active = t

    if gate.kind == "unitary":
        wire = gate.wires[0]
        if gate.matrix.shape[0] != layout.dim(wire):
            raise ValueError(
                f"gate of dimension {gate.matrix.shape[0]} does not fit wire "
                f"{wire!r} of dimension {layout.dim(wire)}"
            )
        if wire in gate.control.wires:
            raise ValueError(f"gate target {wire!r} collides with its own control")
        moved = _apply_single_wire(active, gate.matrix, layout.tensor_axis(wire))
    elif gate.kind == "swap":
        wa, wb = gate.wires
        if layout.dim(wa) != layout.dim(wb):
            raise ValueError(f"cannot swap wires of different dimension: {wa!r}, {wb!r}")
        if wa in gate.control.wires or wb in gate.control.wires:
            raise ValueError("swap target collides with its own control")
        moved = np.swapaxes(active, layout.tensor_axis(wa), layout.tensor_axis(wb))
    elif gate.kind == "phase":
        moved = gate.phase * active
    else:  # pragma: no cover - constructors forbid this
        raise ValueError(f"unknown gate kind {gate.kind!r}")

    out = moved if kept is None else kept + moved
    return StateVector.raw(layout, np.ascontiguousarray(out).reshape(-1))


def apply_circuit(state: StateVector, gates: Iterable[GateOp]) -> StateVector:
    """Apply gates in iteration order (element 0 acts first)."""
    for gate in gates:
        state = apply_gate(state, gate)
    return state


# ---------------------------------------------------------------------------
# Measurement-flavoured helpers
# ---------------------------------------------------------------------------


def decompose_by_projector(state: StateVector, pattern: Projector, flag_wire: str) -> StateVector:
    """Split a state into a pattern match and its complement on a flag qubit.

    The flag wire must be a qubit in |0> with no amplitude correlation to the
    rest of the register, and disjoint from the pattern's wires.  The result
    is ``(1-P)|psi>|0>_flag + P|psi>|1>_flag`` -- identical to applying
    X(flag) controlled on ``pattern``, which is exactly how it is realized.
    """
    layout = state.layout
    if layout.dim(flag_wire) != 2:
        raise ValueError(f"flag wire {flag_wire!r} must be a qubit")
    if flag_wire in pattern.wires:
        raise ValueError("flag wire cannot be part of the pattern")
    p1 = Projector.on({flag_wire: 1}).expectation(state)
    if p1 > ATOL:
        raise ValueError(f"flag wire {flag_wire!r} must start in |0> (P(1) = {p1:.3g})")
    return apply_gate(state, GateOp.unitary(PAULI_X, flag_wire, control=pattern))


def label_and_sum(state: StateVector, unitaries: Sequence[Iterable[GateOp] | GateOp | None],
                  label_wire: str) -> StateVector:
    """Put a d-level label wire through "uniformize, select, un-uniformize".

    ``unitaries[b]`` is the operation (gate, gate list, or None for identity)
    associated with label value ``b``; there must be exactly ``d`` entries
    where ``d`` is the label wire's dimension.  The label wire must start in
    |0> and none of the listed gates may touch it.  On the label-0 component
    of the output the register holds (1/d) * sum_b U_b |state>, with the
    mismatch spread over the other label values.
    """
    layout = state.layout
    d = layout.dim(label_wire)
    if len(unitaries) != d:
        raise ValueError(f"need {d} entries for label wire {label_wire!r}, got {len(unitaries)}")
    p0 = Projector.on({label_wire: 0}).expectation(state)
    if abs(p0 - 1.0) > 1e-9:
        raise ValueError(f"label wire {label_wire!r} must start in |0> (P(0) = {p0:.3g})")

    spread = householder_uniform(d)
    gates: list[GateOp] = [GateOp.unitary(spread, label_wire)]
    for b, entry in enumerate(unitaries):
        if entry is None:
            continue
        if isinstance(entry, GateOp):
            entry = [entry]
        ctrl = Projector.on({label_wire: b})
        for g in entry:
            if label_wire in g.wires or label_wire in g.control.wires:
                raise ValueError("labelled gates must not touch the label wire")
            gates.append(g.controlled_on(ctrl))
    gates.append(GateOp.unitary(spread.conj().T, label_wire))
    return apply_circuit(state, gates)


def marginal(state: StateVector, wires: Sequence[str]) -> dict[tuple[int, ...], float]:
    """Exact outcome distribution of measuring ``wires`` in the digit basis.

    Keys are digit tuples ordered like ``wires``.  Probabilities sum to 1 up
    to rounding; entries smaller than 1e-300 are kept (the full support is
    enumerated so downstream sampling sees a fixed, ordered outcome list).
    """
    if not wires:
        raise ValueError("marginal needs at least one wire")
    layout = state.layout
    axes = [layout.tensor_axis(w) for w in wires]
    if len(set(axes)) != len(axes):
        raise ValueError("duplicate wires in marginal request")
    probs = np.abs(state.tensor) ** 2
    other = tuple(ax for ax in range(layout.num_wires) if ax not in axes)
    reduced = probs.sum(axis=other) if other else probs
    # reduced axes are ordered by tensor axis (descending wire); realign to the
    # requested wire order.
    order = np.argsort(axes)          # positions sorted by tensor axis
    reduced = np.transpose(reduced, np.argsort(order))
    out: dict[tuple[int, ...], float] = {}
    for key in np.ndindex(reduced.shape):
        out[tuple(int(k) for k in key)] = float(reduced[key])
    return out


def sample(state: StateVector, wires: Sequence[str], shots: int,
           seed: int | Sequence[int] | np.random.Generator) -> dict[tuple[int, ...], int]:
    """Draw ``shots`` i.i.d. digit-basis outcomes on ``wires``.

    ``seed`` may be an integer, an integer sequence (handy for derived
    streams), or a ready-made generator.  Identical state, wires, shots and
    seed give identical counts.  Returns outcome -> count with zero-count
    outcomes omitted.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    dist = marginal(state, wires)
    keys = list(dist.keys())
    probs = np.array([dist[k] for k in keys])
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if total <= 0.0:
        raise ValueError("cannot sample from an all-zero marginal")
    probs /= total
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = rng.choice(len(keys), size=shots, p=probs)
    counts = np.bincount(draws, minlength=len(keys))
    return {keys[i]: int(c) for i, c in enumerate(counts) if c}
