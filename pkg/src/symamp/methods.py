"""End-to-end pipelines for symmetrized-overlap weights.

A weight Q^(k)(c^n) = |<c^n| P_k |psi>|^2, where P_k averages the first k
input wires over all k! orderings, is estimated here without ever building
the k!-term sum: a labelled-swap cascade prepares a start state whose two
hypothesis slots carry amplitudes proportional to sqrt(Q) at two chain
levels, and the two-hypothesis readout of the driver recovers their ratio.

Two pipelines are provided.  Method A branches on an ancilla qubit between
"do nothing" and "apply the full cascade", giving Q^(n)/Q^(1) in one shot.
Method B runs one circuit per level k, each relating Q^(k) to Q^(k-1)
through an interference readout, and multiplies the chain back together;
it requires real input amplitudes with positive reference overlap <c|psi>.

The bounded-offset and norm rescalings turn tables violating those sign
restrictions into admissible ones and reconstruct linear functionals of the
original table exactly afterwards.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import afga as _afga
from .afga import AFGAConfig, HypothesisReadout, clamp_estimate, drive_states, tth_readout
from .labellers import LabellerSpec, build_labeller, build_labeller_dagger, build_swap_stage
from .permutations import read_amplitude_table
from .sim import HADAMARD, PAULI_X, GateOp, Projector, RegisterLayout, StateVector, apply_circuit

ATOL = 1e-12

MAX_METHOD_N = 6


class ReferenceAmplitudeError(ValueError):
    """The reference overlap <c|psi> is unusable for the requested method."""


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodInstance:
    """One problem: arity n, wire dimension d, target tuple c, input psi.

    ``c`` is stored wire-0-first (the reverse of its display order); ``psi``
    is the flat amplitude vector over the mixed-radix input index, normalized
    on construction.
    """

    n: int
    d: int
    c: tuple[int, ...]
    psi: np.ndarray
    method: str = "A"

    def __post_init__(self) -> None:
        if not 2 <= self.n <= MAX_METHOD_N:
            raise ValueError(f"n must be in 2..{MAX_METHOD_N}")
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if len(self.c) != self.n or any(not 0 <= x < self.d for x in self.c):
            raise ValueError("c must hold n digits below d")
        if self.method not in ("A", "B"):
            raise ValueError("method must be 'A' or 'B'")
        psi = np.asarray(self.psi, dtype=complex).reshape(-1)
        if psi.size != self.d ** self.n:
            raise ValueError(f"psi must have d^n = {self.d ** self.n} amplitudes")
        norm = np.linalg.norm(psi)
        if norm < ATOL:
            raise ValueError("psi must be nonzero")
        object.__setattr__(self, "psi", psi / norm)
        if self.method == "B":
            if np.abs(psi.imag).max() > 1e-12:
                raise ReferenceAmplitudeError(
                    "method B needs real amplitudes; rescale the table "
                    "(bounded-offset rescaling splits it into two real ones) "
                    "or use method A")

    @property
    def c_display(self) -> str:
        return ",".join(str(x) for x in reversed(self.c))

    def reference_overlap(self) -> complex:
        """<c|psi> read directly off the input table."""
        idx = 0
        for j in reversed(range(self.n)):
            idx = idx * self.d + self.c[j]
        return complex(self.psi[idx])

    def swapped(self) -> "MethodInstance":
        """The same instance with psi replaced by swap(alpha0, alpha1) psi."""
        t = self.psi.reshape([self.d] * self.n)  # axis n-1-j <-> wire j
        t = t.swapaxes(self.n - 1, self.n - 2)
        return MethodInstance(self.n, self.d, self.c, t.reshape(-1), self.method)


# ---------------------------------------------------------------------------
# Layouts and circuit assembly
# ---------------------------------------------------------------------------


def alpha_wires(n: int) -> list[str]:
    return [f"a{j}" for j in range(n)]


def stage_label_wires(level: int) -> list[str]:
    return [f"b{j}_{level}" for j in range(level + 1)]


def method_layout(inst: MethodInstance, k: int | None = None) -> RegisterLayout:
    """Register for the level-k circuit (k = n default): n input qudits,
    label groups for stages 0..k-2, then branch (method A only), tag, flag."""
    k = inst.n if k is None else k
    wires: list[tuple[str, int]] = [(w, inst.d) for w in alpha_wires(inst.n)]
    for level in range(k - 1):
        wires += [(w, 2) for w in stage_label_wires(level)]
    if inst.method == "A":
        wires.append(("branch", 2))
    wires += [("tag", 2), ("flag", 2)]
    return RegisterLayout(wires)


_LABEL_WIRE = re.compile(r"b\d+_\d+")


def all_label_wires(layout: RegisterLayout) -> list[str]:
    return [w for w in layout.names if _LABEL_WIRE.fullmatch(w)]


def build_T_stage(level: int, alphas: list[str], labels: list[str]) -> list[GateOp]:
    """Closed cascade stage: labeller, controlled swaps, inverse labeller."""
    return build_swap_stage(level, alphas, labels)


def _inject(layout: RegisterLayout, inst: MethodInstance) -> StateVector:
    # Input wires are the least significant block, all ancillas start at 0.
    amps = np.zeros(layout.size, dtype=complex)
    amps[: inst.psi.size] = inst.psi
    return StateVector.raw(layout, amps)


def target_projector(inst: MethodInstance, layout: RegisterLayout) -> Projector:
    """pi(alpha) pi(beta): every input wire at its c digit, every label at 0."""
    assign = {w: c for w, c in zip(alpha_wires(inst.n), inst.c)}
    assign.update({w: 0 for w in all_label_wires(layout)})
    return Projector.on(assign)


def hypothesis_patterns(inst: MethodInstance, layout: RegisterLayout
                        ) -> tuple[StateVector, StateVector]:
    """(u0, u1) readout patterns of the method's claim table.

    Method A: u1 = (c, labels 0, branch 1, tag 1, flag 0), u0 the branch-0 /
    tag-0 twin.  Method B: u1 = (c, labels 0, tag 0, flag 0) and u0 = minus
    the tag-1 twin; the sign makes z0 = (2/k) sqrt(Q^(k-1)/2) - sqrt(Q^(k)/2)
    come out positive in the generic decreasing-overlap case.
    """
    base = {w: c for w, c in zip(alpha_wires(inst.n), inst.c)}
    base.update({w: 0 for w in all_label_wires(layout)})
    base["flag"] = 0
    if inst.method == "A":
        u1 = StateVector.basis(layout, {**base, "branch": 1, "tag": 1})
        u0 = StateVector.basis(layout, {**base, "branch": 0, "tag": 0})
        return u0, u1
    u1 = StateVector.basis(layout, {**base, "tag": 0})
    u0m = StateVector.basis(layout, {**base, "tag": 1})
    return StateVector.raw(layout, -u0m.amps), u1


def prepare_s_method_a(inst: MethodInstance) -> StateVector:
    """Branching circuit: flag on, equal superposition of (do nothing) and
    (full cascade), tag copied from the branch, flag cleared on the target.
    """
    if abs(inst.reference_overlap()) <= ATOL:
        raise ReferenceAmplitudeError(
            "<c|psi> = 0: reference hypothesis empty; swap two input wires "
            "(the overlap <c|P_n psi> is swap-invariant) and rerun")
    layout = method_layout(inst)
    alphas = alpha_wires(inst.n)
    on_branch = Projector.on({"branch": 1})
    gates: list[GateOp] = [
        GateOp.unitary(PAULI_X, "flag"),
        GateOp.unitary(HADAMARD, "branch"),
        GateOp.unitary(PAULI_X, "tag", control=on_branch),
    ]
    for level in range(inst.n - 1):
        for g in build_T_stage(level, alphas, stage_label_wires(level)):
            gates.append(g.controlled_on(on_branch))
    gates.append(GateOp.unitary(PAULI_X, "flag", control=target_projector(inst, layout)))
    return apply_circuit(_inject(layout, inst), gates)


def prepare_s_method_b(inst: MethodInstance, k: int) -> StateVector:
    """Level-k interference circuit.

    Stages 0..k-3 run closed; the last stage is held open around a tag flip
    on its label-zero component, so that after the inverse labeller the tag
    qubit separates the fully mixed term from the stage's input term.  A
    Hadamard on the tag then leaves, on the (c, labels 0, flag 0) slots,

        tag 0:  z1 = <c| P_k psi> / sqrt(2)
        tag 1:  z0 with z0 + z1 = (2/k) <c| P_{k-1} psi> / sqrt(2),

    which is the level-k chain relation.  Requires real psi, <c|psi> > 0.
    """
    if not 2 <= k <= inst.n:
        raise ValueError("k must be in 2..n")
    g1 = inst.reference_overlap()
    if g1.real <= ATOL:
        raise ReferenceAmplitudeError(
            "method B needs <c|psi> > 0; swap two input wires, negate psi, "
            "or rescale the table into an admissible one")
    layout = method_layout(inst, k)
    alphas = alpha_wires(inst.n)
    gates: list[GateOp] = [GateOp.unitary(PAULI_X, "flag")]
    for level in range(k - 2):
        gates += build_T_stage(level, alphas, stage_label_wires(level))
    last = k - 2
    labels = stage_label_wires(last)
    spec = LabellerSpec(len(labels), 1)
    gates += build_labeller(spec, labels)
    for j in reversed(range(last + 1)):
        gates.append(GateOp.swap(alphas[last - j], alphas[last + 1],
                                 control=Projector.on({labels[j]: 1})))
    gates.append(GateOp.unitary(PAULI_X, "tag",
                                control=Projector.on({w: 0 for w in labels})))
    gates += build_labeller_dagger(spec, labels)
    gates.append(GateOp.unitary(HADAMARD, "tag"))
    gates.append(GateOp.unitary(PAULI_X, "flag", control=target_projector(inst, layout)))
    return apply_circuit(_inject(layout, inst), gates)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class SymResult:
    """Inference output: the level chain and the final weight.

    ``levels`` lists the chain levels in the order they were run; entry i of
    q_values/ratios/signs belongs to levels[i].  Ratios are the measured
    |z1|/|z0| (inf when the reference slot is empty); signs are +1 when the
    interference readout saw P(+) > P(-).
    """

    method: str
    q1: float
    q_final: float
    levels: list[int]
    q_values: list[float]
    ratios: list[float]
    signs: list[int]
    patched: bool = False
    trial_log: list[dict] = field(default_factory=list)


def _safe_ratio(read: HypothesisReadout) -> float:
    return math.inf if read.p0 <= 0.0 else read.ratio_1_over_0


def _safe_ratio_inv(read: HypothesisReadout) -> float:
    return math.inf if read.p1 <= 0.0 else read.ratio_0_over_1


# ---------------------------------------------------------------------------
# Driving and readout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelReadout:
    """Filtered per-level measurement: probability summary plus the two
    ratio orientations, each filtered as a series (not recomputed from the
    filtered probabilities -- the estimator averages the ratio itself)."""

    readout: HypothesisReadout
    ratio10: float  # |z1|/|z0|
    ratio01: float  # |z0|/|z1|

    @property
    def sign(self) -> int:
        return self.readout.sign


def _drive_and_read(state: StateVector, u0: StateVector, u1: StateVector,
                    cfg: AFGAConfig, est: float, seed_tuple: tuple[int, ...],
                    ) -> list[HypothesisReadout]:
    """One trial: drive the prepared state, read each tail run's endpoint.

    Tail run r stops after steady_start + r steps; since the drive is
    deterministic, all tail runs of a trial are prefixes of one trajectory.
    Shot sampling gets an independent generator per tail run.
    """
    alphas = _afga.afga_schedule(est, cfg.del_lam, cfg.num_steps - 1)
    reads: list[HypothesisReadout] = []
    start = cfg.steady_start

    def read(j: int, st: StateVector) -> None:
        if j < start:
            return
        r = j - start
        if cfg.sampling == "shots":
            rng = np.random.default_rng(seed_tuple + (r,))
            reads.append(tth_readout(st, u0, u1, shots=cfg.shots, rng=rng))
        else:
            reads.append(tth_readout(st, u0, u1))

    read(0, state)
    for j, st in enumerate(drive_states(state, alphas, cfg.del_lam, state, "flag"), start=1):
        read(j, st)
    if len(reads) != cfg.tail_len:
        raise RuntimeError("tail bookkeeping error")
    return reads


def _filtered_level(state: StateVector, u0: StateVector, u1: StateVector,
                    cfg: AFGAConfig | None, *, level: int, q1: float,
                    adapt: bool, log: list[dict]) -> LevelReadout:
    """Run a level either by direct exact readout (cfg None) or by driving.

    With ``adapt`` the estimate is refined between trials from the filtered
    ratio and the known reference amplitude |z0| = sqrt(q1/2) (method A);
    otherwise the initial estimate is kept for every trial.
    """
    if cfg is None:
        read = tth_readout(state, u0, u1)
        return LevelReadout(read, _safe_ratio(read), _safe_ratio_inv(read))
    flt = _afga.FILTERS[cfg.filter]
    est = clamp_estimate((cfg.g0est_degs if cfg.g0est_degs is not None else 90.0) * _afga.DEG)
    result: LevelReadout | None = None
    for trial in range(cfg.num_trials):
        reads = _drive_and_read(state, u0, u1, cfg, est,
                                (cfg.seed, level, trial))
        ratio10 = flt([_safe_ratio(r) for r in reads])
        ratio01 = flt([_safe_ratio_inv(r) for r in reads])
        summary = HypothesisReadout(
            p0=flt([r.p0 for r in reads]), p1=flt([r.p1 for r in reads]),
            p_plus=flt([r.p_plus for r in reads]),
            p_minus=flt([r.p_minus for r in reads]))
        result = LevelReadout(summary, ratio10, ratio01)
        entry = {"level": level, "trial": trial, "estimate_in_degs": est / _afga.DEG,
                 "ratio": ratio10, "p_plus": summary.p_plus, "p_minus": summary.p_minus}
        if adapt and math.isfinite(ratio10):
            z0_sq = q1 / 2.0
            p_hat = min(1.0 - 1e-15, (ratio10 ** 2 + 1.0) * z0_sq)
            est = clamp_estimate(2.0 * math.acos(math.sqrt(p_hat)))
        entry["estimate_out_degs"] = est / _afga.DEG
        log.append(entry)
    assert result is not None
    return result


# ---------------------------------------------------------------------------
# The two pipelines
# ---------------------------------------------------------------------------


def run_method_a(inst: MethodInstance, cfg: AFGAConfig | None = None) -> SymResult:
    """Q^(n) = (P(1)/P(0)) * Q^(1), with Q^(1) known from the input table.

    cfg None reads the prepared state exactly; otherwise the state is driven
    and the readout filtered over tail runs per trial.  A vanishing <c|psi>
    is patched by swapping the first two input wires (which leaves the
    symmetrized overlap unchanged) before giving up.
    """
    work = inst if inst.method == "A" else MethodInstance(inst.n, inst.d, inst.c, inst.psi, "A")
    patched = False
    if abs(work.reference_overlap()) <= ATOL:
        work = work.swapped()
        patched = True
        if abs(work.reference_overlap()) <= ATOL:
            raise ReferenceAmplitudeError(
                "<c|psi> = 0 even after the wire-swap patch; supply a "
                "partially symmetrized psi or a rescaled table")
    q1 = abs(work.reference_overlap()) ** 2
    state = prepare_s_method_a(work)
    u0, u1 = hypothesis_patterns(work, state.layout)
    log: list[dict] = []
    lev = _filtered_level(state, u0, u1, cfg, level=work.n, q1=q1, adapt=True, log=log)
    if not math.isfinite(lev.ratio10):
        raise ValueError("P(0) readout vanished; increase shots or check the instance")
    q_final = lev.ratio10 ** 2 * q1
    return SymResult(method="A", q1=q1, q_final=q_final, levels=[work.n],
                     q_values=[q_final], ratios=[lev.ratio10],
                     signs=[lev.sign], patched=patched, trial_log=log)


def run_method_b(inst: MethodInstance, cfg: AFGAConfig | None = None) -> SymResult:
    """Chain inference: for k = n..2 read the level-k interference circuit,
    then accumulate g_k = (2/k) g_{k-1} / (1 + sign_k sqrt(P_k(0)/P_k(1)))
    upward from g_1 = <c|psi>."""
    work = inst if inst.method == "B" else MethodInstance(inst.n, inst.d, inst.c, inst.psi, "B")
    g1 = work.reference_overlap().real
    if g1 <= ATOL:
        raise ReferenceAmplitudeError(
            "method B needs <c|psi> > 0; swap two input wires, negate psi, "
            "or rescale the table into an admissible one")
    reads: dict[int, LevelReadout] = {}
    log: list[dict] = []
    for k in range(work.n, 1, -1):
        state = prepare_s_method_b(work, k)
        u0, u1 = hypothesis_patterns(work, state.layout)
        reads[k] = _filtered_level(state, u0, u1, cfg, level=k, q1=g1 * g1,
                                   adapt=False, log=log)
    g = g1
    g_by_level: dict[int, float] = {}
    for k in range(2, work.n + 1):
        lev = reads[k]
        rho = lev.ratio01
        if not math.isfinite(rho):
            raise ValueError(f"level {k}: P(1) = 0, chain recursion undefined")
        term = 1.0 + (lev.sign if rho > 0.0 else 1) * rho
        g = (2.0 / k) * g / term
        g_by_level[k] = g
    levels = list(range(work.n, 1, -1))
    return SymResult(
        method="B", q1=g1 * g1, q_final=g_by_level[work.n] ** 2, levels=levels,
        q_values=[g_by_level[k] ** 2 for k in levels],
        ratios=[reads[k].ratio10 for k in levels],
        signs=[reads[k].sign for k in levels],
        patched=False, trial_log=log)


def run_instance(inst: MethodInstance, cfg: AFGAConfig | None = None) -> SymResult:
    return run_method_a(inst, cfg) if inst.method == "A" else run_method_b(inst, cfg)


# ---------------------------------------------------------------------------
# Rescaling helpers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RescaleRecipe:
    """How to evaluate M f from the rescaled tables instead of f itself."""

    kind: str
    g_r: np.ndarray
    g_i: np.ndarray
    scale: float
    offset: complex = 0.0
    row_sums: np.ndarray | None = None

    def reconstruct(self, matrix: np.ndarray) -> np.ndarray:
        m = np.asarray(matrix)
        out = self.scale * (m @ self.g_r + 1j * (m @ self.g_i))
        if self.kind == "bounded":
            rs = self.row_sums if self.row_sums is not None else m.sum(axis=1)
            out = out + self.offset * rs
        return out


def rescale_bounded(f_minus: np.ndarray, a_r: float, a_i: float,
                    b_r: float, b_i: float,
                    row_sums: np.ndarray | None = None,
                    ) -> tuple[np.ndarray, np.ndarray, RescaleRecipe]:
    """Shift-and-scale a strictly bounded complex table into two [0,1] ones.

    Requires a_r < Re f < b_r and a_i < Im f < b_i entrywise.  With
    L = max(b_r - a_r, b_i - a_i):  g_r = (Re f - a_r)/L, g_i likewise, and
    M f = L (M g_r + i M g_i) + (a_r + i a_i) (row sums of M) exactly.
    """
    f = np.asarray(f_minus, dtype=complex)
    if not (np.all(f.real > a_r) and np.all(f.real < b_r)):
        raise ValueError("real parts must lie strictly inside (a_r, b_r)")
    if not (np.all(f.imag > a_i) and np.all(f.imag < b_i)):
        raise ValueError("imaginary parts must lie strictly inside (a_i, b_i)")
    L = max(b_r - a_r, b_i - a_i)
    if L <= 0.0:
        raise ValueError("bound widths must be positive")
    g_r = (f.real - a_r) / L
    g_i = (f.imag - a_i) / L
    recipe = RescaleRecipe(kind="bounded", g_r=g_r, g_i=g_i, scale=L,
                           offset=complex(a_r, a_i),
                           row_sums=None if row_sums is None else np.asarray(row_sums))
    return g_r, g_i, recipe


def rescale_norm(f_minus: np.ndarray, N: float) -> tuple[np.ndarray, RescaleRecipe]:
    """Divide a table by N > 0; M f = N * (M g).  canonical_norm gives the
    choice that makes the scaled table a unit vector."""
    if not N > 0.0:
        raise ValueError("N must be > 0")
    f = np.asarray(f_minus, dtype=complex)
    g = f / N
    recipe = RescaleRecipe(kind="norm", g_r=g.real, g_i=g.imag, scale=N)
    return g, recipe


def canonical_norm(f_minus: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(f_minus, dtype=complex).reshape(-1)))


# ---------------------------------------------------------------------------
# Instance files
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "del_lam_degs": float, "num_steps": int, "tail_len": int,
    "num_trials": int, "plotted_trial": int, "filter": str,
    "sampling": str, "shots": int, "seed": int,
    "g0_degs": float, "g0est_degs": float,
}


def parse_key_values(text: str) -> dict[str, str]:
    """``key = value`` lines; blank lines and # comments ignored."""
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*\S)", line)
        if m is None:
            raise ValueError(f"line {ln}: expected 'key = value', got {raw!r}")
        out[m.group(1)] = m.group(2)
    return out


def parse_instance_file(path: str | Path) -> tuple[MethodInstance, dict]:
    """Read an instance description plus any driver-config overrides.

    Recognized instance keys: n, d, c (comma-separated digits in display
    order, most significant wire first), method, psi_file (amplitude table,
    relative paths resolved against the instance file).  Remaining keys must
    be driver-config fields and are returned unparsed into the config dict.
    """
    path = Path(path)
    kv = parse_key_values(path.read_text())
    try:
        n = int(kv.pop("n", "4"))
        d = int(kv.pop("d"))
        c_display = [int(t) for t in kv.pop("c").split(",")]
        method = kv.pop("method", "A").upper()
        psi_file = kv.pop("psi_file")
    except KeyError as exc:
        raise ValueError(f"instance file missing key {exc.args[0]!r}") from None
    psi_path = Path(psi_file)
    if not psi_path.is_absolute():
        psi_path = path.parent / psi_path
    psi = read_amplitude_table(psi_path, n, d)
    inst = MethodInstance(n=n, d=d, c=tuple(reversed(c_display)), psi=psi, method=method)
    overrides: dict = {}
    for key, raw in kv.items():
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown instance key {key!r}")
        overrides[key] = _CONFIG_KEYS[key](raw)
    return inst, overrides
