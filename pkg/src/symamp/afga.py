"""Fixed-point Grover driver with an adaptive schedule, plus the
two-hypothesis readout and the blind-targeting outer loop.

Two models of the same dynamics live here:

* a Bloch-sphere model -- the driven state is a unit 3-vector, the target is
  the north pole, and one step is "rotate by del_lam about the target axis,
  then by a schedule angle alpha_j about the start axis";
* the full Hilbert-space model -- the same two rotations realized as the
  phase gates exp(-i*del_lam*|0><0|_flag) and exp(-i*alpha_j*|s><s|), acting
  on states prepared by the method pipelines.

The schedule is computed blindly from an *estimate* of the start-to-target
angle; the blind-targeting loop runs batches of tail runs, low-pass filters
a steady-state observable, and refines the estimate between trials.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .sim import StateVector

DEG = math.pi / 180.0

#: Estimates are kept strictly inside the open interval (0, pi) so the
#: schedule stays well defined; tenth-of-a-degree margins.
EST_MIN = 0.1 * DEG
EST_MAX = 179.9 * DEG


# ---------------------------------------------------------------------------
# Rotations and the Bloch-sphere model
# ---------------------------------------------------------------------------


def rotate_about(axis: np.ndarray, angle: float, vec: np.ndarray) -> np.ndarray:
    """Right-handed rotation of ``vec`` by ``angle`` about unit ``axis``."""
    c, s = math.cos(angle), math.sin(angle)
    return c * vec + s * np.cross(axis, vec) + (1.0 - c) * axis * float(axis @ vec)


def start_vector(gamma: float) -> np.ndarray:
    """Unit vector at polar angle gamma from the target axis, azimuth 0."""
    return np.array([math.sin(gamma), 0.0, math.cos(gamma)])


@dataclass(frozen=True)
class BlochState:
    """A point of one driven trajectory: current vector + fixed start axis."""

    vec: np.ndarray
    axis: np.ndarray

    def __post_init__(self) -> None:
        for name, v in (("vec", self.vec), ("axis", self.axis)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise ValueError(f"{name} must be a unit vector")

    @classmethod
    def at_angle(cls, gamma: float) -> "BlochState":
        v = start_vector(gamma)
        return cls(vec=v, axis=v.copy())


def step_bloch(s: BlochState, alpha: float, del_lam: float) -> BlochState:
    """One driver step: del_lam about the target axis z, then alpha about
    the trajectory's start axis."""
    v = rotate_about(np.array([0.0, 0.0, 1.0]), del_lam, s.vec)
    v = rotate_about(s.axis, alpha, v)
    return BlochState(vec=v / np.linalg.norm(v), axis=s.axis)


def afga_schedule(gamma_est: float, del_lam: float, num_steps: int) -> np.ndarray:
    """Blind rotation-angle schedule alpha_0..alpha_{num_steps-1}.

    Computed by evolving the *ideal* trajectory that starts at the estimated
    vector: each step applies the del_lam rotation and then picks the alpha
    that maximizes the resulting z-component (closed form via atan2).  When
    the objective is flat to machine precision -- estimate at the pole, or an
    ideal trajectory that has already converged -- alpha = 0 is chosen, which
    makes a vanishing estimate a fixed point.

    Depends only on (gamma_est, del_lam, num_steps); never sees a true state.
    """
    if not 0.0 < gamma_est < math.pi:
        raise ValueError("gamma_est must lie strictly between 0 and pi")
    if num_steps < 0:
        raise ValueError("num_steps must be >= 0")
    axis = start_vector(gamma_est)
    zhat = np.array([0.0, 0.0, 1.0])
    vec = axis.copy()
    alphas = np.empty(num_steps)
    for j in range(num_steps):
        v = rotate_about(zhat, del_lam, vec)
        proj = float(axis @ v)
        a = v[2] - axis[2] * proj
        b = float(np.cross(axis, v)[2])
        gain = math.hypot(a, b)
        alpha = 0.0 if gain - a < 1e-15 else math.atan2(b, a)
        alphas[j] = alpha
        vec = rotate_about(axis, alpha, v)
    return alphas


def bloch_trajectory(gamma0: float, alphas: Sequence[float], del_lam: float) -> np.ndarray:
    """Points s_0..s_N of the true trajectory (N = len(alphas) steps)."""
    state = BlochState.at_angle(gamma0)
    out = np.empty((len(alphas) + 1, 3))
    out[0] = state.vec
    for j, alpha in enumerate(alphas):
        state = step_bloch(state, alpha, del_lam)
        out[j + 1] = state.vec
    return out


# ---------------------------------------------------------------------------
# Filters
# ---------------------------------------------------------------------------


def mmm_filter(values: Sequence) -> np.ndarray | float:
    """(max + min)/2, component-wise for a series of vectors."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("filter input must be nonempty")
    mid = (arr.max(axis=0) + arr.min(axis=0)) / 2.0
    return float(mid) if np.ndim(mid) == 0 else mid


def mean_filter(values: Sequence) -> np.ndarray | float:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("filter input must be nonempty")
    mid = arr.mean(axis=0)
    return float(mid) if np.ndim(mid) == 0 else mid


FILTERS: dict[str, Callable] = {"mmm": mmm_filter, "mean": mean_filter}


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AFGAConfig:
    """The seven experiment inputs plus filter and sampling choices.

    Angles are degrees (as in config files); g0_degs is the true start angle
    of the Bloch experiment and g0est_degs the initial estimate.  The method
    pipelines ignore both (their start state fixes the true angle and they
    seed their own estimate), so the two may be None there.
    """

    del_lam_degs: float
    num_steps: int
    tail_len: int
    num_trials: int
    g0_degs: float | None = None
    g0est_degs: float | None = None
    plotted_trial: int = 0
    filter: str = "mmm"
    sampling: str = "exact"
    shots: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_steps < 2:
            raise ValueError("num_steps must be >= 2")
        if not 1 <= self.tail_len <= self.num_steps:
            raise ValueError("tail_len must be in 1..num_steps")
        if self.num_trials < 1:
            raise ValueError("num_trials must be >= 1")
        if not 0 <= self.plotted_trial < self.num_trials:
            raise ValueError("plotted_trial must be < num_trials")
        if self.del_lam_degs == 0.0:
            raise ValueError("del_lam_degs must be nonzero")
        for name, val in (("g0_degs", self.g0_degs), ("g0est_degs", self.g0est_degs)):
            if val is not None and not 0.0 < val < 180.0:
                raise ValueError(f"{name} must lie strictly between 0 and 180")
        if self.filter not in FILTERS:
            raise ValueError(f"unknown filter {self.filter!r} (have: {sorted(FILTERS)})")
        if self.sampling not in ("exact", "shots"):
            raise ValueError("sampling must be 'exact' or 'shots'")
        if self.sampling == "shots" and self.shots < 1:
            raise ValueError("shots must be >= 1 in shot sampling mode")

    @property
    def del_lam(self) -> float:
        return self.del_lam_degs * DEG

    @property
    def steady_start(self) -> int:
        """First trajectory index of the steady-state tail."""
        return self.num_steps - self.tail_len

    def require_bloch_angles(self) -> tuple[float, float]:
        if self.g0_degs is None or self.g0est_degs is None:
            raise ValueError("this experiment needs both g0_degs and g0est_degs")
        return self.g0_degs * DEG, self.g0est_degs * DEG


@dataclass
class TrialRecord:
    """One blind-targeting trial: what went in, what was measured, what
    estimate came out."""

    trial: int
    estimate_in_degs: float
    tail: list
    filtered: object
    estimate_out_degs: float
    trajectory: np.ndarray | None = None


def clamp_estimate(rad: float) -> float:
    return min(max(rad, EST_MIN), EST_MAX)


def run_blind_targeting(cfg: AFGAConfig,
                        tail_runner: Callable[[float, AFGAConfig, int], tuple[list, np.ndarray | None]] | None = None,
                        update: Callable[[object, float, AFGAConfig], float] | None = None,
                        ) -> list[TrialRecord]:
    """Outer estimation loop: trials of tail runs, filtered, fed back.

    ``tail_runner(est_rad, cfg, trial)`` produces (tail values, trajectory);
    tail run r is the driver executed for steady_start + r steps at the fixed
    estimate, and its value is the configured observable of the final state.
    ``update(filtered, est_rad, cfg)`` maps the filtered tail value to the
    next estimate (radians).  The defaults implement the Bloch experiment:
    the observable is the state vector itself and the update reads the new
    angle off the filtered circle center against the true start vector.

    Consecutive trials share nothing except the estimate, so the per-trial
    tail runs could run concurrently; they are executed as one deterministic
    sweep here (the dynamics are measurement-free until the final readout).
    """
    if tail_runner is None:
        tail_runner = _bloch_tail_runner
    if update is None:
        update = _bloch_update
    flt = FILTERS[cfg.filter]
    if cfg.g0est_degs is None:
        raise ValueError("blind targeting needs an initial estimate (g0est_degs)")
    est = clamp_estimate(cfg.g0est_degs * DEG)
    records: list[TrialRecord] = []
    for trial in range(cfg.num_trials):
        tail, trajectory = tail_runner(est, cfg, trial)
        if len(tail) != cfg.tail_len:
            raise ValueError("tail runner returned the wrong number of values")
        filtered = flt(tail)
        new_est = clamp_estimate(update(filtered, est, cfg))
        records.append(TrialRecord(trial=trial, estimate_in_degs=est / DEG,
                                   tail=list(tail), filtered=filtered,
                                   estimate_out_degs=new_est / DEG,
                                   trajectory=trajectory))
        est = new_est
    return records


def _bloch_tail_runner(est: float, cfg: AFGAConfig, trial: int) -> tuple[list, np.ndarray]:
    gamma0, _ = cfg.require_bloch_angles()
    alphas = afga_schedule(est, cfg.del_lam, cfg.num_steps - 1)
    pts = bloch_trajectory(gamma0, alphas, cfg.del_lam)
    # Tail run r ends after steady_start + r steps; with deterministic
    # dynamics those endpoints are precisely the last tail_len points of a
    # single full trajectory, so one sweep serves every tail run.
    tail = [pts[cfg.steady_start + r] for r in range(cfg.tail_len)]
    return tail, pts[: cfg.num_steps]


def _bloch_update(filtered: np.ndarray, est: float, cfg: AFGAConfig) -> float:
    gamma0, _ = cfg.require_bloch_angles()
    norm = float(np.linalg.norm(filtered))
    if norm < 1e-12:
        raise ValueError("filtered tail collapsed to the origin; cannot orient the target")
    target_est = np.asarray(filtered) / norm
    cosang = float(np.clip(start_vector(gamma0) @ target_est, -1.0, 1.0))
    return math.acos(cosang)


# ---------------------------------------------------------------------------
# Hilbert-space driver
# ---------------------------------------------------------------------------


def drive_states(start: StateVector, alphas: Iterable[float], del_lam: float,
                 s_state: StateVector, flag_wire: str) -> Iterator[StateVector]:
    """Iterate the full-space driver, yielding the state after each step.

    One step applies exp(-i*del_lam*P0(flag)) -- the sufficient-target phase
    -- followed by exp(-i*alpha_j*|s><s|) with |s> the prepared start state.
    """
    layout = start.layout
    axis = layout.tensor_axis(flag_wire)
    if layout.dim(flag_wire) != 2:
        raise ValueError("flag wire must be a qubit")
    phase0 = np.exp(-1j * del_lam)
    psi = start.amps.copy()
    s = s_state.amps
    sel = [slice(None)] * layout.num_wires
    sel[axis] = 0
    sel = tuple(sel)
    for alpha in alphas:
        t = psi.reshape(layout.tensor_shape)
        t[sel] *= phase0
        psi = t.reshape(-1)
        psi = psi + (np.exp(-1j * alpha) - 1.0) * np.vdot(s, psi) * s
        yield StateVector.raw(layout, psi.copy())


# ---------------------------------------------------------------------------
# Two-hypothesis readout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisReadout:
    """Probabilities of the two hypothesis patterns and their interference.

    p0/p1 are conditional on landing in the two-pattern subspace; pPlus and
    pMinus are read after the basis rotation that interferes the patterns.
    Ratio and phase quantities are exposed as properties so that degenerate
    denominators only fail when actually consumed.
    """

    p0: float
    p1: float
    p_plus: float
    p_minus: float
    counts01: tuple[int, int] | None = None
    counts_pm: tuple[int, int] | None = None

    @property
    def ratio_1_over_0(self) -> float:
        """|z1|/|z0| = sqrt(P(1)/P(0))."""
        if self.p0 <= 0.0:
            raise ValueError(
                "P(0) vanished: the reference hypothesis has no amplitude; "
                "swap two input wires (partial symmetrization) and rerun")
        return math.sqrt(self.p1 / self.p0)

    @property
    def ratio_0_over_1(self) -> float:
        """|z0|/|z1| = sqrt(P(0)/P(1))."""
        if self.p1 <= 0.0:
            raise ValueError("P(1) vanished: the amplified hypothesis has no amplitude")
        return math.sqrt(self.p0 / self.p1)

    @property
    def sign(self) -> int:
        """+1 if P(+) > P(-), else -1: the sign of Re(z0 * conj(z1))."""
        return 1 if self.p_plus > self.p_minus else -1

    @property
    def cos_theta(self) -> float:
        """Relative-phase cosine (P(+) - P(-)) / (2 sqrt(P(0) P(1)))."""
        denom = 2.0 * math.sqrt(self.p0 * self.p1)
        if denom == 0.0:
            raise ValueError("cos(theta) undefined when either hypothesis probability vanishes")
        return (self.p_plus - self.p_minus) / denom


def _pattern_flat_index(u: StateVector) -> int:
    nz = np.flatnonzero(np.abs(u.amps) > 1e-14)
    if nz.size != 1:
        raise ValueError("shot sampling needs basis-ket hypothesis patterns")
    return int(nz[0])


def interfere_hypotheses(state: StateVector, u0: StateVector, u1: StateVector) -> StateVector:
    """Rotate so the u0/u1 slots carry (z0 +- z1)/sqrt(2) instead of z0, z1.

    Extends the plane Hadamard u0 -> (u0+u1)/sqrt(2), u1 -> (u0-u1)/sqrt(2)
    by the identity on the orthocomplement.
    """
    up = (u0.amps + u1.amps) / math.sqrt(2.0)
    um = (u0.amps - u1.amps) / math.sqrt(2.0)
    cp = np.vdot(up, state.amps)
    cm = np.vdot(um, state.amps)
    out = state.amps - cp * up - cm * um + cp * u0.amps + cm * u1.amps
    return StateVector.raw(state.layout, out)


def tth_readout(state: StateVector, u0: StateVector, u1: StateVector, *,
                shots: int | None = None,
                rng: np.random.Generator | None = None) -> HypothesisReadout:
    """Measure the two-hypothesis structure of a driven state.

    u0 and u1 are orthonormal hypothesis patterns (states, possibly signed
    basis kets).  Exact mode reads amplitudes; shot mode draws basis-
    measurement counts (``shots`` of them, twice: once as-is for P(0)/P(1),
    once after :func:`interfere_hypotheses` for P(+)/P(-)).
    """
    z0 = np.vdot(u0.amps, state.amps)
    z1 = np.vdot(u1.amps, state.amps)
    p = abs(z0) ** 2 + abs(z1) ** 2
    if p <= 0.0:
        raise ValueError("state carries no amplitude on either hypothesis pattern")

    if shots is None:
        zp = (z0 + z1) / math.sqrt(2.0)
        zm = (z0 - z1) / math.sqrt(2.0)
        return HypothesisReadout(
            p0=abs(z0) ** 2 / p, p1=abs(z1) ** 2 / p,
            p_plus=abs(zp) ** 2 / p, p_minus=abs(zm) ** 2 / p)

    if shots < 1:
        raise ValueError("shots must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    i0, i1 = _pattern_flat_index(u0), _pattern_flat_index(u1)

    def draw(st: StateVector) -> tuple[int, int]:
        pa = abs(st.amps[i0]) ** 2
        pb = abs(st.amps[i1]) ** 2
        rest = max(0.0, 1.0 - pa - pb)
        total = pa + pb + rest
        counts = rng.multinomial(shots, [pa / total, pb / total, rest / total])
        return int(counts[0]), int(counts[1])

    n0, n1 = draw(state)
    if n0 + n1 == 0:
        raise ValueError("no shots landed on either hypothesis pattern; increase shots")
    npl, nmi = draw(interfere_hypotheses(state, u0, u1))
    if npl + nmi == 0:
        raise ValueError("no shots landed on the interfered patterns; increase shots")
    return HypothesisReadout(
        p0=n0 / (n0 + n1), p1=n1 / (n0 + n1),
        p_plus=npl / (npl + nmi), p_minus=nmi / (npl + nmi),
        counts01=(n0, n1), counts_pm=(npl, nmi))
