"""Method pipelines against the brute-force reference and closed forms.

The independent reference throughout is the dense symmetrizer (or its
partial, first-k-wires embedding) applied to the raw amplitude table;
everything circuit-shaped must reproduce it.
"""

import math

import numpy as np
import pytest

from symamp.afga import AFGAConfig
from symamp.methods import (
    MAX_METHOD_N,
    MethodInstance,
    ReferenceAmplitudeError,
    all_label_wires,
    alpha_wires,
    canonical_norm,
    hypothesis_patterns,
    method_layout,
    parse_instance_file,
    parse_key_values,
    prepare_s_method_a,
    prepare_s_method_b,
    rescale_bounded,
    rescale_norm,
    run_instance,
    run_method_a,
    run_method_b,
    stage_label_wires,
)
from symamp.permutations import Symmetrizer, oracle_symmetrized_amplitude, write_amplitude_table
from symamp.sim import StateVector


def random_table(n, d, seed, real=False):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=d**n)
    if not real:
        amps = amps + 1j * rng.normal(size=d**n)
    return amps / np.linalg.norm(amps)


def partial_sym(amps, n, d, k):
    """Average of the k! orderings of the first k wires, applied to a table."""
    pi = Symmetrizer(k).dense(d)
    block = np.asarray(amps).reshape(d ** (n - k), d**k)
    return (block @ pi).reshape(-1)  # pi is symmetric


def overlap_at(amps, c, d):
    idx = 0
    for digit in reversed(c):
        idx = idx * d + digit
    return amps[idx]


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


def test_instance_validation():
    with pytest.raises(ValueError):
        MethodInstance(1, 2, (0,), np.ones(2))
    with pytest.raises(ValueError):
        MethodInstance(MAX_METHOD_N + 1, 2, (0,) * (MAX_METHOD_N + 1), np.ones(2 ** (MAX_METHOD_N + 1)))
    with pytest.raises(ValueError):
        MethodInstance(2, 2, (0, 2), np.ones(4))
    with pytest.raises(ValueError):
        MethodInstance(2, 2, (0, 1), np.ones(5))
    with pytest.raises(ValueError):
        MethodInstance(2, 2, (0, 1), np.zeros(4))
    with pytest.raises(ValueError):
        MethodInstance(2, 2, (0, 1), np.ones(4), method="C")


def test_method_b_requires_real_tables():
    with pytest.raises(ReferenceAmplitudeError):
        MethodInstance(2, 2, (0, 1), np.array([1.0, 1j, 0, 0]), method="B")
    assert issubclass(ReferenceAmplitudeError, ValueError)


def test_instance_normalizes_and_reads_overlap():
    inst = MethodInstance(4, 2, (1, 1, 0, 0), 2.0 * np.eye(16)[3])
    assert np.linalg.norm(inst.psi) == pytest.approx(1.0)
    assert inst.reference_overlap() == pytest.approx(1.0)
    assert inst.c_display == "0,0,1,1"


def test_swapped_exchanges_first_two_wires():
    psi = random_table(3, 2, 19)
    inst = MethodInstance(3, 2, (0, 0, 0), psi)
    sw = inst.swapped()
    t = psi.reshape(2, 2, 2)  # [a2, a1, a0]
    assert np.allclose(sw.psi, t.transpose(0, 2, 1).reshape(-1), atol=1e-12)


# ---------------------------------------------------------------------------
# Layouts
# ---------------------------------------------------------------------------


def test_method_a_layout_wire_names():
    inst = MethodInstance(3, 2, (0, 0, 1), random_table(3, 2, 23))
    layout = method_layout(inst)
    assert layout.names == (
        "a0", "a1", "a2", "b0_0", "b0_1", "b1_1", "branch", "tag", "flag",
    )


def test_method_b_level_layout_wire_names():
    inst = MethodInstance(3, 2, (0, 0, 1), random_table(3, 2, 23, real=True), method="B")
    layout = method_layout(inst, k=2)
    assert layout.names == ("a0", "a1", "a2", "b0_0", "tag", "flag")


def test_label_wire_listing_skips_other_ancillas():
    # "branch" must not be mistaken for a stage label wire
    inst = MethodInstance(3, 2, (0, 0, 1), random_table(3, 2, 23))
    labels = all_label_wires(method_layout(inst))
    assert labels == ["b0_0", "b0_1", "b1_1"]
    assert alpha_wires(3) == ["a0", "a1", "a2"]
    assert stage_label_wires(2) == ["b0_2", "b1_2", "b2_2"]


def test_hypothesis_patterns_are_orthonormal():
    for method in ("A", "B"):
        inst = MethodInstance(3, 2, (1, 0, 1), random_table(3, 2, 29, real=True), method=method)
        layout = method_layout(inst)
        u0, u1 = hypothesis_patterns(inst, layout)
        assert abs(u0.inner(u0)) == pytest.approx(1.0)
        assert abs(u1.inner(u1)) == pytest.approx(1.0)
        assert u0.inner(u1) == 0


def test_method_b_reference_pattern_is_negated():
    inst = MethodInstance(2, 2, (0, 1), random_table(2, 2, 31, real=True), method="B")
    layout = method_layout(inst)
    u0, _ = hypothesis_patterns(inst, layout)
    idx = int(np.flatnonzero(np.abs(u0.amps) > 0.5)[0])
    assert u0.amps[idx] == -1.0
    digits = dict(zip(layout.names, layout.digits_of(idx)))
    assert digits["tag"] == 1 and digits["flag"] == 0


# ---------------------------------------------------------------------------
# Prepared states: amplitude bookkeeping
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n,d,seed", [(2, 2, 1), (3, 2, 2), (4, 2, 3), (3, 3, 4)])
def test_method_a_start_state_amplitudes(n, d, seed):
    psi = random_table(n, d, seed)  # complex is fine for the branch circuit
    rng = np.random.default_rng(seed + 100)
    c = tuple(int(x) for x in rng.integers(0, d, size=n))
    inst = MethodInstance(n, d, c, psi)
    state = prepare_s_method_a(inst)
    u0, u1 = hypothesis_patterns(inst, state.layout)
    z0 = u0.inner(state)
    z1 = u1.inner(state)
    g1 = overlap_at(inst.psi, c, d)
    gn = overlap_at(partial_sym(inst.psi, n, d, n), c, d)
    assert z0 == pytest.approx(g1 / math.sqrt(2), abs=1e-12)
    assert z1 == pytest.approx(gn / math.sqrt(2), abs=1e-12)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_method_a_rejects_vanishing_reference():
    psi = np.eye(8)[6]  # |110> reading high wire first
    inst = MethodInstance(3, 2, (0, 0, 0), psi)
    with pytest.raises(ReferenceAmplitudeError):
        prepare_s_method_a(inst)


@pytest.mark.parametrize("n,d,seed", [(2, 2, 5), (3, 2, 6), (4, 2, 7), (3, 3, 8)])
def test_method_b_level_relations(n, d, seed):
    # level k holds z1 = <c|P_k psi>/sqrt(2) and
    # z0 + z1 = (2/k) <c|P_{k-1} psi>/sqrt(2)
    psi = random_table(n, d, seed, real=True)
    c = (0,) * n
    if overlap_at(psi, c, d) < 0:
        psi = -psi
    inst = MethodInstance(n, d, c, psi, method="B")
    for k in range(2, n + 1):
        state = prepare_s_method_b(inst, k)
        u0, u1 = hypothesis_patterns(inst, state.layout)
        z0 = u0.inner(state).real
        z1 = u1.inner(state).real
        gk = overlap_at(partial_sym(inst.psi, n, d, k), c, d).real
        gk1 = overlap_at(partial_sym(inst.psi, n, d, k - 1), c, d).real if k > 2 else overlap_at(inst.psi, c, d).real
        assert z1 == pytest.approx(gk / math.sqrt(2), abs=1e-10)
        assert z0 + z1 == pytest.approx((2.0 / k) * gk1 / math.sqrt(2), abs=1e-10)


def test_method_b_level_bounds_and_sign():
    psi = random_table(3, 2, 9, real=True)
    c = (1, 1, 1)
    if overlap_at(psi, c, 2) < 0:
        psi = -psi
    inst = MethodInstance(3, 2, c, psi, method="B")
    with pytest.raises(ValueError):
        prepare_s_method_b(inst, 1)
    with pytest.raises(ValueError):
        prepare_s_method_b(inst, 4)
    bad = MethodInstance(3, 2, c, -psi, method="B")
    with pytest.raises(ReferenceAmplitudeError):
        prepare_s_method_b(bad, 2)


# ---------------------------------------------------------------------------
# End-to-end exact inference
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n,d,seed", [(2, 2, 11), (3, 2, 12), (3, 3, 13), (4, 2, 14)])
def test_method_a_exact_matches_reference(n, d, seed):
    psi = random_table(n, d, seed)
    rng = np.random.default_rng(seed)
    c = tuple(int(x) for x in rng.integers(0, d, size=n))
    inst = MethodInstance(n, d, c, psi)
    res = run_method_a(inst)
    want = abs(oracle_symmetrized_amplitude(inst.psi, c, d)) ** 2
    assert res.q_final == pytest.approx(want, abs=1e-12)
    assert res.levels == [n]
    assert res.method == "A"
    assert not res.patched


def test_method_a_swap_patch():
    # <c|psi> = 0 but the swapped table has a usable reference slot
    psi = np.zeros(8)
    psi[6] = 1.0  # the ket with wires 1, 2 set
    c = (1, 0, 1)
    inst = MethodInstance(3, 2, c, psi)
    res = run_method_a(inst)
    assert res.patched
    assert res.q_final == pytest.approx(1.0 / 9.0, abs=1e-12)
    assert res.q_final == pytest.approx(
        abs(oracle_symmetrized_amplitude(psi, c, 2)) ** 2, abs=1e-12
    )


def test_method_a_reports_unusable_instances():
    psi = np.zeros(8)
    psi[3] = 1.0  # wires 0, 1 set: symmetric under the patch swap
    inst = MethodInstance(3, 2, (0, 0, 0), psi)
    with pytest.raises(ReferenceAmplitudeError):
        run_method_a(inst)


@pytest.mark.parametrize("n,d,seed", [(2, 2, 15), (3, 2, 16), (3, 3, 17), (4, 2, 18)])
def test_method_b_exact_matches_reference(n, d, seed):
    psi = random_table(n, d, seed, real=True)
    c = (0,) * n
    if overlap_at(psi, c, d) < 0:
        psi = -psi
    inst = MethodInstance(n, d, c, psi, method="B")
    res = run_method_b(inst)
    want = abs(oracle_symmetrized_amplitude(inst.psi, c, d)) ** 2
    assert res.q_final == pytest.approx(want, abs=1e-12)
    assert res.levels == list(range(n, 1, -1))
    assert len(res.q_values) == len(res.ratios) == len(res.signs) == n - 1


def test_method_b_on_a_fully_symmetric_table():
    # all chain levels coincide: Q^(k) = Q^(1), the interference term closes
    # the reference slot level by level (|z0/z1| = (k-2)/k)
    amps = np.zeros(16)
    for idx in (3, 5, 6, 9, 10, 12):  # the six two-one kets
        amps[idx] = 1.0
    inst = MethodInstance(4, 2, (1, 1, 0, 0), amps, method="B")
    res = run_method_b(inst)
    assert res.q1 == pytest.approx(1.0 / 6.0, abs=1e-12)
    assert res.q_values == pytest.approx([1.0 / 6.0] * 3, abs=1e-12)
    assert res.levels == [4, 3, 2]
    assert res.ratios[0] == pytest.approx(2.0, abs=1e-9)   # k = 4
    assert res.ratios[1] == pytest.approx(3.0, abs=1e-9)   # k = 3
    assert res.ratios[2] > 1e6                              # k = 2: z0 -> 0
    assert res.signs[:2] == [-1, -1]


def test_method_b_rejects_negative_reference():
    psi = -np.abs(random_table(2, 2, 19, real=True))
    inst = MethodInstance(2, 2, (0, 1), psi, method="B")
    with pytest.raises(ReferenceAmplitudeError):
        run_method_b(inst)


def test_run_instance_dispatch():
    psi = np.abs(random_table(2, 2, 20, real=True))
    a = run_instance(MethodInstance(2, 2, (0, 1), psi, method="A"))
    b = run_instance(MethodInstance(2, 2, (0, 1), psi, method="B"))
    assert a.method == "A" and b.method == "B"
    assert a.q_final == pytest.approx(b.q_final, abs=1e-12)


# ---------------------------------------------------------------------------
# Driven inference
# ---------------------------------------------------------------------------


def driven_cfg(**over):
    base = dict(del_lam_degs=30.0, num_steps=40, tail_len=10, num_trials=2,
                g0est_degs=80.0)
    base.update(over)
    return AFGAConfig(**base)


def test_driven_method_a_equals_exact():
    inst = MethodInstance(3, 2, (0, 1, 1), random_table(3, 2, 21))
    exact = run_method_a(inst)
    driven = run_method_a(inst, driven_cfg())
    assert driven.q_final == pytest.approx(exact.q_final, abs=1e-9)


def test_driven_method_b_equals_exact():
    psi = random_table(3, 2, 22, real=True)
    c = (1, 0, 0)
    if overlap_at(psi, c, 2) < 0:
        psi = -psi
    inst = MethodInstance(3, 2, c, psi, method="B")
    exact = run_method_b(inst)
    driven = run_method_b(inst, driven_cfg())
    assert driven.q_final == pytest.approx(exact.q_final, abs=1e-9)


def test_shot_sampling_is_seed_deterministic():
    inst = MethodInstance(3, 2, (0, 1, 1), random_table(3, 2, 24))
    cfg = driven_cfg(sampling="shots", shots=4000, seed=5)
    r1 = run_method_a(inst, cfg)
    r2 = run_method_a(inst, cfg)
    assert r1.q_final == r2.q_final
    assert r1.trial_log == r2.trial_log
    r3 = run_method_a(inst, driven_cfg(sampling="shots", shots=4000, seed=6))
    assert r3.q_final != r1.q_final


def test_trial_log_shapes():
    inst = MethodInstance(3, 2, (0, 1, 1), random_table(3, 2, 25))
    res = run_method_a(inst, driven_cfg(num_trials=3))
    assert len(res.trial_log) == 3
    # the refined estimate chains through the trials of a level
    for prev, nxt in zip(res.trial_log, res.trial_log[1:]):
        assert nxt["estimate_in_degs"] == prev["estimate_out_degs"]

    psi = np.abs(random_table(3, 2, 26, real=True))
    res_b = run_method_b(MethodInstance(3, 2, (0, 1, 1), psi, method="B"),
                         driven_cfg(num_trials=2))
    assert len(res_b.trial_log) == 2 * 2  # two levels, two trials each
    for entry in res_b.trial_log:
        # the chain readout never adapts its estimate
        assert entry["estimate_out_degs"] == entry["estimate_in_degs"]


# ---------------------------------------------------------------------------
# Rescaling
# ---------------------------------------------------------------------------


def test_bounded_rescale_round_trip():
    rng = np.random.default_rng(27)
    f = rng.uniform(-0.9, 0.9, size=8) + 1j * rng.uniform(-0.4, 0.4, size=8)
    m = rng.normal(size=(8, 8))
    g_r, g_i, recipe = rescale_bounded(f, -1.0, -0.5, 1.0, 0.5)
    assert g_r.min() >= 0.0 and g_r.max() <= 1.0
    assert g_i.min() >= 0.0 and g_i.max() <= 1.0
    assert np.allclose(recipe.reconstruct(m), m @ f, atol=1e-12)


def test_bounded_rescale_with_precomputed_row_sums():
    rng = np.random.default_rng(28)
    f = rng.uniform(-0.9, 0.9, size=4)
    m = rng.normal(size=(4, 4))
    _, _, recipe = rescale_bounded(f, -1.0, -1.0, 1.0, 1.0, row_sums=m.sum(axis=1))
    assert np.allclose(recipe.reconstruct(m), m @ f, atol=1e-12)


def test_bounded_rescale_requires_strict_bounds():
    with pytest.raises(ValueError):
        rescale_bounded(np.array([1.0, 0.0]), -1.0, -1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        rescale_bounded(np.array([0.0, 2.0j]), -1.0, -1.0, 1.0, 1.0)


def test_norm_rescale_round_trip():
    rng = np.random.default_rng(29)
    f = rng.normal(size=8) + 1j * rng.normal(size=8)
    m = rng.normal(size=(8, 8))
    g, recipe = rescale_norm(f, canonical_norm(f))
    assert np.linalg.norm(g) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(recipe.reconstruct(m), m @ f, atol=1e-12)
    with pytest.raises(ValueError):
        rescale_norm(f, 0.0)


# ---------------------------------------------------------------------------
# Key-value and instance files
# ---------------------------------------------------------------------------


def test_parse_key_values():
    text = "a = 1\n# comment\n\nb = two words  # inline\n"
    assert parse_key_values(text) == {"a": "1", "b": "two words"}


def test_parse_key_values_reports_line_numbers():
    with pytest.raises(ValueError, match="line 3"):
        parse_key_values("a = 1\n\nnot a pair\n")


def write_instance(tmp_path, *, body, table, n=3, d=2):
    psi_path = tmp_path / "psi.txt"
    psi_path.write_text(write_amplitude_table(table, n, d))
    inst_path = tmp_path / "inst.txt"
    inst_path.write_text(body)
    return inst_path


def test_parse_instance_file(tmp_path):
    table = np.zeros(8)
    table[5] = 1.0  # |101> reading high wire first
    path = write_instance(
        tmp_path,
        body="n = 3\nd = 2\nc = 1,0,1\nmethod = b\npsi_file = psi.txt\nnum_steps = 80\nfilter = mean\n",
        table=table,
    )
    inst, overrides = parse_instance_file(path)
    assert inst.n == 3 and inst.d == 2 and inst.method == "B"
    assert inst.c == (1, 0, 1)  # display "1,0,1" is palindromic
    assert inst.reference_overlap() == pytest.approx(1.0)
    assert overrides == {"num_steps": 80, "filter": "mean"}


def test_parse_instance_display_order(tmp_path):
    table = np.zeros(16)
    table[3] = 1.0
    path = write_instance(
        tmp_path, body="n = 4\nd = 2\nc = 0,0,1,1\npsi_file = psi.txt\n",
        table=table, n=4,
    )
    inst, _ = parse_instance_file(path)
    assert inst.c == (1, 1, 0, 0)  # stored wire-0 first
    assert inst.c_display == "0,0,1,1"
    assert inst.method == "A"
    assert inst.reference_overlap() == pytest.approx(1.0)


def test_parse_instance_defaults_n_to_four(tmp_path):
    table = np.zeros(16)
    table[0] = 1.0
    path = write_instance(tmp_path, body="d = 2\nc = 0,0,0,0\npsi_file = psi.txt\n",
                          table=table, n=4)
    inst, _ = parse_instance_file(path)
    assert inst.n == 4


@pytest.mark.parametrize(
    "body,msg",
    [
        ("d = 2\npsi_file = psi.txt\n", "missing key 'c'"),
        ("c = 0,0,0\npsi_file = psi.txt\n", "missing key 'd'"),
        ("n = 3\nd = 2\nc = 0,0,0\npsi_file = psi.txt\nbanana = 1\n", "unknown instance key"),
    ],
)
def test_parse_instance_rejections(tmp_path, body, msg):
    table = np.zeros(8)
    table[0] = 1.0
    path = write_instance(tmp_path, body=body, table=table)
    with pytest.raises(ValueError, match=msg):
        parse_instance_file(path)
