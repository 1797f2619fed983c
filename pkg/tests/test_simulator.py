import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apqaoa.models import ModelSpec, generate, make_rng
from apqaoa.sat import Clause, CnfFormula
from apqaoa.simulator import (
    EvalCounter,
    GammaBetaParams,
    StateVector,
    apply_mixer,
    apply_phase,
    expectation,
    init_plus,
    run_circuit,
    target_probability,
)
from apqaoa.spectrum import build_spectrum, normalize
from oracles import dense_circuit, dense_mixer_hamiltonian

from scipy.linalg import expm


def _table(n, m, seed, kind="F"):
    return build_spectrum(generate(ModelSpec(kind, n, m, 3, seed=seed)).formula)


def _random_state(n, rng):
    a = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, a / np.linalg.norm(a))


def test_init_plus():
    s = init_plus(1)
    assert np.allclose(s.amplitudes, [2**-0.5, 2**-0.5])
    s = init_plus(10)
    assert np.allclose(s.amplitudes, 2.0**-5)
    assert s.norm() == pytest.approx(1.0)


def test_init_plus_capacity():
    with pytest.raises(ValueError):
        init_plus(0)
    with pytest.raises(ValueError):
        init_plus(23)


def test_phase_identity_at_zero():
    table = _table(4, 10, 1)
    s = _random_state(4, make_rng(0))
    before = s.amplitudes.copy()
    apply_phase(s, table, 1.0, 0.0)
    assert np.array_equal(s.amplitudes, before)


def test_phase_single_clause_pi():
    table = build_spectrum(CnfFormula(3, 3, (Clause((1, 2, 3)),)))
    s = init_plus(3)
    apply_phase(s, table, 1.0, math.pi)
    signs = np.round(s.amplitudes.real * math.sqrt(8)).astype(int)
    assert signs[0] == 1
    assert np.all(signs[1:] == -1)


def test_phase_matches_dense_diagonal():
    table = _table(3, 9, 2)
    s = _random_state(3, make_rng(1))
    ref = expm(-1j * 0.37 * 0.2 * np.diag(table.values.astype(float))) @ s.amplitudes
    apply_phase(s, table, 0.2, 0.37)
    assert np.max(np.abs(s.amplitudes - ref)) <= 1e-12


def test_mixer_identity_at_zero():
    s = _random_state(5, make_rng(2))
    before = s.amplitudes.copy()
    apply_mixer(s, 0.1, 0.0)
    assert np.allclose(s.amplitudes, before, atol=1e-15)


def test_mixer_half_turn_is_bit_flip():
    s = StateVector(1, np.array([0.6, 0.8j]))
    apply_mixer(s, 0.5, math.pi)
    assert np.allclose(s.amplitudes, -1j * np.array([0.8j, 0.6]))
    plus = init_plus(1)
    apply_mixer(plus, 0.5, math.pi)
    assert np.allclose(plus.amplitudes, -1j * init_plus(1).amplitudes)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_mixer_matches_dense_oracle(n):
    s = _random_state(n, make_rng(n))
    ref = expm(-1j * 0.81 * 0.3 * dense_mixer_hamiltonian(n)) @ s.amplitudes
    apply_mixer(s, 0.3, 0.81)
    assert np.max(np.abs(s.amplitudes - ref)) <= 1e-12


def test_run_circuit_matches_dense_oracle():
    rng = make_rng(5)
    for case in range(20):
        n = int(rng.integers(1, 5))
        k = min(3, n)
        f = generate(ModelSpec("F", n, int(rng.integers(1, 12)), k, seed=case)).formula
        table = build_spectrum(f)
        norm = normalize(table, "estimated")
        p = int(rng.integers(0, 3))
        params = GammaBetaParams(rng.uniform(0, 2 * np.pi, p), rng.uniform(0, 2 * np.pi, p))
        ours = run_circuit(table, norm, params).amplitudes
        ref = dense_circuit(table.values, n, norm.phase_scale, norm.mixer_scale, params.gamma, params.beta)
        assert np.max(np.abs(ours - ref)) <= 1e-9


def test_p0_is_uniform():
    table = _table(6, 20, 3)
    s = run_circuit(table, normalize(table), GammaBetaParams([], []))
    assert np.allclose(s.amplitudes, 2**-3)


def test_norm_preserved_at_depth_n():
    table = _table(10, 59, 4, "F_s")
    rng = make_rng(4)
    params = GammaBetaParams(rng.uniform(-5, 5, 10), rng.uniform(-5, 5, 10))
    assert abs(run_circuit(table, normalize(table), params).norm() - 1) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 8),
    st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=0, max_size=6),
    st.integers(0, 2**32),
)
def test_unitarity_property(n, layers, seed):
    table = _table(n, 8, seed) if n >= 3 else build_spectrum(CnfFormula(n, 1, (Clause((1,)),)))
    s = init_plus(n)
    for g, b in layers:
        apply_phase(s, table, 0.3, g)
        apply_mixer(s, 0.7, b)
    assert abs(s.norm() - 1) <= 1e-10


def test_expectation_uniform_state():
    for seed in range(5):
        table = _table(9, 40, seed)
        assert expectation(init_plus(9), table, 1.0) == pytest.approx(7 * 40 / 8, abs=1e-9)


def test_expectation_on_interpretation():
    res = generate(ModelSpec("F_f", 7, 30, 3, seed=1))
    table = build_spectrum(res.formula)
    amps = np.zeros(128, dtype=complex)
    amps[res.hidden_t0] = 1.0
    s = StateVector(7, amps)
    assert expectation(s, table, 1.0) == 30
    assert target_probability(s, table) == 1.0


def test_expectation_matches_weighted_sum():
    table = _table(3, 10, 6)
    norm = normalize(table)
    s = run_circuit(table, norm, GammaBetaParams([0.4, 1.1], [2.0, 0.3]))
    ref = sum(norm.phase_scale * float(c) * abs(a) ** 2 for c, a in zip(table.values, s.amplitudes))
    assert expectation(s, table, norm.phase_scale) == pytest.approx(ref, abs=1e-14)


def test_expectation_ticks_counter():
    table = _table(4, 10, 7)
    counter = EvalCounter()
    for _ in range(3):
        expectation(init_plus(4), table, 1.0, counter)
    assert counter.count == 3


def test_target_probability_uniform():
    res = generate(ModelSpec("F_s", 10, 59, 3, seed=0))
    table = build_spectrum(res.formula)
    s = init_plus(10)
    expected = table.maximizers.size / 1024
    assert target_probability(s, table) == pytest.approx(expected)
    apply_phase(s, table, 1.0, 0.0)
    apply_mixer(s, 1.0, 0.0)
    assert target_probability(s, table) == pytest.approx(expected)


def test_n_mismatch():
    with pytest.raises(ValueError):
        apply_phase(init_plus(4), _table(5, 10, 0), 1.0, 0.1)
    with pytest.raises(ValueError):
        expectation(init_plus(4), _table(5, 10, 0), 1.0)


def test_params_length_mismatch():
    with pytest.raises(ValueError):
        GammaBetaParams([1.0, 2.0], [1.0])
