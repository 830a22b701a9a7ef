import numpy as np
import pytest

from conftest import netlist_system
from krylovmor import (DenseSystem, FrequencySweep, build_basis, markov_parameters,
                       max_error, moments, reduce, reduce_per_port, simo_split,
                       transfer_function)
from krylovmor.exceptions import DimensionMismatch, MismatchedSweep, PoleHit
from krylovmor.generators import power_grid, rc_ladder
from krylovmor.reduction import error_per_port, evaluate

S_POINTS = (0.0, 1j, 0.3 + 2j, 1e3j)


def test_scalar_rc_golden_values(scalar_rc):
    for Mi, expected in zip(moments(scalar_rc, 3), (1.0, -1.0, 1.0)):
        assert abs(Mi.item() - expected) <= 1e-12
    for Pi, expected in zip(markov_parameters(scalar_rc, 3), (1.0, -1.0, 1.0)):
        assert abs(Pi.item() - expected) <= 1e-12
    sweep = transfer_function(scalar_rc, FrequencySweep(np.array([0.0, 1.0])))
    assert abs(sweep.values[0, 0, 0] - 1.0) <= 1e-12
    assert abs(sweep.values[1, 0, 0] - (0.5 - 0.5j)) <= 1e-12


def test_two_node_rc_hand_series(two_node_rc):
    # H(s) = (s + 1) / (s^2 + 3 s + 1)
    np.testing.assert_allclose([M.item() for M in moments(two_node_rc, 4)], [1, -2, 5, -13],
                               rtol=1e-13)
    np.testing.assert_allclose([P.item() for P in markov_parameters(two_node_rc, 4)],
                               [1, -2, 5, -13], rtol=1e-13)


def test_markov_constant_when_E_equals_A():
    A = np.array([[2.0, 1.0], [0.0, 3.0]])
    sys = DenseSystem(A, A, np.ones((2, 1)), np.ones((1, 2)))
    P = markov_parameters(sys, 4)
    for Pi in P[1:]:
        np.testing.assert_allclose(Pi, P[0], rtol=1e-14)


def test_identity_projection_reproduces_system(two_node_rc):
    rom = reduce(two_node_rc, np.eye(2))
    for s in S_POINTS:
        np.testing.assert_array_equal(rom.frequency_response(s),
                                      DenseSystem(*two_node_rc.to_dense()).frequency_response(s))


def test_square_orthonormal_projection_is_similarity(small_grid):
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((small_grid.order,) * 2))
    rom = reduce(small_grid, Q)
    for s in (1j, 1e10j):
        np.testing.assert_allclose(rom.frequency_response(s), small_grid.frequency_response(s),
                                   rtol=1e-10)


def test_ladder_eks_rom_smoke():
    sys = netlist_system(rc_ladder(50))
    rom = reduce(sys, build_basis(sys, "eks", 8))
    assert rom.order == 8 and rom.method == "EKS"
    assert rom.source_dims == (50, 1, 1)
    assert np.all(np.isfinite(rom.A))
    with pytest.raises(DimensionMismatch):
        reduce(sys, np.eye(10))


def test_high_frequency_rolloff(scalar_rc):
    for sys in (scalar_rc, netlist_system(rc_ladder(30, ports=2))):
        sweep = transfer_function(sys, FrequencySweep(np.array([1e12])))
        assert np.abs(sweep.values[-1]).max() < 1e-6


def test_sweep_validation():
    with pytest.raises(ValueError):
        FrequencySweep(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        FrequencySweep(np.array([2.0, 1.0]))
    sw = FrequencySweep.logspace(1, 1e12, 200)
    assert len(sw.omega) == 200 and sw.omega[0] == 1 and sw.omega[-1] == pytest.approx(1e12)


def test_pole_hit_is_reported():
    sys = DenseSystem(np.eye(1), np.zeros((1, 1)), [[1.0]], [[1.0]])   # pole at s = 0
    with pytest.raises(PoleHit):
        evaluate(sys, 0.0)
    sweep = transfer_function(sys, FrequencySweep(np.array([0.0, 1.0])))
    assert sweep.skipped == [0]
    assert np.isnan(sweep.values[0, 0, 0])
    assert sweep.values[1, 0, 0] == pytest.approx(1 / 1j)


def test_simo_split(small_grid, scalar_rc):
    assert simo_split(scalar_rc) == [scalar_rc]
    subs = simo_split(small_grid)
    assert len(subs) == 3
    np.testing.assert_array_equal(np.hstack([s.B_dense for s in subs]), small_grid.B_dense)


def test_per_port_single_input_equals_monolithic(scalar_rc):
    sys = netlist_system(rc_ladder(80))
    sweep = FrequencySweep.logspace(1e-3, 1e3, 25)
    per_port = reduce_per_port(sys, "eks", 6, sweep=sweep)
    mono = transfer_function(reduce(sys, build_basis(sys, "eks", 6)), sweep)
    np.testing.assert_array_equal(per_port.sweep.values, mono.values)


def test_per_port_columns_match_dense_oracle():
    sys = netlist_system(power_grid(300, 4, seed=5))
    sweep = FrequencySweep.logspace(1e6, 1e12, 15)
    result = reduce_per_port(sys, "eks", 24, sweep=sweep, workers=2)
    assert result.sweep.values.shape == (15, 4, 4)
    E, A, B, L, D = sys.to_dense()
    for i, pr in enumerate(result.ports):
        V = pr.basis.V
        Er, Ar, br, Lr = V.T @ E @ V, V.T @ A @ V, V.T @ B[:, [i]], L @ V
        for k, s in enumerate(sweep.s):
            H = Lr @ np.linalg.solve(s * Er - Ar, br)
            np.testing.assert_allclose(result.sweep.values[k, :, [i]].T, H, rtol=1e-10)


def test_per_port_is_worker_independent(small_grid):
    sweep = FrequencySweep.logspace(1e8, 1e12, 10)
    one = reduce_per_port(small_grid, "aeks", 6, sweep=sweep, workers=1)
    three = reduce_per_port(small_grid, "aeks", 6, sweep=sweep, workers=3)
    np.testing.assert_array_equal(one.sweep.values, three.sweep.values)


def test_max_error():
    sweep = FrequencySweep(np.array([1.0, 2.0, 3.0]))
    sweep.values = np.ones((3, 2, 2), dtype=complex)
    assert max_error(sweep, sweep) == 0.0
    other = sweep.empty()
    other.values = sweep.values.copy()
    other.values[1, 0, 1] += 0.5
    assert max_error(sweep, other) == 0.5
    assert error_per_port(sweep, other) == [0.0, 0.5]
    shifted = FrequencySweep(np.array([1.0, 2.0, 4.0]))
    shifted.values = sweep.values
    with pytest.raises(MismatchedSweep):
        max_error(sweep, shifted)


def test_moments_include_feedthrough(scalar_rc):
    from krylovmor import DescriptorSystem
    sys = DescriptorSystem(scalar_rc.E, scalar_rc.A, scalar_rc.B, scalar_rc.L, D=[[0.25]])
    assert [M.item() for M in moments(sys, 2)] == [1.25, -1.0]


def test_moments_match_dense_formula(small_grid):
    E, A, B, L, D = small_grid.to_dense()
    AE = np.linalg.solve(A, E)
    X = np.linalg.solve(A, B)
    for i, Mi in enumerate(moments(small_grid, 4)):
        expected = -L @ np.linalg.matrix_power(AE, i) @ X
        assert np.abs(Mi - expected).max() <= 1e-12 * max(1.0, np.abs(expected).max())


def test_eks_beats_mm_on_mesh():
    sys = netlist_system(power_grid(200, 4, seed=0))
    sweep = FrequencySweep.logspace()
    H = transfer_function(sys, sweep)
    err = {m: max_error(H, reduce_per_port(sys, m, 6, sweep=sweep).sweep) for m in ("mm", "eks")}
    assert err["eks"] < err["mm"]
