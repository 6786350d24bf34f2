"""Chain construction, calibration, local spectra, and the entanglement witness."""

import math

import numpy as np
import pytest

from qetsim import chain, eigensolver
from qetsim.chain import (
    ChainSpec,
    build_energy_density,
    build_hamiltonian,
    calibrate_epsilon,
    calibrated_chain,
    correlation_check,
    density_eigenbasis_weights,
    local_density_spectrum,
)
from qetsim.pauli import HermitianOperator, PauliString, from_sites, single_site


def term_map(op):
    return {t.letters: t.coefficient for t in op.terms}


def test_interior_density_has_three_strings():
    spec = ChainSpec(6, coupling=1.0)
    t2 = build_energy_density(spec, 2)
    terms = term_map(t2)
    assert terms == pytest.approx({
        "IIZIII": -1.0,     # -J sz_2
        "IIXXII": -0.5,     # -(J/2) sx_2 sx_3
        "IXXIII": -0.5,     # -(J/2) sx_1 sx_2
    })


def test_density_scales_linearly_with_coupling():
    weak = term_map(build_energy_density(ChainSpec(5, coupling=1e-12), 2))
    strong = term_map(build_energy_density(ChainSpec(5, coupling=2.0), 2))
    assert set(weak) == set(strong)
    for letters, coeff in strong.items():
        assert weak[letters] == pytest.approx(coeff * 5e-13)
    # switching the coupling off kills the operator (offsets are zero here)
    assert build_energy_density(ChainSpec(5, coupling=1e-12), 2).one_norm < 3e-12


def test_open_chain_edge_drops_missing_neighbor():
    spec = ChainSpec(5, boundary="open")
    t0 = build_energy_density(spec, 0)
    assert term_map(t0) == pytest.approx({"ZIIII": -1.0, "XXIII": -0.5})
    t4 = build_energy_density(spec, 4)
    assert term_map(t4) == pytest.approx({"IIIIZ": -1.0, "IIIXX": -0.5})


def test_offset_enters_as_identity_term():
    spec = ChainSpec(4, epsilon=(0.25, 0.0, 0.0, 0.0))
    t0 = build_energy_density(spec, 0)
    assert term_map(t0)["IIII"] == pytest.approx(-0.25)


def test_out_of_range_site_rejected():
    spec = ChainSpec(4)
    with pytest.raises(ValueError, match="range"):
        build_energy_density(spec, 4)


def test_hamiltonian_equals_density_sum():
    spec = ChainSpec(6)
    total = sum(build_energy_density(spec, n).dense() for n in range(6))
    assert np.max(np.abs(build_hamiltonian(spec).dense() - total)) < 1e-13


def test_hamiltonian_n3_hand_expansion():
    # each bond assembles from two half-strength contributions
    spec = ChainSpec(3)
    assert term_map(build_hamiltonian(spec)) == pytest.approx({
        "ZII": -1.0, "IZI": -1.0, "IIZ": -1.0,
        "XXI": -1.0, "IXX": -1.0, "XIX": -1.0,
    })


def test_calibration_zeroes_every_density(chains):
    spec, res = chains(10)
    for n in range(spec.n_sites):
        assert abs(build_energy_density(spec, n).expectation(res.state)) < 1e-10


def test_calibration_uniform_on_periodic_chain(chains):
    spec, _ = chains(10)
    eps = np.array(spec.epsilon)
    assert np.max(np.abs(eps - eps[0])) < 1e-10


def test_calibrated_ground_energy_vanishes(chains):
    for n_sites in (8, 10):
        spec, res = chains(n_sites)
        assert abs(res.energy) < 1e-9
        assert abs(build_hamiltonian(spec).expectation(res.state)) < 1e-12


def test_epsilon_extrapolates_to_thermodynamic_value(chains):
    # per-site offset tends to -4/pi (the spec sheet quotes the magnitude 4/pi);
    # periodic-chain corrections scale as 1/N^2, so Richardson-extrapolate
    values = {n: chains(n)[0].epsilon[0] for n in (8, 10, 12)}
    n1, n2 = 8, 12
    extrapolated = (n2 ** 2 * values[n2] - n1 ** 2 * values[n1]) / (n2 ** 2 - n1 ** 2)
    target = -4.0 / math.pi
    assert abs(extrapolated - target) < 5e-4
    assert abs(values[12] - target) < abs(values[8] - target)


def test_open_chain_offsets_vary_near_edges():
    spec, res = calibrated_chain(8, boundary="open")
    eps = np.array(spec.epsilon)
    assert abs(eps[0] - eps[4]) > 1e-3
    for n in range(8):
        assert abs(build_energy_density(spec, n).expectation(res.state)) < 1e-10


def test_calibrate_epsilon_requires_normalized_state():
    spec = ChainSpec(4)
    with pytest.raises(ValueError, match="normalized"):
        calibrate_epsilon(spec, np.ones(16))


def test_local_spectrum_negative_minimum(chains):
    spec, _ = chains(10)
    for n in range(spec.n_sites):
        assert local_density_spectrum(spec, n).minimum < -0.01


def test_local_spectrum_trace_identity(chains):
    # Pauli terms are traceless, so the 8-dim trace is -8 eps_n
    spec, _ = chains(8)
    ls = local_density_spectrum(spec, 2)
    assert ls.dim == 8
    trace = sum(e * m for e, m in zip(ls.eigenvalues, ls.multiplicities))
    assert trace == pytest.approx(-8.0 * spec.epsilon[2], abs=1e-10)


def test_local_spectrum_edge_site_open_chain():
    spec, _ = calibrated_chain(6, boundary="open")
    ls = local_density_spectrum(spec, 0)
    assert ls.dim == 4
    trace = sum(e * m for e, m in zip(ls.eigenvalues, ls.multiplicities))
    assert trace == pytest.approx(-4.0 * spec.epsilon[0], abs=1e-10)


def test_ground_state_in_density_eigenbasis(chains):
    spec, res = chains(10)
    vals, weights = density_eigenbasis_weights(spec, 4, res.state)
    assert np.sum(weights) == pytest.approx(1.0, abs=1e-12)
    assert abs(np.dot(vals, weights)) < 1e-10        # <T_n> = sum e w = 0
    assert vals[0] < 0.0 and weights[0] > 0.0        # negative-density states populated


def test_correlation_gap_positive_for_entangled_ground_state(chains):
    spec, res = chains(10)
    t3 = build_energy_density(spec, 3)
    # sz is even under the chain's spin-flip symmetry, so its two-point
    # function with T_n survives; sx is odd and vanishes identically
    o_z = HermitianOperator.from_strings(10, [single_site(10, 7, "Z")])
    assert correlation_check(res.state, t3, o_z).gap > 1e-6
    o_xx = HermitianOperator.from_strings(10, [from_sites(10, 1.0, {6: "X", 7: "X"})])
    assert correlation_check(res.state, t3, o_xx).gap > 1e-6
    o_x = HermitianOperator.from_strings(10, [single_site(10, 7, "X")])
    assert correlation_check(res.state, t3, o_x).gap < 1e-10


def test_correlation_factorizes_for_product_state():
    # the J -> 0 ground state is the all-up product state; factorization is
    # exact for any product state and disjoint supports
    spec = ChainSpec(8)
    product = eigensolver.basis_state(8, 0)
    t3 = build_energy_density(spec, 3)
    for letter in "XZ":
        o_m = HermitianOperator.from_strings(8, [single_site(8, 6, letter)])
        assert correlation_check(product, t3, o_m).gap < 1e-12


def test_correlation_check_rejects_overlapping_supports(chains):
    spec, res = chains(8)
    t3 = build_energy_density(spec, 3)
    o_4 = HermitianOperator.from_strings(8, [single_site(8, 4, "Z")])
    with pytest.raises(ValueError, match="overlap"):
        correlation_check(res.state, t3, o_4)


def test_density_commutes_outside_support():
    spec = ChainSpec(8)
    t3 = build_energy_density(spec, 3)
    rng = np.random.default_rng(9)
    v = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    for _ in range(5):
        pattern = ["I"] * 8
        for site in (0, 1, 6, 7):   # all outside {2, 3, 4}
            pattern[site] = "IXYZ"[rng.integers(0, 4)]
        other = HermitianOperator.from_strings(8, [PauliString(1.0, "".join(pattern))])
        comm = t3.apply(other.apply(v)) - other.apply(t3.apply(v))
        assert np.max(np.abs(comm)) < 1e-12


def test_no_spectrum_below_zero_from_seeded_probes(chains):
    spec, _ = chains(8)
    op = build_hamiltonian(spec)
    for seed in (1, 2, 3):
        res = eigensolver.ground_state(op, seed=seed)
        assert res.energy > -1e-9


def test_spec_validation():
    with pytest.raises(ValueError, match="3 sites"):
        ChainSpec(2)
    with pytest.raises(ValueError, match="positive"):
        ChainSpec(4, coupling=0.0)
    with pytest.raises(ValueError, match="boundary"):
        ChainSpec(4, boundary="twisted")
    with pytest.raises(ValueError, match="differ"):
        ChainSpec(4, site_a=1, site_b=1)
    with pytest.raises(ValueError, match="per site"):
        ChainSpec(4, epsilon=(0.0,))
    with pytest.raises(ValueError, match="out of range"):
        ChainSpec(4, site_a=0, site_b=5)


def test_circular_distance():
    spec = ChainSpec(10)
    assert spec.distance(0, 9) == 1
    assert spec.distance(0, 5) == 5
    assert ChainSpec(10, boundary="open").distance(0, 9) == 9
