import math

import numpy as np
import pytest

from quenchbound.bounds import (
    EnsembleLetter,
    QuenchEnsemble,
    RegimeError,
    area_law_envelope,
    bound_constants,
    certify_area_law,
    certify_holevo,
    certify_lemma1,
    certify_theorem,
    holevo_capacity,
    lemma1_constants,
    lemma1_rhs,
    theorem_constants,
    theorem_rhs,
)
from quenchbound.decay import DecayFunction, LRConstants
from quenchbound.lattice import GrowthConstants, LatticeGraph
from quenchbound.quantum import IDENTITY_2, Propagator, SIGMA_X, SIGMA_Z, build_hamiltonian
from quenchbound.quench import (
    QuenchScenario,
    all_down_state,
    entanglement_profile,
    on_site_field,
    transverse_field_ising,
)

F = DecayFunction.power_law(2.0)
CHAIN_GROWTH = GrowthConstants(b=2.0, alpha=0.0, family="chain")


def make_scenario(length=8, q=1, mu=0.5, interaction=None, graph=None, psi0=None, strength=1.0):
    graph = graph or LatticeGraph.chain(length)
    interaction = interaction or transverse_field_ising(graph, 1.0, 1.0)
    psi0 = psi0 if psi0 is not None else all_down_state(interaction.space)
    return QuenchScenario(
        graph=graph,
        interaction=interaction,
        psi0=psi0,
        x_region={0},
        q=q,
        quench_matrix=strength * SIGMA_X if q == 1 else SIGMA_X,
        quench_support=(0,),
        mu=mu,
        decay=F,
    )


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


def test_lemma1_constants_zero_perturbation():
    lr = LRConstants(f_norm=2.0, c_mu=2.0, phi_norm=1.0, mu=1.0, v_mu=4.0)
    c1, c2 = lemma1_constants(lr, 0.0, 1, 1)
    assert c1 == 0.0
    assert c2 == pytest.approx(2.0)


def test_lemma1_constants_arithmetic():
    lr = LRConstants(f_norm=2.0, c_mu=2.0, phi_norm=1.0, mu=1.0, v_mu=4.0)
    c1, c2 = lemma1_constants(lr, 1.0, 1, 3)
    assert c2 == pytest.approx(2.0 * 2.0 / 2.0 * 1)
    assert c1 == pytest.approx(2.0 * 1.0 * 2.0 / (1.0 * 4.0 * 2.0) * 1)
    c1_doubled, _ = lemma1_constants(lr, 2.0, 1, 3)
    assert c1_doubled == pytest.approx(2 * c1)


def test_lemma1_constants_zero_velocity_error():
    lr = LRConstants(f_norm=2.0, c_mu=2.0, phi_norm=0.0, mu=1.0, v_mu=0.0)
    with pytest.raises(RegimeError):
        lemma1_constants(lr, 1.0, 1, 1)
    # but a free system with no perturbation is fine
    c1, _ = lemma1_constants(lr, 0.0, 1, 1)
    assert c1 == 0.0


def test_lemma1_rhs_values():
    assert lemma1_rhs(2.0, 1.0, 0.0, 3, 0.0) == pytest.approx(2.0 * math.exp(-3.0))
    # v_mu |t| = 1
    assert lemma1_rhs(2.0, 1.0, 0.5, 3, 2.0) == pytest.approx(2.0 * math.exp(-2.0))
    assert lemma1_rhs(2.0, 1.0, 0.5, 3, 2.0) == pytest.approx(0.27067, abs=1e-5)
    near = lemma1_rhs(2.0, 1.0, 0.5, 3, 1.0)
    far = lemma1_rhs(2.0, 1.0, 0.5, 4, 1.0)
    assert far == pytest.approx(near * math.exp(-1.0))


def test_theorem_constants_alpha_zero_keeps_velocity():
    lr = LRConstants(f_norm=2.0, c_mu=2.0, phi_norm=1.0, mu=1.0, v_mu=4.0)
    _, _, v_prime = theorem_constants(lr, CHAIN_GROWTH, 1.0, 1.0, 1, 2)
    assert v_prime == pytest.approx(lr.v_mu)


def test_theorem_constants_arithmetic():
    # c_q = 1, mu = 2, |boundary| = 1, b = 2, D = 2
    lr = LRConstants(f_norm=1.0, c_mu=1.0, phi_norm=1.0, mu=2.0, v_mu=1.0)
    gamma1, _, _ = theorem_constants(lr, CHAIN_GROWTH, 1.0, 1.0, 1, 2)
    expected = 4.0 / (1.0 - math.exp(-1.0)) * (1 * 1 * 2 * 1 + 1)
    assert gamma1 == pytest.approx(expected)
    assert gamma1 == pytest.approx(18.984, abs=1e-3)


def test_theorem_constants_monotonicity():
    lr = LRConstants(f_norm=1.0, c_mu=1.0, phi_norm=1.0, mu=2.0, v_mu=1.0)
    small, _, _ = theorem_constants(lr, GrowthConstants(b=2.0, alpha=0.0, family="chain"), 1.0, 1.0, 1, 2)
    bigger_b, _, _ = theorem_constants(lr, GrowthConstants(b=3.0, alpha=0.0, family="generic"), 1.0, 1.0, 1, 2)
    bigger_d, _, _ = theorem_constants(lr, GrowthConstants(b=2.0, alpha=0.0, family="chain"), 1.0, 1.0, 1, 4)
    assert bigger_b > small
    assert bigger_d > small


def test_theorem_constants_regime_errors():
    lr = LRConstants(f_norm=1.0, c_mu=1.0, phi_norm=1.0, mu=1.0, v_mu=1.0)
    tree = GrowthConstants(b=2.0, alpha=math.log(2), family="tree-n", n=2)
    with pytest.raises(RegimeError, match="2\\*alpha"):
        theorem_constants(lr, tree, 1.0, 1.0, 1, 2)
    steep = GrowthConstants(b=2.0, alpha=1.5, family="generic")
    with pytest.raises(RegimeError, match="v_prime"):
        theorem_constants(lr, steep, 1.0, 1.0, 1, 2)


def test_theorem_rhs_values_and_flag():
    rhs, valid = theorem_rhs(18.9836, 2.0, 1.0, 5, 0.0)
    assert valid and rhs == pytest.approx(18.9836 * math.exp(-5.0))
    # v'|t| = 1 at v' = 0.5, t = 2
    rhs, valid = theorem_rhs(18.9836, 2.0, 0.5, 5, 2.0)
    assert valid and rhs == pytest.approx(18.9836 * math.exp(-4.0))
    assert rhs == pytest.approx(0.3477, abs=1e-3)
    _, valid = theorem_rhs(18.9836, 2.0, 3.0, 5, 2.0)
    assert not valid  # d <= v'|t|


def test_theorem_rhs_log_linear_in_distance():
    values = [theorem_rhs(10.0, 1.2, 0.0, d, 0.7)[0] for d in (2, 3, 4, 5)]
    for near, far in zip(values, values[1:]):
        assert far == pytest.approx(near * math.exp(-0.6))


def test_bound_constants_describe_round_trip():
    scenario = make_scenario()
    constants = bound_constants(scenario, {5, 6, 7}, CHAIN_GROWTH)
    described = constants.describe()
    assert described["c1"] == constants.c1
    assert described["v_prime"] == pytest.approx(constants.lr.v_mu)  # alpha = 0
    assert described["truncation"] == "instance"
    assert constants.boundary_x == 1
    assert constants.phi_boundary_min == 1


def test_constants_invariant_under_relabeling():
    rng = np.random.default_rng(21)
    length = 8
    perm = rng.permutation(length)
    graph = LatticeGraph.chain(length)
    relabeled = LatticeGraph.from_edges(length, [(int(perm[u]), int(perm[v])) for u, v in graph.edges])

    zz = np.kron(SIGMA_Z, SIGMA_Z)
    base_terms = [((i, i + 1), zz) for i in range(length - 1)] + [((i,), SIGMA_X) for i in range(length)]
    from quenchbound.quantum import Interaction

    mapped_terms = [(tuple(int(perm[s]) for s in supp), m) for supp, m in base_terms]

    scenario = make_scenario(graph=graph, interaction=Interaction.build((2,) * length, base_terms))
    psi0 = all_down_state(scenario.space)
    relabeled_scenario = QuenchScenario(
        graph=relabeled,
        interaction=Interaction.build((2,) * length, mapped_terms),
        psi0=psi0,
        x_region={int(perm[0])},
        q=1,
        quench_matrix=SIGMA_X,
        quench_support=(int(perm[0]),),
        mu=0.5,
        decay=F,
    )
    y = {5, 6, 7}
    y_mapped = {int(perm[v]) for v in y}
    a = bound_constants(scenario, y, CHAIN_GROWTH)
    b = bound_constants(relabeled_scenario, y_mapped, CHAIN_GROWTH)
    assert a.c1 == pytest.approx(b.c1, rel=1e-12)
    assert a.c2 == pytest.approx(b.c2, rel=1e-12)
    assert a.gamma1 == pytest.approx(b.gamma1, rel=1e-12)
    assert a.gamma2 == pytest.approx(b.gamma2, rel=1e-12)


# ---------------------------------------------------------------------------
# certification sweeps
# ---------------------------------------------------------------------------


def test_certify_lemma1_decoupled():
    graph = LatticeGraph.chain(5)
    scenario = make_scenario(graph=graph, interaction=on_site_field(graph, SIGMA_X), q=1)
    report = certify_lemma1(scenario, [{3, 4}], [0.0, 0.5, 1.0], CHAIN_GROWTH)
    for p in report.points:
        assert p.lhs < 1e-10
        assert p.margin >= -1e-9
    assert report.certified


def test_certify_lemma1_t0_margins():
    scenario = make_scenario()
    report = certify_lemma1(scenario, [{4, 5}], [0.0], CHAIN_GROWTH)
    point = report.points[0]
    assert point.lhs < 1e-10
    constants = bound_constants(scenario, {4, 5}, CHAIN_GROWTH)
    assert point.rhs == pytest.approx(constants.c1 * math.exp(-0.5 * 4))


def test_certify_lemma1_sweep_no_violations():
    for q in (1, 2):
        scenario = make_scenario(length=7, q=q, mu=1.0)
        report = certify_lemma1(scenario, [{4, 5, 6}, {5, 6}], np.linspace(0, 2, 9), CHAIN_GROWTH)
        assert report.certified
        assert len(report.points) == 18


def test_certify_theorem_zero_perturbation():
    scenario = make_scenario(strength=0.0)
    report = certify_theorem(scenario, [{4, 5}], [0.0, 0.4, 1.1], CHAIN_GROWTH)
    for p in report.points:
        assert p.lhs < 1e-10


def test_certify_theorem_sweep_and_gate_flags():
    for q in (1, 2):
        scenario = make_scenario(length=7, q=q, mu=1.0)
        report = certify_theorem(scenario, [{4, 5, 6}], np.linspace(0, 2, 9), CHAIN_GROWTH)
        assert report.certified
        assert all(p.gate_ok is not None for p in report.points)
        t0 = report.points[0]
        assert t0.t == 0.0 and t0.lhs < 1e-10 and t0.valid


def test_certify_theorem_workers_match_serial():
    scenario = make_scenario(length=6, q=2)
    serial = certify_theorem(scenario, [{4, 5}], [0.0, 0.5, 1.0], CHAIN_GROWTH, workers=1)
    threaded = certify_theorem(scenario, [{4, 5}], [0.0, 0.5, 1.0], CHAIN_GROWTH, workers=3)
    assert [p.lhs for p in serial.points] == [p.lhs for p in threaded.points]
    assert [p.rhs for p in serial.points] == [p.rhs for p in threaded.points]


# ---------------------------------------------------------------------------
# area law
# ---------------------------------------------------------------------------


def _ground_state_scenario(length=6, mu=0.5):
    graph = LatticeGraph.chain(length)
    interaction = transverse_field_ising(graph, 1.0, 1.0)
    ground = Propagator(build_hamiltonian(interaction, interaction.space)).ground_state()
    return QuenchScenario(
        graph=graph,
        interaction=interaction,
        psi0=ground,
        x_region={0},
        q=1,
        quench_matrix=SIGMA_X,
        quench_support=(0,),
        mu=mu,
        decay=F,
    )


def test_area_law_envelope_values():
    scenario = make_scenario()
    constants = bound_constants(scenario, {5, 6, 7}, CHAIN_GROWTH)
    value = area_law_envelope(constants, 4, 0.0, 1.0)
    assert value == pytest.approx(1.0 + constants.gamma1 * math.exp(-0.5 * 4))
    # no x dependence: same number bounds every cut beyond x0
    assert area_law_envelope(constants, 4, 0.0, 1.0) == area_law_envelope(constants, 4, 0.0, 1.0)


def test_area_law_envelope_regime_error():
    scenario = make_scenario()
    constants = bound_constants(scenario, {5, 6, 7}, CHAIN_GROWTH)
    t_late = (4 / constants.lr.v_mu) * 2
    with pytest.raises(RegimeError):
        area_law_envelope(constants, 4, t_late, 1.0)


def test_certify_area_law_ground_state():
    scenario = _ground_state_scenario()
    constants = bound_constants(scenario, {4, 5}, CHAIN_GROWTH)
    t_max = 3.0 / constants.lr.v_mu * 0.9
    profile = entanglement_profile(scenario, [3, 4], [0.0, t_max / 2, t_max])
    report = certify_area_law(profile, constants, x0=3)
    assert report.certified
    assert all(p.valid for p in report.points)
    # the unquenched branch of an eigenstate is static
    assert np.abs(profile.base - profile.base[:, :1]).max() < 1e-9


# ---------------------------------------------------------------------------
# Holevo capacity
# ---------------------------------------------------------------------------


def _ensemble(graph, interaction, letters, mu=0.5):
    psi0 = all_down_state(interaction.space)
    return QuenchEnsemble(
        graph=graph,
        interaction=interaction,
        psi0=psi0,
        x_region={0},
        letters=letters,
        mu=mu,
        decay=F,
    )


def test_holevo_single_letter_is_zero():
    graph = LatticeGraph.chain(5)
    interaction = transverse_field_ising(graph, 1.0, 1.0)
    ensemble = _ensemble(graph, interaction, [EnsembleLetter(1.0, (0,), SIGMA_X, "unitary")])
    for t in (0.0, 0.8):
        assert abs(holevo_capacity(ensemble, {3, 4}, t)) < 1e-10


def test_holevo_identical_letters_is_zero():
    graph = LatticeGraph.chain(5)
    interaction = transverse_field_ising(graph, 1.0, 1.0)
    letters = [EnsembleLetter(0.5, (0,), SIGMA_X, "unitary"), EnsembleLetter(0.5, (0,), SIGMA_X, "unitary")]
    ensemble = _ensemble(graph, interaction, letters)
    for t in (0.0, 1.0):
        assert abs(holevo_capacity(ensemble, {3, 4}, t)) < 1e-10


def test_holevo_decoupled_system_is_zero():
    graph = LatticeGraph.chain(5)
    interaction = on_site_field(graph, SIGMA_X)
    letters = [EnsembleLetter(0.5, (0,), IDENTITY_2, "unitary"), EnsembleLetter(0.5, (0,), SIGMA_X, "unitary")]
    ensemble = _ensemble(graph, interaction, letters)
    for t in (0.0, 0.7, 1.9):
        assert abs(holevo_capacity(ensemble, {3, 4}, t)) < 1e-10


def test_holevo_capacity_capped_by_alphabet():
    graph = LatticeGraph.chain(6)
    interaction = transverse_field_ising(graph, 1.0, 1.0)
    letters = [EnsembleLetter(0.5, (0,), IDENTITY_2, "unitary"), EnsembleLetter(0.5, (0,), SIGMA_X, "unitary")]
    ensemble = _ensemble(graph, interaction, letters)
    for t in np.linspace(0, 2, 9):
        capacity = holevo_capacity(ensemble, {4, 5}, t)
        assert -1e-10 <= capacity <= 1.0 + 1e-9


def test_holevo_expansion_upper_bound():
    graph = LatticeGraph.chain(6)
    interaction = transverse_field_ising(graph, 1.0, 1.0)
    letters = [EnsembleLetter(0.5, (0,), IDENTITY_2, "unitary"), EnsembleLetter(0.5, (0,), SIGMA_X, "unitary")]
    ensemble = _ensemble(graph, interaction, letters)
    from quenchbound.quantum import von_neumann_entropy

    for t in (0.5, 1.5):
        reduced = ensemble.letter_reduced_states([4, 5], t)
        mixture = 0.5 * reduced[0] + 0.5 * reduced[1]
        s_bar = von_neumann_entropy(mixture)
        expansion = sum(0.5 * abs(s_bar - von_neumann_entropy(rho)) for rho in reduced)
        assert holevo_capacity(ensemble, {4, 5}, t) <= expansion + 1e-9


def test_holevo_invalid_distribution():
    graph = LatticeGraph.chain(5)
    interaction = transverse_field_ising(graph, 1.0, 1.0)
    with pytest.raises(ValueError):
        _ensemble(graph, interaction, [EnsembleLetter(0.6, (0,), SIGMA_X, "unitary")])


def test_certify_holevo_report():
    graph = LatticeGraph.chain(7)
    interaction = transverse_field_ising(graph, 1.0, 1.0)
    letters = [EnsembleLetter(0.5, (0,), IDENTITY_2, "unitary"), EnsembleLetter(0.5, (0,), SIGMA_X, "unitary")]
    ensemble = _ensemble(graph, interaction, letters, mu=0.5)
    report = certify_holevo(ensemble, {5, 6}, [0.0, 0.01, 0.02, 1.0], CHAIN_GROWTH)
    assert report.certified
    assert report.points[0].lhs < 1e-10
    assert report.points[0].valid
    assert report.constants[0]["capacity_cap_bits"] == pytest.approx(1.0)


def test_certify_holevo_perturbation_letters():
    graph = LatticeGraph.chain(6)
    interaction = transverse_field_ising(graph, 1.0, 1.0)
    letters = [
        EnsembleLetter(0.5, (0,), 0.5 * SIGMA_Z, "perturbation"),
        EnsembleLetter(0.5, (0,), SIGMA_X, "perturbation"),
    ]
    ensemble = _ensemble(graph, interaction, letters)
    report = certify_holevo(ensemble, {4, 5}, [0.0, 0.01, 0.5], CHAIN_GROWTH)
    assert report.certified
    assert report.points[0].q == 1
    assert ensemble.max_norm_w == pytest.approx(1.0)
