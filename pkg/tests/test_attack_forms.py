"""Effective attacks, conditional pair states, and compiled event forms."""

import numpy as np
import pytest

from sargkit import attack_forms, qmath

RNG = np.random.default_rng(77002)


def random_attack(nu: int, contraction: bool = False) -> attack_forms.EffectiveAttack:
    m = RNG.normal(size=(2, 2 ** nu)) + 1j * RNG.normal(size=(2, 2 ** nu))
    if contraction:
        m /= max(1.0, np.linalg.norm(m, 2))
    return attack_forms.EffectiveAttack(nu=nu, map=m)


# ---------------------------------------------------------------------------
# Attack container
# ---------------------------------------------------------------------------

def test_flatten_round_trip():
    a = random_attack(3)
    b = attack_forms.EffectiveAttack.unflatten(a.flatten(), 3)
    assert np.array_equal(a.map, b.map)


def test_flatten_is_row_major():
    m = np.arange(8).reshape(2, 4).astype(complex)
    v = attack_forms.EffectiveAttack(nu=2, map=m).flatten()
    assert np.array_equal(v, np.arange(8))


def test_attack_validation():
    with pytest.raises(ValueError):
        attack_forms.EffectiveAttack(nu=2, map=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        attack_forms.EffectiveAttack(nu=0, map=np.zeros((2, 1)))
    with pytest.raises(ValueError):
        attack_forms.EffectiveAttack.unflatten(np.zeros(7), 2)


def test_blocks_to_attack_layout():
    # Block u holds the 2x2 action when the trash coordinates read u; column
    # b of block u must land at input index b * n_trash + u.
    blocks = [np.array([[1, 2], [3, 4]]), np.array([[5, 6], [7, 8]])]
    m = attack_forms.blocks_to_attack(blocks, nu=2).map
    assert np.array_equal(m[:, 0], [1, 3])   # b=0, u=0
    assert np.array_equal(m[:, 1], [5, 7])   # b=0, u=1
    assert np.array_equal(m[:, 2], [2, 4])   # b=1, u=0
    assert np.array_equal(m[:, 3], [6, 8])   # b=1, u=1
    with pytest.raises(ValueError):
        attack_forms.blocks_to_attack(blocks, nu=3)


def test_blocks_to_attack_single_photon_is_identity_embedding():
    blk = RNG.normal(size=(2, 2))
    assert np.array_equal(attack_forms.blocks_to_attack([blk], nu=1).map, blk)


# ---------------------------------------------------------------------------
# Conditional pair state
# ---------------------------------------------------------------------------

def test_identity_attack_gives_quarter_chi0_plus():
    # With M = 1 the rotations cancel, the filter halves the amplitude, and
    # averaging over the sift list leaves rho = (1/4) P(chi0+).
    a = attack_forms.EffectiveAttack(nu=1, map=np.eye(2))
    for protocol in qmath.PROTOCOLS:
        rho = attack_forms.conditional_pair_state(a, protocol)
        target = 0.25 * qmath.proj(qmath.bell_ket("chi0+"))
        assert np.abs(rho - target).max() < 1e-12
        p_fil, p_bit, p_ph = attack_forms.event_weights(rho)
        assert abs(p_fil - 0.25) < 1e-12
        assert abs(p_bit) < 1e-12 and abs(p_ph) < 1e-12


@pytest.mark.parametrize("protocol,nu", [("four-state", 1), ("four-state", 3),
                                         ("six-state", 2)])
def test_conditional_state_is_psd_with_bounded_trace(protocol, nu):
    for _ in range(60):
        rho = attack_forms.conditional_pair_state(
            random_attack(nu, contraction=True), protocol)
        assert qmath.is_hermitian(rho, tol=1e-12)
        assert qmath.min_eigenvalue(rho) >= -1e-12
        assert -1e-12 <= np.trace(rho).real <= 1.0


def test_event_weights_partition_trace():
    rho = attack_forms.conditional_pair_state(random_attack(2), "four-state")
    overlaps = attack_forms.bell_overlaps(rho)
    assert abs(sum(overlaps.values()) - np.trace(rho).real) < 1e-10
    p_fil, p_bit, p_ph = attack_forms.event_weights(rho)
    assert p_bit <= p_fil + 1e-12 and p_ph <= p_fil + 1e-12


def test_event_weights_rejects_wrong_shape():
    with pytest.raises(ValueError):
        attack_forms.event_weights(np.eye(8))


def test_weights_are_homogeneous_degree_two():
    a = random_attack(2)
    scaled = attack_forms.EffectiveAttack(nu=2, map=(0.5 - 0.25j) * a.map)
    w = attack_forms._weight_vector(a.flatten(), "four-state", 2)
    ws = attack_forms._weight_vector(scaled.flatten(), "four-state", 2)
    assert np.abs(ws - abs(0.5 - 0.25j) ** 2 * w).max() < 1e-12


@pytest.mark.parametrize("protocol", qmath.PROTOCOLS)
def test_sift_average_is_rotation_covariant(protocol):
    # Twisting the attack by any group element, M -> U_h^dag M U_h^{(x)nu},
    # permutes the sift sum (closure) and leaves every event weight fixed.
    nu = 2
    a = random_attack(nu)
    w = attack_forms._weight_vector(a.flatten(), protocol, nu)
    for h in qmath.constants(protocol).rotations:
        twisted = attack_forms.EffectiveAttack(
            nu=nu, map=qmath.dagger(h) @ a.map @ qmath.tensor_power(h, nu))
        wt = attack_forms._weight_vector(twisted.flatten(), protocol, nu)
        assert np.abs(wt - w).max() < 1e-12


# ---------------------------------------------------------------------------
# Compiled forms
# ---------------------------------------------------------------------------

def direct_forms(protocol: str, nu: int) -> dict[str, np.ndarray]:
    """Independent assembly of every event form as (1/|G|) sum_g L_g^dag W L_g.

    L_g maps flattened attack coordinates to the unnormalized pair vector for
    one sift term; built column by column from basis attacks, with no
    polarization involved.
    """
    cs = qmath.constants(protocol)
    psi = qmath.pair_source_ket(nu).reshape(2, 2 ** nu)
    dim = 2 ** (nu + 1)
    bells = cs.bell_projectors
    weights = {
        "fil": np.eye(4, dtype=complex),
        "bit": bells["chi1+"] + bells["chi1-"],
        "ph": bells["chi0-"] + bells["chi1-"],
        **{"bell:%s" % tag: bells[tag] for tag in qmath.BELL_TAGS},
    }
    out = {tag: np.zeros((dim, dim), dtype=complex) for tag in weights}
    for u in cs.rotations:
        fu = cs.filter_f @ qmath.dagger(u)
        uk = qmath.tensor_power(u, nu)
        lg = np.zeros((4, dim), dtype=complex)
        for i in range(dim):
            m = np.zeros((2, 2 ** nu), dtype=complex)
            m[i // 2 ** nu, i % 2 ** nu] = 1.0
            lg[:, i] = (psi @ (fu @ (m @ uk)).T).reshape(4)
        for tag, w in weights.items():
            out[tag] += qmath.dagger(lg) @ w @ lg
    return {tag: h / len(cs.rotations) for tag, h in out.items()}


@pytest.mark.parametrize("protocol,nu", [("four-state", 1), ("four-state", 2),
                                         ("four-state", 3), ("six-state", 1),
                                         ("six-state", 2)])
def test_polarized_forms_match_direct_assembly(protocol, nu):
    forms = attack_forms.all_forms(protocol, nu)
    direct = direct_forms(protocol, nu)
    assert set(forms) == set(attack_forms.EVENT_TAGS)
    for tag, form in forms.items():
        assert np.abs(form.matrix - direct[tag]).max() < 1e-10


@pytest.mark.parametrize("protocol,nu", [("four-state", 1), ("four-state", 2),
                                         ("four-state", 4), ("six-state", 1),
                                         ("six-state", 3)])
def test_forms_reproduce_weights_on_random_attacks(protocol, nu):
    forms = attack_forms.all_forms(protocol, nu)
    for _ in range(40):
        a = random_attack(nu)
        w = attack_forms._weight_vector(a.flatten(), protocol, nu)
        for k, tag in enumerate(attack_forms.EVENT_TAGS):
            assert abs(forms[tag].weight(a) - w[k]) <= 1e-9 * max(1.0, abs(w[k]))


@pytest.mark.parametrize("protocol,nu", [("four-state", 1), ("four-state", 2),
                                         ("six-state", 2)])
def test_forms_hermitian_and_psd(protocol, nu):
    for form in attack_forms.all_forms(protocol, nu).values():
        assert qmath.is_hermitian(form.matrix, tol=1e-12)
        assert qmath.min_eigenvalue(form.matrix) >= attack_forms.FORM_PSD_TOL


def test_form_matrix_lookup_and_validation():
    f = attack_forms.form_matrix("bit", "four-state", 2)
    assert f.event == "bit" and f.nu == 2
    with pytest.raises(ValueError):
        attack_forms.form_matrix("oops", "four-state", 2)
    with pytest.raises(ValueError):
        attack_forms.all_forms("four-state", 9)
    with pytest.raises(ValueError):
        attack_forms.all_forms("three-state", 1)


def test_weight_linearity_over_kraus_branches():
    # Event probabilities of a channel are sums over Kraus branches; the
    # quadratic form evaluates each branch independently, so the total is
    # branch-order independent.
    forms = attack_forms.all_forms("four-state", 2)
    branches = [random_attack(2, contraction=True) for _ in range(3)]
    total = {tag: sum(forms[tag].weight(b) for b in branches)
             for tag in attack_forms.EVENT_TAGS}
    total_rev = {tag: sum(forms[tag].weight(b) for b in reversed(branches))
                 for tag in attack_forms.EVENT_TAGS}
    for tag in attack_forms.EVENT_TAGS:
        assert abs(total[tag] - total_rev[tag]) < 1e-12
