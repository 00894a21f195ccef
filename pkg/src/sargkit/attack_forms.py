"""Eve's effective per-branch attack and the event probability forms.

An attack on a nu-photon pulse, after the unused (trash) outputs have been
projected away, is just an arbitrary linear map from the nu transit qubits to
Bob's kept qubit: a complex 2 x 2^nu matrix ``M``.  No normalization is
imposed; every event probability below is homogeneous of degree 2 in ``M``,
so one-sided inequalities between them are scale invariant.

For a fixed protocol, the sifted conclusive events are described by the
(unnormalized) conditional pair state

    rho(M) = (1/|G|) sum_g (1_A (x) F U_g^dag M U_g^{(x)nu}) P(pair source) (...)^dag

and the conclusive / bit-error / phase-error probabilities are traces of
rho(M) against Bell projectors.  Because each is a quadratic form in the
flattened attack coordinates, it is compiled once into a Hermitian matrix
H_event (side 2^{nu+1}) by polarization over basis attacks; all verification
then happens at the level of these matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import qmath

EVENT_TAGS = ("fil", "bit", "ph", "bell:chi0+", "bell:chi0-", "bell:chi1+", "bell:chi1-")

MAX_NU = 5

FORM_DECOMP_TOL = 1e-10
FORM_PSD_TOL = -1e-10


@dataclass(frozen=True)
class EffectiveAttack:
    """One Kraus branch of Eve's channel: a 2 x 2^nu map, trash already projected.

    The coordinate vector is the row-major flattening of the map (output index
    major), length 2^{nu+1}.
    """

    nu: int
    map: np.ndarray

    def __post_init__(self):
        if not (1 <= self.nu <= MAX_NU):
            raise ValueError("photon number must be in 1..%d" % MAX_NU)
        m = np.asarray(self.map, dtype=complex)
        if m.shape != (2, 2 ** self.nu):
            raise ValueError("attack map must be 2 x 2^nu, got %s" % (m.shape,))
        object.__setattr__(self, "map", m)

    def flatten(self) -> np.ndarray:
        return self.map.reshape(-1).copy()

    @classmethod
    def unflatten(cls, v: np.ndarray, nu: int) -> "EffectiveAttack":
        v = np.asarray(v, dtype=complex)
        if v.shape != (2 ** (nu + 1),):
            raise ValueError("coordinate vector must have length 2^(nu+1)")
        return cls(nu=nu, map=v.reshape(2, 2 ** nu))


def blocks_to_attack(blocks, nu: int) -> EffectiveAttack:
    """Assemble an attack from 2^{nu-1} qubit blocks, one per trash index.

    Block ``u`` is the 2x2 action on Bob's photon when the remaining input
    coordinates select trash index ``u``; the map acts on |b> (x) |u> with the
    kept-photon index major.  For nu = 1 the single block is the map itself.
    """
    blocks = [np.asarray(b, dtype=complex) for b in blocks]
    if len(blocks) != 2 ** (nu - 1):
        raise ValueError("expected %d blocks for nu=%d" % (2 ** (nu - 1), nu))
    for b in blocks:
        if b.shape != (2, 2):
            raise ValueError("each block must be 2x2")
    n_trash = 2 ** (nu - 1)
    m = np.zeros((2, 2 ** nu), dtype=complex)
    for u, blk in enumerate(blocks):
        for b in (0, 1):
            m[:, b * n_trash + u] = blk[:, b]
    return EffectiveAttack(nu=nu, map=m)


@lru_cache(maxsize=None)
def _sift_terms(protocol: str, nu: int):
    """Per-rotation precomputation: (F U_g^dag, U_g^{(x)nu}) for the sift list."""
    cs = qmath.constants(protocol)
    f = cs.filter_f
    terms = []
    for u in cs.rotations:
        terms.append((f @ qmath.dagger(u), qmath.tensor_power(u, nu)))
    return tuple(terms)


def conditional_pair_state(attack: EffectiveAttack, protocol: str) -> np.ndarray:
    """Unnormalized 4x4 pair state conditioned on sift match and filter success.

    PSD by construction; trace in [0, 1] whenever ||M|| <= 1.
    """
    nu = attack.nu
    m = attack.map
    psi = qmath.pair_source_ket(nu).reshape(2, 2 ** nu)
    rho = np.zeros((4, 4), dtype=complex)
    terms = _sift_terms(protocol, nu)
    for fu, uk in terms:
        a = fu @ (m @ uk)
        wv = (psi @ a.T).reshape(4)
        rho += np.outer(wv, wv.conj())
    return rho / len(terms)


def event_weights(rho: np.ndarray) -> tuple[float, float, float]:
    """(p_fil, p_bit, p_ph) of a 4x4 conditional pair state.

    p_fil is the full trace; the bit-error weight collects the chi1+/chi1-
    Bell components and the phase-error weight the chi0-/chi1- components.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("pair state must be 4x4")
    b = bell_overlaps(rho)
    p_fil = float(np.trace(rho).real)
    return p_fil, b["chi1+"] + b["chi1-"], b["chi0-"] + b["chi1-"]


def bell_overlaps(rho: np.ndarray) -> dict[str, float]:
    """Traces of rho against the four Bell projectors."""
    bells = qmath.constants("four-state").bell_projectors
    return {tag: float(np.trace(p @ rho).real) for tag, p in bells.items()}


def _weight_vector(v: np.ndarray, protocol: str, nu: int) -> np.ndarray:
    """All seven event weights of one attack coordinate vector."""
    rho = conditional_pair_state(EffectiveAttack.unflatten(v, nu), protocol)
    b = bell_overlaps(rho)
    p_fil = float(np.trace(rho).real)
    return np.array(
        [
            p_fil,
            b["chi1+"] + b["chi1-"],
            b["chi0-"] + b["chi1-"],
            b["chi0+"],
            b["chi0-"],
            b["chi1+"],
            b["chi1-"],
        ]
    )


@dataclass(frozen=True)
class EventForm:
    """Hermitian matrix H with p_event(attack) = v^dag H v over attack coordinates."""

    event: str
    protocol: str
    nu: int
    matrix: np.ndarray

    def weight(self, attack: EffectiveAttack) -> float:
        v = attack.flatten()
        return float((v.conj() @ self.matrix @ v).real)


@lru_cache(maxsize=None)
def all_forms(protocol: str, nu: int) -> dict[str, EventForm]:
    """Compile every event form for (protocol, nu) in one polarization pass.

    Diagonal entries come from basis attacks e_i; off-diagonal real and
    imaginary parts from the probes e_i + e_j and e_i + i e_j.
    """
    if protocol not in qmath.PROTOCOLS:
        raise ValueError("unknown protocol %r" % (protocol,))
    if not (1 <= nu <= MAX_NU):
        raise ValueError("photon number must be in 1..%d" % MAX_NU)
    dim = 2 ** (nu + 1)
    n_ev = len(EVENT_TAGS)
    mats = np.zeros((n_ev, dim, dim), dtype=complex)
    diag = np.zeros((n_ev, dim))
    probe = np.zeros(dim, dtype=complex)
    for i in range(dim):
        probe[:] = 0
        probe[i] = 1
        diag[:, i] = _weight_vector(probe, protocol, nu)
        mats[:, i, i] = diag[:, i]
    for i in range(dim):
        for j in range(i + 1, dim):
            probe[:] = 0
            probe[i] = 1
            probe[j] = 1
            w_re = _weight_vector(probe, protocol, nu)
            probe[j] = 1j
            w_im = _weight_vector(probe, protocol, nu)
            re = (w_re - diag[:, i] - diag[:, j]) / 2
            im = -(w_im - diag[:, i] - diag[:, j]) / 2
            mats[:, i, j] = re + 1j * im
            mats[:, j, i] = re - 1j * im
    return {
        tag: EventForm(event=tag, protocol=protocol, nu=nu, matrix=mats[k])
        for k, tag in enumerate(EVENT_TAGS)
    }


def form_matrix(event: str, protocol: str, nu: int) -> EventForm:
    """The compiled Hermitian form for one event tag."""
    if event not in EVENT_TAGS:
        raise ValueError("unknown event %r" % (event,))
    return all_forms(protocol, nu)[event]
