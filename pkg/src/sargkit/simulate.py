"""Monte Carlo protocol sessions over a lossy depolarizing channel.

Channel model per pulse of nu photons in state rho^(x)nu:

* with probability 1 - 4p/3 the pulse is intact, otherwise every photon is
  replaced by an independent uniformly random pure polarization (an exact
  purification of the fully mixed product state);
* each photon then independently reaches Bob with probability eta;
* Bob undoes his rotation and measures every arrived photon in the basis
  {|phi_j'>, |phibar_j'>}; all-phibar patterns are conclusive, all-phi
  patterns inconclusive, and mixed patterns are resolved by a fair coin
  (the squash rule); vacuum gives no detection.

Randomness is counter-based: trial a consumes exactly the 32 raw 64-bit
words at stream offset 32*a of a Philox generator keyed by the master seed,
so every trial is replayable in isolation and aggregate statistics are
independent of how the trial range is sharded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qmath

SLOTS = 32
MAX_PHOTONS = 6

# Slot layout (uniform deviates unless noted): 0 Alice bit, 1 Alice rotation,
# 2 Bob rotation, 3 Bob basis, 4 depolarizing branch, 5 squash coin,
# 6 photon count (coherent mode), 7-12 per-photon arrival, 13-18 per-photon
# outcome, 19-24 per-photon cos(theta), 25-30 per-photon azimuth, 31 spare.
_SLOT_BIT = 0
_SLOT_ROT_A = 1
_SLOT_ROT_B = 2
_SLOT_BASIS = 3
_SLOT_BRANCH = 4
_SLOT_COIN = 5
_SLOT_COUNT = 6
_SLOT_ARRIVE = 7
_SLOT_OUTCOME = 13
_SLOT_COS = 19
_SLOT_AZIMUTH = 25


@dataclass(frozen=True)
class SimConfig:
    """Session parameters for the Monte Carlo engine.

    Exactly one of nu (fixed photon number, 1..4) and mu (coherent intensity,
    photon number Poisson-distributed and truncated at MAX_PHOTONS with
    renormalization) must be given.
    """

    protocol: str
    trials: int
    seed: int
    p: float = 0.0
    eta: float = 1.0
    nu: int | None = None
    mu: float | None = None

    def __post_init__(self):
        if self.protocol not in qmath.PROTOCOLS:
            raise ValueError("unknown protocol %r" % (self.protocol,))
        if (self.nu is None) == (self.mu is None):
            raise ValueError("exactly one of nu and mu must be set")
        if self.nu is not None and self.nu not in (1, 2, 3, 4):
            raise ValueError("fixed photon number must be in 1..4")
        if self.mu is not None and not self.mu > 0.0:
            raise ValueError("coherent intensity must be positive")
        if not 0.0 <= self.p <= 0.75:
            raise ValueError("depolarizing rate must be in [0, 0.75]")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("transmittance must be in (0, 1]")
        if not (isinstance(self.trials, int) and self.trials >= 1):
            raise ValueError("trials must be a positive integer")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValueError("seed must be a nonnegative integer")

    @property
    def max_photons(self) -> int:
        return self.nu if self.nu is not None else MAX_PHOTONS


@dataclass(frozen=True)
class TrialRecord:
    """Complete replay of one trial from its slice of the random stream."""

    index: int
    alice_bit: int
    alice_rotation: int
    bob_rotation: int
    bob_basis: int
    sifted: bool
    photons_sent: int
    photons_arrived: int
    pulse_intact: bool
    outcomes: tuple[int, ...]  # conclusive-side flag per arrived photon
    used_squash_coin: bool
    conclusive: bool
    inferred_bit: int | None
    error: bool

    def __post_init__(self):
        if self.conclusive and self.inferred_bit is None:
            raise ValueError("conclusive trial must carry an inferred bit")
        if self.error and not self.conclusive:
            raise ValueError("errors are defined only on conclusive trials")


@dataclass(frozen=True)
class PerNuStats:
    """Sifted-trial tallies for one photon number of a coherent-source run."""

    nu: int
    sifted: int
    conclusive: int
    errors: int


@dataclass(frozen=True)
class SimStats:
    """Aggregated session statistics with binomial standard errors."""

    config: SimConfig
    sifted: int
    detected: int
    conclusive: int
    errors: int
    conclusive_fraction: float
    conclusive_se: float
    e_bit: float
    e_bit_se: float
    per_nu: tuple[PerNuStats, ...] | None = None

    def __post_init__(self):
        for name in ("conclusive_fraction", "e_bit"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError("%s must be in [0, 1]" % (name,))


@dataclass(frozen=True)
class ExactStats:
    """Closed-channel statistics from density-matrix enumeration."""

    protocol: str
    nu: int
    p: float
    eta: float
    conclusive_prob: float
    e_bit: float


@dataclass(frozen=True)
class CompareResult:
    """z-scores of a Monte Carlo run against its exact statistics."""

    z_conclusive: float
    z_ebit: float
    passed: bool


def _raw_block(seed: int, start: int, count: int) -> np.ndarray:
    """Raw uint64 slots for trials [start, start+count), shape (count, SLOTS)."""
    bg = np.random.Philox(key=np.uint64(seed))
    if start:
        bg.advance(start * (SLOTS // 4))  # advance unit = 4 raw words
    raw = bg.random_raw(count * SLOTS)
    return raw.reshape(count, SLOTS)


def _units(raw: np.ndarray) -> np.ndarray:
    """Map raw 64-bit words to float64 uniforms on [0, 1)."""
    return (raw >> np.uint64(11)) * 2.0 ** -53


def _truncated_poisson_cdf(mu: float) -> np.ndarray:
    """CDF of the photon-number law truncated at MAX_PHOTONS, renormalized."""
    pmf = np.array(
        [math.exp(-mu) * mu ** n / math.factorial(n) for n in range(MAX_PHOTONS + 1)]
    )
    pmf /= pmf.sum()
    return np.cumsum(pmf)


def _conclusive_flag_prob(protocol: str) -> np.ndarray:
    """Table P[j', j] = |<phibar_j' | phi_j>|^2 for intact arrived photons."""
    table = np.empty((2, 2))
    for jp in range(2):
        bra = qmath.signal_perp_ket(jp)
        for j in range(2):
            amp = np.vdot(bra, qmath.signal_ket(j))
            table[jp, j] = abs(amp) ** 2
    return table


def _shard_tallies(units: np.ndarray, cfg: SimConfig, flag_table: np.ndarray,
                   n_rot: int, cdf: np.ndarray | None) -> np.ndarray:
    """Tallies for one shard: rows indexed by photon count 0..max, columns
    (sifted, detected, conclusive, errors)."""
    j = (units[:, _SLOT_BIT] * 2).astype(np.int64)
    rot_a = (units[:, _SLOT_ROT_A] * n_rot).astype(np.int64)
    rot_b = (units[:, _SLOT_ROT_B] * n_rot).astype(np.int64)
    jp = (units[:, _SLOT_BASIS] * 2).astype(np.int64)
    intact = units[:, _SLOT_BRANCH] >= 4.0 * cfg.p / 3.0
    coin = units[:, _SLOT_COIN] < 0.5

    if cdf is None:
        n = np.full(len(units), cfg.nu, dtype=np.int64)
    else:
        n = np.searchsorted(cdf, units[:, _SLOT_COUNT], side="right")

    k = cfg.max_photons
    idx = np.arange(k)
    arrived = (idx < n[:, None]) & (
        units[:, _SLOT_ARRIVE:_SLOT_ARRIVE + k] < cfg.eta
    )
    cos_theta = 2.0 * units[:, _SLOT_COS:_SLOT_COS + k] - 1.0
    p_flag = np.where(
        intact[:, None], flag_table[jp, j][:, None], 0.5 * (1.0 + cos_theta)
    )
    flags = arrived & (units[:, _SLOT_OUTCOME:_SLOT_OUTCOME + k] < p_flag)

    m = arrived.sum(axis=1)
    n_flag = flags.sum(axis=1)
    detected = m > 0
    all_flag = detected & (n_flag == m)
    mixed_pattern = detected & (n_flag > 0) & (n_flag < m)
    conclusive = all_flag | (mixed_pattern & coin)
    error = conclusive & (jp == j)
    sifted = rot_a == rot_b

    tallies = np.zeros((MAX_PHOTONS + 1, 4), dtype=np.int64)
    for column, mask in enumerate((sifted, detected, conclusive, error)):
        keep = sifted & mask if column else mask
        np.add.at(tallies[:, column], n[keep], 1)
    return tallies


def _binomial_se(successes: int, n: int) -> float:
    if n == 0:
        return 0.0
    f = successes / n
    return math.sqrt(f * (1.0 - f) / n)


def run_monte_carlo(cfg: SimConfig, shard_size: int = 1 << 16) -> SimStats:
    """Simulate cfg.trials sessions and aggregate sifted-trial statistics.

    shard_size only controls memory use; results are bit-identical for any
    value because each trial reads a fixed slice of the counter-based stream.
    """
    n_rot = qmath.constants(cfg.protocol).n_rotations
    flag_table = _conclusive_flag_prob(cfg.protocol)
    cdf = None if cfg.nu is not None else _truncated_poisson_cdf(cfg.mu)

    tallies = np.zeros((MAX_PHOTONS + 1, 4), dtype=np.int64)
    start = 0
    while start < cfg.trials:
        count = min(shard_size, cfg.trials - start)
        units = _units(_raw_block(cfg.seed, start, count))
        tallies += _shard_tallies(units, cfg, flag_table, n_rot, cdf)
        start += count

    sifted, detected, conclusive, errors = (int(v) for v in tallies.sum(axis=0))
    frac = conclusive / sifted if sifted else 0.0
    ebit = errors / conclusive if conclusive else 0.0
    per_nu = None
    if cfg.mu is not None:
        per_nu = tuple(
            PerNuStats(nu=n, sifted=int(row[0]), conclusive=int(row[2]),
                       errors=int(row[3]))
            for n, row in enumerate(tallies)
        )
    return SimStats(
        config=cfg,
        sifted=sifted,
        detected=detected,
        conclusive=conclusive,
        errors=errors,
        conclusive_fraction=frac,
        conclusive_se=_binomial_se(conclusive, sifted),
        e_bit=ebit,
        e_bit_se=_binomial_se(errors, conclusive),
        per_nu=per_nu,
    )


def replay_trial(cfg: SimConfig, index: int) -> TrialRecord:
    """Reconstruct one trial in full from its slice of the random stream."""
    if not 0 <= index < cfg.trials:
        raise ValueError("trial index out of range")
    n_rot = qmath.constants(cfg.protocol).n_rotations
    flag_table = _conclusive_flag_prob(cfg.protocol)
    u = _units(_raw_block(cfg.seed, index, 1))[0]

    j = int(u[_SLOT_BIT] * 2)
    rot_a = int(u[_SLOT_ROT_A] * n_rot)
    rot_b = int(u[_SLOT_ROT_B] * n_rot)
    jp = int(u[_SLOT_BASIS] * 2)
    intact = u[_SLOT_BRANCH] >= 4.0 * cfg.p / 3.0
    coin = u[_SLOT_COIN] < 0.5
    if cfg.nu is not None:
        n = cfg.nu
    else:
        n = int(np.searchsorted(_truncated_poisson_cdf(cfg.mu),
                                u[_SLOT_COUNT], side="right"))

    outcomes = []
    for i in range(n):
        if u[_SLOT_ARRIVE + i] >= cfg.eta:
            continue
        if intact:
            p_flag = flag_table[jp, j]
        else:
            p_flag = 0.5 * (1.0 + (2.0 * u[_SLOT_COS + i] - 1.0))
        outcomes.append(int(u[_SLOT_OUTCOME + i] < p_flag))

    m = len(outcomes)
    n_flag = sum(outcomes)
    mixed_pattern = m > 0 and 0 < n_flag < m
    conclusive = (m > 0 and n_flag == m) or (mixed_pattern and coin)
    inferred = 1 - jp if conclusive else None
    return TrialRecord(
        index=index,
        alice_bit=j,
        alice_rotation=rot_a,
        bob_rotation=rot_b,
        bob_basis=jp,
        sifted=rot_a == rot_b,
        photons_sent=n,
        photons_arrived=m,
        pulse_intact=bool(intact),
        outcomes=tuple(outcomes),
        used_squash_coin=mixed_pattern,
        conclusive=conclusive,
        inferred_bit=inferred,
        error=conclusive and inferred != j,
    )


def exact_channel_stats(protocol: str, nu: int, p: float, eta: float) -> ExactStats:
    """Exact conclusive probability and error rate by full enumeration.

    Averages over matched sift rotations and enumerates channel branches,
    arrival patterns, per-photon measurement outcomes, and squash coins,
    computing every outcome probability from density matrices.  Implemented
    for the key-generating photon numbers nu = 1, 2 only.
    """
    if nu not in (1, 2):
        raise ValueError("exact enumeration is implemented for nu in {1, 2}")
    if not 0.0 <= p <= 0.75:
        raise ValueError("depolarizing rate must be in [0, 0.75]")
    if not 0.0 < eta <= 1.0:
        raise ValueError("transmittance must be in (0, 1]")

    cs = qmath.constants(protocol)
    mixed_dm = 0.5 * qmath.I2
    p_conclusive = 0.0
    p_error = 0.0
    for rot in cs.rotations:  # matched sift round: Bob applies the inverse
        undo = qmath.dagger(rot)
        for j in (0, 1):
            sent = rot @ qmath.signal_ket(j)
            intact_dm = qmath.proj(undo @ sent)
            for jp in (0, 1):
                measure = qmath.proj(qmath.signal_perp_ket(jp))
                weight = 1.0 / (len(cs.rotations) * 4)
                for branch_prob, dm in (
                    (1.0 - 4.0 * p / 3.0, intact_dm),
                    (4.0 * p / 3.0, mixed_dm),
                ):
                    q = float(np.trace(measure @ dm).real)
                    if q < 1e-14:
                        q = 0.0  # orthogonal outcome up to roundoff
                    for m in range(nu + 1):  # photons arriving
                        arrive = math.comb(nu, m) * eta ** m * (1 - eta) ** (nu - m)
                        if m == 0:
                            continue  # vacuum: no detection
                        for k in range(m + 1):  # conclusive-side outcomes
                            pattern = (
                                math.comb(m, k) * q ** k * (1.0 - q) ** (m - k)
                            )
                            if k == m:
                                conclusive = 1.0
                            elif k == 0:
                                conclusive = 0.0
                            else:
                                conclusive = 0.5  # fair-coin squash
                            contrib = weight * branch_prob * arrive * pattern
                            p_conclusive += contrib * conclusive
                            if jp == j:
                                p_error += contrib * conclusive
    e_bit = p_error / p_conclusive if p_conclusive else 0.0
    return ExactStats(
        protocol=protocol, nu=nu, p=p, eta=eta,
        conclusive_prob=p_conclusive, e_bit=e_bit,
    )


def compare(sim: SimStats, exact: ExactStats) -> CompareResult:
    """z-scores of simulated conclusive fraction and error rate vs exact."""
    cfg = sim.config
    if (cfg.protocol, cfg.nu, cfg.p, cfg.eta) != (
        exact.protocol, exact.nu, exact.p, exact.eta
    ):
        raise ValueError("simulation and exact statistics describe different runs")

    def z(observed: float, expected: float, se: float) -> float:
        if se == 0.0:
            return 0.0 if observed == expected else math.inf
        return (observed - expected) / se

    z_conc = z(sim.conclusive_fraction, exact.conclusive_prob, sim.conclusive_se)
    z_ebit = z(sim.e_bit, exact.e_bit, sim.e_bit_se)
    return CompareResult(
        z_conclusive=z_conc,
        z_ebit=z_ebit,
        passed=abs(z_conc) <= 3.0 and abs(z_ebit) <= 3.0,
    )
