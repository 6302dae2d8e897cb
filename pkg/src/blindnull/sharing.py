"""Equal-priority spatial channel sharing (SCS) and its baselines.

Both users run the learner against each other's beacon, one after the
other, and then transmit inside the learned null spaces. Rates assume
Gaussian signalling with uniform power over the used transmit dimensions
and treat any residual interference as noise.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .beacon import BeaconEmitter, BeaconMode
from .channel import noise_power_from_snr, sample_channel_set
from .cmatrix import as_matrix, fro, numeric_rank
from .ebcl import DEFAULT_NULL_TOL, null_space, partial_precoder, run_learning_session

RANK_TOL = 1e-8


class Scheme(enum.Enum):
    SCS = "SCS"
    FDD = "FDD"
    NO_MITIGATION = "NoMitigation"
    PARTIAL_SCS = "PartialSCS"
    SINGLE_USER = "SingleUserFullChannel"


class SharingError(RuntimeError):
    pass


class SingularNoiseError(ValueError):
    pass


@dataclass(frozen=True)
class SharingOutcome:
    precoder_1: object
    precoder_2: object
    effective_channel_1: np.ndarray
    effective_channel_2: np.ndarray
    residual_interference_1: float
    residual_interference_2: float
    learned_1: object = None
    learned_2: object = None
    learning_cycles: int = 0


@dataclass(frozen=True)
class RateReport:
    scheme: Scheme
    rate_user1: float
    rate_user2: float
    snr: float
    trial_seed: int = 0
    residual_interference: float = 0.0
    learning_cycles: int = 0


def scs_handshake(
    cs,
    beacon_mode=BeaconMode.IDEAL,
    cycle_length=1,
    rng=None,
    alpha=1.0,
    null_tol=DEFAULT_NULL_TOL,
    allow_empty=False,
):
    """User 2 learns its interference Gram at receiver 1, then the roles swap.

    Raises :class:`SharingError` when a learned null space is empty unless
    ``allow_empty`` is set.
    """
    learned = {}
    cycles = 0
    for learner, victim in ((2, 1), (1, 2)):
        em = BeaconEmitter.for_receiver(
            cs, receiver=victim, mode=beacon_mode, alpha=alpha, cycle_length=cycle_length, rng=rng
        )
        learned[learner] = run_learning_session(em, null_tol=null_tol)
        cycles += em.calls
    p1 = null_space(learned[1])
    p2 = null_space(learned[2])
    if not allow_empty:
        for i, p in ((1, p1), (2, p2)):
            if p.dim == 0:
                cfg = cs.antennas
                raise SharingError(f"user {i} learned an empty null space (antennas t1={cfg.t1} r1={cfg.r1} t2={cfg.t2} r2={cfg.r2})")
    return SharingOutcome(
        precoder_1=p1,
        precoder_2=p2,
        effective_channel_1=cs.h11 @ p1.t,
        effective_channel_2=cs.h22 @ p2.t,
        residual_interference_1=fro(cs.h12 @ p2.t),
        residual_interference_2=fro(cs.h21 @ p1.t),
        learned_1=learned[1],
        learned_2=learned[2],
        learning_cycles=cycles,
    )


def mimo_rate_uniform(h, tx_power, noise_cov):
    """log2 det(I + (P / n_tx) Q^-1 H H*) in bits per channel use."""
    h = as_matrix(h)
    noise_cov = as_matrix(noise_cov)
    try:
        chol = np.linalg.cholesky(noise_cov)
    except np.linalg.LinAlgError:
        raise SingularNoiseError("noise covariance is not positive definite") from None
    n_tx = h.shape[1]
    if n_tx == 0 or tx_power == 0:
        return 0.0
    w = np.linalg.solve(chol, h)
    m = np.eye(h.shape[0]) + (tx_power / n_tx) * (w @ w.conj().T)
    m = 0.5 * (m + m.conj().T)
    return float(2.0 * np.sum(np.log2(np.linalg.cholesky(m).diagonal().real)))


def _interference_cov(cross, t, tx_power):
    if t.shape[1] == 0:
        return np.zeros((cross.shape[0], cross.shape[0]), dtype=np.complex128)
    f = cross @ t
    return (tx_power / t.shape[1]) * (f @ f.conj().T)


def _precoded_rates(cs, t1, t2, tx_power):
    rates = []
    for i, ti, tj in ((1, t1, t2), (2, t2, t1)):
        q = cs.noise_power(i) * np.eye(cs.direct(i).shape[0]) + _interference_cov(cs.cross(i), tj, tx_power)
        rates.append(mimo_rate_uniform(cs.direct(i) @ ti, tx_power, q))
    resid = float(np.hypot(fro(cs.h12 @ t2), fro(cs.h21 @ t1)))
    return rates[0], rates[1], resid


def evaluate_schemes(
    cs,
    snr_db,
    partial_extra=1,
    rng=None,
    tx_power=1.0,
    beacon_mode=BeaconMode.IDEAL,
    cycle_length=1,
    alpha=1.0,
    fdd_power_boost=False,
    schemes=tuple(Scheme),
    trial_seed=0,
    outcome=None,
):
    """Rates of every requested scheme on one channel realisation.

    The noise powers of ``cs`` are replaced by the level implied by
    ``snr_db``. :attr:`Scheme.SINGLE_USER` is always reported since it is the
    reference every rate ratio divides by.
    """
    schemes = {Scheme(s) for s in schemes} | {Scheme.SINGLE_USER}
    noise = noise_power_from_snr(snr_db, tx_power)
    cs = cs.with_noise(noise, noise)
    eye1 = np.eye(cs.antennas.r1)
    eye2 = np.eye(cs.antennas.r2)
    reports = []

    def add(scheme, r1, r2, resid=0.0, cycles=0):
        reports.append(RateReport(scheme, float(r1), float(r2), float(snr_db), trial_seed, float(resid), int(cycles)))

    if Scheme.SINGLE_USER in schemes:
        add(
            Scheme.SINGLE_USER,
            mimo_rate_uniform(cs.h11, tx_power, noise * eye1),
            mimo_rate_uniform(cs.h22, tx_power, noise * eye2),
        )
    if Scheme.FDD in schemes:
        p = 2.0 * tx_power if fdd_power_boost else tx_power
        add(
            Scheme.FDD,
            0.5 * mimo_rate_uniform(cs.h11, p, noise * eye1),
            0.5 * mimo_rate_uniform(cs.h22, p, noise * eye2),
        )
    if Scheme.NO_MITIGATION in schemes:
        cfg = cs.antennas
        r1, r2, resid = _precoded_rates(cs, np.eye(cfg.t1), np.eye(cfg.t2), tx_power)
        add(Scheme.NO_MITIGATION, r1, r2, resid)
    if schemes & {Scheme.SCS, Scheme.PARTIAL_SCS}:
        if outcome is None:
            outcome = scs_handshake(cs, beacon_mode, cycle_length, rng, alpha=alpha, allow_empty=True)
        if Scheme.SCS in schemes:
            r1, r2, resid = _precoded_rates(cs, outcome.precoder_1.t, outcome.precoder_2.t, tx_power)
            add(Scheme.SCS, r1, r2, resid, outcome.learning_cycles)
        if Scheme.PARTIAL_SCS in schemes:
            pre = []
            for lg in (outcome.learned_1, outcome.learned_2):
                extra = min(partial_extra, lg.t2 - lg.null_dim)
                pre.append(partial_precoder(lg, extra).t)
            r1, r2, resid = _precoded_rates(cs, pre[0], pre[1], tx_power)
            add(Scheme.PARTIAL_SCS, r1, r2, resid, outcome.learning_cycles)
    order = {s: k for k, s in enumerate(Scheme)}
    return sorted(reports, key=lambda r: order[r.scheme])


@dataclass(frozen=True)
class DofReport:
    cfg: object
    trials: int
    violations_user1: int
    violations_user2: int

    @property
    def claim_holds(self):
        c = self.cfg
        return c.t1 >= c.r1 + c.r2 and c.t2 >= c.r2 + c.r1

    @property
    def violations(self):
        return self.violations_user1 + self.violations_user2

    @property
    def loss_fraction_user1(self):
        return self.violations_user1 / self.trials


def validate_dof_preservation(cfg, trials, rng, interference_gain=1.0, rel_tol=RANK_TOL):
    """Count trials where SCS precoding lowers a user's rank below rank(H_ii)."""
    v1 = v2 = 0
    for _ in range(trials):
        cs = sample_channel_set(cfg, 0.0, 0.0, interference_gain, rng)
        out = scs_handshake(cs, allow_empty=True)
        for i, eff in ((1, out.effective_channel_1), (2, out.effective_channel_2)):
            full = numeric_rank(cs.direct(i), rel_tol)
            kept = numeric_rank(eff, rel_tol) if eff.shape[1] else 0
            if kept < full:
                if i == 1:
                    v1 += 1
                else:
                    v2 += 1
    return DofReport(cfg, trials, v1, v2)


@dataclass(frozen=True)
class ZmswReport:
    """Sample moments of user 1's effective channel entries across trials.

    Bounds scale as ``c / sqrt(trials)``; at 10^4 trials they are 0.03 for
    the mean, +-0.04 for the variance and 0.03 for pairwise correlations.
    """

    trials: int
    shape: tuple
    means: np.ndarray
    variances: np.ndarray
    max_abs_corr: float
    ks_statistic: float
    ks_pvalue: float
    significance: float = 1e-3

    @property
    def mean_bound(self):
        return 3.0 / np.sqrt(self.trials)

    @property
    def var_bound(self):
        return 4.0 / np.sqrt(self.trials)

    @property
    def corr_bound(self):
        return 3.0 / np.sqrt(self.trials)

    @property
    def mean_ok(self):
        return bool(np.all(np.abs(self.means) <= self.mean_bound))

    @property
    def variance_ok(self):
        return bool(np.all(np.abs(self.variances - 1.0) <= self.var_bound))

    @property
    def corr_ok(self):
        return self.max_abs_corr <= self.corr_bound

    @property
    def ks_ok(self):
        return self.ks_pvalue > self.significance

    @property
    def passed(self):
        return self.mean_ok and self.variance_ok and self.corr_ok and self.ks_ok


def effective_channel_samples(cfg, trials, rng, interference_gain=1.0):
    """Stack of user 1's learned effective channels H11 T1, one per trial."""
    out = None
    for k in range(trials):
        cs = sample_channel_set(cfg, 0.0, 0.0, interference_gain, rng)
        eff = scs_handshake(cs).effective_channel_1
        if out is None:
            out = np.empty((trials,) + eff.shape, dtype=np.complex128)
        out[k] = eff
    return out


def zmsw_statistics(samples, significance=1e-3):
    trials = samples.shape[0]
    flat = samples.reshape(trials, -1)
    means = flat.mean(axis=0)
    centred = flat - means
    variances = np.mean(np.abs(centred) ** 2, axis=0)
    cov = centred.T @ centred.conj() / trials
    sd = np.sqrt(variances)
    corr = cov / np.outer(sd, sd)
    off = ~np.eye(flat.shape[1], dtype=bool)
    max_corr = float(np.max(np.abs(corr[off]))) if flat.shape[1] > 1 else 0.0
    ks = stats.kstest(flat[:, 0].real, stats.norm(0.0, np.sqrt(0.5)).cdf, method="asymp")
    return ZmswReport(
        trials=trials,
        shape=samples.shape[1:],
        means=means.reshape(samples.shape[1:]),
        variances=variances.reshape(samples.shape[1:]),
        max_abs_corr=max_corr,
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        significance=significance,
    )


def validate_zmsw_effective_channel(cfg, trials, rng, interference_gain=1.0, significance=1e-3):
    return zmsw_statistics(effective_channel_samples(cfg, trials, rng, interference_gain), significance)
