"""Energy-based channel learning on the secondary transmitter.

The learner holds a probe vector constant for one transmission cycle, reads
the beacon, and from ``t^2 + 1`` readings rebuilds ``alpha * H* H`` in closed
form. Diagonal entries come from unit probes ``e_l``; each off-diagonal pair
``(l, m)`` needs two two-antenna probes at 45 degrees, one real and one with a
quarter-turn phase, whose energy deficit against the diagonal prediction gives
the real and imaginary parts.
"""

from dataclasses import dataclass

import numpy as np

from .beacon import BeaconMode
from .cmatrix import ABS_FLOOR, HermitianEig, hermitian_eig

BASELINE = ("b",)
DEFAULT_NULL_TOL = 1e-8
SAMPLED_BASELINE_REPEATS = 8
# negative diagonal beyond this many noise standard deviations is an error, not noise
DIAG_ABORT_SIGMAS = 6.0


class MissingProbeError(KeyError):
    pass


class InconsistentBeaconError(RuntimeError):
    """Beacon readings cannot come from a fixed alpha * G (e.g. alpha drifted)."""


@dataclass(frozen=True)
class ProbeVector:
    l: int
    m: int
    theta: float
    phi: float

    def as_vector(self, t2):
        x = np.zeros(t2, dtype=np.complex128)
        if self.l == self.m:
            x[self.l] = 1.0
        else:
            x[self.l] = np.cos(self.theta)
            x[self.m] = np.exp(-1j * self.phi) * np.sin(self.theta)
        return x


def probe_schedule(t2):
    """Ordered ``(label, vector)`` probes: baseline, diagonals, then pairs.

    Labels are ``("b",)``, ``("d", l)``, ``("re", l, m)`` and ``("im", l, m)``
    with zero-based antenna indices.
    """
    if t2 < 1:
        raise ValueError(f"t2 must be >= 1, got {t2}")
    sched = [(BASELINE, np.zeros(t2, dtype=np.complex128))]
    for l in range(t2):
        sched.append((("d", l), ProbeVector(l, l, 0.0, 0.0).as_vector(t2)))
    for l in range(t2 - 1):
        for m in range(l + 1, t2):
            sched.append((("re", l, m), ProbeVector(l, m, np.pi / 4, 0.0).as_vector(t2)))
            sched.append((("im", l, m), ProbeVector(l, m, np.pi / 4, np.pi / 2).as_vector(t2)))
    return sched


def calc_c(g_ll, g_mm, energy, theta):
    return g_ll * np.cos(theta) ** 2 + g_mm * np.sin(theta) ** 2 - energy


@dataclass(frozen=True)
class LearnedGram:
    """Reconstructed Gram matrix, known only up to the beacon gain.

    ``g_hat`` equals ``alpha * G`` for an unknown ``alpha > 0``; every
    threshold below is therefore relative to the spectrum of ``g_hat`` or to
    the beacon's own noise level. ``noise_threshold`` is zero when the
    beacon showed no measurable noise.
    """

    g_hat: np.ndarray
    eig: HermitianEig
    null_tol: float
    measurement_count: int
    noise_threshold: float = 0.0
    noise_fro: float = 0.0

    @property
    def t2(self):
        return self.g_hat.shape[0]

    @property
    def threshold(self):
        lam_max = self.eig.values[0] if self.eig.values.size else 0.0
        if lam_max <= ABS_FLOOR:
            return np.inf
        return max(self.null_tol * lam_max, self.noise_threshold)

    @property
    def null_dim(self):
        return int(np.count_nonzero(self.eig.values <= self.threshold))


@dataclass(frozen=True)
class Precoder:
    t: np.ndarray
    selected_indices: tuple
    residual_levels: np.ndarray

    @property
    def dim(self):
        return self.t.shape[1]


def _variance_model(base, cycle_length):
    # Var q = (2 u e + u b) / N with u = alpha * noise variance, from baseline repeats
    base = np.asarray(base, dtype=float)
    if base.size < 2 or cycle_length is None:
        return None
    b = float(base.mean())
    vb = float(base.var(ddof=1))
    if b <= 0.0 or vb <= 0.0:
        return None
    u = cycle_length * vb / b

    def var(q):
        e = max(q - b, 0.0)
        return (2.0 * u * e + u * b) / cycle_length

    return var, vb / base.size


def reconstruct_gram(measurements, null_tol=DEFAULT_NULL_TOL, cycle_length=None, k_sigma=3.0):
    """Closed-form Gram reconstruction from beacon readings.

    ``measurements`` maps each :func:`probe_schedule` label to its beacon
    value. The baseline entry may be a sequence of repeated readings; with
    ``cycle_length`` given, their spread calibrates the noise threshold used
    to decide which eigenvalues count as zero.
    """
    if BASELINE not in measurements:
        raise MissingProbeError("baseline reading missing")
    t2 = 1 + max((max(k[1:]) for k in measurements if len(k) > 1), default=-1)
    if t2 == 0:
        raise MissingProbeError("no diagonal probe readings")
    base = np.atleast_1d(np.asarray(measurements[BASELINE], dtype=float))
    b = float(base.mean())

    def get(label):
        try:
            return float(measurements[label])
        except KeyError:
            raise MissingProbeError(f"missing beacon reading for probe {label}") from None

    q_d = np.array([get(("d", l)) for l in range(t2)])
    g = np.zeros((t2, t2), dtype=np.complex128)
    diag = q_d - b
    model = _variance_model(base, cycle_length)
    var_d = np.zeros(t2)
    if model is not None:
        var_fn, var_b = model
        var_d = np.array([var_fn(q) for q in q_d]) + var_b
        bad = diag < -DIAG_ABORT_SIGMAS * np.sqrt(var_d)
    else:
        eps = max(1e-9 * max(float(diag.max()), 0.0), ABS_FLOOR)
        bad = diag < -eps
    if np.any(bad):
        l = int(np.argmax(bad))
        raise InconsistentBeaconError(f"reconstructed diagonal g[{l},{l}] = {diag[l]:.3e} is negative beyond tolerance")
    g[np.diag_indices(t2)] = diag
    noise_sq = float(np.sum(var_d))
    theta = np.pi / 4
    for l in range(t2 - 1):
        for m in range(l + 1, t2):
            q_re = get(("re", l, m))
            q_im = get(("im", l, m))
            # x* G x = cos^2 g_ll + sin^2 g_mm + sin(2 theta) Re(g_lm e^{-i phi}),
            # so both parts carry a minus sign
            re = -calc_c(diag[l], diag[m], q_re - b, theta)
            im = -calc_c(diag[l], diag[m], q_im - b, theta)
            g[l, m] = re + 1j * im
            g[m, l] = re - 1j * im
            if model is not None:
                var_fn = model[0]
                common = 0.25 * (var_fn(q_d[l]) + var_fn(q_d[m]))
                noise_sq += 2.0 * (2.0 * common + var_fn(q_re) + var_fn(q_im))
    noise_fro = float(np.sqrt(noise_sq))
    # a unit null vector sees roughly noise_fro / sqrt(t2) of the error matrix
    sigma_null = noise_fro / np.sqrt(t2)
    count = sum(len(np.atleast_1d(v)) for v in measurements.values())
    return LearnedGram(
        g_hat=g,
        eig=hermitian_eig(g),
        null_tol=null_tol,
        measurement_count=count,
        noise_threshold=k_sigma * sigma_null,
        noise_fro=noise_fro,
    )


def partial_precoder(lg, extra_dims):
    """Null-space columns plus the ``extra_dims`` least-interfering eigenvectors."""
    if extra_dims < 0:
        raise ValueError("extra_dims must be non-negative")
    d0 = lg.null_dim
    if d0 + extra_dims > lg.t2:
        raise ValueError(f"null dimension {d0} plus {extra_dims} extra exceeds t2 = {lg.t2}")
    vals = lg.eig.values
    # ascending eigenvalue, lower index first among ties
    order = np.lexsort((np.arange(vals.size), vals))[: d0 + extra_dims]
    return Precoder(
        t=lg.eig.vectors[:, order].copy(),
        selected_indices=tuple(int(i) for i in order),
        residual_levels=vals[order].copy(),
    )


def null_space(lg):
    return partial_precoder(lg, 0)


def run_learning_session(emitter, t2=None, null_tol=DEFAULT_NULL_TOL, baseline_repeats=None, k_sigma=3.0):
    """Probe ``emitter`` with the full schedule and reconstruct its Gram.

    Sample-average emitters get ``SAMPLED_BASELINE_REPEATS`` baseline readings
    by default so the beacon noise can be calibrated; ideal emitters are
    probed exactly ``t2**2 + 1`` times.
    """
    if t2 is None:
        t2 = emitter.cross.shape[1]
    if baseline_repeats is None:
        baseline_repeats = SAMPLED_BASELINE_REPEATS if BeaconMode(emitter.mode).sampled else 1
    measurements = {}
    for label, x in probe_schedule(t2):
        if label == BASELINE:
            measurements[label] = [emitter.emit(x) for _ in range(baseline_repeats)]
        else:
            measurements[label] = emitter.emit(x)
    return reconstruct_gram(
        measurements,
        null_tol=null_tol,
        cycle_length=emitter.cycle_length if baseline_repeats > 1 else None,
        k_sigma=k_sigma,
    )
