"""Primary-receiver beacon: the scalar interference-plus-noise report q(n).

The emitter sits at one receiver, sees the learner's constant probe
``x2_tilde`` through the cross channel and reports ``alpha * q(n)``. The
learner never sees ``alpha``, the channels or the noise level.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import sample_zmsw
from .cmatrix import ShapeError, as_matrix, as_vector, column_space_projector, fro, hermitian_eig

PROJECTOR_TOL = 1e-9
LITERAL_MAX_CYCLE = 1 << 14
CHUNK = 1 << 15


class BeaconMode(enum.Enum):
    IDEAL = "ideal"
    SAMPLE_AVERAGE = "sampled"
    PROJECTED_IDEAL = "projected_ideal"
    PROJECTED_SAMPLE_AVERAGE = "projected_sampled"

    @property
    def projected(self):
        return self in (BeaconMode.PROJECTED_IDEAL, BeaconMode.PROJECTED_SAMPLE_AVERAGE)

    @property
    def sampled(self):
        return self in (BeaconMode.SAMPLE_AVERAGE, BeaconMode.PROJECTED_SAMPLE_AVERAGE)


class BeaconError(RuntimeError):
    pass


@dataclass
class BeaconTrace:
    values: list = field(default_factory=list)

    @property
    def cycle_index(self):
        return len(self.values) - 1


def _sqrtm_psd(c):
    eig = hermitian_eig(c)
    lam = np.clip(eig.values, 0.0, None)
    return (eig.vectors * np.sqrt(lam)) @ eig.vectors.conj().T


@dataclass
class BeaconEmitter:
    """Beacon source at one receiver.

    ``cross`` is the (r x t_learner) channel from the learner into this
    receiver and ``direct`` the receiver's own (r x t_pu) channel. In the
    sample-average modes ``rng`` drives the PU symbols and receiver noise;
    ``sampler`` picks between simulating every symbol instant (``"literal"``)
    and drawing the cycle sum from its exact sufficient statistics
    (``"moments"``). ``"auto"`` simulates cycles up to
    ``LITERAL_MAX_CYCLE`` samples literally.
    """

    cross: np.ndarray
    direct: np.ndarray
    noise_cov: np.ndarray
    mode: BeaconMode = BeaconMode.IDEAL
    alpha: float = 1.0
    cycle_length: int = 1
    projector: np.ndarray = None
    rng: np.random.Generator = None
    pu_power: float = 1.0
    sampler: str = "auto"
    trace: BeaconTrace = field(default_factory=BeaconTrace)

    def __post_init__(self):
        self.mode = BeaconMode(self.mode)
        self.cross = as_matrix(self.cross)
        self.direct = as_matrix(self.direct)
        self.noise_cov = as_matrix(self.noise_cov)
        r = self.cross.shape[0]
        if self.direct.shape[0] != r or self.noise_cov.shape != (r, r):
            raise ShapeError("cross, direct and noise_cov must share the receiver dimension")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if int(self.cycle_length) != self.cycle_length or self.cycle_length < 1:
            raise ValueError(f"cycle_length must be a positive integer, got {self.cycle_length}")
        self.cycle_length = int(self.cycle_length)
        if self.sampler not in ("auto", "literal", "moments"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.mode.projected:
            if self.projector is None:
                raise BeaconError(f"mode {self.mode.value} requires a projector")
            p = as_matrix(self.projector)
            if p.shape != (r, r):
                raise ShapeError(f"projector must be {r}x{r}, got {p.shape}")
            scale = max(fro(p), 1.0)
            if fro(p - p.conj().T) > PROJECTOR_TOL * scale or fro(p @ p - p) > PROJECTOR_TOL * scale:
                raise ValueError("projector must be Hermitian and idempotent")
            self.projector = p
        elif self.projector is not None:
            raise BeaconError(f"mode {self.mode.value} does not take a projector")
        if self.mode.sampled and self.rng is None:
            raise BeaconError("sample-average modes need an rng")
        self._noise_factor = _sqrtm_psd(self.noise_cov)

    @classmethod
    def for_receiver(cls, cs, receiver=1, mode=BeaconMode.IDEAL, noise_cov=None, **kwargs):
        """Emitter at ``receiver`` of a :class:`~blindnull.channel.ChannelSet`.

        Projected modes get the projector onto the receiver's own column
        space unless one is passed explicitly.
        """
        mode = BeaconMode(mode)
        direct = cs.direct(receiver)
        if noise_cov is None:
            noise_cov = cs.noise_power(receiver) * np.eye(direct.shape[0])
        if mode.projected and kwargs.get("projector") is None:
            kwargs["projector"] = column_space_projector(direct)
        return cls(cs.cross(receiver), direct, noise_cov, mode=mode, **kwargs)

    @property
    def calls(self):
        return len(self.trace.values)

    def _proj(self):
        if self.projector is None:
            return np.eye(self.cross.shape[0], dtype=np.complex128)
        return self.projector

    def _check_probe(self, x2):
        x2 = as_vector(x2)
        if x2.shape[0] != self.cross.shape[1]:
            raise ShapeError(f"probe has length {x2.shape[0]}, expected {self.cross.shape[1]}")
        return x2

    def expected_value(self, x2):
        """alpha * (||P H x||^2 + tr(P C P*)), the expectation of every mode."""
        x2 = self._check_probe(x2)
        p = self._proj()
        s = p @ (self.cross @ x2)
        floor = np.trace(p @ self.noise_cov @ p.conj().T).real
        return self.alpha * (float(np.vdot(s, s).real) + float(floor))

    def _cycle_sum_literal(self, s):
        r = s.shape[0]
        t = self.direct.shape[1]
        p = self._proj()
        total = 0.0
        left = self.cycle_length
        while left > 0:
            n = min(left, CHUNK)
            w = sample_zmsw(n, r, self.rng)
            x1 = np.sqrt(self.pu_power / t) * sample_zmsw(n, t, self.rng)
            total += kernels.residual_energy(s, self.direct, self._noise_factor, p, w, x1)
            left -= n
        return total

    def _cycle_sum_moments(self, s):
        # sum_k ||a + B w_k||^2 from (sum_k w_k, per-mode residual chi-squares)
        n = self.cycle_length
        p = self._proj()
        a = p @ s
        b = p @ self._noise_factor
        eig = hermitian_eig(b.conj().T @ b)
        mu = np.clip(eig.values, 0.0, None)
        r = a.shape[0]
        wsum = np.sqrt(n) * sample_zmsw(r, 1, self.rng)[:, 0]
        resid = self.rng.gamma(n - 1, 1.0, size=r) if n > 1 else np.zeros(r)
        cross = 2.0 * np.vdot(a, b @ (eig.vectors @ wsum)).real
        return n * float(np.vdot(a, a).real) + cross + float(np.sum(mu * (np.abs(wsum) ** 2 / n + resid)))

    def sampled_value(self, x2):
        x2 = self._check_probe(x2)
        s = self.cross @ x2
        literal = self.sampler == "literal" or (self.sampler == "auto" and self.cycle_length <= LITERAL_MAX_CYCLE)
        total = self._cycle_sum_literal(s) if literal else self._cycle_sum_moments(s)
        return self.alpha * total / self.cycle_length

    def emit(self, x2):
        """Run one transmission cycle with constant probe ``x2`` and report."""
        if self.mode.sampled:
            q = self.sampled_value(x2)
        else:
            q = self.expected_value(x2)
        self.trace.values.append(q)
        return q


def emit_ideal(em, x2_tilde):
    if em.mode is not BeaconMode.IDEAL:
        raise BeaconError(f"emit_ideal needs mode ideal, emitter is {em.mode.value}")
    return em.emit(x2_tilde)


def emit_sampled(em, x2_tilde):
    if em.mode is not BeaconMode.SAMPLE_AVERAGE:
        raise BeaconError(f"emit_sampled needs mode sampled, emitter is {em.mode.value}")
    return em.emit(x2_tilde)


def emit_projected(em, x2_tilde):
    if not em.mode.projected:
        raise BeaconError(f"emit_projected needs a projected mode, emitter is {em.mode.value}")
    if em.projector is None:
        raise BeaconError("projected emitter has no projector")
    return em.emit(x2_tilde)
