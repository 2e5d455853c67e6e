"""Training waveform synthesis, CFO channel and correlation-based estimation.

The preamble carries one Zadoff-Chu segment per sample interval, longest
interval first. Segment ``i`` is a ZC block of length ``L_i`` transmitted
twice, so the lag-``L_i`` correlation of its samples isolates the CFO phase
``2*pi*L_i*eps_n/N``.
"""

from dataclasses import dataclass
from math import gcd, isnan, pi
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from scipy.constants import speed_of_light

from .base import UndefinedPhaseError, ValidationError
from .crt_engine import ModuliSet, mod_real
from ..utils.files import atomic_write_bytes
from ..utils.logging import get_logger
from ..utils.validation import Validator, handle_cfo_errors

logger = get_logger("signal_model")

TWO_PI = 2.0 * pi
IQ_DTYPE = np.dtype("<f8")


@dataclass(frozen=True)
class WaveformSpec:
    """DFT size, sample period, range system and ZC root of a preamble."""

    n_fft: int
    sample_period: float
    mset: ModuliSet
    zc_root: int = 1

    def __post_init__(self):
        Validator.validate_positive_int(self.n_fft, "n_fft", minimum=2)
        Validator.validate_positive_float(self.sample_period, "sample_period")
        Validator.validate_positive_int(self.zc_root, "zc_root")

        longest = max(self.mset.sample_intervals)
        if longest >= self.n_fft:
            raise ValidationError(
                f"Largest sample interval {longest} must be below n_fft={self.n_fft}"
            )
        for interval in self.mset.sample_intervals:
            if gcd(self.zc_root, interval) != 1:
                raise ValidationError(
                    f"ZC root {self.zc_root} is not coprime with segment length {interval}"
                )

    @property
    def subcarrier_spacing(self) -> float:
        """``1 / (N * T_s)`` in Hz."""
        return 1.0 / (self.n_fft * self.sample_period)


@dataclass(frozen=True)
class PreambleLayout:
    """Where each two-period segment sits in the concatenated preamble."""

    intervals: Tuple[int, ...]
    offsets: Tuple[int, ...]
    total: int

    def segment(self, index: int) -> slice:
        if not 0 <= index < len(self.intervals):
            raise ValidationError(
                f"Segment index {index} out of range for {len(self.intervals)} segments"
            )
        start = self.offsets[index]
        return slice(start, start + 2 * self.intervals[index])


@dataclass(frozen=True, eq=False)
class TrainingWaveform:
    segments: Tuple[np.ndarray, ...]
    layout: PreambleLayout

    @property
    def samples(self) -> np.ndarray:
        return np.concatenate(self.segments)


@dataclass(frozen=True)
class ChannelParams:
    """Normalized CFO, SNR in dB (``inf`` for a noiseless channel) and phase."""

    cfo_normalized: float
    snr_db: float
    channel_phase: float = 0.0

    def __post_init__(self):
        if isnan(float(self.snr_db)) or float(self.snr_db) == float("-inf"):
            raise ValidationError(f"SNR must be a real number of dB, got: {self.snr_db}")
        if not np.isfinite(self.cfo_normalized) or not np.isfinite(self.channel_phase):
            raise ValidationError("CFO and channel phase must be finite")

    @property
    def snr_linear(self) -> float:
        return float(10.0 ** (float(self.snr_db) / 10.0))

    @property
    def noiseless(self) -> bool:
        return np.isinf(self.snr_db)


@dataclass(frozen=True, eq=False)
class IQBuffer:
    """Received complex baseband samples tagged with the layout they carry."""

    samples: np.ndarray
    layout: PreambleLayout
    origin: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1:
            raise ValidationError(f"IQ buffer must be one-dimensional, got shape {samples.shape}")
        if samples.size != self.layout.total:
            raise ValidationError(
                f"IQ buffer holds {samples.size} samples, layout expects {self.layout.total}",
                details={"expected": self.layout.total, "actual": int(samples.size)},
            )
        object.__setattr__(self, "samples", samples)

    @property
    def length(self) -> int:
        return int(self.samples.size)


def zc_sequence(length: int, root: int = 1) -> np.ndarray:
    """Zadoff-Chu sequence of ``length`` with root ``root``.

    Odd lengths use ``exp(-j*pi*u*n*(n+1)/N)``, even lengths
    ``exp(-j*pi*u*n**2/N)``. The exponent is reduced modulo ``2N`` in integer
    arithmetic before the complex exponential.

    Raises:
        ValidationError: If ``gcd(root, length) != 1``
    """
    length = Validator.validate_positive_int(length, "length")
    root = Validator.validate_positive_int(root, "root")
    if gcd(root, length) != 1:
        raise ValidationError(f"ZC root {root} is not coprime with length {length}")

    n = np.arange(length, dtype=np.int64)
    exponent = n * n if length % 2 == 0 else n * (n + 1)
    exponent = (root * exponent) % (2 * length)
    return np.exp(-1j * pi * exponent / length)


def preamble_layout(spec: WaveformSpec) -> PreambleLayout:
    intervals = tuple(spec.mset.sample_intervals)
    offsets = tuple(int(o) for o in np.concatenate(([0], np.cumsum([2 * l for l in intervals])[:-1])))
    return PreambleLayout(intervals=intervals, offsets=offsets, total=2 * sum(intervals))


def build_preamble(spec: WaveformSpec) -> TrainingWaveform:
    """One ZC block per sample interval, each transmitted twice."""
    segments = tuple(np.tile(zc_sequence(l, spec.zc_root), 2) for l in spec.mset.sample_intervals)
    layout = preamble_layout(spec)
    logger.debug(f"Built preamble: intervals={layout.intervals}, total={layout.total}")
    return TrainingWaveform(segments=segments, layout=layout)


def segment_noise_rng(noise_seed: int, segment_index: int) -> np.random.Generator:
    """Independent noise stream for one segment of one trial."""
    return np.random.default_rng(np.random.SeedSequence(int(noise_seed), spawn_key=(segment_index,)))


def apply_channel(wave: TrainingWaveform, ch: ChannelParams, spec: WaveformSpec,
                  noise_seed: int) -> IQBuffer:
    """``r(n) = exp(j*phi) * s(n) * exp(j*2*pi*eps_n*n/N) + w(n)``.

    ``n`` runs over the whole preamble. The complex noise has variance
    ``1/eta`` split evenly across I and Q; each segment draws from its own
    stream keyed by ``(noise_seed, segment_index)``.
    """
    half_width = spec.n_fft / 2.0
    if abs(ch.cfo_normalized) > half_width:
        raise ValidationError(
            f"Normalized CFO {ch.cfo_normalized} outside [-{half_width}, {half_width}]"
        )

    n = np.arange(wave.layout.total, dtype=float)
    rotation = np.exp(1j * (ch.channel_phase + TWO_PI * ch.cfo_normalized * n / spec.n_fft))
    received = wave.samples * rotation

    if not ch.noiseless:
        sigma = np.sqrt(0.5 / ch.snr_linear)
        for index in range(len(wave.layout.intervals)):
            block = wave.layout.segment(index)
            size = block.stop - block.start
            rng = segment_noise_rng(noise_seed, index)
            received[block] += sigma * (rng.standard_normal(size) + 1j * rng.standard_normal(size))

    return IQBuffer(samples=received, layout=wave.layout)


def correlate(buf: IQBuffer, segment_index: int, spec: WaveformSpec) -> complex:
    """``P_L = sum_m conj(r(m)) * r(m + L)`` over one segment."""
    segment = buf.samples[buf.layout.segment(segment_index)]
    interval = buf.layout.intervals[segment_index]
    return complex(np.vdot(segment[:interval], segment[interval:]))


def estimate_single_interval(p: complex, numerator: float, interval: int) -> float:
    """``numerator / (2*pi*interval) * arg(p)`` with ``arg`` taken in ``[0, 2*pi)``.

    Raises:
        UndefinedPhaseError: If ``p == 0``
        ValidationError: If ``interval < 1``
    """
    interval = Validator.validate_positive_int(interval, "interval")
    if p == 0:
        raise UndefinedPhaseError("Correlation is zero, its phase is undefined")

    angle = float(mod_real(np.angle(p), TWO_PI))
    estimate = numerator * angle / (TWO_PI * interval)
    if estimate >= numerator / interval:
        estimate = 0.0
    return estimate


def wrap_to_symmetric(value: Union[float, np.ndarray], width: float) -> Union[float, np.ndarray]:
    """Map ``value`` onto ``[-width/2, width/2)``."""
    if not width > 0:
        raise ValidationError(f"Wrap width must be positive, got: {width}")
    wrapped = mod_real(np.asarray(value, dtype=float) + width / 2.0, width) - width / 2.0
    return float(wrapped) if np.ndim(wrapped) == 0 else wrapped


def doppler_shift(speed_mps: float, carrier_hz: float) -> float:
    """Doppler shift ``v/c * f_c`` in Hz."""
    return float(speed_mps) / speed_of_light * float(carrier_hz)


def doppler_to_cfo(speed_mps: float, carrier_hz: float, subcarrier_spacing_hz: float) -> float:
    """Normalized CFO (units of subcarrier spacing) produced by a radial velocity."""
    spacing = Validator.validate_positive_float(subcarrier_spacing_hz, "subcarrier_spacing")
    carrier = Validator.validate_positive_float(carrier_hz, "carrier")
    return doppler_shift(speed_mps, carrier) / spacing


@handle_cfo_errors
def read_iq_file(path: Union[str, Path], layout: PreambleLayout) -> IQBuffer:
    """Read headerless interleaved I/Q float64 little-endian samples."""
    path = Validator.validate_file_path(path)
    raw = np.fromfile(path, dtype=IQ_DTYPE)
    if raw.size % 2:
        raise ValidationError(f"{path} holds an odd number of float64 values ({raw.size})")

    samples = raw[0::2] + 1j * raw[1::2]
    logger.debug(f"Read {samples.size} samples from {path}")
    return IQBuffer(samples=samples, layout=layout)


@handle_cfo_errors
def write_iq_file(path: Union[str, Path], buf: IQBuffer) -> Path:
    interleaved = np.empty(2 * buf.length, dtype=IQ_DTYPE)
    interleaved[0::2] = buf.samples.real
    interleaved[1::2] = buf.samples.imag
    return atomic_write_bytes(path, interleaved.tobytes())
