"""Pump-spectrum synthesis and electro-optic drive models.

Covers the frequency-modulated pump line spectrum (Bessel sidebands), the
series-RLC resonant drive of the intra-cavity electro-optic prism, and the
Mach-Zehnder modulator that carves the pulse train to be stored.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from .errors import UndersampledError

__all__ = [
    "FmParams",
    "RlcParams",
    "LineSpectrum",
    "TimeSignal",
    "fm_sidebands",
    "carson_bandwidth",
    "rlc_gain",
    "rlc_resonance_freq",
    "drive_to_deviation",
    "calibrate_tuning_rate",
    "mz_pulse_train",
]


@dataclass(frozen=True)
class FmParams:
    """Frequency-modulation parameters of the pump laser.

    Parameters
    ----------
    nu_m : float
        Modulation frequency in Hz; sets the spacing between sidebands.
    deviation : float
        Peak frequency deviation in Hz.
    index : float, optional
        Modulation index ``deviation / nu_m``; derived when omitted.
    """

    nu_m: float
    deviation: float
    index: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if not (self.nu_m > 0 and math.isfinite(self.nu_m)):
            raise ValueError("nu_m must be positive and finite")
        if not (self.deviation >= 0 and math.isfinite(self.deviation)):
            raise ValueError("deviation must be non-negative and finite")
        derived = self.deviation / self.nu_m
        if self.index is None:
            object.__setattr__(self, "index", derived)
        elif not math.isclose(self.index, derived, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError("index inconsistent with deviation/nu_m")


@dataclass(frozen=True)
class RlcParams:
    """Series RLC drive of the electro-optic prism electrodes.

    The EOP electrodes form the capacitor; the resonance enhances the
    moderate generator voltage.  ``tuning_rate`` is the laser frequency
    response per volt applied across the capacitor at the modulation
    frequency (calibrated separately from the DC response).

    An optional notch models the piezo-mechanical resonance of the EOP
    crystal; it is an artifact to be avoided and is disabled by default.
    """

    resistance: float
    inductance: float
    capacitance: float
    drive_vpp: float
    tuning_rate: float
    notch_freq: float = None  # type: ignore[assignment]
    notch_depth: float = 0.0
    notch_width: float = 20e3

    def __post_init__(self):
        for name in ("resistance", "inductance", "capacitance", "drive_vpp", "tuning_rate"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be positive and finite")

    @property
    def resonance_freq(self):
        return 1.0 / (2.0 * math.pi * math.sqrt(self.inductance * self.capacitance))

    @property
    def quality_factor(self):
        return math.sqrt(self.inductance / self.capacitance) / self.resistance


@dataclass(frozen=True)
class LineSpectrum:
    """Discrete pump lines: offsets relative to the carrier and real weights."""

    offsets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if offsets.shape != weights.shape or offsets.ndim != 1:
            raise ValueError("offsets and weights must be matching 1-d arrays")
        if offsets.size and np.any(np.diff(offsets) <= 0):
            raise ValueError("offsets must be strictly increasing")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "weights", weights)

    @property
    def normalization(self):
        """Total power carried by the listed lines (sum of squared weights)."""
        return float(np.sum(self.weights**2))

    def shifted(self, delta):
        return LineSpectrum(self.offsets + delta, self.weights.copy())

    def to_csv(self, path):
        np.savetxt(
            path,
            np.column_stack([self.offsets, self.weights]),
            delimiter=",",
            header="offset_hz,weight",
            comments="",
            fmt="%.12e",
        )

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class TimeSignal:
    """Uniformly sampled complex field envelope."""

    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        samples = np.asarray(self.samples)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("samples must be a non-empty 1-d array")
        object.__setattr__(self, "samples", samples)

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def energy(self):
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def intensity(self):
        return np.abs(self.samples) ** 2

    def to_csv(self, path):
        np.savetxt(
            path,
            np.column_stack(
                [self.times, np.real(self.samples), np.imag(self.samples)]
            ),
            delimiter=",",
            header="t_s,re,im",
            comments="",
            fmt="%.12e",
        )

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        dt = float(t[1] - t[0]) if t.size > 1 else 1.0
        return cls(float(t[0]), dt, data[:, 1] + 1j * data[:, 2])


def fm_sidebands(p: FmParams, truncation_order: int = None) -> LineSpectrum:
    """Decompose an FM waveform into its sideband comb.

    Pure frequency modulation at ``nu_m`` with modulation index ``beta``
    yields lines at ``k * nu_m`` weighted by Bessel functions ``J_k(beta)``.
    Exact-zero weights are dropped, so an unmodulated carrier reduces to a
    single line.

    ``truncation_order`` must be at least ``ceil(beta) + 2``; sidebands above
    the truncation carry the residual power not captured by the comb.
    """
    beta = p.index
    if not math.isfinite(beta):
        raise ValueError("modulation index must be finite")
    min_order = math.ceil(beta) + 2
    if truncation_order is None:
        # captures > 1 - 1e-8 of total power for moderate beta
        truncation_order = math.ceil(beta) + 8
    if truncation_order < min_order:
        raise ValueError(
            f"truncation_order {truncation_order} below ceil(beta)+2={min_order}; "
            "sideband comb would miss significant power"
        )
    k = np.arange(-truncation_order, truncation_order + 1)
    weights = jv(k, beta)
    keep = weights != 0.0
    return LineSpectrum(k[keep] * p.nu_m, weights[keep])


def carson_bandwidth(p: FmParams) -> float:
    """Occupied FM bandwidth estimate: twice (deviation + modulation freq)."""
    return 2.0 * (p.deviation + p.nu_m)


def rlc_gain(p: RlcParams, f):
    """Capacitor-voltage transfer of the series RLC drive at frequency ``f``.

    H(f) = Z_C / (R + Z_L + Z_C), written in the DC-regular form
    1 / (1 - (2 pi f)^2 LC + i 2 pi f RC) so f = 0 gives exactly 1.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    w = 2.0 * np.pi * f
    h = 1.0 / (1.0 - w**2 * p.inductance * p.capacitance + 1j * w * p.resistance * p.capacitance)
    if p.notch_freq is not None and p.notch_depth > 0.0:
        lor = 1.0 / (1.0 + ((f - p.notch_freq) / (0.5 * p.notch_width)) ** 2)
        h = h * (1.0 - p.notch_depth * lor)
    return h if h.ndim else complex(h)


def rlc_resonance_freq(p: RlcParams, f_min=1e3, f_max=None, n=20001):
    """Locate the |H| maximum by dense scan (used for resonance reporting)."""
    if f_max is None:
        f_max = 4.0 * p.resonance_freq
    freqs = np.linspace(f_min, f_max, n)
    gains = np.abs(rlc_gain(p, freqs))
    return float(freqs[np.argmax(gains)])


def drive_to_deviation(p: RlcParams, f_mod: float) -> float:
    """Peak frequency deviation produced by the resonant drive at ``f_mod``."""
    if not f_mod > 0:
        raise ValueError("f_mod must be positive")
    return p.tuning_rate * (p.drive_vpp / 2.0) * float(np.abs(rlc_gain(p, f_mod)))


def calibrate_tuning_rate(p_without_rate, f_mod, drive_vpp, target_deviation):
    """Tuning rate (Hz/V) that maps the operating point onto the target deviation.

    The DC laser response is known but does not extrapolate through the
    resonance, so the AC rate is fixed by one measured operating point
    (drive voltage at the modulation frequency versus achieved deviation).
    """
    gain = abs(
        rlc_gain(
            RlcParams(
                resistance=p_without_rate.resistance,
                inductance=p_without_rate.inductance,
                capacitance=p_without_rate.capacitance,
                drive_vpp=drive_vpp,
                tuning_rate=1.0,
                notch_freq=p_without_rate.notch_freq,
                notch_depth=p_without_rate.notch_depth,
                notch_width=p_without_rate.notch_width,
            ),
            f_mod,
        )
    )
    return target_deviation / ((drive_vpp / 2.0) * gain)


def mz_pulse_train(f_mod, v_over_vpi, bias_phase, duration, dt, t0=0.0) -> TimeSignal:
    """Field envelope out of a sinusoidally driven Mach-Zehnder modulator.

    amplitude(t) = cos(bias_phase/2 + (pi/2) * v_over_vpi * sin(2 pi f_mod t))

    over a rectangular envelope of length ``duration``.  At quadrature bias
    with a peak drive of half the switching voltage the intensity is a train
    of one pulse per modulation period.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if not f_mod * dt < 0.5:
        raise UndersampledError(
            f"f_mod*dt = {f_mod * dt:.3g} >= 0.5; sampling cannot resolve the modulation"
        )
    n = int(round(duration / dt))
    t = t0 + dt * np.arange(n)
    phase = 0.5 * bias_phase + 0.5 * np.pi * v_over_vpi * np.sin(2.0 * np.pi * f_mod * t)
    return TimeSignal(t0, dt, np.cos(phase).astype(complex))
