"""Population dynamics under the broadband pump and the resulting comb.

Each frequency class carries six populations: the two ground sublevels, two
excited pools and two bottleneck pools (split by the sublevel the ion was
pumped out of, so decay branching can route it back or across).  Updates use
exponential flow steps: every transfer is computed from the exact decayed
occupancy of its origin, so total population per class is conserved to
floating-point accuracy regardless of step size.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import GridWindowError, StepSizeError
from .material import MaterialParams, zeeman_field_gate
from .spectrum import LineSpectrum

__all__ = [
    "FrequencyGrid",
    "MediumState",
    "EngraveSchedule",
    "CombMetrics",
    "pump_rate_per_class",
    "PumpRateTable",
    "evolve",
    "absorption_spectrum",
    "comb_metrics",
]

# Stability bound on (total rate) * dt for the flow integrator.
MAX_RATE_DT = 0.1

DEFAULT_PUMP_RATE_SCALE = 3.5e3  # peak rate (1/s) of a unit-weight resonant line


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency axis: ``n`` points spaced ``df`` centred on ``f0``."""

    f0: float
    df: float
    n: int

    def __post_init__(self):
        if not self.df > 0:
            raise ValueError("df must be positive")
        if self.n < 2:
            raise ValueError("n must be at least 2")

    @property
    def frequencies(self):
        return self.f0 + (np.arange(self.n) - (self.n - 1) / 2.0) * self.df

    @property
    def span(self):
        return (self.n - 1) * self.df

    @property
    def f_min(self):
        return self.f0 - self.span / 2.0

    @property
    def f_max(self):
        return self.f0 + self.span / 2.0

    @classmethod
    def centered(cls, span, df, f0=0.0):
        """Odd-point grid covering at least ``span`` around ``f0``."""
        n = int(math.ceil(span / df))
        if n % 2 == 0:
            n += 1
        return cls(f0, df, max(n, 3))


class MediumState:
    """Per-class populations of the six-level flow model.

    Arrays: ground sublevels ``n1``/``n2``, excited pools ``e1``/``e2`` and
    bottleneck pools ``b1``/``b2`` keyed by the sublevel of origin.
    """

    __slots__ = ("grid", "n1", "n2", "e1", "e2", "b1", "b2")

    def __init__(self, grid, n1, n2, e1, e2, b1, b2):
        self.grid = grid
        self.n1 = np.asarray(n1, dtype=float)
        self.n2 = np.asarray(n2, dtype=float)
        self.e1 = np.asarray(e1, dtype=float)
        self.e2 = np.asarray(e2, dtype=float)
        self.b1 = np.asarray(b1, dtype=float)
        self.b2 = np.asarray(b2, dtype=float)

    @classmethod
    def equilibrium(cls, grid):
        half = np.full(grid.n, 0.5)
        zero = np.zeros(grid.n)
        return cls(grid, half.copy(), half.copy(), zero.copy(), zero.copy(), zero.copy(), zero.copy())

    @property
    def pop_g1(self):
        return self.n1

    @property
    def pop_g2(self):
        return self.n2

    @property
    def pop_shelved(self):
        return self.e1 + self.e2 + self.b1 + self.b2

    def total(self):
        return self.n1 + self.n2 + self.pop_shelved

    def copy(self):
        return MediumState(
            self.grid,
            self.n1.copy(), self.n2.copy(),
            self.e1.copy(), self.e2.copy(),
            self.b1.copy(), self.b2.copy(),
        )

    def to_json(self, path):
        payload = {
            "grid": {"f0": self.grid.f0, "df": self.grid.df, "n": self.grid.n},
            "populations": {
                name: getattr(self, name).tolist()
                for name in ("n1", "n2", "e1", "e2", "b1", "b2")
            },
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            payload = json.load(fh)
        g = payload["grid"]
        grid = FrequencyGrid(g["f0"], g["df"], g["n"])
        pops = payload["populations"]
        return cls(grid, *(np.array(pops[k]) for k in ("n1", "n2", "e1", "e2", "b1", "b2")))


@dataclass(frozen=True)
class EngraveSchedule:
    """Pump/wait duty cycle repeated ``cycles`` times.

    ``drift_rate`` is a residual slow drift of the whole pump comb during
    engraving (Hz/s), applied continuously through pump and wait phases.
    """

    pump_duration: float = 50e-3
    wait_duration: float = 5e-3
    cycles: int = 1
    drift_rate: float = 0.0

    def __post_init__(self):
        if self.pump_duration < 0 or self.wait_duration < 0:
            raise ValueError("durations must be non-negative")
        if self.cycles < 1:
            raise ValueError("cycles must be at least 1")

    @property
    def total_duration(self):
        return self.cycles * (self.pump_duration + self.wait_duration)


def _lorentzian(x, fwhm):
    return 1.0 / (1.0 + (2.0 * x / fwhm) ** 2)


def pump_rate_per_class(delta, pump: LineSpectrum, m: MaterialParams,
                        pump_rate_scale=DEFAULT_PUMP_RATE_SCALE):
    """Excitation rates of the two ground sublevels for class(es) ``delta``.

    Each pump line drives the two transitions of each sublevel with its
    squared weight times a Lorentzian of width ``m.pump_linewidth``; the
    spin-flip transition is down-weighted by ``cross_strength``.
    """
    delta = np.asarray(delta, dtype=float)
    scalar = delta.ndim == 0
    delta = np.atleast_1d(delta)
    w = m.pump_linewidth
    c = m.cross_strength
    r1 = np.zeros_like(delta)
    r2 = np.zeros_like(delta)
    for off, amp in zip(pump.offsets, pump.weights):
        p = amp * amp
        r1 += p * (c * _lorentzian(off - delta, w)
                   + _lorentzian(off - (delta + m.delta_e), w))
        r2 += p * (_lorentzian(off - (delta + m.delta_g), w)
                   + c * _lorentzian(off - (delta + m.delta_g + m.delta_e), w))
    r1 *= pump_rate_scale
    r2 *= pump_rate_scale
    if scalar:
        return float(r1[0]), float(r2[0])
    return r1, r2


class PumpRateTable:
    """Precomputed sublevel rates on an extended grid, shiftable by interpolation.

    Shifting every pump line by ``x`` is equivalent to evaluating the rates
    at ``delta - x``, so a single table serves any drift/detuning path.
    """

    def __init__(self, grid: FrequencyGrid, pump: LineSpectrum, m: MaterialParams,
                 pump_rate_scale=DEFAULT_PUMP_RATE_SCALE, shift_margin=0.0):
        pad = m.delta_g + m.delta_e + abs(shift_margin) + 20.0 * m.pump_linewidth
        n_pad = int(math.ceil(pad / grid.df)) + 1
        n_ext = grid.n + 2 * n_pad
        x = grid.f_min + (np.arange(n_ext) - n_pad) * grid.df
        if len(pump.offsets) <= 64:
            r1, r2 = pump_rate_per_class(x, pump, m, pump_rate_scale)
        else:
            r1, r2 = self._rates_by_convolution(x, grid.df, pump, m, pump_rate_scale)
        self.x0 = float(x[0])
        self.dx = grid.df
        self.x = x
        self.r1 = r1
        self.r2 = r2
        self.class_freqs = grid.frequencies
        self.max_rate = float(max(r1.max(), r2.max()))

    @staticmethod
    def _rates_by_convolution(x, dx, pump, m, pump_rate_scale):
        # Deposit squared line weights on the axis (lever rule for off-grid
        # lines), then convolve once with the Lorentzian and read the four
        # transition shifts off the same base table.
        pad_k = int(math.ceil(20.0 * m.pump_linewidth / dx))
        base_min = x[0] - (m.delta_g + m.delta_e) - pad_k * dx
        n_base = int(math.ceil((x[-1] + m.delta_g + m.delta_e + pad_k * dx - base_min) / dx)) + 3
        axis0 = base_min
        imp = np.zeros(n_base)
        pos = (pump.offsets - axis0) / dx
        i0 = np.floor(pos).astype(int)
        frac = pos - i0
        ok = (i0 >= 0) & (i0 < n_base - 1)
        np.add.at(imp, i0[ok], (pump.weights[ok] ** 2) * (1.0 - frac[ok]))
        np.add.at(imp, i0[ok] + 1, (pump.weights[ok] ** 2) * frac[ok])
        ker = _lorentzian(np.arange(-pad_k, pad_k + 1) * dx, m.pump_linewidth)
        base = fftconvolve(imp, ker, mode="same")
        base_axis = axis0 + dx * np.arange(n_base)

        def at(shift):
            return np.interp(x + shift, base_axis, base, left=0.0, right=0.0)

        c = m.cross_strength
        r1 = pump_rate_scale * (c * at(0.0) + at(m.delta_e))
        r2 = pump_rate_scale * (at(m.delta_g) + c * at(m.delta_g + m.delta_e))
        return r1, r2

    def rates(self, shift):
        """Rates on the class grid with the pump comb shifted by ``shift`` Hz."""
        q = self.class_freqs - shift
        r1 = np.interp(q, self.x, self.r1, left=0.0, right=0.0)
        r2 = np.interp(q, self.x, self.r2, left=0.0, right=0.0)
        return r1, r2


def _phi(z):
    """(1 - exp(-z))/z, stable near zero."""
    out = np.ones_like(z)
    small = np.abs(z) < 1e-8
    zb = np.where(small, 1.0, z)
    out = np.where(small, 1.0 - z / 2.0, -np.expm1(-zb) / zb)
    return out


def _flow_step(st: MediumState, r1, r2, dt, m: MaterialParams, t_shelf):
    """Advance all classes by ``dt`` using conservative exponential flows."""
    k_relax = 0.5 / t_shelf
    k_e = 1.0 / m.t_excited
    k_b = 1.0 / m.t_bottleneck
    br = m.branching_spinflip

    lam1 = r1 + k_relax
    lam2 = r2 + k_relax
    avg1 = st.n1 * _phi(lam1 * dt) * dt
    avg2 = st.n2 * _phi(lam2 * dt) * dt
    avg_e1 = st.e1 * _phi(np.full_like(st.e1, k_e * dt)) * dt
    avg_e2 = st.e2 * _phi(np.full_like(st.e2, k_e * dt)) * dt
    avg_b1 = st.b1 * _phi(np.full_like(st.b1, k_b * dt)) * dt
    avg_b2 = st.b2 * _phi(np.full_like(st.b2, k_b * dt)) * dt

    pump1 = r1 * avg1           # n1 -> e1
    pump2 = r2 * avg2           # n2 -> e2
    relax12 = k_relax * avg1    # n1 -> n2
    relax21 = k_relax * avg2    # n2 -> n1
    decay_e1 = k_e * avg_e1     # e1 -> b1
    decay_e2 = k_e * avg_e2     # e2 -> b2
    out_b1 = k_b * avg_b1       # b1 -> ground
    out_b2 = k_b * avg_b2       # b2 -> ground

    st.n1 += -pump1 - relax12 + relax21 + (1.0 - br) * out_b1 + br * out_b2
    st.n2 += -pump2 - relax21 + relax12 + (1.0 - br) * out_b2 + br * out_b1
    st.e1 += pump1 - decay_e1
    st.e2 += pump2 - decay_e2
    st.b1 += decay_e1 - out_b1
    st.b2 += decay_e2 - out_b2


def evolve(state: MediumState, pump: LineSpectrum, sched: EngraveSchedule,
           m: MaterialParams, *, b_field=95.0,
           pump_rate_scale=DEFAULT_PUMP_RATE_SCALE,
           detuning0=0.0, dt=None) -> MediumState:
    """Run the pump/wait schedule and return the evolved medium.

    The pump comb is displaced by ``detuning0`` plus the accumulated drift at
    every integrator step.  An explicit ``dt`` violating the stability bound
    raises :class:`StepSizeError`; by default the step is chosen from the
    fastest rate in the system.
    """
    st = state.copy()
    t_shelf = zeeman_field_gate(b_field, m)
    table = None
    if len(pump.offsets) and sched.pump_duration > 0:
        shift_margin = abs(detuning0) + abs(sched.drift_rate) * sched.total_duration
        table = PumpRateTable(st.grid, pump, m, pump_rate_scale, shift_margin)
        max_rate = table.max_rate
    else:
        max_rate = 0.0
    fastest = max(max_rate + 0.5 / t_shelf, 1.0 / m.t_excited, 1.0 / m.t_bottleneck)
    dt_bound = MAX_RATE_DT / fastest
    if dt is not None:
        if dt > dt_bound:
            raise StepSizeError(
                f"dt={dt:.3g}s exceeds stability bound {dt_bound:.3g}s (rate*dt > {MAX_RATE_DT})"
            )
        step = dt
    else:
        step = dt_bound

    zero = np.zeros(st.grid.n)
    t_now = 0.0
    drifting = sched.drift_rate != 0.0

    def run_phase(duration, pumped):
        nonlocal t_now
        if duration <= 0:
            return
        n_steps = max(1, int(math.ceil(duration / step)))
        h = duration / n_steps
        if pumped and not drifting:
            r1, r2 = table.rates(detuning0)
        for j in range(n_steps):
            if pumped and drifting:
                x = detuning0 + sched.drift_rate * (t_now + (j + 0.5) * h)
                r1, r2 = table.rates(x)
            if pumped:
                _flow_step(st, r1, r2, h, m, t_shelf)
            else:
                _flow_step(st, zero, zero, h, m, t_shelf)
        t_now += duration

    for _ in range(sched.cycles):
        run_phase(sched.pump_duration, table is not None)
        run_phase(sched.wait_duration, False)
    return st


def _probe_kernels(m: MaterialParams, df):
    """Composite probe kernels for the two sublevels on the class-grid spacing."""
    reach = m.delta_g + m.delta_e + 60.0 * m.gamma_h + 2e6
    k = int(math.ceil(reach / df))
    u = np.arange(-k, k + 1) * df
    c = m.cross_strength
    k1 = c * _lorentzian(u, m.gamma_h) + _lorentzian(u - m.delta_e, m.gamma_h)
    k2 = _lorentzian(u - m.delta_g, m.gamma_h) + c * _lorentzian(u - m.delta_g - m.delta_e, m.gamma_h)
    return k1, k2


def absorption_spectrum(state: MediumState, probe_grid: FrequencyGrid,
                        m: MaterialParams):
    """Optical depth seen by a weak probe on ``probe_grid``.

    Every class contributes its four transitions weighted by the ground
    populations; the result is normalized so the unpumped medium reads
    exactly ``d_peak`` everywhere.
    """
    margin = m.delta_g + m.delta_e
    if (probe_grid.f_min < state.grid.f_min + margin - 1e-6
            or probe_grid.f_max > state.grid.f_max - margin + 1e-6):
        raise GridWindowError(
            "probe grid must stay inside the class window minus the splitting margin"
        )
    k1, k2 = _probe_kernels(m, state.grid.df)
    num = fftconvolve(state.n1, k1, mode="same") + fftconvolve(state.n2, k2, mode="same")
    half = np.full(state.grid.n, 0.5)
    den = fftconvolve(half, k1, mode="same") + fftconvolve(half, k2, mode="same")
    d_class = m.d_peak * num / den
    return np.interp(probe_grid.frequencies, state.grid.frequencies, d_class)


@dataclass(frozen=True)
class CombMetrics:
    contrast: float
    d_comb: float
    d0: float
    finesse: float
    spacing: float
    periodic: bool

    def to_dict(self):
        return {
            "contrast": self.contrast,
            "d_comb": self.d_comb,
            "d0": self.d0,
            "finesse": self.finesse,
            "spacing_hz": self.spacing,
            "periodic": self.periodic,
        }


def _aperiodic(d):
    return CombMetrics(0.0, 0.0, float(np.min(d)), 0.0, 0.0, False)


def comb_metrics(d, grid: FrequencyGrid, nu_m: float) -> CombMetrics:
    """Contrast, depths and finesse of a (nominally nu_m-periodic) comb."""
    d = np.asarray(d, dtype=float)
    lag = int(round(nu_m / grid.df))
    if lag < 2 or d.size < 5 * lag:
        raise GridWindowError("window must contain at least 5 comb periods")
    x = d - d.mean()
    denom = float(np.dot(x, x))
    if denom < 1e-18 * d.size * max(1.0, float(np.abs(d).max()) ** 2):
        return _aperiodic(d)
    # periodicity check and spacing refinement around the nominal lag
    lo = max(2, int(lag * 0.7))
    hi = min(d.size // 2, int(lag * 1.3) + 1)
    corr = np.array([np.dot(x[:-s], x[s:]) / denom for s in range(lo, hi)])
    best = int(np.argmax(corr))
    if corr[best] < 0.2:
        return _aperiodic(d)
    spacing_bins = lo + best
    spacing = spacing_bins * grid.df

    # analyse the central periods only
    n_per = d.size // spacing_bins
    skip = max(1, n_per // 5)
    maxima, minima = [], []
    for j in range(skip, n_per - skip):
        seg = d[j * spacing_bins:(j + 1) * spacing_bins]
        maxima.append(seg.max())
        minima.append(seg.min())
    if not maxima:
        return _aperiodic(d)
    d_max = float(np.mean(maxima))
    d0 = float(np.mean(minima))
    contrast = (d_max - d0) / (d_max + d0) if (d_max + d0) > 0 else 0.0
    d_comb = d_max - d0

    # folded average tooth: FWHM above the floor
    usable = (d.size // spacing_bins) * spacing_bins
    folded = d[:usable].reshape(-1, spacing_bins).mean(axis=0)
    folded = np.roll(folded, spacing_bins // 2 - int(np.argmax(folded)))
    peak = folded.max()
    if peak - d0 <= 0:
        finesse = 0.0
    else:
        above = folded >= d0 + 0.5 * (peak - d0)
        width = max(int(np.sum(above)), 1) * grid.df
        finesse = spacing / width
    return CombMetrics(float(contrast), float(d_comb), float(d0), float(finesse),
                       float(spacing), True)
