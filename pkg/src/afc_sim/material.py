"""Thulium-in-YAG medium model: Zeeman structure, sites, hole/antihole geometry.

Level scheme used throughout: two ground sublevels g1/g2 split by delta_g and
two excited sublevels split by delta_e.  A frequency class is labelled by the
offset ``delta`` of its lowest optical transition; the four transitions of a
class then sit at::

    delta                weak  (spin-flip) transition from g1
    delta + delta_g      strong (direct) transition from g2
    delta + delta_e      strong (direct) transition from g1
    delta + delta_g + delta_e   weak (spin-flip) transition from g2

The strong pair is separated by delta_g - delta_e, which places the dominant
pumping/depumping structures at the observed positions: holes at 0 and
+-delta_e, antiholes at +-(delta_g - delta_e) and +-delta_g, and only a
cross-strength-suppressed pair at +-(delta_g + delta_e).
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MaterialParams",
    "SiteGeometry",
    "ShbPattern",
    "TM_YAG_SITES",
    "ZEEMAN_GATE_THRESHOLD_GAUSS",
    "site_couplings",
    "shb_pattern",
    "zeeman_field_gate",
]

# Lowest field at which the Zeeman shelving lifetime supports hole burning.
ZEEMAN_GATE_THRESHOLD_GAUSS = 95.0

# Sub-threshold shelving is shorter than the bottleneck feeding it, so no
# structure survives the pump-probe wait.
_SUBTHRESHOLD_LIFETIME_FRACTION = 0.1


@dataclass(frozen=True)
class MaterialParams:
    """Material constants of the Zeeman-split four-level medium.

    delta_g, delta_e : Hz
        Ground and excited Zeeman splittings (2.7 MHz / 0.57 MHz at 95 G).
    t_zeeman : s
        Shelving lifetime of the ground sublevel imbalance above the field
        threshold (7 s here).
    t_excited, t_bottleneck : s
        Excited-state lifetime and metastable bottleneck lifetime on the
        decay path back to the ground sublevels.
    gamma_h, gamma_laser : Hz
        Homogeneous linewidth and pump laser linewidth (FWHM).  Their sum is
        the effective width a pump line burns with.
    d_peak : float
        Background optical depth of the unpumped medium.
    inhom_width : Hz
        Inhomogeneous profile FWHM; only documents that the simulated window
        is a tiny, flat slice of it.
    cross_strength : float
        Relative oscillator strength of the spin-flip optical transitions.
    branching_spinflip : float
        Probability that an excited ion relaxes into the other ground
        sublevel after passing the bottleneck.
    extra_broadening_hz : Hz
        Reserved additive broadening knob (instantaneous spectral diffusion
        is not modelled); added to the pump line width when nonzero.
    """

    delta_g: float = 2.7e6
    delta_e: float = 0.57e6
    t_zeeman: float = 7.0
    t_excited: float = 800e-6
    t_bottleneck: float = 10e-3
    gamma_h: float = 10e3
    gamma_laser: float = 500e3
    d_peak: float = 2.0
    inhom_width: float = 10e9
    cross_strength: float = 0.05
    branching_spinflip: float = 0.5
    extra_broadening_hz: float = 0.0

    def __post_init__(self):
        for name in ("t_zeeman", "t_excited", "t_bottleneck"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.delta_g > self.delta_e >= 0:
            raise ValueError("require delta_g > delta_e >= 0")
        if not 0.0 <= self.cross_strength <= 1.0:
            raise ValueError("cross_strength must lie in [0, 1]")
        if not 0.0 <= self.branching_spinflip <= 1.0:
            raise ValueError("branching_spinflip must lie in [0, 1]")
        if self.d_peak < 0:
            raise ValueError("d_peak must be non-negative")
        if self.gamma_h < 0 or self.gamma_laser < 0 or self.extra_broadening_hz < 0:
            raise ValueError("linewidths must be non-negative")
        if self.gamma_h + self.gamma_laser + self.extra_broadening_hz <= 0:
            raise ValueError("total line width must be positive")

    @property
    def pump_linewidth(self):
        """Effective FWHM a single pump line burns with."""
        return self.gamma_h + self.gamma_laser + self.extra_broadening_hz

    def transition_offsets(self):
        """Offsets of the four class transitions relative to the class label."""
        return np.array(
            [0.0, self.delta_e, self.delta_g, self.delta_g + self.delta_e]
        )

    def transition_strengths(self):
        """Relative strengths matching :meth:`transition_offsets`."""
        c = self.cross_strength
        return np.array([c, 1.0, 1.0, c])


@dataclass(frozen=True)
class SiteGeometry:
    """Unit transition dipoles of the orientationally inequivalent sites."""

    dipoles: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dipoles, dtype=float)
        if d.ndim != 2 or d.shape[1] != 3:
            raise ValueError("dipoles must be an (n, 3) array")
        norms = np.linalg.norm(d, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-12):
            raise ValueError("dipoles must be unit vectors")
        object.__setattr__(self, "dipoles", d)

    def to_csv(self, path):
        rows = np.column_stack([np.arange(1, len(self.dipoles) + 1), self.dipoles])
        np.savetxt(
            path,
            rows,
            delimiter=",",
            header="site,dx,dy,dz",
            comments="",
            fmt=["%d", "%.12f", "%.12f", "%.12f"],
        )


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


# Dipoles along the six <110>-type directions, ordered so that the quoted
# polarization selection rules hold: light along [001] excites sites 3-6
# equally and misses 1-2; light along [-110] maximally excites site 1.
TM_YAG_SITES = SiteGeometry(
    np.array(
        [
            _unit([-1, 1, 0]),  # site 1
            _unit([1, 1, 0]),   # site 2
            _unit([1, 0, 1]),   # site 3
            _unit([1, 0, -1]),  # site 4
            _unit([0, 1, 1]),   # site 5
            _unit([0, 1, -1]),  # site 6
        ]
    )
)


def site_couplings(polarization, geometry: SiteGeometry = TM_YAG_SITES):
    """Relative excitation of each substitution site for a given polarization.

    Returns |d_i . e|^2 per site, normalized so the strongest site is 1.
    """
    eps = np.asarray(polarization, dtype=float)
    if eps.shape != (3,):
        raise ValueError("polarization must be a 3-vector")
    if not math.isclose(float(np.linalg.norm(eps)), 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError("polarization must be a unit vector")
    proj = (geometry.dipoles @ eps) ** 2
    peak = proj.max()
    if peak == 0.0:
        return proj
    return proj / peak


@dataclass(frozen=True)
class ShbPattern:
    """Hole/antihole response of the medium to a single narrow pump line.

    Weights are the products of pump and probe transition strengths in the
    linear (weak, short-pump) regime; holes and antiholes carry equal total
    weight because every burned ion reappears in the other sublevel.
    """

    holes: tuple
    antiholes: tuple

    def hole_offsets(self):
        return np.array([h[0] for h in self.holes])

    def antihole_offsets(self):
        return np.array([a[0] for a in self.antiholes])

    def weight_at(self, offset, kind="antihole", tol=1.0):
        entries = self.antiholes if kind == "antihole" else self.holes
        for off, w in entries:
            if abs(off - offset) <= tol:
                return w
        return 0.0


def _merge(entries):
    """Sum weights of coincident offsets and drop exact zeros."""
    merged = {}
    for off, w in entries:
        key = round(off, 6)
        merged[key] = merged.get(key, 0.0) + w
    return tuple(sorted((off, w) for off, w in merged.items() if w > 0.0))


def shb_pattern(m: MaterialParams) -> ShbPattern:
    """Expected hole/antihole offsets and linear-regime weights.

    A pump line burning any of the four class transitions depletes one
    ground sublevel and feeds the other; reading every transition of the
    affected classes places holes at {0, +-delta_e} and antiholes at
    {+-(delta_g - delta_e), +-delta_g, +-(delta_g + delta_e)} with weights
    combining pump and probe strengths.
    """
    c = m.cross_strength
    dg, de = m.delta_g, m.delta_e
    holes = [
        (0.0, 2.0 * (1.0 + c * c)),
        (+de, 2.0 * c),
        (-de, 2.0 * c),
    ]
    antiholes = [
        (+(dg - de), 1.0),
        (-(dg - de), 1.0),
        (+dg, 2.0 * c),
        (-dg, 2.0 * c),
        (+(dg + de), c * c),
        (-(dg + de), c * c),
    ]
    norm = 2.0 * (1.0 + c) ** 2
    holes = [(off, w / norm) for off, w in holes]
    antiholes = [(off, w / norm) for off, w in antiholes]
    return ShbPattern(_merge(holes), _merge(antiholes))


def zeeman_field_gate(b_field: float, m: MaterialParams) -> float:
    """Effective shelving lifetime at the given magnetic field (gauss).

    Step model: at and above the threshold field the full Zeeman lifetime is
    available; below it the shelving state is too short-lived to hold a
    structure past the pump-probe wait.
    """
    if b_field < 0:
        raise ValueError("b_field must be non-negative")
    if b_field >= ZEEMAN_GATE_THRESHOLD_GAUSS:
        return m.t_zeeman
    return _SUBTHRESHOLD_LIFETIME_FRACTION * m.t_bottleneck
