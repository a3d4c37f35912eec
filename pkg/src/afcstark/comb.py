"""Atomic frequency comb spectra and ion-ensemble sampling.

Frequencies that describe a spectrum (period, tooth width, bandwidth) are in
Hz. Ion detunings are angular, in rad/s, relative to the cavity resonance.
Positions are in micrometres.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr, ndtri

TWO_PI = 2.0 * math.pi
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
# truncation guard, in tooth FWHMs, on each side of the outermost teeth
GUARD_FWHM = 3.0


@dataclass(frozen=True)
class ToothShape:
    kind: str = "gaussian"
    fwhm_gamma: float = 1.6e6

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported tooth shape {self.kind!r}")
        if not self.fwhm_gamma > 0:
            raise ValueError("tooth FWHM must be positive")


@dataclass(frozen=True)
class CombSpec:
    """Periodic comb of identical Gaussian teeth.

    Teeth sit at ``center_detuning + j * period_delta``; the grid is anchored so
    that one tooth is always exactly at ``center_detuning`` (for an even tooth
    count the extra tooth goes on the negative side).
    """

    period_delta: float
    tooth: ToothShape
    bandwidth: float
    center_detuning: float = 0.0
    subclass_weights: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if not self.period_delta > 0:
            raise ValueError("comb period must be positive")
        if not self.bandwidth > 0:
            raise ValueError("comb bandwidth must be positive")
        if self.bandwidth < self.period_delta * (1 - 1e-12):
            raise ValueError("comb bandwidth must be at least one period")
        if not self.finesse > 1:
            raise ValueError(f"finesse {self.finesse:.3g} must exceed 1")
        _check_weights(self.subclass_weights)

    @classmethod
    def from_finesse(cls, period_delta, finesse, bandwidth, center_detuning=0.0,
                     subclass_weights=(0.5, 0.5)):
        tooth = ToothShape("gaussian", period_delta / finesse)
        return cls(period_delta, tooth, bandwidth, center_detuning,
                   tuple(subclass_weights))

    @property
    def finesse(self) -> float:
        return self.period_delta / self.tooth.fwhm_gamma

    @property
    def n_teeth(self) -> int:
        return int(math.floor(self.bandwidth / self.period_delta + 1e-9)) + 1

    def tooth_centers(self) -> np.ndarray:
        """Tooth centre frequencies in Hz."""
        j = np.arange(self.n_teeth) - self.n_teeth // 2
        return self.center_detuning + j * self.period_delta


@dataclass(frozen=True)
class GaussianLine:
    """Smooth (combless) Gaussian inhomogeneous line, used for photon echoes."""

    fwhm: float
    center_detuning: float = 0.0
    subclass_weights: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("line FWHM must be positive")
        _check_weights(self.subclass_weights)


def _check_weights(w):
    if len(w) != 2 or min(w) < 0 or abs(w[0] + w[1] - 1) > 1e-9:
        raise ValueError(f"subclass weights {w} must be two non-negative numbers summing to 1")


class SpectralDensity:
    """Normalised density n(omega) of ion detunings, omega in rad/s.

    A truncated Gaussian mixture; components share one width. Calling the
    object returns the total density, or the density of one subclass when
    ``subclass`` is +1 or -1.
    """

    def __init__(self, centers, sigma, window, subclass_weights):
        self.centers = np.asarray(centers, dtype=float)
        self.sigma = float(sigma)
        self.window = (float(window[0]), float(window[1]))
        self.subclass_weights = tuple(subclass_weights)
        lo, hi = self.window
        # mass of each component inside the window; equal tooth weights
        a = ndtr((lo - self.centers) / self.sigma)
        b = ndtr((hi - self.centers) / self.sigma)
        self._cdf_lo = a
        self._mass = b - a
        self._norm = self._mass.sum()

    @property
    def n_components(self) -> int:
        return self.centers.size

    def component_weights(self) -> np.ndarray:
        return self._mass / self._norm

    def __call__(self, omega, subclass=None):
        omega = np.asarray(omega, dtype=float)
        z = (omega[..., None] - self.centers) / self.sigma
        g = np.exp(-0.5 * z * z).sum(axis=-1) / (self.sigma * math.sqrt(TWO_PI) * self._norm)
        lo, hi = self.window
        g = np.where((omega >= lo) & (omega <= hi), g, 0.0)
        if subclass is None:
            return g
        w = self.subclass_weights[0] if subclass > 0 else self.subclass_weights[1]
        return w * g

    def cdf(self, omega):
        omega = np.clip(np.asarray(omega, dtype=float), *self.window)
        c = ndtr((omega[..., None] - self.centers) / self.sigma) - self._cdf_lo
        return c.sum(axis=-1) / self._norm

    def mean_density(self) -> float:
        """Mean density over the span of component centres, per rad/s.

        For a comb this is 1/(2*pi*N*Delta); it sets the effective comb
        absorption rate pi * g_total**2 * mean_density.
        """
        if self.n_components == 1:
            return 1.0 / (self.sigma * math.sqrt(TWO_PI))
        spacing = (self.centers[-1] - self.centers[0]) / (self.n_components - 1)
        return 1.0 / (self.n_components * spacing)


def build_comb(spec: CombSpec | GaussianLine) -> SpectralDensity:
    if isinstance(spec, GaussianLine):
        sigma = TWO_PI * spec.fwhm / FWHM_PER_SIGMA
        c = TWO_PI * spec.center_detuning
        half = TWO_PI * GUARD_FWHM * spec.fwhm
        return SpectralDensity([c], sigma, (c - half, c + half), spec.subclass_weights)
    centers = TWO_PI * spec.tooth_centers()
    gamma = TWO_PI * spec.tooth.fwhm_gamma
    sigma = gamma / FWHM_PER_SIGMA
    window = (centers[0] - GUARD_FWHM * gamma, centers[-1] + GUARD_FWHM * gamma)
    return SpectralDensity(centers, sigma, window, spec.subclass_weights)


def tooth_fourier(k, finesse):
    """Fourier factor of one unit-area Gaussian tooth at t = k / Delta."""
    k = np.asarray(k, dtype=float)
    if np.isinf(finesse):
        out = np.ones_like(k)
    else:
        out = np.exp(-(math.pi ** 2) * k * k / (4.0 * math.log(2.0) * finesse ** 2))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Resonator:
    length_um: float = 100.0
    x_eff_um: float = 6.0

    def __post_init__(self):
        if not self.length_um > 0:
            raise ValueError("resonator length must be positive")
        if self.x_eff_um < 0:
            raise ValueError("mirror penetration x_eff must be non-negative")

    @property
    def effective_length_um(self) -> float:
        return self.length_um + 2.0 * self.x_eff_um

    @property
    def span_um(self) -> tuple[float, float]:
        h = 0.5 * self.effective_length_um
        return (-h, h)


class Ion(NamedTuple):
    detuning0: float
    position_x: float
    subclass: int
    s_individual: float


@dataclass(frozen=True, eq=False)
class IonEnsemble:
    """Sampled ions stored column-wise.

    ``g`` is the single-ion coupling in rad/s chosen so g**2 * n = g_total**2.
    """

    detuning0: np.ndarray
    position_x: np.ndarray
    subclass: np.ndarray
    s_individual: np.ndarray
    g: float
    rng_seed: int
    resonator: Resonator = field(default_factory=Resonator)

    @property
    def n(self) -> int:
        return self.detuning0.size

    @property
    def g_total(self) -> float:
        return self.g * math.sqrt(self.n)

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> Ion:
        return Ion(float(self.detuning0[i]), float(self.position_x[i]),
                   int(self.subclass[i]), float(self.s_individual[i]))

    def with_coupling(self, g_total: float) -> "IonEnsemble":
        return IonEnsemble(self.detuning0, self.position_x, self.subclass,
                           self.s_individual, g_total / math.sqrt(self.n),
                           self.rng_seed, self.resonator)

    def shifted(self, delta: float) -> "IonEnsemble":
        """Copy with every detuning offset by ``delta`` rad/s."""
        return IonEnsemble(self.detuning0 + delta, self.position_x, self.subclass,
                           self.s_individual, self.g, self.rng_seed, self.resonator)


def _stratified(rng, n):
    """n jittered quantiles in (0, 1), randomly permuted."""
    u = (np.arange(n) + rng.random(n)) / n
    return rng.permutation(u)


def _allocate(weights, n):
    """Largest-remainder integer allocation of n items."""
    raw = weights * n
    counts = np.floor(raw).astype(int)
    short = n - counts.sum()
    if short:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def sample_ensemble(spec, n, resonator=None, stark=None, seed=0, g_total=0.0,
                    sampling="stratified") -> IonEnsemble:
    """Draw ``n`` ions from the spectral density of ``spec``.

    Detunings use the exact inverse CDF of each truncated Gaussian tooth.
    With ``sampling="stratified"`` the uniforms feeding every inverse CDF are
    jittered quantiles (tooth counts by largest remainder), which keeps the
    per-tooth and per-subclass populations balanced at small n; ``"iid"``
    draws plain independent uniforms. Both are deterministic for a seed.
    ``stark=None`` uses the default :class:`~afcstark.stark.StarkModel`.
    """
    if n < 100:
        raise ValueError(f"n={n} ions is too few for ensemble statistics (need >= 100)")
    if sampling not in ("stratified", "iid"):
        raise ValueError(f"unknown sampling mode {sampling!r}")
    resonator = resonator or Resonator()
    if stark is None:
        from .stark import StarkModel
        stark = StarkModel()
    s_b, gamma_s = stark.s_b, stark.gamma_s
    rng = np.random.default_rng(seed)
    dens = build_comb(spec)
    lo, hi = dens.window
    weights = dens.component_weights()

    if sampling == "stratified":
        counts = _allocate(weights, n)
        tooth = np.repeat(np.arange(dens.n_components), counts)
        u = np.empty(n)
        start = 0
        for c in counts:
            u[start:start + c] = rng.permutation((np.arange(c) + rng.random(c)) / max(c, 1))
            start += c
        perm = rng.permutation(n)
        tooth, u = tooth[perm], u[perm]
        x01 = _stratified(rng, n)
        v = _stratified(rng, n)
    else:
        tooth = rng.choice(dens.n_components, size=n, p=weights)
        u = rng.random(n)
        x01 = rng.random(n)
        v = rng.random(n)

    c = dens.centers[tooth]
    a = ndtr((lo - c) / dens.sigma)
    b = ndtr((hi - c) / dens.sigma)
    detuning = c + dens.sigma * ndtri(a + u * (b - a))
    detuning = np.clip(detuning, lo, hi)

    x_lo, x_hi = resonator.span_um
    position = x_lo + x01 * (x_hi - x_lo)
    subclass = np.where(v < spec.subclass_weights[0], 1, -1).astype(np.int8)
    if gamma_s > 0:
        s_ind = s_b + (gamma_s / FWHM_PER_SIGMA) * rng.standard_normal(n)
    else:
        s_ind = np.full(n, float(s_b))
    g = g_total / math.sqrt(n)
    return IonEnsemble(detuning, position, subclass, s_ind, g, int(seed), resonator)


def comb_absorption_rate(spec, g_total: float) -> float:
    """Effective comb absorption rate pi * g_total**2 * mean_density (rad/s)."""
    return math.pi * g_total ** 2 * build_comb(spec).mean_density()


def g_total_for_rate(spec, gamma_comb: float) -> float:
    """Inverse of :func:`comb_absorption_rate`."""
    return math.sqrt(gamma_comb / (math.pi * build_comb(spec).mean_density()))
