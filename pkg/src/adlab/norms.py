"""Discrete estimators for the norms the energy estimates run on.

Spatial Hölder seminorms are taken over a structured neighbor set: all grid
pairs separated by a dyadic offset (2^j, 0), (0, 2^j) or (2^j, 2^j) whose
torus distance is at most 1/4.  For fields built from axis-aligned shears the
maximizing pair is axis-aligned at the active wavelength, so the dyadic set
finds it at O(N^2 log N) cost; an exhaustive all-offsets mode exists as the
small-grid oracle.  Bochner norms in time are trapezoidal on checkpoint grids
that are stage-aligned, so the kinks of the integrand sit on quadrature
nodes.  The space-time Hölder estimator reuses the dyadic idea in time:
quotients are taken over checkpoint pairs at dyadic index strides.

Everything here is pure array arithmetic: no solver state, no file I/O.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
MAX_PAIR_DISTANCE = 0.25


def _torus_component(offset: int, n: int) -> float:
    return min(offset % n, n - offset % n) / n


def _dyadic_offsets(n: int) -> list[tuple[int, int]]:
    out = []
    j = 1
    while j <= n // 4:
        out.extend([(j, 0), (0, j), (j, j)])
        j *= 2
    return out


def holder_seminorm(values: np.ndarray, alpha: float, mode: str = "dyadic") -> float:
    """sup |f(x) - f(y)| / d(x,y)^alpha over pairs within torus distance 1/4.

    mode "dyadic" restricts to dyadic offsets; "exhaustive" scans every
    offset (the O(N^4)-pair oracle, meant for n <= 128).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    n = values.shape[0]
    if mode == "dyadic":
        offsets = _dyadic_offsets(n)
    elif mode == "exhaustive":
        offsets = [(a, b) for a in range(n) for b in range(n) if (a, b) != (0, 0)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    best = 0.0
    for a, b in offsets:
        d = math.hypot(_torus_component(a, n), _torus_component(b, n))
        if d > MAX_PAIR_DISTANCE + 1e-15 or d == 0.0:
            continue
        shifted = values
        if a:
            shifted = np.roll(shifted, -a, axis=0)
        if b:
            shifted = np.roll(shifted, -b, axis=1)
        diff = float(np.max(np.abs(shifted - values)))
        best = max(best, diff / d**alpha)
    return best


def holder_seminorm_1d(values: np.ndarray, alpha: float, max_distance: float = MAX_PAIR_DISTANCE) -> float:
    """Exhaustive 1d Hölder seminorm over torus offsets within max_distance."""
    n = values.shape[0]
    best = 0.0
    for a in range(1, n):
        d = _torus_component(a, n)
        if d > max_distance + 1e-15:
            continue
        diff = float(np.max(np.abs(np.roll(values, -a) - values)))
        best = max(best, diff / d**alpha)
    return best


@functools.lru_cache(maxsize=None)
def sine_holder(freq: int, alpha: float, samples: int = 200001) -> float:
    """[sin(2 pi freq y)]_alpha on the torus, pairs within distance 1/4.

    The sup over base points is closed-form, sup_y |sin(y + s) - sin(y)| =
    2 |sin(s/2)|, so only the separation remains; it is maximized over a
    dense grid plus the exact peak separations (2m+1)/(2 freq).
    """
    d = np.linspace(0.0, MAX_PAIR_DISTANCE, samples)[1:]
    peaks = np.arange(1, freq, 2) / (2.0 * freq)
    peaks = peaks[peaks <= MAX_PAIR_DISTANCE]
    d = np.concatenate([d, peaks])
    return float(np.max(2.0 * np.abs(np.sin(math.pi * freq * d)) / d**alpha))


def gradient_fields(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral (d/dx1 f, d/dx2 f); Nyquist rows excluded from the derivative."""
    n = values.shape[0]
    c = np.fft.rfft2(values)
    k1 = np.fft.fftfreq(n, d=1.0 / n)
    k1[n // 2] = 0.0
    k2 = np.arange(n // 2 + 1, dtype=float)
    k2[-1] = 0.0
    gx = np.fft.irfft2(c * (2j * math.pi * k1)[:, None], s=(n, n))
    gy = np.fft.irfft2(c * (2j * math.pi * k2)[None, :], s=(n, n))
    return gx, gy


def gradient_sup(values: np.ndarray) -> float:
    """sup |grad f| of the trigonometric interpolant, on grid points."""
    gx, gy = gradient_fields(values)
    return float(np.max(np.hypot(gx, gy)))


def interpolation_bound(values: np.ndarray, alpha: float) -> tuple[float, float]:
    """(measured [f]_alpha, bound 2^(1-alpha) sup|f|^(1-alpha) sup|grad f|^alpha).

    The two-point bound |f(x)-f(y)| <= min(2 sup|f|, sup|grad f| d) gives the
    seminorm bound with the 2^(1-alpha) constant after optimizing over d.
    """
    semi = holder_seminorm(values, alpha)
    sup = float(np.max(np.abs(values)))
    gsup = gradient_sup(values)
    return semi, 2.0 ** (1.0 - alpha) * sup ** (1.0 - alpha) * gsup**alpha


def bochner_norm(
    times: np.ndarray,
    slice_values: np.ndarray,
    p: float,
    t_lo: float = 0.0,
    t_hi: float = 1.0,
) -> float:
    """(int_{t_lo}^{t_hi} s(t)^p dt)^(1/p), trapezoidal on the checkpoint grid."""
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    times = np.asarray(times, dtype=float)
    vals = np.asarray(slice_values, dtype=float)
    if times.shape != vals.shape:
        raise ValueError("times and slice_values must have matching shapes")
    inside = (times > t_lo) & (times < t_hi)
    t = np.concatenate([[t_lo], times[inside], [t_hi]])
    v = np.concatenate(
        [[np.interp(t_lo, times, vals)], vals[inside], [np.interp(t_hi, times, vals)]]
    )
    return float(np.trapezoid(v**p, t)) ** (1.0 / p)


def l2_gap(field_a: np.ndarray, field_b: np.ndarray) -> float:
    """Grid L^2 distance over the unit-measure torus."""
    if field_a.shape != field_b.shape:
        raise ValueError(f"grid mismatch: {field_a.shape} vs {field_b.shape}")
    diff = field_a - field_b
    return math.sqrt(float(np.mean(diff * diff)))


def energy_balance_check(
    times: np.ndarray,
    l2_values: np.ndarray,
    cum_dissipation: np.ndarray,
    work_cum: Optional[np.ndarray] = None,
    initial_energy: Optional[float] = None,
) -> float:
    """Max relative residual of ||v(t)||^2 + D(t) = ||v(0)||^2 + 2 W(t).

    cum_dissipation is the energy-unit total 2 nu int ||grad v||^2 over [0,t];
    work_cum is int <F, v> dt (omit for unforced flows).
    """
    l2_values = np.asarray(l2_values, dtype=float)
    e = l2_values**2
    e0 = float(e[0]) if initial_energy is None else initial_energy
    rhs = e0 if work_cum is None else e0 + 2.0 * np.asarray(work_cum, dtype=float)
    return float(np.max(np.abs(e + np.asarray(cum_dissipation, dtype=float) - rhs))) / e0


def uniformity_scan(values: Sequence[float]) -> tuple[float, float, float]:
    """(max, median, max/median) across a family of norm values."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("uniformity_scan needs at least one value")
    top = float(np.max(arr))
    med = float(np.median(arr))
    return top, med, top / med if med > 0.0 else math.inf


@dataclass(frozen=True)
class NormReport:
    """One norm measurement with its convergence indicator."""

    kind: str
    value: float
    alpha_or_sigma: float
    resolution: int
    refinement_ratio: Optional[float] = None

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError("norm value must be nonnegative")


_DYADIC_TIME_STRIDES = 12


def spacetime_holder(
    times: np.ndarray,
    sup_diff,
    space_semis: np.ndarray,
    alpha: float,
) -> float:
    """C^alpha over space-time: spatial seminorms joined with temporal
    quotients ||F(t) - F(s)||_inf / |t - s|^alpha over dyadic index strides.

    sup_diff(i, j) must return ||F(times[i]) - F(times[j])||_inf.
    """
    best = float(np.max(space_semis)) if len(space_semis) else 0.0
    m = len(times)
    stride = 1
    for _ in range(_DYADIC_TIME_STRIDES):
        if stride >= m:
            break
        for i in range(0, m - stride):
            dt = times[i + stride] - times[i]
            if dt <= 0.0:
                continue
            best = max(best, sup_diff(i, i + stride) / dt**alpha)
        stride *= 2
    return best


def force_norm(
    force,
    sigma: float,
    t_lo: float = 0.0,
    t_hi: float = 1.0,
    alpha_prime: Optional[float] = None,
    per_stage: int = 33,
) -> tuple[float, Optional[float]]:
    """(L^{1+sigma}([t_lo,t_hi]; C^sigma) of the force, space-time C^alpha').

    The force object supplies quadrature_times(), slice_csigma(t, sigma) and
    profile_diff_sup(t, s); the second return value is None unless
    alpha_prime is given.
    """
    times = force.quadrature_times(per_stage=per_stage)
    slice_norms = np.array([force.slice_csigma(t, sigma) for t in times])
    lp = bochner_norm(times, slice_norms, 1.0 + sigma, t_lo=t_lo, t_hi=t_hi)
    if alpha_prime is None:
        return lp, None
    semis = np.array([force.slice_holder(t, alpha_prime) for t in times])
    value = spacetime_holder(
        times,
        lambda i, j: force.profile_diff_sup(times[i], times[j]),
        semis,
        alpha_prime,
    )
    return lp, value
