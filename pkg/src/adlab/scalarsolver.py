"""Advection-diffusion solver exploiting the shear structure of the velocity.

Because the velocity is a single shear at every time, the advection sub-flow
is solved exactly: a horizontal stage translates each line x2 = const by the
accumulated displacement D(x2) = amplitude * integral(chi) * profile(x2),
which is a per-mode phase factor exp(-2 pi i k D) along the other axis.  The
heat sub-flow is the exact Fourier multiplier exp(-4 pi^2 nu |k|^2 dt).  The
two are composed by Strang splitting, advect(dt/2) diffuse(dt) advect(dt/2),
with the half steps of consecutive steps merged.  Both sub-flows are
unconditionally stable and norm-exact, so numerical diffusion never
contaminates the dissipation measurement.

Dissipation is not accumulated by quadrature of the integrand: every
diffusion substep records its exact energy loss sum_k w_k |c_k|^2 (1 - m_k^2),
which telescopes to ||theta_in||^2 - ||theta(t)||^2 and makes the energy
balance an identity of the scheme rather than an approximation.  The values
2 nu int ||grad theta||^2 dt reported at checkpoints are therefore exact for
the discrete trajectory, and differ from the PDE values only through the
O(dt^2) splitting error.

Inside a stage the marching state is kept spectral along the shear direction
and physical along the transverse one; advection phases are diagonal there,
and diffusion needs only a single transform pair along the transverse axis
per step.  With nu = 0 the splitting disappears entirely: one exact phase
shift per stage segment, so inviscid runs conserve every grid L^p norm and
undo themselves across the reflection t -> 2 - t to round-off.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import norms
from .shearflow import ShearStage, stage_boundaries

TWO_PI = 2.0 * math.pi


class ResolutionError(ValueError):
    """Grid too coarse to hold the finest active frequency band-limited."""


@dataclass(frozen=True)
class DtPolicy:
    """Time-step selection: dt = min(stage_width / stage_divisor,
    diffusion_margin / (4 pi^2 nu freq^2)), bounded below by nothing (the
    scheme is unconditionally stable; this is an accuracy policy)."""

    stage_divisor: int = 64
    diffusion_margin: float = 0.1
    dt_override: Optional[float] = None

    def stage_dt(self, stage_width: float, nu: float, freq: int) -> float:
        if self.dt_override is not None:
            return self.dt_override
        dt = stage_width / self.stage_divisor
        if nu > 0.0:
            dt = min(dt, self.diffusion_margin / (4.0 * math.pi**2 * nu * freq**2))
        return dt


@dataclass
class ScalarField:
    """Real scalar on the uniform n x n torus grid; values[i, j] = f(i/n, j/n)."""

    values: np.ndarray

    def __post_init__(self):
        n = self.values.shape[0]
        if self.values.ndim != 2 or self.values.shape != (n, n):
            raise ValueError("values must be a square 2d array")
        if n < 8 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {n}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def l2(self) -> float:
        return l2_norm(self.values)

    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def grad_l2(self) -> float:
        return grad_l2_norm(self.values)


def l2_norm(values: np.ndarray) -> float:
    """Grid L^2 norm over the unit-measure torus."""
    return math.sqrt(float(np.mean(values * values)))


@functools.lru_cache(maxsize=None)
def _spectral_grids(n: int):
    """(|k|^2, rfft2 Parseval weights) for an n x n grid."""
    k1 = np.fft.fftfreq(n, d=1.0 / n)
    k2 = np.arange(n // 2 + 1)
    k_sq = k1[:, None] ** 2 + k2[None, :] ** 2
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return k_sq, np.broadcast_to(w, (n, n // 2 + 1))


def grad_l2_norm(values: np.ndarray) -> float:
    """||grad f||_{L^2}, spectrally exact for the grid trigonometric interpolant."""
    n = values.shape[0]
    c = np.fft.rfft2(values) / (n * n)
    k_sq, w = _spectral_grids(n)
    return math.sqrt(4.0 * math.pi**2 * float(np.sum(w * k_sq * np.abs(c) ** 2)))


def initial_datum(n: int) -> ScalarField:
    """theta_in(x) = sin(2 pi x2): smooth, mean zero, sup norm exactly one."""
    if n < 8:
        raise ValueError(f"grid size must be >= 8, got {n}")
    x2 = np.arange(n) / n
    values = np.broadcast_to(np.sin(TWO_PI * x2), (n, n)).copy()
    return ScalarField(values)


def _advect_values(values: np.ndarray, stage: ShearStage, displacement: float) -> np.ndarray:
    """Translate along the shear direction by displacement * profile (exact)."""
    n = values.shape[0]
    prof = stage.profile(n)
    ka = np.arange(n // 2 + 1)
    if stage.direction == "h":
        # u = (W(x2), 0): shift along x1 (axis 0) by d(x2)
        F = np.fft.rfft(values, axis=0)
        F *= np.exp((-2j * math.pi * displacement) * np.outer(ka, prof))
        return np.fft.irfft(F, n=n, axis=0)
    # u = (0, W(x1)): shift along x2 (axis 1) by d(x1)
    F = np.fft.rfft(values, axis=1)
    F *= np.exp((-2j * math.pi * displacement) * np.outer(prof, ka))
    return np.fft.irfft(F, n=n, axis=1)


def advect_exact(fld: ScalarField, stage: ShearStage, ta: float, tb: float) -> ScalarField:
    """Exact advection under one stage over [ta, tb] (must not span a boundary)."""
    if ta < stage.t0 - 1e-12 or tb > stage.t1 + 1e-12:
        raise ValueError(
            f"[{ta}, {tb}] spans the boundary of the stage window "
            f"[{stage.t0}, {stage.t1}]"
        )
    return ScalarField(_advect_values(fld.values, stage, stage.displacement(ta, tb)))


def diffuse_exact(fld: ScalarField, nu: float, dt: float) -> tuple[ScalarField, float]:
    """Exact heat multiplier; returns (field, energy lost = 2 nu int ||grad||^2)."""
    if nu < 0.0 or dt <= 0.0:
        raise ValueError("diffuse_exact requires nu >= 0 and dt > 0")
    if nu == 0.0:
        return fld, 0.0
    n = fld.n
    k_sq, w = _spectral_grids(n)
    c = np.fft.rfft2(fld.values) / (n * n)
    m = np.exp(-4.0 * math.pi**2 * nu * k_sq * dt)
    lost = float(np.sum(w * np.abs(c) ** 2 * (1.0 - m * m)))
    out = np.fft.irfft2(np.fft.rfft2(fld.values) * m, s=(n, n))
    return ScalarField(out), lost


@dataclass
class Trajectory:
    """Checkpoint norms, exact dissipation increments, optional snapshots."""

    nu: float
    n: int
    times: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    grad_l2: np.ndarray
    cum_diss: np.ndarray
    fields: dict
    grad_linf: Optional[np.ndarray] = None
    holder: Optional[dict] = None
    gaps: Optional[dict] = None
    meta: dict = field(default_factory=dict)

    @property
    def initial_l2(self) -> float:
        return float(self.l2[0])

    def energy_residuals(self) -> np.ndarray:
        """|l2(t)^2 + cum_diss(t) - l2(0)^2| / l2(0)^2 at every checkpoint."""
        e0 = self.initial_l2**2
        return np.abs(self.l2**2 + self.cum_diss - e0) / e0

    def dissipation_at(self, t: float) -> float:
        i = int(np.searchsorted(self.times, t + 1e-15) - 1)
        return float(self.cum_diss[max(i, 0)])

    @property
    def dissipation_total(self) -> float:
        return float(self.cum_diss[-1])


def resolution_floor(field_schedule) -> int:
    """At least 8 grid points per finest active wavelength."""
    return 8 * field_schedule.max_freq()


def default_checkpoints(field_schedule, per_stage: int = 4) -> np.ndarray:
    """{0, 1, 2}, every stage boundary and quarter mark, and the cut times 1 +- T_q."""
    times = {0.0, 1.0, 2.0}
    for st in field_schedule.stages:
        w = st.t1 - st.t0
        for i in range(per_stage + 1):
            times.add(st.t0 + w * (i / per_stage))
    seqs = field_schedule.sequences
    for q in range(seqs.Q + 1):
        times.add(1.0 - seqs.T[q])
        times.add(1.0 + seqs.T[q])
    return np.unique([t for t in times if 0.0 <= t <= 2.0])


def solve(
    field_schedule,
    nu: float,
    n: int,
    checkpoints: Optional[np.ndarray] = None,
    dt_policy: Optional[DtPolicy] = None,
    snapshot_times: tuple = (),
    gap_reference: Optional[dict] = None,
    theta0: Optional[ScalarField] = None,
    holder_alphas: tuple = (),
    record_grad_linf: bool = False,
) -> Trajectory:
    """March theta from theta_in over [0, 2] under the given shear field."""
    if nu < 0.0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    floor = resolution_floor(field_schedule)
    if n < floor:
        raise ResolutionError(f"n = {n} is below the resolution floor {floor}")
    dt_policy = dt_policy or DtPolicy()
    if checkpoints is None:
        checkpoints = default_checkpoints(field_schedule)
    extra = list(snapshot_times) + (list(gap_reference) if gap_reference else [])
    events = np.unique(
        np.concatenate([checkpoints, stage_boundaries(field_schedule), extra, [0.0, 2.0]])
    )
    events = events[(events >= 0.0) & (events <= 2.0)]

    fld = theta0 if theta0 is not None else initial_datum(n)
    values = fld.values.copy()
    snapshot_times = set(float(t) for t in snapshot_times)

    times, l2s, linfs, grads, cums, grad_sups = [], [], [], [], [], []
    holders = {alpha: [] for alpha in holder_alphas}
    fields_out, gaps = {}, {}
    cum = 0.0

    def record(t: float):
        times.append(t)
        l2s.append(l2_norm(values))
        linfs.append(float(np.max(np.abs(values))))
        grads.append(grad_l2_norm(values))
        cums.append(cum)
        if record_grad_linf:
            grad_sups.append(norms.gradient_sup(values))
        for alpha in holder_alphas:
            holders[alpha].append(norms.holder_seminorm(values, alpha))
        if t in snapshot_times:
            fields_out[t] = values.copy()
        if gap_reference is not None and t in gap_reference:
            gaps[t] = l2_norm(values - gap_reference[t])

    record(float(events[0]))
    for ta, tb in zip(events[:-1], events[1:]):
        ta, tb = float(ta), float(tb)
        if tb - ta <= 0.0:
            continue
        stage = field_schedule.active_stage(0.5 * (ta + tb))
        if stage is None:
            if nu > 0.0:
                f2, lost = diffuse_exact(ScalarField(values), nu, tb - ta)
                values = f2.values
                cum += lost
        elif nu == 0.0:
            values = _advect_values(values, stage, stage.displacement(ta, tb))
        else:
            values, lost = _march_stage_segment(values, stage, ta, tb, nu, dt_policy)
            cum += lost
        record(tb)

    return Trajectory(
        nu=nu,
        n=n,
        times=np.asarray(times),
        l2=np.asarray(l2s),
        linf=np.asarray(linfs),
        grad_l2=np.asarray(grads),
        cum_diss=np.asarray(cums),
        fields=fields_out,
        grad_linf=np.asarray(grad_sups) if record_grad_linf else None,
        holder={a: np.asarray(v) for a, v in holders.items()} if holder_alphas else None,
        gaps=gaps if gap_reference is not None else None,
        meta={
            "q_cut": getattr(field_schedule, "q_cut", None),
            "levels": field_schedule.levels,
            "dt_policy": dt_policy,
        },
    )


def _march_stage_segment(
    values: np.ndarray,
    stage: ShearStage,
    ta: float,
    tb: float,
    nu: float,
    dt_policy: DtPolicy,
) -> tuple[np.ndarray, float]:
    """Strang march across [ta, tb] inside one stage; returns (values, energy lost).

    State is spectral along the shear axis and physical transverse; the two
    half-advections of consecutive steps are merged.
    """
    n = values.shape[0]
    dt_target = dt_policy.stage_dt(stage.t1 - stage.t0, nu, stage.freq)
    m_steps = max(1, math.ceil((tb - ta) / dt_target))
    dt = (tb - ta) / m_steps

    prof = stage.profile(n)
    ka = np.arange(n // 2 + 1, dtype=float)
    adv_axis = 0 if stage.direction == "h" else 1
    tr_axis = 1 - adv_axis

    if adv_axis == 0:
        phase_of = lambda d: np.exp((-2j * math.pi * d) * np.outer(ka, prof))
    else:
        phase_of = lambda d: np.exp((-2j * math.pi * d) * np.outer(prof, ka))

    # mixed-space diffusion multiplier and Parseval weights
    k_tr = np.fft.fftfreq(n, d=1.0 / n)
    if adv_axis == 0:
        k_sq = ka[:, None] ** 2 + k_tr[None, :] ** 2
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        w = w[:, None]
    else:
        k_sq = k_tr[:, None] ** 2 + ka[None, :] ** 2
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        w = w[None, :]
    mult = np.exp(-4.0 * math.pi**2 * nu * k_sq * dt)
    decay = w * (1.0 - mult * mult)
    norm4 = float(n) ** 4

    F = np.fft.rfft(values, axis=adv_axis)
    lost = 0.0
    t = ta
    F *= phase_of(stage.displacement(t, t + 0.5 * dt))
    for step in range(m_steps):
        G = np.fft.fft(F, axis=tr_axis)
        lost += float(np.sum(decay * (G.real**2 + G.imag**2))) / norm4
        G *= mult
        F = np.fft.ifft(G, axis=tr_axis)
        if step < m_steps - 1:
            F *= phase_of(stage.displacement(t + 0.5 * dt, t + 1.5 * dt))
            t += dt
    F *= phase_of(stage.displacement(t + 0.5 * dt, tb))
    return np.fft.irfft(F, n=n, axis=adv_axis), lost


HEAT_CLOSED_FORM = (
    2.0 * math.pi**2
    - (1.0 - math.exp(-4.0 * math.pi**2))
    + (1.0 - math.exp(-8.0 * math.pi**2)) / 4.0
)


@dataclass(frozen=True)
class HeatReport:
    nu: float
    value: float
    closed_form: float
    rel_error: float
    lower_bound_ok: bool
    n: int
    dt: float


def heat_counterexample(nu: float, dt: float = 2e-5, n: Optional[int] = None) -> HeatReport:
    """Forced heat flow dissipating at a nu-independent rate >= 1/4.

    Solves d_t theta - nu Lap theta = -4 pi^2 sin(2 pi x1 / sqrt(nu)) from
    theta(0) = 0 over [0, 1] with the same Strang machinery (force half-step,
    exact diffusion, force half-step) and compares nu int ||grad theta||^2
    against the closed form, which is independent of nu because the forced
    wavenumber nu^(-1/2) ties the decay rate to 4 pi^2 exactly.
    """
    m = round(1.0 / math.sqrt(nu))
    if abs(m * m * nu - 1.0) > 1e-9:
        raise ValueError(f"nu = {nu} does not have an integer inverse square root")
    if n is None:
        n = max(8, 4 * m)
    if n < 4 * m:
        raise ResolutionError(f"n = {n} is below 4 nu^(-1/2) = {4 * m}")

    x1 = np.arange(n) / n
    force = np.broadcast_to(-4.0 * math.pi**2 * np.sin(TWO_PI * m * x1)[:, None], (n, n)).copy()

    steps = max(1, round(1.0 / dt))
    dt = 1.0 / steps
    k_sq, w = _spectral_grids(n)
    mult = np.exp(-4.0 * math.pi**2 * nu * k_sq * dt)
    decay = w * (1.0 - mult * mult)
    norm4 = float(n) ** 4

    values = np.zeros((n, n))
    half = 0.5 * dt
    lost = 0.0
    for _ in range(steps):
        values += half * force
        G = np.fft.rfft2(values)
        lost += float(np.sum(decay * (G.real**2 + G.imag**2))) / norm4
        values = np.fft.irfft2(G * mult, s=(n, n))
        values += half * force
    value = 0.5 * lost
    rel = abs(value - HEAT_CLOSED_FORM) / HEAT_CLOSED_FORM
    return HeatReport(
        nu=nu,
        value=value,
        closed_form=HEAT_CLOSED_FORM,
        rel_error=rel,
        lower_bound_ok=value >= 0.25,
        n=n,
        dt=dt,
    )


@dataclass(frozen=True)
class VanishingGap:
    nu: float
    q_trunc: int
    k_level: int
    t_of_nu: float
    gap_l2: float


def gronwall_level(sequences, q: int) -> int:
    """Largest k <= q with a_q^(2 - gamma/(1+delta)) exp(a_k^(2-2g) a_{k+1}^(-2-2ed)) <= 1."""
    params = sequences.params
    g, d, e = params.gamma, params.delta, params.epsilon
    base = (2.0 - g / (1.0 + d)) * sequences.a[q].ln
    k_best = 0
    for k in range(min(q, len(sequences.a) - 2) + 1):
        growth_ln = (2.0 - 2.0 * g) * sequences.a[k].ln - (2.0 + 2.0 * e * d) * sequences.a[k + 1].ln
        growth = math.exp(growth_ln) if growth_ln < 700.0 else math.inf
        if base + growth <= 0.0:
            k_best = k
    return k_best


def vanishing_viscosity_gap(
    nu: float,
    schedule,
    n: int,
    dt_policy: Optional[DtPolicy] = None,
    theta0_traj: Optional[Trajectory] = None,
) -> VanishingGap:
    """Truncation-aware L^2 gap ||theta_nu(t(nu)) - theta_0(t(nu))||."""
    from .shearflow import truncate

    seqs = schedule.sequences
    q = seqs.truncation_index(nu)
    k = gronwall_level(seqs, q)
    t_of = 1.0 - seqs.T[k]
    if theta0_traj is None or t_of not in theta0_traj.fields:
        theta0_traj = solve(schedule, 0.0, n, snapshot_times=(t_of,))
    ref = {t_of: theta0_traj.fields[t_of]}
    traj = solve(truncate(schedule, q), nu, n, dt_policy=dt_policy, gap_reference=ref)
    return VanishingGap(nu=nu, q_trunc=q, k_level=k, t_of_nu=t_of, gap_l2=traj.gaps[t_of])
