"""Alternating-shear velocity schedule on the 2-torus.

At every time the field is a single shear, horizontal u = (W(t, x2), 0) or
vertical u = (0, W(t, x1)), with profile

    W(t, y) = amplitude * chi(t) * sin(2 pi (freq y + phase)),

so u is divergence-free by structure and the self-advection u . grad u
vanishes identically.  Level q runs one vertical then one horizontal stage
inside I_q = [1 - T_q, 1 - T_{q+1}], each with frequency lambda_{q+1}
(rounded to an integer so the profile is exactly periodic on the grid) and
amplitude amp_scale * a_q^(1-gamma).  The interval J_q = [1 + T_{q+1},
1 + T_q] carries time-mirrored stages with the opposite sign, enforcing the
odd reflection u(t, x) = -u(2 - t, x) exactly.

Stage windows are sized by a stirring budget rather than fixed fractions of
I_q: a stage whose displacement amplitude is D winds a scalar wavenumber k
through a phase angle z = 2 pi k D, and variance leaves that wavenumber at
rate 1 - J_0(z)^2 (Jacobi-Anger), so each stage's window is chosen to realize
a target angle z_q = z0 * z_growth^q against the wavenumber the scalar is
expected to carry when the stage begins.  The resulting time grid T_q
replaces the tail-sum default from the cascade module; both satisfy the
increment cap |T_q - T_{q+1}| <= 4 a_q^(gamma - gamma delta).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cascade import ScaleSequences
from .envelope import RAMP_FRACTION, Envelope, mirror
from .logspace import LogVal

_GOLDEN = 0.6180339887498949


class ScheduleError(ValueError):
    """Stage windows cannot fit under the support and increment budgets."""


@dataclass(frozen=True)
class TimeBudget:
    """Stirring-budget knobs for stage window sizing."""

    z0: float = 1.55
    z_growth: float = 1.12
    gap_fraction: float = 0.05
    tail_ratio: float = 0.4
    amp_scale: Optional[float] = None  # None selects a0^-(1-gamma), sup|u| = 1
    t0_cap: float = 0.97
    initial_k: int = 1


@dataclass(frozen=True)
class ShearStage:
    """One shear burst; direction 'h' means u = (W(x2), 0), 'v' u = (0, W(x1))."""

    q: int
    direction: str
    amplitude: float
    freq: int
    phase: float
    envelope: Envelope
    target_k: int

    @property
    def t0(self) -> float:
        return self.envelope.t0

    @property
    def t1(self) -> float:
        return self.envelope.t1

    def profile(self, n: int) -> np.ndarray:
        """The unit-amplitude spatial profile sampled on n grid points."""
        y = np.arange(n) / n
        return np.sin(2.0 * np.pi * (self.freq * y + self.phase))

    def velocity_profile(self, t: float, n: int) -> np.ndarray:
        return self.amplitude * float(self.envelope.value(t)) * self.profile(n)

    def displacement(self, ta: float, tb: float) -> float:
        """Translation distance accumulated over [ta, tb] (signed)."""
        return self.amplitude * self.envelope.integral(ta, tb)

    def sup_derivative(self, k: int, ell: int) -> float:
        """sup over the stage of |d_t^ell grad^k u| from the closed form."""
        return (
            abs(self.amplitude)
            * self.envelope.derivative_sup(ell)
            * (2.0 * math.pi * self.freq) ** k
        )


@dataclass(frozen=True)
class ShearSchedule:
    stages: tuple
    sequences: ScaleSequences
    levels: int
    amp_scale: float
    budget: TimeBudget

    def __post_init__(self):
        starts = [st.t0 for st in self.stages]
        if starts != sorted(starts):
            raise AssertionError("stages must be ordered by start time")

    @property
    def _starts(self) -> list:
        return [st.t0 for st in self.stages]

    def active_stage(self, t: float):
        """The stage whose support window contains t, or None."""
        i = bisect.bisect_right(self._starts, t) - 1
        if i >= 0 and t <= self.stages[i].t1:
            return self.stages[i]
        return None

    def stages_in(self, ta: float, tb: float) -> tuple:
        return tuple(st for st in self.stages if st.t0 >= ta and st.t1 <= tb)

    def max_freq(self) -> int:
        return max((st.freq for st in self.stages), default=1)


@dataclass(frozen=True)
class TruncatedField:
    """u_q = u restricted to K_q = [0, 1 - T_q] union [1 + T_q, 2]."""

    schedule: ShearSchedule
    q_cut: int

    @property
    def sequences(self) -> ScaleSequences:
        return self.schedule.sequences

    @property
    def k_lo(self) -> float:
        return 1.0 - self.sequences.T[self.q_cut]

    @property
    def k_hi(self) -> float:
        return 1.0 + self.sequences.T[self.q_cut]

    @property
    def stages(self) -> tuple:
        lo, hi = self.k_lo, self.k_hi
        return tuple(st for st in self.schedule.stages if st.t1 <= lo or st.t0 >= hi)

    @property
    def levels(self) -> int:
        return min(self.schedule.levels, self.q_cut)

    def active_stage(self, t: float):
        st = self.schedule.active_stage(t)
        if st is not None and (st.t1 <= self.k_lo or st.t0 >= self.k_hi):
            return st
        return None

    def max_freq(self) -> int:
        return max((st.freq for st in self.stages), default=1)

    def sup_gap(self) -> float:
        """sup |u - u_q| = the largest amplitude among removed stages."""
        removed = set(self.schedule.stages) - set(self.stages)
        return max((abs(st.amplitude) for st in removed), default=0.0)


def build_schedule(
    sequences: ScaleSequences,
    budget: Optional[TimeBudget] = None,
    levels: Optional[int] = None,
) -> ShearSchedule:
    """Plan stage windows from the stirring budget and mirror them into J."""
    budget = budget or TimeBudget()
    params = sequences.params
    Q = params.Q
    levels = Q if levels is None else levels
    if not 1 <= levels <= Q:
        raise ValueError(f"levels must lie in 1..Q={Q}, got {levels}")

    gamma = params.gamma
    amp_scale = budget.amp_scale
    if amp_scale is None:
        amp_scale = sequences.a[0].pow(-(1.0 - gamma)).to_float()

    mass_frac = 1.0 - RAMP_FRACTION
    plans = []  # per level: (freq, [(direction, target_k, amplitude, width)])
    deltas = []
    # Horizontal windows follow the a_q^gamma scaling of the regularity
    # contract (constant window in contract units), with the amplitude backed
    # out of the displacement target; vertical windows pin the amplitude at
    # the contract ceiling a_q^(1-gamma) instead.  Either stage alone would
    # satisfy the sup bounds; splitting the roles keeps the worst-case norm
    # ratio from creeping upward with q.
    w_h0 = None
    for q in range(levels):
        amp = amp_scale * sequences.a[q].pow(1.0 - gamma).to_float()
        a_gam = sequences.a[q].pow(gamma).to_float()
        freq = sequences.lam_int(q + 1)
        k_v = budget.initial_k if q == 0 else sequences.lam_int(q)
        k_h = sequences.lam_int(q + 1)
        z_q = budget.z0 * budget.z_growth**q
        w_v = z_q / (2.0 * math.pi * k_v * mass_frac * amp)
        if w_h0 is None:
            w_h = z_q / (2.0 * math.pi * k_h * mass_frac * amp)
            w_h0 = w_h / a_gam
            amp_h = amp
        else:
            w_h = w_h0 * a_gam
            amp_h = z_q / (2.0 * math.pi * k_h * mass_frac * w_h)
            if amp_h > amp * (1.0 + 1e-12):
                raise ScheduleError(
                    f"level {q}: horizontal amplitude {amp_h:.4g} would exceed "
                    f"the contract ceiling {amp:.4g}"
                )
            amp_h = min(amp_h, amp)
        roles = [("v", k_v, amp, w_v), ("h", k_h, amp_h, w_h)]
        widths = [w_v, w_h]
        delta_q = sum(widths) / (1.0 - 3.0 * budget.gap_fraction)
        cap = sequences.time_increment_cap(q)
        if delta_q > cap:
            raise ScheduleError(
                f"level {q}: window budget {delta_q:.4g} exceeds the "
                f"time-increment cap 4 a_q^(gamma-gamma delta) = {cap:.4g}"
            )
        support = 2.0 * sum(widths)
        limit = 6.0 * a_gam
        if support > limit:
            raise ScheduleError(
                f"level {q}: stage support {support:.4g} exceeds 6 a_q^gamma = {limit:.4g}"
            )
        plans.append((freq, roles))
        deltas.append(delta_q)

    # tail increments keep T_q strictly decreasing past the deepest stage level
    for q in range(levels, Q):
        deltas.append(deltas[-1] * budget.tail_ratio)
    T = [0.0] * (Q + 1)
    T[Q] = deltas[-1] * budget.tail_ratio / (1.0 - budget.tail_ratio)
    for q in range(Q - 1, -1, -1):
        T[q] = T[q + 1] + deltas[q]
    if T[0] > budget.t0_cap:
        raise ScheduleError(
            f"T_0 = {T[0]:.4g} exceeds {budget.t0_cap}; reduce z0, z_growth, or levels"
        )
    sequences = sequences.with_times(tuple(T))

    stages = []
    counter = 0
    for q in range(levels):
        freq, roles = plans[q]
        gap = budget.gap_fraction * deltas[q]
        t = 1.0 - T[q]
        for direction, target_k, amp, w in roles:
            t += gap
            env = Envelope(t, t + w)
            stages.append(
                ShearStage(
                    q=q,
                    direction=direction,
                    amplitude=amp,
                    freq=freq,
                    phase=math.fmod(_GOLDEN * (counter + 1), 1.0),
                    envelope=env,
                    target_k=target_k,
                )
            )
            counter += 1
            t += w
    mirrored = [
        ShearStage(
            q=st.q,
            direction=st.direction,
            amplitude=-st.amplitude,
            freq=st.freq,
            phase=st.phase,
            envelope=mirror(st.envelope),
            target_k=st.target_k,
        )
        for st in stages
    ]
    all_stages = tuple(sorted(stages + mirrored, key=lambda s: s.t0))
    return ShearSchedule(
        stages=all_stages,
        sequences=sequences,
        levels=levels,
        amp_scale=amp_scale,
        budget=budget,
    )


def sample_velocity(field, t: float, n: int):
    """(direction, W(t, .) on n points); (None, zeros) when no stage is active."""
    stage = field.active_stage(t)
    if stage is None:
        return None, np.zeros(n)
    return stage.direction, stage.velocity_profile(t, n)


def support_measure(schedule: ShearSchedule, q: int) -> float:
    """|supp_T(u) cap (I_q union J_q)|, exact since windows are disjoint."""
    return sum(st.t1 - st.t0 for st in schedule.stages if st.q == q)


@dataclass(frozen=True)
class RegularityTable:
    q: int
    ratios: dict
    c_star: float


def verify_regularity(
    schedule: ShearSchedule, q: int, k_max: int = 4, l_max: int = 4
) -> RegularityTable:
    """Measured sup-norm ratios against a_q^(1-gamma) a_{q+1}^(-k(1+eps delta)) a_q^(-ell gamma).

    Derivatives come from the closed-form profile (envelope derivatives are
    symbolic), never from differencing.
    """
    if not (0 <= k_max <= 4 and 0 <= l_max <= 4):
        raise ValueError("k_max and l_max must lie in 0..4")
    params = schedule.sequences.params
    gamma, eps, delta = params.gamma, params.epsilon, params.delta
    a_q = schedule.sequences.a[q]
    a_q1 = schedule.sequences.a[q + 1]
    level_stages = [st for st in schedule.stages if st.q == q]
    ratios = {}
    for k in range(k_max + 1):
        for ell in range(l_max + 1):
            denom = (
                a_q.pow(1.0 - gamma)
                * a_q1.pow(-k * (1.0 + eps * delta))
                * a_q.pow(-ell * gamma)
            )
            sup = max((st.sup_derivative(k, ell) for st in level_stages), default=0.0)
            if sup == 0.0:
                ratios[(k, ell)] = 0.0
            else:
                ratios[(k, ell)] = (LogVal.of(sup) / denom).to_float()
    return RegularityTable(q=q, ratios=ratios, c_star=max(ratios.values()))


def truncate(schedule: ShearSchedule, q: int) -> TruncatedField:
    """u_q(t, x) = u(t, x) 1_{K_q}(t); smooth because windows avoid the cut."""
    if not 0 <= q <= schedule.sequences.Q:
        raise ValueError(f"truncation level must lie in 0..Q, got {q}")
    lo = 1.0 - schedule.sequences.T[q]
    hi = 1.0 + schedule.sequences.T[q]
    for st in schedule.stages:
        if st.t0 < lo < st.t1 or st.t0 < hi < st.t1:
            raise AssertionError(f"stage {st} straddles the K_{q} boundary")
    return TruncatedField(schedule=schedule, q_cut=q)


def stage_boundaries(field) -> list:
    """Sorted stage window endpoints of a schedule or truncated field."""
    times = set()
    for st in field.stages:
        times.add(st.t0)
        times.add(st.t1)
    return sorted(times)
