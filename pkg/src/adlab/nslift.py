"""Lift of the planar shear/scalar pair to a forced 3d Navier-Stokes solution.

A solution of the scalar problem rides along as the third velocity component:
v = (u1, u2, theta) with u = (u1, u2) the alternating shear and everything
independent of x3.  Then v . grad v has vanishing first two components (a
shear never advects itself), theta is exactly the passive scalar, and with
pressure identically zero v solves Navier-Stokes with the body force

    F = (d_t u - nu Lap u, 0),

which is evaluated in closed form from the stage envelopes: on an active
stage F = A (chi'(t) + 4 pi^2 freq^2 nu chi(t)) sin(2 pi (freq y + phase))
along the shear direction, zero elsewhere.  Nothing is ever materialized on
a 3d grid: all fields live on the 2d torus with a symbolic third dimension.

The energy bookkeeping splits accordingly: the u-part of the dissipation and
of the force work are closed-form stage sums, the theta-part comes from the
solver's exact per-step increments, and the two balance independently (the
force work on a full stage window exactly replenishes what the shear
dissipates, since u returns to zero after every stage).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import norms, scalarsolver
from .scalarsolver import Trajectory
from .shearflow import sample_velocity

TWO_PI = 2.0 * math.pi
_PROFILE_SAMPLES = 4096


class LiftError(ValueError):
    """Raised when (field, trajectory, nu) do not belong together."""


@dataclass(frozen=True)
class LiftedForce:
    """F = (d_t u - nu Lap u, 0), analytic in time and space."""

    field: object
    nu: float

    def _g(self, t: float, stage) -> float:
        chi_prime = float(stage.envelope.derivative(t, 1))
        chi = float(stage.envelope.value(t))
        return stage.amplitude * (
            chi_prime + 4.0 * math.pi**2 * stage.freq**2 * self.nu * chi
        )

    def magnitude(self, t: float) -> float:
        """|coefficient of the active profile|; 0 in gaps."""
        stage = self.field.active_stage(t)
        return abs(self._g(t, stage)) if stage is not None else 0.0

    def components(self, t: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        """(F1, F2) sampled on the grid; the third component is zero."""
        stage = self.field.active_stage(t)
        zero = np.zeros((n, n))
        if stage is None:
            return zero, zero.copy()
        profile = self._g(t, stage) * stage.profile(n)
        if stage.direction == "h":
            return np.broadcast_to(profile[None, :], (n, n)).copy(), zero
        return zero, np.broadcast_to(profile[:, None], (n, n)).copy()

    def slice_csigma(self, t: float, sigma: float) -> float:
        """||F(t)||_{C^sigma}: analytic sup |g| plus the sine profile seminorm."""
        stage = self.field.active_stage(t)
        if stage is None:
            return 0.0
        return abs(self._g(t, stage)) * (1.0 + norms.sine_holder(stage.freq, sigma))

    def slice_holder(self, t: float, alpha: float) -> float:
        stage = self.field.active_stage(t)
        if stage is None:
            return 0.0
        return abs(self._g(t, stage)) * norms.sine_holder(stage.freq, alpha)

    def profile_diff_sup(self, t: float, s: float) -> float:
        """sup_x |F(t,x) - F(s,x)|, exact for the 1d profile structure."""
        st_t = self.field.active_stage(t)
        st_s = self.field.active_stage(s)
        if st_t is None and st_s is None:
            return 0.0
        if st_s is None:
            return abs(self._g(t, st_t))
        if st_t is None:
            return abs(self._g(s, st_s))
        g_t, g_s = self._g(t, st_t), self._g(s, st_s)
        if st_t is st_s:
            return abs(g_t - g_s)
        if st_t.direction != st_s.direction:
            return max(abs(g_t), abs(g_s))
        y = np.arange(_PROFILE_SAMPLES) / _PROFILE_SAMPLES
        p_t = np.sin(TWO_PI * (st_t.freq * y + st_t.phase))
        p_s = np.sin(TWO_PI * (st_s.freq * y + st_s.phase))
        return float(np.max(np.abs(g_t * p_t - g_s * p_s)))

    def quadrature_times(self, per_stage: int = 33) -> np.ndarray:
        """Stage-aligned time grid dense enough for the envelope ramps."""
        times = {0.0, 2.0}
        for st in self.field.stages:
            times.update(np.linspace(st.t0, st.t1, per_stage).tolist())
        return np.unique(sorted(times))


@dataclass(frozen=True)
class LiftedSolution:
    """v = (u1, u2, theta) with p = 0; u carried analytically, theta gridded."""

    u_field: object
    trajectory: Trajectory
    nu: float

    def sup_norm(self) -> float:
        """||v||_inf as the componentwise max: shears peak at |amplitude|."""
        u_sup = max((abs(st.amplitude) for st in self.u_field.stages), default=0.0)
        return max(u_sup, float(np.max(self.trajectory.linf)))

    def velocity_at(self, t: float, n: int) -> tuple[np.ndarray, np.ndarray]:
        direction, w = sample_velocity(self.u_field, t, n)
        zero = np.zeros((n, n))
        if direction is None:
            return zero, zero.copy()
        if direction == "h":
            return np.broadcast_to(w[None, :], (n, n)).copy(), zero
        return zero, np.broadcast_to(w[:, None], (n, n)).copy()

    def theta_at(self, t: float) -> np.ndarray:
        try:
            return self.trajectory.fields[t]
        except KeyError:
            raise LiftError(f"trajectory holds no snapshot at t = {t}") from None

    def divergence_sup(self, t: float, n: int) -> float:
        """Spectral 3d divergence on the grid (x3 derivative is zero)."""
        u1, u2 = self.velocity_at(t, n)
        g1x, _ = norms.gradient_fields(u1)
        _, g2y = norms.gradient_fields(u2)
        return float(np.max(np.abs(g1x + g2y)))


def lift(u_field, trajectory: Trajectory, nu: float) -> LiftedSolution:
    """Assemble v = (u, theta); validates that the pieces belong together."""
    if trajectory.nu != nu:
        raise LiftError(f"trajectory was solved at nu = {trajectory.nu}, not {nu}")
    q_traj = trajectory.meta.get("q_cut")
    q_field = getattr(u_field, "q_cut", None)
    if q_traj != q_field:
        raise LiftError(f"trajectory truncation {q_traj} != field truncation {q_field}")
    return LiftedSolution(u_field=u_field, trajectory=trajectory, nu=nu)


def force(u_field, nu: float) -> LiftedForce:
    return LiftedForce(field=u_field, nu=nu)


@dataclass(frozen=True)
class Dissipation3D:
    total: float
    theta_part: float
    u_part: float
    t_hi: float


def dissipation_3d(lifted: LiftedSolution, t_hi: float = 2.0) -> Dissipation3D:
    """nu int_0^t_hi ||grad v||^2: closed-form u-part plus the solver theta-part.

    The u-part of ||grad v||^2 is A^2 chi^2 (2 pi freq)^2 / 2 per active
    stage; the theta-part halves the trajectory's energy-unit increments
    (which carry the factor 2 nu).
    """
    u_part = dissipation_3d_u_part(lifted, t_hi)
    theta_part = 0.5 * lifted.trajectory.dissipation_at(t_hi)
    total = u_part + theta_part
    if total < theta_part:
        raise AssertionError("u-part of the dissipation came out negative")
    return Dissipation3D(total=total, theta_part=theta_part, u_part=u_part, t_hi=t_hi)


def _u_energy(u_field, t: float) -> float:
    """||u(t)||^2_{L^2} = A^2 chi(t)^2 / 2 on the active stage, 0 in gaps."""
    stage = u_field.active_stage(t)
    if stage is None:
        return 0.0
    return stage.amplitude**2 * float(stage.envelope.value(t)) ** 2 / 2.0


def _u_work(u_field, nu: float, t: float) -> float:
    """int_0^t <F, v> dx dt in closed form (F acts on u only)."""
    total = 0.0
    for st in u_field.stages:
        if st.t0 >= t:
            continue
        s = min(t, st.t1)
        chi_s = float(st.envelope.value(s))
        sq = st.envelope.integral_of_square(st.t0, s)
        a2 = st.amplitude**2
        total += a2 * chi_s**2 / 4.0 + a2 * 2.0 * math.pi**2 * st.freq**2 * nu * sq
    return total


def admissibility_residual(lifted: LiftedSolution) -> float:
    """Max checkpoint residual of ||v(t)||^2 + 2 nu int ||grad v||^2 =
    ||v_in||^2 + 2 int <F, v>, relative to the initial energy."""
    traj = lifted.trajectory
    u_field, nu = lifted.u_field, lifted.nu
    e0 = traj.initial_l2**2 + _u_energy(u_field, float(traj.times[0]))
    worst = 0.0
    for i, t in enumerate(traj.times):
        t = float(t)
        energy = traj.l2[i] ** 2 + _u_energy(u_field, t)
        diss = traj.cum_diss[i] + 2.0 * dissipation_3d_u_part(lifted, t)
        work = _u_work(u_field, nu, t)
        worst = max(worst, abs(energy + diss - e0 - 2.0 * work) / e0)
    return worst


def dissipation_3d_u_part(lifted: LiftedSolution, t_hi: float) -> float:
    nu = lifted.nu
    u_part = 0.0
    for st in lifted.u_field.stages:
        if st.t0 >= t_hi:
            continue
        sq = st.envelope.integral_of_square(st.t0, min(t_hi, st.t1))
        u_part += nu * st.amplitude**2 * (TWO_PI * st.freq) ** 2 * 0.5 * sq
    return u_part


def _advective_term(theta: np.ndarray, u_field, t: float) -> np.ndarray:
    """u . grad theta, spectral in the advected direction."""
    n = theta.shape[0]
    direction, w = sample_velocity(u_field, t, n)
    if direction is None:
        return np.zeros((n, n))
    gx, gy = norms.gradient_fields(theta)
    if direction == "h":
        return w[None, :] * gx
    return w[:, None] * gy


def _laplacian(theta: np.ndarray) -> np.ndarray:
    n = theta.shape[0]
    k_sq, _ = scalarsolver._spectral_grids(n)
    return np.fft.irfft2(np.fft.rfft2(theta) * (-4.0 * math.pi**2) * k_sq, s=(n, n))


def ns_residual(
    u_field,
    nu: float,
    n: int,
    sample_times: Optional[tuple] = None,
    h: Optional[float] = None,
    n_sample: int = 1000,
    seed: int = 7,
    dt_policy: Optional[scalarsolver.DtPolicy] = None,
) -> dict:
    """Pointwise residual of the momentum equations for the lifted solution.

    Components 1-2: d_t u - nu Lap u - F vanishes identically (the force is
    the defect), so what is measured is the spectrally evaluated
    self-advection u . grad u, which must sit at the round-off floor.
    Component 3: centered difference (theta(t+h) - theta(t-h)) / 2h plus
    u . grad theta - nu Lap theta at n_sample seeded random grid points;
    second-order in h, so halving h must shrink it about fourfold.
    """
    stages = [st for st in u_field.stages if st.t1 <= 1.0]
    if sample_times is None:
        sample_times = tuple(
            0.5 * (st.t0 + st.t1) for st in stages[: min(3, len(stages))]
        )
    if h is None:
        h = min(st.t1 - st.t0 for st in u_field.stages) / 32.0

    snap_times = []
    for t in sample_times:
        snap_times += [t - h, t, t + h]
    traj = scalarsolver.solve(
        u_field, nu, n, snapshot_times=tuple(snap_times), dt_policy=dt_policy
    )

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_sample, 2))
    comp12 = 0.0
    comp3_abs = 0.0
    rate_scale = 0.0
    for t in sample_times:
        direction, w = sample_velocity(u_field, t, n)
        if direction is not None:
            u1 = (
                np.broadcast_to(w[None, :], (n, n))
                if direction == "h"
                else np.broadcast_to(w[:, None], (n, n))
            )
            adv_u = _advective_term(u1, u_field, t)
            comp12 = max(comp12, float(np.max(np.abs(adv_u))))
        dtheta = (traj.fields[t + h] - traj.fields[t - h]) / (2.0 * h)
        residual = dtheta + _advective_term(traj.fields[t], u_field, t)
        if nu > 0.0:
            residual -= nu * _laplacian(traj.fields[t])
        comp3_abs = max(comp3_abs, float(np.max(np.abs(residual[idx[:, 0], idx[:, 1]]))))
        rate_scale = max(rate_scale, float(np.max(np.abs(dtheta))))
    return {
        "components_12_sup": comp12,
        "component_3_sup": comp3_abs,
        "component_3_relative": comp3_abs / rate_scale if rate_scale > 0 else 0.0,
        "h": h,
        "n": n,
        "nu": nu,
        "sample_times": tuple(float(t) for t in sample_times),
        "n_sample": int(n_sample),
    }
