"""Parameter hierarchy for the alternating-shear cascade.

Spatial scales follow the super-geometric recursion a_{q+1} = a_q^(1+delta)
with frequencies lambda_q = 1/(2 a_q).  The bookkeeping exponent

    gamma = 3 beta (1 + 3 eps (1+delta)) (1+delta) / (1-delta) + delta/8

ties the velocity amplitude a_q^(1-gamma) to the time the cascade is allowed
to spend at level q, and three smallness conditions (kappa positivity,
gamma < 1, eps <= delta^3/50) keep the whole ladder consistent.  The
remaining condition a0^(eps delta^2) + a0^(eps delta/8) <= 1/20 demands an
astronomically small a0; desk-scale parameter sets violate it on purpose and
carry a `truncated_regime` flag, under which only trends and identities (not
absolute dissipation constants) are asserted downstream.

Two viscosity ladders interleave with the reference ladder
nu_tilde_q = a_q^(2 - gamma/(1+delta) + 4 eps):

    nu_cons_A_q = a_q^(2 - gamma + delta + 8 eps)   (general beta)
    nu_cons_C_q = a_q^(2 + 3 eps)                   (beta = 0 variant)

with nu_tilde_{q+1} < nu_cons_A_q <= nu_tilde_q for every q.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from scipy.optimize import brentq

from .logspace import LogVal

#: slack below which a strict inequality is reported as failing
_STRICT = 0.0


def compute_gamma(beta: float, epsilon: float, delta: float) -> float:
    """gamma = 3 beta (1+3 eps(1+delta))(1+delta)/(1-delta) + delta/8."""
    if not 0.0 <= beta < 1.0 / 3.0:
        raise ValueError(f"beta must lie in [0, 1/3), got {beta}")
    if not 0.0 < epsilon <= 0.25:
        raise ValueError(f"epsilon must lie in (0, 1/4], got {epsilon}")
    if not 0.0 < delta <= 0.25:
        raise ValueError(f"delta must lie in (0, 1/4], got {delta}")
    return (
        3.0 * beta * (1.0 + 3.0 * epsilon * (1.0 + delta)) * (1.0 + delta)
        / (1.0 - delta)
        + delta / 8.0
    )


@dataclass(frozen=True)
class ConditionReport:
    """Per-inequality slack values; a slack >= 0 (or > 0 where strict) passes."""

    slacks: dict
    passes: bool
    truncated_regime: bool

    def __str__(self) -> str:
        lines = [f"{name:>18s}: slack = {val:+.6g}" for name, val in self.slacks.items()]
        lines.append(f"overall pass: {self.passes}  truncated_regime: {self.truncated_regime}")
        return "\n".join(lines)


def check_conditions(
    alpha: float, beta: float, epsilon: float, delta: float, a0: float
) -> ConditionReport:
    """Report the slack of every parameter inequality; never raises."""
    one_pd = 1.0 + delta
    gamma = 3.0 * beta * (1.0 + 3.0 * epsilon * one_pd) * one_pd / (1.0 - delta) + delta / 8.0
    slacks = {
        "alpha_plus_two_beta": 1.0 - (alpha + 2.0 * beta),
        "kappa_positive": (
            1.0
            - 2.0 * beta * (1.0 + 3.0 * epsilon * one_pd) * one_pd / (1.0 - delta)
            - alpha * (1.0 + epsilon * delta) * one_pd
            - delta / 8.0
        ),
        "gamma_below_one": 1.0 - gamma,
        "epsilon_cap": delta**3 / 50.0 - epsilon,
        "a0_small": 1.0 / 20.0 - (a0 ** (epsilon * delta**2) + a0 ** (epsilon * delta / 8.0)),
    }
    core = (
        slacks["alpha_plus_two_beta"] > _STRICT
        and slacks["kappa_positive"] > _STRICT
        and slacks["gamma_below_one"] > _STRICT
        and slacks["epsilon_cap"] >= 0.0
    )
    a0_ok = slacks["a0_small"] >= 0.0
    return ConditionReport(
        slacks=slacks,
        passes=core and a0_ok,
        truncated_regime=core and not a0_ok,
    )


def select_sigma(gamma: float, delta: float, epsilon: float) -> float:
    """Midpoint of the admissible window for the small exponent sigma.

    Two constraints bound sigma from above; both are strictly positive at
    sigma = 0 and strictly decreasing, so each has a single root found by
    bisection.  The chosen sigma is half the smaller root.
    """
    ed = 1.0 + epsilon * delta
    pd = 1.0 + delta

    def f1(s: float) -> float:
        return gamma + (1.0 + s) * (1.0 - 2.0 * gamma - s * pd * ed)

    def f2(s: float) -> float:
        return 2.0 + 2.0 * delta - (1.0 + s) * (1.0 + 2.0 * delta + gamma + s * ed * pd)

    roots = []
    for f in (f1, f2):
        hi = 1.0
        while f(hi) > 0.0:
            hi *= 2.0
        roots.append(brentq(f, 0.0, hi, xtol=1e-14))
    return 0.5 * min(roots)


@dataclass(frozen=True)
class CascadeParams:
    """The full exponent set plus the derived gamma and sigma."""

    alpha: float
    beta: float
    epsilon: float
    delta: float
    a0: float
    Q: int
    gamma: float
    sigma: float
    conditions: ConditionReport

    @classmethod
    def create(
        cls,
        alpha: float,
        beta: float,
        epsilon: float,
        delta: float,
        a0: float,
        Q: int,
        sigma: Optional[float] = None,
    ) -> "CascadeParams":
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
        if not 0.0 < a0 < 1.0:
            raise ValueError(f"a0 must lie in (0, 1), got {a0}")
        if Q < 1:
            raise ValueError(f"cascade depth Q must be >= 1, got {Q}")
        gamma = compute_gamma(beta, epsilon, delta)
        report = check_conditions(alpha, beta, epsilon, delta, a0)
        if not (report.passes or report.truncated_regime):
            failing = [k for k, v in report.slacks.items() if v < 0 or (v == 0 and k != "epsilon_cap")]
            raise ValueError(f"parameter conditions failed: {failing}")
        if sigma is None:
            sigma = select_sigma(gamma, delta, epsilon)
        elif sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        return cls(alpha, beta, epsilon, delta, a0, Q, gamma, sigma, report)

    @property
    def truncated_regime(self) -> bool:
        return self.conditions.truncated_regime


def scale_ladder(a0: float, delta: float, Q: int) -> tuple[list[LogVal], list[LogVal]]:
    """Raw geometric ladder a_{q+1} = a_q^(1+delta), lambda_q = 1/(2 a_q).

    No validity conditions are applied; this exists for geometry-only use
    (including delta outside the admissible range).
    """
    if not 0.0 < a0 < 1.0:
        raise ValueError(f"a0 must lie in (0, 1), got {a0}")
    a = [LogVal.of(a0)]
    for _ in range(Q):
        a.append(a[-1].pow(1.0 + delta))
    half = LogVal.of(0.5)
    lam = [half / aq for aq in a]
    return a, lam


@dataclass(frozen=True)
class ScaleSequences:
    """All derived sequences for q = 0..Q, scale-like entries in log space."""

    params: CascadeParams
    a: tuple
    lam: tuple
    T: tuple  # T_0..T_Q as floats; T_{-1} = 1 by convention
    nu_tilde: tuple
    nu_cons_A: tuple
    nu_cons_C: tuple

    @property
    def Q(self) -> int:
        return self.params.Q

    def a_float(self, q: int) -> float:
        return self.a[q].to_float()

    def lam_float(self, q: int) -> float:
        return self.lam[q].to_float()

    def lam_int(self, q: int) -> int:
        """Profile frequency rounded to the nearest positive integer."""
        return max(1, round(self.lam[q].to_float()))

    def nu_tilde_float(self, q: int) -> float:
        return self.nu_tilde[q].to_float()

    def time_increment_cap(self, q: int) -> float:
        """4 a_q^(gamma - gamma delta), the bound on |T_q - T_{q+1}|."""
        g = self.params.gamma
        return 4.0 * self.a[q].pow(g * (1.0 - self.params.delta)).to_float()

    def truncation_index(self, nu: float) -> int:
        """Largest q with nu <= nu_tilde_q (0 if nu exceeds nu_tilde_0)."""
        if nu <= 0.0:
            return self.Q
        q = 0
        for j in range(self.Q + 1):
            if LogVal.of(nu) <= self.nu_tilde[j]:
                q = j
        return q

    def with_times(self, T: tuple) -> "ScaleSequences":
        return replace(self, T=tuple(T))


def _tail_sum_times(params: CascadeParams, a: list[LogVal]) -> tuple:
    """T_q from normalized tail sums of the increment caps 4 a_j^(g - g d)."""
    g, d = params.gamma, params.delta
    caps = [4.0 * aq.pow(g * (1.0 - d)).to_float() for aq in a]
    tails = [sum(caps[q:]) for q in range(len(a))]
    scale = 0.97 / tails[0]
    return tuple(t * scale for t in tails)


def build_sequences(params: CascadeParams) -> ScaleSequences:
    """Populate every sequence for q = 0..Q and assert interleaving.

    The returned T follows the tail-sum schedule; schedule construction may
    replace it with a stirring-budget grid via `ScaleSequences.with_times`
    (both satisfy the increment cap).
    """
    a, lam = scale_ladder(params.a0, params.delta, params.Q)
    g, d, e = params.gamma, params.delta, params.epsilon
    nu_tilde = tuple(aq.pow(2.0 - g / (1.0 + d) + 4.0 * e) for aq in a)
    nu_cons_A = tuple(aq.pow(2.0 - g + d + 8.0 * e) for aq in a)
    nu_cons_C = tuple(aq.pow(2.0 + 3.0 * e) for aq in a)
    for q in range(params.Q):
        if not (nu_tilde[q + 1] < nu_cons_A[q] <= nu_tilde[q]):
            raise AssertionError(
                f"viscosity interleaving violated at q={q}: "
                f"{nu_tilde[q + 1].ln} !< {nu_cons_A[q].ln} !<= {nu_tilde[q].ln}"
            )
    T = _tail_sum_times(params, a)
    return ScaleSequences(
        params=params,
        a=tuple(a),
        lam=tuple(lam),
        T=T,
        nu_tilde=nu_tilde,
        nu_cons_A=nu_cons_A,
        nu_cons_C=nu_cons_C,
    )


def sequence_table_csv(seqs: ScaleSequences) -> str:
    """The sequence table as CSV, float and log10 columns side by side."""
    out = io.StringIO()
    out.write(
        "q,a_q,lambda_q,T_q,nu_tilde_q,nu_cons_A_q,nu_cons_C_q,"
        "log10_a_q,log10_nu_tilde_q,log10_nu_cons_A_q,log10_nu_cons_C_q\n"
    )
    for q in range(seqs.Q + 1):
        vals = [seqs.a[q], seqs.lam[q], None, seqs.nu_tilde[q], seqs.nu_cons_A[q], seqs.nu_cons_C[q]]
        floats = []
        for v in vals:
            if v is None:
                floats.append(repr(seqs.T[q]))
            else:
                floats.append(repr(v.to_float(strict=False)) if v.representable else "underflow")
        logs = [
            repr(x.log10)
            for x in (seqs.a[q], seqs.nu_tilde[q], seqs.nu_cons_A[q], seqs.nu_cons_C[q])
        ]
        out.write(f"{q}," + ",".join(floats) + "," + ",".join(logs) + "\n")
    return out.getvalue()
