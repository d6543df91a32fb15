"""Norms, decay-rate fitting, limit estimation and empirical lemma audits.

Everything here consumes immutable fields or trajectories.  Quadrature
weights are uniform (the collocation grid is a midpoint rule), Hoelder
seminorms are pairwise suprema over the grid, and the audits report
empirical constants rather than proving anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import quad

from .coefficients import SystemParams
from .spectral import (
    DomainSpec,
    GridField,
    OperatorSpec,
    apply_fractional,
    derivative,
    least_positive_eigenvalue,
    random_nonneg_field,
)

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .solver import Trajectory

__all__ = [
    "lp_norm",
    "holder_norm",
    "fit_decay_rate",
    "DecayEntry",
    "DecayReport",
    "build_decay_report",
    "VInfinityEstimate",
    "v_infinity",
    "mass_balance_residual",
    "InterpolationAuditReport",
    "interpolation_audit",
    "SingularIntegralAudit",
    "singular_integral_audit",
    "BetaKernelAudit",
    "beta_kernel_audit",
]


def lp_norm(f: GridField, p: float) -> float:
    """L^p norm by uniform-weight quadrature; sup norm for p = inf."""
    if math.isinf(p):
        return float(np.max(np.abs(f.values)))
    if p < 1.0:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    weight = f.domain.volume / f.domain.node_count
    return float((weight * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


_distance_cache: dict[tuple[DomainSpec, float], np.ndarray] = {}
_DIST_CACHE_LIMIT = 8


def _distance_powers(domain: DomainSpec, gamma: float) -> np.ndarray:
    """|x_i - x_j|^gamma over all node pairs, diagonal set to inf."""
    key = (domain, gamma)
    cached = _distance_cache.get(key)
    if cached is not None:
        return cached
    pos = domain.node_coordinates()
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(dist, np.inf)
    out = dist**gamma
    if len(_distance_cache) >= _DIST_CACHE_LIMIT:
        _distance_cache.clear()
    _distance_cache[key] = out
    return out


def _pair_seminorm(domain: DomainSpec, values: np.ndarray, gamma: float) -> float:
    """sup over distinct node pairs of |D(x) - D(y)| / |x - y|^gamma.

    ``values`` is (n_nodes,) for scalar data or (n_nodes, dim) for gradients.
    """
    denom = _distance_powers(domain, gamma)
    if values.ndim == 1:
        num = np.abs(values[:, None] - values[None, :])
    else:
        diff = values[:, None, :] - values[None, :, :]
        num = np.sqrt(np.sum(diff * diff, axis=2))
    return float(np.max(num / denom))


def holder_norm(f: GridField, mu: float) -> float:
    """Discrete Hoelder norm of exponent mu in [0, 2) on the collocation grid.

    For integer mu the norm is the max of the sup norms of the derivatives up
    to order mu; otherwise it is the sup norm of the floor(mu)-th derivative
    plus its pairwise Hoelder seminorm of exponent mu - floor(mu).
    """
    if not 0.0 <= mu < 2.0:
        raise ValueError(f"mu must lie in [0, 2), got {mu}")
    domain = f.domain
    order = int(math.floor(mu))
    gamma = mu - order
    sup_f = float(np.max(np.abs(f.values)))
    if order == 0:
        if gamma == 0.0:
            return sup_f
        return sup_f + _pair_seminorm(domain, f.values.ravel(), gamma)
    grads = np.stack(
        [derivative(f, axis).values.ravel() for axis in range(domain.dimension)], axis=1
    )
    sup_grad = float(np.max(np.sqrt(np.sum(grads * grads, axis=1))))
    if gamma == 0.0:
        return max(sup_f, sup_grad)
    return sup_grad + _pair_seminorm(domain, grads, gamma)


_VALUE_FLOOR = 1e-300


def fit_decay_rate(
    times, values, window: float = 0.5, t_min: float = 0.0
) -> tuple[float, float]:
    """Least-squares slope of -log(values) over the final `window` fraction
    of the samples with t >= t_min.  Returns (rate, rms log residual)."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if not 0.0 < window <= 1.0:
        raise ValueError("window must lie in (0, 1]")
    keep = t >= t_min
    t, v = t[keep], v[keep]
    start = int(math.floor(len(t) * (1.0 - window)))
    t, v = t[start:], v[start:]
    usable = np.isfinite(v) & (v > _VALUE_FLOOR)
    t, v = t[usable], v[usable]
    if len(t) < 4:
        raise ValueError("fewer than 4 usable samples in the fit window")
    logv = np.log(v)
    slope, intercept = np.polyfit(t, logv, 1)
    resid = float(np.sqrt(np.mean((intercept + slope * t - logv) ** 2)))
    return float(-slope), resid


@dataclass(frozen=True)
class DecayEntry:
    name: str
    fitted_rate: float
    predicted_rate: float
    relative_deviation: float
    window_start: float
    window_end: float
    residual: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "fitted_rate": None if not math.isfinite(self.fitted_rate) else self.fitted_rate,
            "predicted_rate": self.predicted_rate,
            "relative_deviation": (
                None if not math.isfinite(self.relative_deviation) else self.relative_deviation
            ),
            "window": [self.window_start, self.window_end],
            "residual": None if not math.isfinite(self.residual) else self.residual,
        }


@dataclass(frozen=True)
class DecayReport:
    """Fitted tail rates against the rates the decay estimates predict.

    ``case`` is "gap_limited" when d2*lambda < l*b (the middle species is
    limited by min(b - eps, d2*lambda)) and "forcing_limited" otherwise,
    where the predicted rate becomes min(b - eps, d2*lambda - rho_tilde).
    """

    case: str
    spectral_gap: float
    entries: tuple[DecayEntry, ...]
    rho_tilde: float | None

    def entry(self, name: str) -> DecayEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "spectral_gap": self.spectral_gap,
            "rho_tilde": self.rho_tilde,
            "entries": [e.to_dict() for e in self.entries],
        }


def build_decay_report(
    traj: "Trajectory",
    params: SystemParams,
    rho_tilde: float | None = None,
    window: float = 0.5,
    t_min: float = 5.0,
) -> DecayReport:
    lam = least_positive_eigenvalue(traj.domain)
    gap_rate = params.d2 * lam
    base_rate = params.b - params.eps
    if gap_rate < params.l * params.b:
        case = "gap_limited"
        v_rate = min(base_rate, gap_rate)
        qplus_rate = gap_rate
    else:
        case = "forcing_limited"
        if rho_tilde is None:
            raise ValueError("rho_tilde is required when d2*lambda >= l*b")
        v_rate = min(base_rate, gap_rate - rho_tilde)
        qplus_rate = gap_rate - rho_tilde

    predictions = {
        "sup_u": base_rate,
        "sup_w": base_rate,
        "lp_u": base_rate,
        "lp_w": base_rate,
        "frac_u": base_rate,
        "frac_w": base_rate,
        "holder_u": base_rate,
        "holder_w": base_rate,
        "frac_qplus_v": qplus_rate,
        "holder_v_minus_vinf": v_rate,
    }
    entries = []
    for name, predicted in predictions.items():
        series = traj.column(name)
        try:
            fitted, resid = fit_decay_rate(traj.times, series, window, t_min)
        except ValueError:
            fitted, resid = math.nan, math.nan
        deviation = (fitted - predicted) / predicted if predicted != 0 else math.inf
        keep = traj.times >= t_min
        tail = traj.times[keep]
        start = tail[int(math.floor(len(tail) * (1.0 - window)))] if len(tail) else math.nan
        entries.append(
            DecayEntry(
                name=name,
                fitted_rate=fitted,
                predicted_rate=float(predicted),
                relative_deviation=float(deviation) if math.isfinite(fitted) else math.nan,
                window_start=float(start),
                window_end=float(traj.times[-1]),
                residual=resid,
            )
        )
    return DecayReport(
        case=case, spectral_gap=float(lam), entries=tuple(entries), rho_tilde=rho_tilde
    )


@dataclass(frozen=True)
class VInfinityEstimate:
    """Three candidate values for the uniform limit of the middle species.

    simulated_limit:    mean of v at the final sample.
    integral_identity:  mean of v0 plus the accumulated reaction mass (the
                        balance implied by the equation for v as written).
    formula_value:      mean of w0 minus the accumulated (h4 + b)-weighted
                        mass of w (the displayed limit formula, which carries
                        the opposite bookkeeping; reported, never asserted).
    """

    simulated_limit: float
    integral_identity: float
    formula_value: float

    @property
    def gap_simulated_identity(self) -> float:
        return abs(self.simulated_limit - self.integral_identity)

    @property
    def gap_identity_formula(self) -> float:
        return abs(self.integral_identity - self.formula_value)

    @property
    def gap_simulated_formula(self) -> float:
        return abs(self.simulated_limit - self.formula_value)

    def to_dict(self) -> dict:
        return {
            "simulated_limit": self.simulated_limit,
            "integral_identity": self.integral_identity,
            "formula_value": self.formula_value,
            "gap_simulated_identity": self.gap_simulated_identity,
            "gap_identity_formula": self.gap_identity_formula,
            "gap_simulated_formula": self.gap_simulated_formula,
        }


def v_infinity(traj: "Trajectory", params: SystemParams) -> VInfinityEstimate:
    if traj.blowup:
        raise ValueError("v limit is undefined for an aborted trajectory")
    volume = traj.domain.volume
    simulated = float(traj.q0_v[-1])
    identity = traj.q0_v0 + float(traj.reaction_integral[-1]) / volume
    formula = traj.q0_w0 - (
        float(traj.h4_weighted_w_integral[-1]) + params.b * float(traj.w_mass_integral[-1])
    ) / volume
    return VInfinityEstimate(simulated, identity, formula)


def mass_balance_residual(traj: "Trajectory") -> float:
    """Max deviation of the v mass from its accumulated reaction production,
    normalized by volume * (1 + initial mean)."""
    volume = traj.domain.volume
    lhs = traj.q0_v * volume
    rhs = traj.q0_v0 * volume + traj.reaction_integral
    return float(np.max(np.abs(lhs - rhs)) / (volume * (1.0 + abs(traj.q0_v0))))


@dataclass(frozen=True)
class InterpolationAuditReport:
    """Sampled constant for ||y||_pl <= C ||A^a y||_p^theta ||y||_p^(1-theta)."""

    fitted_constant: float
    violations: int
    samples: int
    skipped: int
    alpha: float
    p: float
    l: float
    theta: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "fitted_constant": self.fitted_constant,
            "violations": self.violations,
            "samples": self.samples,
            "skipped": self.skipped,
            "alpha": self.alpha,
            "p": self.p,
            "l": self.l,
            "theta": self.theta,
            "seed": self.seed,
        }


def interpolation_audit(
    op: OperatorSpec,
    domain: DomainSpec,
    alpha: float,
    p: float,
    l: float,
    theta: float,
    samples: int = 1000,
    seed: int = 0,
) -> InterpolationAuditReport:
    """Maximal ratio R = ||y||_pl / (||A^alpha y||_p^theta ||y||_p^(1-theta))
    over random band-limited nonnegative fields; counts non-finite ratios."""
    if l < 1.0:
        raise ValueError("l must be >= 1")
    theta_lower = domain.dimension * (l - 1.0) / (2.0 * p * l * alpha)
    if not theta_lower < theta < 1.0:
        raise ValueError(
            f"theta = {theta} outside the admissible interval ({theta_lower}, 1)"
        )
    rng = np.random.default_rng(seed)
    best = 0.0
    violations = 0
    skipped = 0
    for _ in range(samples):
        y = random_nonneg_field(domain, rng)
        if np.max(np.abs(y.values)) == 0.0:
            skipped += 1
            continue
        frac = apply_fractional(op, alpha, y)
        denom = lp_norm(frac, p) ** theta * lp_norm(y, p) ** (1.0 - theta)
        ratio = lp_norm(y, p * l) / denom if denom > 0 else math.inf
        if not math.isfinite(ratio):
            violations += 1
            continue
        best = max(best, ratio)
    return InterpolationAuditReport(
        fitted_constant=best,
        violations=violations,
        samples=samples,
        skipped=skipped,
        alpha=alpha,
        p=p,
        l=l,
        theta=theta,
        seed=seed,
    )


def _singular_integral(alpha: float, beta: float, t: float) -> float:
    """integral of s^-alpha e^(beta s) over (0, t) via the graded substitution
    u = s^(1-alpha), which removes the endpoint singularity."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    power = 1.0 / (1.0 - alpha)
    val, err = quad(lambda u: math.exp(beta * u**power), 0.0, t ** (1.0 - alpha), limit=200)
    val *= power
    if err * power > 1e-8 * max(abs(val), 1.0):
        raise RuntimeError(f"quadrature failed to converge for alpha={alpha}, beta={beta}, t={t}")
    return val


@dataclass(frozen=True)
class SingularIntegralAudit:
    """Ratios of integral(s^-alpha e^{beta s}) to its asserted envelope."""

    alpha: float
    beta: float
    envelope: str
    times: tuple[float, ...]
    ratios: tuple[float, ...]
    sup_ratio: float

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "envelope": self.envelope,
            "times": list(self.times),
            "ratios": list(self.ratios),
            "sup_ratio": self.sup_ratio,
        }


def singular_integral_audit(alpha: float, beta: float, t_grid) -> SingularIntegralAudit:
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    times = sorted(float(t) for t in t_grid)
    if not times or times[0] <= 0.0:
        raise ValueError("t_grid must contain positive times")
    if beta > 0:
        envelope, env = "exp(beta t)", lambda t: math.exp(beta * t)
    elif beta == 0:
        envelope, env = "t + 1", lambda t: t + 1.0
    else:
        envelope, env = "1", lambda t: 1.0
    ratios = tuple(_singular_integral(alpha, beta, t) / env(t) for t in times)
    return SingularIntegralAudit(
        alpha=alpha,
        beta=beta,
        envelope=envelope,
        times=tuple(times),
        ratios=ratios,
        sup_ratio=max(ratios),
    )


def _beta_kernel_value(nu: float, mu: float, tau: float, z: float) -> float:
    """z^(1-nu) tau^mu integral_0^z (z-xi)^(nu-1) xi^(mu-1) e^(-tau xi) dxi."""
    val, abserr = quad(
        lambda xi: math.exp(-tau * xi),
        0.0,
        z,
        weight="alg",
        wvar=(mu - 1.0, nu - 1.0),
        limit=200,
    )
    if abserr > 1e-8 * max(abs(val), 1e-12):
        raise RuntimeError(f"kernel quadrature failed for nu={nu}, mu={mu}, tau={tau}, z={z}")
    return z ** (1.0 - nu) * tau**mu * val


@dataclass(frozen=True)
class BetaKernelAudit:
    """Empirical constant for the weighted Beta-type kernel bound, uniform in z."""

    entries: tuple[tuple[float, float, float, float, float], ...]  # (nu, mu, tau, z, value)
    sup_constant: float
    worst: tuple[float, float, float, float]

    def to_dict(self) -> dict:
        return {
            "entries": [list(e) for e in self.entries],
            "sup_constant": self.sup_constant,
            "worst": list(self.worst),
        }


def beta_kernel_audit(nu_grid, mu_grid, tau_grid, z_grid) -> BetaKernelAudit:
    entries = []
    sup_c = -math.inf
    worst = None
    for nu in nu_grid:
        for mu in mu_grid:
            if nu <= 0 or mu <= 0:
                raise ValueError("nu and mu must be positive")
            for tau in tau_grid:
                for z in z_grid:
                    if tau <= 0 or z <= 0:
                        raise ValueError("tau and z must be positive")
                    val = _beta_kernel_value(nu, mu, tau, z)
                    entries.append((float(nu), float(mu), float(tau), float(z), float(val)))
                    if val > sup_c:
                        sup_c = val
                        worst = (float(nu), float(mu), float(tau), float(z))
    return BetaKernelAudit(entries=tuple(entries), sup_constant=float(sup_c), worst=worst)
