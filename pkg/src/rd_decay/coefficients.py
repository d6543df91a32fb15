"""Time-dependent reaction coefficients a_i(t) = t^sigma_i h_i(t) and the
numerical checker for every inequality the decay estimates require.

Profiles h are restricted to a fixed set of nonnegative continuous shapes
(constant, decaying exponential, algebraic decay, Gaussian bump, tabulated
with linear interpolation) so that integrals and integrability tails have
closed forms wherever the verification machinery needs an exact answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import erf

from .spectral import DomainSpec

__all__ = [
    "HProfile",
    "CoefficientSpec",
    "SystemParams",
    "Condition",
    "HypothesisReport",
    "LqstarNorm",
    "SmallnessReport",
    "GrowthAuditReport",
    "conjugate_exponents",
    "eval_coefficient",
    "lqstar_norm",
    "check_hypotheses",
    "smallness_condition",
    "growth_condition_audit",
]

_PROFILE_KINDS = ("constant", "exponential", "power", "bump", "tabulated")


@dataclass(frozen=True)
class HProfile:
    """Nonnegative continuous profile on [0, inf).

    kind/params:
      constant     (c,)                   h(t) = c
      exponential  (beta,)                h(t) = exp(-beta t)
      power        (gamma,)               h(t) = (1 + t)^-gamma
      bump         (center, width, height) h(t) = height exp(-((t-center)/width)^2)
      tabulated    knots/knot_values      linear interpolation, 0 beyond the last knot
    """

    kind: str
    params: tuple[float, ...] = ()
    knots: tuple[float, ...] = ()
    knot_values: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        object.__setattr__(self, "knots", tuple(float(x) for x in self.knots))
        object.__setattr__(self, "knot_values", tuple(float(x) for x in self.knot_values))
        if self.kind not in _PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "constant":
            (c,) = self.params
            if c < 0:
                raise ValueError("constant profile must be nonnegative")
        elif self.kind in ("exponential", "power"):
            (_,) = self.params
        elif self.kind == "bump":
            _, width, height = self.params
            if width <= 0 or height < 0:
                raise ValueError("bump needs width > 0 and height >= 0")
        else:
            if len(self.knots) < 2 or len(self.knots) != len(self.knot_values):
                raise ValueError("tabulated profile needs matching knots and values")
            if self.knots[0] < 0 or any(b <= a for a, b in zip(self.knots, self.knots[1:])):
                raise ValueError("knots must be nonnegative and strictly increasing")
            if any(v < 0 for v in self.knot_values):
                raise ValueError("tabulated values must be nonnegative")

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, c: float) -> "HProfile":
        return cls("constant", (c,))

    @classmethod
    def zero(cls) -> "HProfile":
        return cls("constant", (0.0,))

    @classmethod
    def exponential(cls, beta: float) -> "HProfile":
        return cls("exponential", (beta,))

    @classmethod
    def power(cls, gamma: float) -> "HProfile":
        return cls("power", (gamma,))

    @classmethod
    def bump(cls, center: float, width: float, height: float) -> "HProfile":
        return cls("bump", (center, width, height))

    @classmethod
    def tabulated(cls, times, values) -> "HProfile":
        return cls("tabulated", (), tuple(times), tuple(values))

    # -- evaluation ----------------------------------------------------------

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise ValueError("profiles are defined for t >= 0")
        if self.kind == "constant":
            out = np.full_like(arr, self.params[0])
        elif self.kind == "exponential":
            out = np.exp(-self.params[0] * arr)
        elif self.kind == "power":
            out = (1.0 + arr) ** (-self.params[0])
        elif self.kind == "bump":
            center, width, height = self.params
            out = height * np.exp(-(((arr - center) / width) ** 2))
        else:
            out = np.interp(arr, self.knots, self.knot_values, left=self.knot_values[0], right=0.0)
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out

    def integral(self, t: float) -> float:
        """Closed-form integral of h over [0, t] (exact trapezoid for tables)."""
        if t < 0:
            raise ValueError("integral endpoint must be nonnegative")
        if t == 0:
            return 0.0
        if self.kind == "constant":
            return self.params[0] * t
        if self.kind == "exponential":
            beta = self.params[0]
            return t if beta == 0 else -math.expm1(-beta * t) / beta
        if self.kind == "power":
            gamma = self.params[0]
            if gamma == 1.0:
                return math.log1p(t)
            return ((1.0 + t) ** (1.0 - gamma) - 1.0) / (1.0 - gamma)
        if self.kind == "bump":
            center, width, height = self.params
            s = 0.5 * math.sqrt(math.pi) * width * height
            return s * (erf((t - center) / width) + erf(center / width))
        # Piecewise-linear profile (constant before the first knot, zero after
        # the last): clip the breakpoints at t and sum exact trapezoids.
        grid = np.concatenate(([0.0], np.asarray(self.knots)))
        gv = np.concatenate(([self.knot_values[0]], np.asarray(self.knot_values)))
        end = min(t, self.knots[-1])
        clipped = np.minimum(grid, end)
        cv = np.interp(clipped, grid, gv)
        widths = np.diff(clipped)
        return float(np.sum(0.5 * (cv[1:] + cv[:-1]) * widths))

    def integral_to_infinity(self) -> tuple[float, bool]:
        """(integral of h over [0, inf), converges?) with closed-form tails."""
        if self.kind == "constant":
            c = self.params[0]
            return (0.0, True) if c == 0.0 else (math.inf, False)
        if self.kind == "exponential":
            beta = self.params[0]
            return (1.0 / beta, True) if beta > 0 else (math.inf, False)
        if self.kind == "power":
            gamma = self.params[0]
            return (1.0 / (gamma - 1.0), True) if gamma > 1 else (math.inf, False)
        if self.kind == "bump":
            center, width, height = self.params
            s = 0.5 * math.sqrt(math.pi) * width * height
            return s * (1.0 + erf(center / width)), True
        return self.integral(self.knots[-1]), True

    def power_tail(self, q: float, t: float) -> tuple[float, bool]:
        """(integral of h^q over [t, inf), converges?)."""
        if q < 1:
            raise ValueError("power exponent must be >= 1")
        if self.kind == "constant":
            c = self.params[0]
            return (0.0, True) if c == 0.0 else (math.inf, False)
        if self.kind == "exponential":
            beta = self.params[0]
            if beta <= 0:
                return math.inf, False
            return math.exp(-q * beta * t) / (q * beta), True
        if self.kind == "power":
            gamma = self.params[0]
            if q * gamma <= 1:
                return math.inf, False
            return (1.0 + t) ** (1.0 - q * gamma) / (q * gamma - 1.0), True
        if self.kind == "bump":
            center, width, height = self.params
            s = 0.5 * math.sqrt(math.pi) * (width / math.sqrt(q)) * height**q
            return s * (1.0 - erf(math.sqrt(q) * (t - center) / width)), True
        if t >= self.knots[-1]:
            return 0.0, True
        pts = [x for x in self.knots if t < x < self.knots[-1]]
        val, _ = quad(lambda s: self(s) ** q, t, self.knots[-1], points=pts or None, limit=200)
        return val, True

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.params[0]}
        if self.kind == "exponential":
            return {"kind": "exponential", "beta": self.params[0]}
        if self.kind == "power":
            return {"kind": "power", "gamma": self.params[0]}
        if self.kind == "bump":
            c, w, h = self.params
            return {"kind": "bump", "center": c, "width": w, "height": h}
        return {"kind": "tabulated", "times": list(self.knots), "values": list(self.knot_values)}

    @classmethod
    def from_dict(cls, data: dict) -> "HProfile":
        kind = data["kind"]
        if kind == "constant":
            return cls.constant(data["value"])
        if kind == "exponential":
            return cls.exponential(data["beta"])
        if kind == "power":
            return cls.power(data["gamma"])
        if kind == "bump":
            return cls.bump(data["center"], data["width"], data["height"])
        if kind == "tabulated":
            return cls.tabulated(data["times"], data["values"])
        raise ValueError(f"unknown profile kind {kind!r}")


@dataclass(frozen=True)
class CoefficientSpec:
    """Reaction coefficient a(t) = t^sigma * h(t)."""

    sigma: float
    profile: HProfile

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")

    def evaluate(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise ValueError("coefficients are defined for t >= 0")
        out = arr**self.sigma * self.profile(arr)
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "profile": self.profile.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "CoefficientSpec":
        return cls(data["sigma"], HProfile.from_dict(data["profile"]))


def eval_coefficient(spec: CoefficientSpec, t):
    """t^sigma h(t); zero at t = 0 whenever sigma > 0."""
    return spec.evaluate(t)


@dataclass(frozen=True)
class SystemParams:
    """Physical and analysis parameters of the three-species system.

    b is the common linear removal rate of the first and third species;
    (alpha, p, l, eps, mu) drive the norm and decay machinery.
    """

    domain: DomainSpec
    d1: float
    d2: float
    d3: float
    b: float
    m: float
    n: float
    k: float
    a1: CoefficientSpec
    a2: CoefficientSpec
    a3: CoefficientSpec
    a4: CoefficientSpec
    alpha: float
    p: float
    l: float
    eps: float
    mu: float = 0.0

    def __post_init__(self):
        for name in ("d1", "d2", "d3"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.b < 0:
            raise ValueError("b must be nonnegative")
        for name in ("m", "n", "k"):
            val = getattr(self, name)
            if not math.isfinite(val) or val < 0:
                raise ValueError(f"exponent {name} must be finite and nonnegative")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.p <= 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if self.l <= 1.0:
            raise ValueError(f"l must exceed 1, got {self.l}")
        if self.mu < 0.0:
            raise ValueError("mu must be nonnegative")
        if not (0.0 <= self.eps <= self.b) or (self.b > 0 and self.eps >= self.b):
            raise ValueError(f"eps must lie in [0, b), got eps={self.eps}, b={self.b}")
        if self.a4.sigma != 0.0:
            raise ValueError("the fourth coefficient must have sigma = 0")

    @property
    def N(self) -> int:
        return self.domain.dimension

    def coefficient(self, i: int) -> CoefficientSpec:
        return (self.a1, self.a2, self.a3, self.a4)[i - 1]


def conjugate_exponents(alpha: float) -> tuple[float, float]:
    """Integrability exponent q* of the singular-kernel estimates and its
    Lebesgue conjugate q: q* = 2/alpha - 1 for alpha >= 1/2, else 2."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    q_star = 2.0 / alpha - 1.0 if alpha >= 0.5 else 2.0
    return q_star, q_star / (q_star - 1.0)


@dataclass(frozen=True)
class LqstarNorm:
    """L^q* norm of a profile: quadrature head plus closed-form tail."""

    value: float
    converges: bool
    head: float
    tail: float

    def to_dict(self) -> dict:
        return {
            "value": None if not math.isfinite(self.value) else self.value,
            "converges": self.converges,
            "head": self.head,
            "tail": None if not math.isfinite(self.tail) else self.tail,
        }


def lqstar_norm(profile: HProfile, q_star: float, horizon: float = 50.0) -> LqstarNorm:
    """(integral of h^q* over [0, inf))^(1/q*), flagging divergent tails."""
    if q_star < 1.0:
        raise ValueError(f"q_star must be >= 1, got {q_star}")
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    points = None
    if profile.kind == "tabulated":
        points = [x for x in profile.knots if 0.0 < x < horizon]
    elif profile.kind == "bump" and 0.0 < profile.params[0] < horizon:
        points = [profile.params[0]]
    head, _ = quad(lambda s: profile(s) ** q_star, 0.0, horizon, points=points or None, limit=200)
    tail, converges = profile.power_tail(q_star, horizon)
    if not converges:
        return LqstarNorm(math.inf, False, head, math.inf)
    return LqstarNorm((head + tail) ** (1.0 / q_star), True, head, tail)


def _membership_margin(profile: HProfile, q_star: float) -> float:
    """Signed distance from the boundary of h in L^q*, in rate units."""
    if profile.kind == "constant":
        c = profile.params[0]
        return 1.0 if c == 0.0 else -c
    if profile.kind == "exponential":
        return profile.params[0]
    if profile.kind == "power":
        return profile.params[0] * q_star - 1.0
    return 1.0  # bump and tabulated profiles always integrable


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    margin: float

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "margin": self.margin}


@dataclass(frozen=True)
class HypothesisReport:
    """Pass/fail with signed margins for every checkable hypothesis."""

    conditions: tuple[Condition, ...]
    q_star: float
    q: float
    comparison_constant: float
    lqstar_norms: tuple[LqstarNorm, LqstarNorm, LqstarNorm, LqstarNorm]
    l_lower: float
    l_upper: float

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def condition(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "q_star": self.q_star,
            "q": self.q,
            "comparison_constant": (
                None if not math.isfinite(self.comparison_constant) else self.comparison_constant
            ),
            "l_interval": [self.l_lower, self.l_upper],
            "lqstar_norms": {f"h{i+1}": n.to_dict() for i, n in enumerate(self.lqstar_norms)},
            "conditions": [c.to_dict() for c in self.conditions],
            "all_passed": self.all_passed,
        }


def _comparison_constant(
    a1: CoefficientSpec, a3: CoefficientSpec, horizon: float, n_grid: int
) -> float:
    """Minimal C with a1(t) <= C a3(t) on a dense grid; inf when infeasible."""
    grid = np.linspace(0.0, horizon, n_grid)
    v1 = a1.evaluate(grid)
    v3 = a3.evaluate(grid)
    vanish = v3 == 0.0
    if np.any(v1[vanish] > 0.0):
        return math.inf
    active = ~vanish
    if not np.any(active) or np.all(v1[active] == 0.0):
        return 0.0
    return float(np.max(v1[active] / v3[active]))


def check_hypotheses(
    params: SystemParams, horizon: float = 50.0, n_grid: int = 2001
) -> HypothesisReport:
    """Evaluate every hypothesis inequality with a signed margin (pass <=> margin > 0)."""
    q_star, q = conjugate_exponents(params.alpha)
    N, p, alpha, l = params.N, params.p, params.alpha, params.l
    m, n, k, b, eps, mu = params.m, params.n, params.k, params.b, params.eps, params.mu

    norms = tuple(lqstar_norm(params.coefficient(i).profile, q_star, horizon) for i in (1, 2, 3, 4))
    comp = _comparison_constant(params.a1, params.a3, horizon, n_grid)

    l_lower = max(1.0, N * (m - 1.0) / (2.0 * p * alpha), N * (n - 1.0) / (2.0 * p * alpha))
    l_upper = min(m, n)

    conditions = [
        ("m_growth_cap", min(m, (2.0 + eps) - m)),
        ("nk_growth_cap", (2.0 + eps) - (n + k)),
        ("q_alpha_integrability", 1.0 - q * alpha),
        ("sigma_exponent_1", 1.0 + q * (params.a1.sigma - alpha * l)),
        ("sigma_exponent_2", 1.0 + q * (params.a2.sigma - alpha * l)),
        ("sigma_exponent_3", 1.0 + q * (params.a3.sigma - alpha * l)),
        ("h1_integrability", _membership_margin(params.a1.profile, q_star)),
        ("h2_integrability", _membership_margin(params.a2.profile, q_star)),
        ("h3_integrability", _membership_margin(params.a3.profile, q_star)),
        ("h4_integrability", _membership_margin(params.a4.profile, q_star)),
        ("a1_a3_comparison", -1.0 if math.isinf(comp) else 1.0 / (1.0 + comp)),
        ("l_interval_nonempty", l_upper - l_lower),
        ("l_in_interval", min(l - l_lower, l_upper - l)),
        ("embedding_index", 2.0 * alpha - N / p),
        ("holder_exponent", (2.0 * alpha - N / p) - mu),
    ]
    report = tuple(Condition(name, margin > 0.0, float(margin)) for name, margin in conditions)
    return HypothesisReport(
        conditions=report,
        q_star=q_star,
        q=q,
        comparison_constant=comp,
        lqstar_norms=norms,
        l_lower=float(l_lower),
        l_upper=float(l_upper),
    )


@dataclass(frozen=True)
class SmallnessReport:
    """Both variants of the kernel-mass smallness condition.

    The displayed condition divides by c0 inside the logarithm; the variant
    consistent with the closed-form bound derivation divides by c0^(l-1).
    They coincide at c0 = 1.
    """

    lhs: float
    rhs_literal: float
    rhs_derivation: float
    variant: str

    @property
    def margin_literal(self) -> float:
        return self.rhs_literal - self.lhs

    @property
    def margin_derivation(self) -> float:
        return self.rhs_derivation - self.lhs

    @property
    def margin(self) -> float:
        return self.margin_derivation if self.variant == "derivation" else self.margin_literal

    @property
    def passed(self) -> bool:
        return self.margin > 0.0

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs_literal": self.rhs_literal,
            "rhs_derivation": self.rhs_derivation,
            "variant": self.variant,
            "margin": self.margin,
            "passed": self.passed,
        }


def smallness_condition(
    c0: float, l: float, kernel_mass: float, variant: str = "derivation"
) -> tuple[bool, float]:
    """Check (l-1) * integral(h) < log((1 + c0^(l-1)) / denominator)."""
    report = smallness_report(c0, l, kernel_mass, variant)
    return report.passed, report.margin


def smallness_report(
    c0: float, l: float, kernel_mass: float, variant: str = "derivation"
) -> SmallnessReport:
    if c0 <= 0.0:
        raise ValueError(f"c0 must be positive, got {c0}")
    if l <= 1.0:
        raise ValueError(f"l must exceed 1, got {l}")
    if kernel_mass < 0.0:
        raise ValueError("kernel mass must be nonnegative")
    if variant not in ("literal", "derivation"):
        raise ValueError(f"unknown variant {variant!r}")
    tau = c0 ** (l - 1.0)
    lhs = (l - 1.0) * kernel_mass
    return SmallnessReport(
        lhs=lhs,
        rhs_literal=math.log((1.0 + tau) / c0),
        rhs_derivation=math.log1p(1.0 / tau),
        variant=variant,
    )


@dataclass(frozen=True)
class GrowthAuditReport:
    """Empirical check of integral(e^{q* rho s} h^{q*}) = O(e^{q* rho_tilde t})."""

    sup_ratio: float
    passed: bool
    saturated: bool
    rho: float
    rho_tilde: float
    q_star: float
    times: np.ndarray
    ratios: np.ndarray

    def to_dict(self) -> dict:
        return {
            "sup_ratio": None if not math.isfinite(self.sup_ratio) else self.sup_ratio,
            "passed": self.passed,
            "saturated": self.saturated,
            "rho": self.rho,
            "rho_tilde": self.rho_tilde,
            "q_star": self.q_star,
        }


_EXP_CAP = 700.0  # log-space values beyond this are reported as saturated


def growth_condition_audit(
    profile: HProfile,
    rho: float,
    rho_tilde: float,
    q_star: float,
    horizon: float,
    n_grid: int = 4001,
) -> GrowthAuditReport:
    """Running ratio e^{-q* rho_tilde t} integral_0^t e^{q* rho s} h^{q*}(s) ds.

    The cumulative integral is accumulated in log space, so large exponents
    saturate gracefully instead of overflowing.  The certificate passes when
    the running ratio is non-increasing over the last tenth of the grid.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if q_star < 1.0:
        raise ValueError("q_star must be >= 1")
    times = np.linspace(0.0, horizon, n_grid)
    hvals = profile(times)
    with np.errstate(divide="ignore"):
        log_g = q_star * rho * times + q_star * np.log(hvals)
    log_int = np.full(n_grid, -np.inf)
    for j in range(1, n_grid):
        dt = times[j] - times[j - 1]
        inc = math.log(dt / 2.0) + np.logaddexp(log_g[j - 1], log_g[j])
        log_int[j] = np.logaddexp(log_int[j - 1], inc)
    log_ratio = log_int - q_star * rho_tilde * times
    saturated = bool(np.any(log_ratio > _EXP_CAP))
    ratios = np.exp(np.minimum(log_ratio, _EXP_CAP))
    if saturated:
        ratios[log_ratio > _EXP_CAP] = math.inf
    sup_ratio = float(np.max(ratios)) if not saturated else math.inf
    window = max(5, n_grid // 10)
    tail = ratios[-window:]
    finite_tail = np.all(np.isfinite(tail))
    non_increasing = finite_tail and bool(
        np.all(tail[1:] <= tail[:-1] * (1.0 + 1e-8) + 1e-300)
    )
    return GrowthAuditReport(
        sup_ratio=sup_ratio,
        passed=bool(non_increasing and not saturated),
        saturated=saturated,
        rho=float(rho),
        rho_tilde=float(rho_tilde),
        q_star=float(q_star),
        times=times,
        ratios=ratios,
    )
