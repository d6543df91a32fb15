"""Time integration of the three-species system with exact spectral diffusion.

The linear parts -(d_i Laplacian - shift) are applied through their exact
semigroups per cosine mode, so the only temporal error comes from the
operator splitting and the explicit reaction substep.  Two schemes are
provided: first-order Lie splitting with an Euler reaction step and
second-order Strang splitting with a midpoint reaction step.

Nonnegativity is monitored, never enforced: reaction powers are evaluated on
values clamped at zero while the raw minima are recorded as a diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.fft import dctn, idctn

from . import analysis
from .coefficients import SystemParams
from .spectral import (
    DomainSpec,
    GridField,
    OperatorSpec,
    SpectralField,
    eigenvalue_grid,
    to_grid,
)

__all__ = [
    "State",
    "SolverConfig",
    "Trajectory",
    "CosineMode",
    "ManufacturedSolution",
    "ManufacturedForcing",
    "manufactured_forcing",
    "reaction_terms",
    "step",
    "integrate",
    "constant_state",
    "cosine_state",
    "random_state",
    "write_trajectory_csv",
    "TRAJECTORY_COLUMNS",
]


@dataclass(frozen=True)
class State:
    """The (u, v, w) triple at a time t, on a shared domain."""

    t: float
    u: GridField
    v: GridField
    w: GridField

    def __post_init__(self):
        if not (self.u.domain == self.v.domain == self.w.domain):
            raise ValueError("state components must share one domain")
        if self.t < 0.0:
            raise ValueError("time must be nonnegative")

    @property
    def domain(self) -> DomainSpec:
        return self.u.domain


@dataclass(frozen=True)
class SolverConfig:
    scheme: str
    dt: float
    t_end: float
    sample_stride: int = 1
    blowup_threshold: float = 1e6
    negativity_tolerance: float = 1e-9
    manufactured: "ManufacturedForcing | None" = None

    def __post_init__(self):
        if self.scheme not in ("lie", "strang"):
            raise ValueError(f"scheme must be 'lie' or 'strang', got {self.scheme!r}")
        if self.dt <= 0.0 or self.dt >= self.t_end:
            raise ValueError("need 0 < dt < t_end")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be a positive integer")
        if self.blowup_threshold <= 0.0:
            raise ValueError("blowup_threshold must be positive")
        if self.negativity_tolerance < 0.0:
            raise ValueError("negativity_tolerance must be nonnegative")


TRAJECTORY_COLUMNS = (
    "t",
    "sup_u",
    "sup_v",
    "sup_w",
    "q0_v",
    "lp_u",
    "lp_w",
    "frac_u",
    "frac_w",
    "frac_qplus_v",
    "holder_u",
    "holder_w",
    "holder_v_minus_vinf",
    "min_u",
    "min_v",
    "min_w",
    "reaction_integral_accum",
)


@dataclass(frozen=True)
class Trajectory:
    """Recorded observables at sample times, plus accumulated balance integrals."""

    domain: DomainSpec
    times: np.ndarray
    sup_u: np.ndarray
    sup_v: np.ndarray
    sup_w: np.ndarray
    q0_v: np.ndarray
    lp_u: np.ndarray
    lp_w: np.ndarray
    frac_u: np.ndarray
    frac_w: np.ndarray
    frac_qplus_v: np.ndarray
    holder_u: np.ndarray
    holder_w: np.ndarray
    holder_v_minus_vinf: np.ndarray
    min_u: np.ndarray
    min_v: np.ndarray
    min_w: np.ndarray
    reaction_integral: np.ndarray
    h4_weighted_w_integral: np.ndarray
    w_mass_integral: np.ndarray
    q0_u0: float
    q0_v0: float
    q0_w0: float
    p: float
    mu: float
    blowup: bool
    abort_time: float | None
    snapshots: tuple[State, ...] | None

    def column(self, name: str) -> np.ndarray:
        mapping = {
            "t": self.times,
            "reaction_integral_accum": self.reaction_integral,
        }
        if name in mapping:
            return mapping[name]
        return getattr(self, name)


def _clamped_powers(u, v, w, m, n, k):
    up = np.maximum(u, 0.0)
    vp = np.maximum(v, 0.0)
    wp = np.maximum(w, 0.0)
    return up**n, vp**k, wp**m


def _reaction_arrays(u, v, w, t, params: SystemParams, forcing=None):
    un, vk, wm = _clamped_powers(u, v, w, params.m, params.n, params.k)
    a1 = params.a1.evaluate(t)
    a2 = params.a2.evaluate(t)
    a3 = params.a3.evaluate(t)
    a4 = params.a4.evaluate(t)
    consumption = a2 * un * vk
    production = (a1 + a3) * wm
    f_u = a1 * wm - consumption
    f_v = production - consumption
    f_w = -production - a4 * np.maximum(w, 0.0) + consumption
    if forcing is not None:
        g_u, g_v, g_w = forcing.sources(t)
        f_u = f_u + g_u
        f_v = f_v + g_v
        f_w = f_w + g_w
    return f_u, f_v, f_w


def reaction_terms(state: State, t: float, params: SystemParams):
    """Pointwise reaction terms at the collocation nodes (powers clamped at 0)."""
    f_u, f_v, f_w = _reaction_arrays(state.u.values, state.v.values, state.w.values, t, params)
    dom = state.domain
    for arr in (f_u, f_v, f_w):
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("non-finite reaction term: blow-up")
    return GridField(dom, f_u), GridField(dom, f_v), GridField(dom, f_w)


def _reaction_mean_integrand(u, v, w, t, params: SystemParams, volume: float) -> float:
    """Integral over the domain of (a1+a3) w^m - a2 u^n v^k at time t."""
    un, vk, wm = _clamped_powers(u, v, w, params.m, params.n, params.k)
    a1 = params.a1.evaluate(t)
    a2 = params.a2.evaluate(t)
    a3 = params.a3.evaluate(t)
    return volume * float(np.mean((a1 + a3) * wm - a2 * un * vk))


class _Stepper:
    """Precomputed diffusion multipliers and the splitting update."""

    def __init__(self, domain: DomainSpec, params: SystemParams, config: SolverConfig):
        self.params = params
        self.config = config
        lam = eigenvalue_grid(domain)
        dt = config.dt
        tau = dt / 2.0 if config.scheme == "strang" else dt
        self.diff = [
            np.exp(-tau * (params.d1 * lam + params.b)),
            np.exp(-tau * (params.d2 * lam)),
            np.exp(-tau * (params.d3 * lam + params.b)),
        ]

    def _diffuse(self, fields):
        return [idctn(dctn(f, type=2) * mult, type=2) for f, mult in zip(fields, self.diff)]

    def advance(self, t: float, fields):
        params, config = self.params, self.config
        dt = config.dt
        forcing = config.manufactured
        if config.scheme == "lie":
            f = _reaction_arrays(*fields, t, params, forcing)
            fields = [y + dt * fy for y, fy in zip(fields, f)]
            fields = self._diffuse(fields)
        else:
            fields = self._diffuse(fields)
            k1 = _reaction_arrays(*fields, t, params, forcing)
            mid = [y + 0.5 * dt * fy for y, fy in zip(fields, k1)]
            k2 = _reaction_arrays(*mid, t + 0.5 * dt, params, forcing)
            fields = [y + dt * fy for y, fy in zip(fields, k2)]
            fields = self._diffuse(fields)
        return fields


def step(state: State, dt: float, params: SystemParams, config: SolverConfig) -> State:
    """Advance the state by one splitting step of size dt."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    cfg = config if config.dt == dt else replace(config, dt=dt)
    stepper = _Stepper(state.domain, params, cfg)
    fields = stepper.advance(state.t, [state.u.values, state.v.values, state.w.values])
    _check_blowup(fields, state.t + dt, cfg.blowup_threshold)
    dom = state.domain
    return State(state.t + dt, GridField(dom, fields[0]), GridField(dom, fields[1]), GridField(dom, fields[2]))


class BlowUpError(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"sup norm exceeded the blow-up threshold at t = {t:.6g}")
        self.t = t


def _check_blowup(fields, t, threshold):
    for arr in fields:
        if not np.all(np.isfinite(arr)) or np.max(np.abs(arr)) > threshold:
            raise BlowUpError(t)


def integrate(
    initial: State,
    params: SystemParams,
    config: SolverConfig,
    record_snapshots: bool = False,
) -> Trajectory:
    """Step to t_end, recording observables every sample_stride steps.

    The reaction mass integral and the weighted integrals of w are
    accumulated per step by the trapezoid rule.  A blow-up aborts the run and
    returns the partial trajectory with the offending time.
    """
    domain = initial.domain
    if domain != params.domain:
        raise ValueError("initial state and parameters disagree on the domain")
    for name, f in (("u", initial.u), ("v", initial.v), ("w", initial.w)):
        if f.values.min() < 0.0:
            raise ValueError(f"initial {name} must be nonnegative")
    n_steps = int(round(config.t_end / config.dt))
    if abs(n_steps * config.dt - config.t_end) > 1e-9 * max(1.0, config.t_end):
        raise ValueError("t_end must be an integer multiple of dt")

    volume = domain.volume
    stepper = _Stepper(domain, params, config)
    fields = [initial.u.values.copy(), initial.v.values.copy(), initial.w.values.copy()]

    samples: list[tuple[float, np.ndarray, np.ndarray, np.ndarray, float, float, float]] = []
    reaction_acc = 0.0
    h4w_acc = 0.0
    wmass_acc = 0.0

    def _record(t):
        samples.append(
            (t, fields[0].copy(), fields[1].copy(), fields[2].copy(), reaction_acc, h4w_acc, wmass_acc)
        )

    def _integrands(t):
        r = _reaction_mean_integrand(*fields, t, params, volume)
        wm = volume * float(np.mean(fields[2]))
        h4 = params.a4.evaluate(t)
        return r, h4 * wm, wm

    blowup = False
    abort_time = None
    prev = _integrands(0.0)
    _record(0.0)
    for i in range(n_steps):
        t_next = (i + 1) * config.dt
        try:
            fields = stepper.advance(i * config.dt, fields)
            _check_blowup(fields, t_next, config.blowup_threshold)
        except (BlowUpError, FloatingPointError):
            blowup = True
            abort_time = t_next
            break
        cur = _integrands(t_next)
        half_dt = 0.5 * config.dt
        reaction_acc += half_dt * (prev[0] + cur[0])
        h4w_acc += half_dt * (prev[1] + cur[1])
        wmass_acc += half_dt * (prev[2] + cur[2])
        prev = cur
        if (i + 1) % config.sample_stride == 0 or (i + 1) == n_steps:
            _record(t_next)

    return _assemble_trajectory(domain, params, samples, blowup, abort_time, record_snapshots)


def _assemble_trajectory(domain, params, samples, blowup, abort_time, record_snapshots):
    n = len(samples)
    cols = {
        name: np.zeros(n)
        for name in (
            "times sup_u sup_v sup_w q0_v lp_u lp_w frac_u frac_w frac_qplus_v "
            "holder_u holder_w holder_v_minus_vinf min_u min_v min_w "
            "reaction h4w wmass".split()
        )
    }
    op_u = OperatorSpec(params.d1, params.b)
    op_v = OperatorSpec(params.d2, 0.0)
    op_w = OperatorSpec(params.d3, params.b)
    p, mu, alpha = params.p, params.mu, params.alpha

    from .spectral import apply_fractional, q_plus

    v_final_mean = float(np.mean(samples[-1][2])) if n else 0.0
    snaps = [] if record_snapshots else None
    for j, (t, u, v, w, racc, hacc, wacc) in enumerate(samples):
        fu = GridField(domain, u)
        fv = GridField(domain, v)
        fw = GridField(domain, w)
        cols["times"][j] = t
        cols["sup_u"][j] = np.max(np.abs(u))
        cols["sup_v"][j] = np.max(np.abs(v))
        cols["sup_w"][j] = np.max(np.abs(w))
        cols["q0_v"][j] = np.mean(v)
        cols["lp_u"][j] = analysis.lp_norm(fu, p)
        cols["lp_w"][j] = analysis.lp_norm(fw, p)
        cols["frac_u"][j] = analysis.lp_norm(apply_fractional(op_u, alpha, fu), p)
        cols["frac_w"][j] = analysis.lp_norm(apply_fractional(op_w, alpha, fw), p)
        cols["frac_qplus_v"][j] = analysis.lp_norm(apply_fractional(op_v, alpha, q_plus(fv)), p)
        cols["holder_u"][j] = analysis.holder_norm(fu, mu)
        cols["holder_w"][j] = analysis.holder_norm(fw, mu)
        cols["holder_v_minus_vinf"][j] = analysis.holder_norm(
            GridField(domain, v - v_final_mean), mu
        )
        cols["min_u"][j] = np.min(u)
        cols["min_v"][j] = np.min(v)
        cols["min_w"][j] = np.min(w)
        cols["reaction"][j] = racc
        cols["h4w"][j] = hacc
        cols["wmass"][j] = wacc
        if record_snapshots:
            snaps.append(State(t, fu, fv, fw))

    u0, v0, w0 = samples[0][1], samples[0][2], samples[0][3]
    return Trajectory(
        domain=domain,
        times=cols["times"],
        sup_u=cols["sup_u"],
        sup_v=cols["sup_v"],
        sup_w=cols["sup_w"],
        q0_v=cols["q0_v"],
        lp_u=cols["lp_u"],
        lp_w=cols["lp_w"],
        frac_u=cols["frac_u"],
        frac_w=cols["frac_w"],
        frac_qplus_v=cols["frac_qplus_v"],
        holder_u=cols["holder_u"],
        holder_w=cols["holder_w"],
        holder_v_minus_vinf=cols["holder_v_minus_vinf"],
        min_u=cols["min_u"],
        min_v=cols["min_v"],
        min_w=cols["min_w"],
        reaction_integral=cols["reaction"],
        h4_weighted_w_integral=cols["h4w"],
        w_mass_integral=cols["wmass"],
        q0_u0=float(np.mean(u0)),
        q0_v0=float(np.mean(v0)),
        q0_w0=float(np.mean(w0)),
        p=p,
        mu=mu,
        blowup=blowup,
        abort_time=abort_time,
        snapshots=tuple(snaps) if record_snapshots else None,
    )


# -- manufactured solutions -------------------------------------------------


@dataclass(frozen=True)
class CosineMode:
    """One closed-form term amplitude * exp(-decay t) * cos mode."""

    amplitude: float
    decay: float
    index: tuple[int, ...]


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact solution with cosine-mode components and exponential time factors."""

    u_modes: tuple[CosineMode, ...]
    v_modes: tuple[CosineMode, ...]
    w_modes: tuple[CosineMode, ...]

    def modes(self, which: str) -> tuple[CosineMode, ...]:
        return {"u": self.u_modes, "v": self.v_modes, "w": self.w_modes}[which]


class ManufacturedForcing:
    """Compensating sources so a chosen closed-form state solves the system.

    For each component q with linear operator d Laplacian - shift and reaction
    f_q, the source is g = dq/dt - d Laplacian q + shift q - f_q(t, exact).
    """

    def __init__(self, exact: ManufacturedSolution, params: SystemParams):
        self.exact = exact
        self.params = params
        domain = params.domain
        mesh = domain.mesh()
        self._basis: dict[str, list[tuple[float, float, float, np.ndarray]]] = {}
        for which in ("u", "v", "w"):
            entries = []
            for mode in exact.modes(which):
                idx = tuple(mode.index)
                if len(idx) != domain.dimension:
                    raise ValueError(f"mode index {idx} has wrong dimension")
                for ki, K in zip(idx, domain.grid_sizes):
                    if not 0 <= ki < K:
                        raise ValueError(f"mode index {idx} outside the resolved basis")
                lam = sum((ki * math.pi / L) ** 2 for ki, L in zip(idx, domain.lengths))
                basis = np.ones(domain.shape)
                for ax, ki in enumerate(idx):
                    basis = basis * np.cos(ki * math.pi * mesh[ax] / domain.lengths[ax])
                entries.append((mode.amplitude, mode.decay, lam, basis))
            self._basis[which] = entries

    def exact_arrays(self, t: float):
        out = []
        for which in ("u", "v", "w"):
            acc = np.zeros(self.params.domain.shape)
            for amp, decay, _, basis in self._basis[which]:
                acc += amp * math.exp(-decay * t) * basis
            out.append(acc)
        return tuple(out)

    def exact_state(self, t: float) -> State:
        dom = self.params.domain
        u, v, w = self.exact_arrays(t)
        return State(t, GridField(dom, u), GridField(dom, v), GridField(dom, w))

    def _dt_minus_diffusion(self, which: str, t: float, d: float, shift: float):
        acc = np.zeros(self.params.domain.shape)
        for amp, decay, lam, basis in self._basis[which]:
            acc += amp * math.exp(-decay * t) * (-decay + d * lam + shift) * basis
        return acc

    def sources(self, t: float):
        params = self.params
        u, v, w = self.exact_arrays(t)
        f_u, f_v, f_w = _reaction_arrays(u, v, w, t, params)
        g_u = self._dt_minus_diffusion("u", t, params.d1, params.b) - f_u
        g_v = self._dt_minus_diffusion("v", t, params.d2, 0.0) - f_v
        g_w = self._dt_minus_diffusion("w", t, params.d3, params.b) - f_w
        return g_u, g_v, g_w


def manufactured_forcing(exact: ManufacturedSolution, params: SystemParams) -> ManufacturedForcing:
    return ManufacturedForcing(exact, params)


# -- initial data -----------------------------------------------------------


def constant_state(domain: DomainSpec, u: float, v: float, w: float) -> State:
    return State(
        0.0,
        GridField.constant(domain, u),
        GridField.constant(domain, v),
        GridField.constant(domain, w),
    )


def cosine_state(domain: DomainSpec, specs: dict[str, tuple[float, float, tuple[int, ...]]]) -> State:
    """Per-component base + amplitude * cos(mode); must stay nonnegative."""
    fields = {}
    mesh = domain.mesh()
    for which in ("u", "v", "w"):
        base, amplitude, index = specs[which]
        if base < abs(amplitude):
            raise ValueError(f"component {which}: base must dominate |amplitude|")
        arr = np.full(domain.shape, float(base))
        mode = np.ones(domain.shape)
        for ax, ki in enumerate(index):
            if not 0 <= ki < domain.grid_sizes[ax]:
                raise ValueError(f"mode index {index} outside the resolved basis")
            mode = mode * np.cos(ki * math.pi * mesh[ax] / domain.lengths[ax])
        fields[which] = GridField(domain, arr + amplitude * mode)
    return State(0.0, fields["u"], fields["v"], fields["w"])


def random_state(
    domain: DomainSpec,
    seed: int,
    offset: float = 0.5,
    amplitude: float = 0.25,
    max_mode: int = 8,
) -> State:
    """Clipped random band-limited initial data, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(3):
        coef = np.zeros(domain.shape)
        if domain.dimension == 1:
            norm = np.arange(domain.grid_sizes[0])
        else:
            norm = np.hypot(
                np.arange(domain.grid_sizes[0])[:, None], np.arange(domain.grid_sizes[1])[None, :]
            )
        mask = (norm >= 1) & (norm <= max_mode)
        coef[mask] = amplitude * rng.standard_normal(int(mask.sum())) / (1.0 + norm[mask])
        coef.flat[0] = offset
        values = np.maximum(to_grid(SpectralField(domain, coef)).values, 0.0)
        fields.append(GridField(domain, values))
    return State(0.0, *fields)


# -- trajectory export --------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Fixed-column CSV: '.' decimal, 17 significant digits, LF line endings."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for j in range(len(traj.times)):
            fh.write(",".join(_fmt(float(traj.column(c)[j])) for c in TRAJECTORY_COLUMNS) + "\n")
