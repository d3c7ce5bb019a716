"""Time integrators: Picard fixed-point solver and split-step reference.

`picard_solve` realizes the mild formulation directly: on each time window
it iterates

    u <- U(.) u(a) + K_det[u] + K_strat[u] + K_stoch[u]

with the three convolution operators discretized by left-endpoint sums in
Fourier space, the cutoff evaluated on the running norm of the current
iterate (chained across windows through raw accumulators), and the sampled
Brownian increments held fixed, so each path is solved deterministically.
A window is accepted only when successive iterates contract at the
configured ratio; otherwise the window is halved, down to a single step.

`splitstep_solve` is the untruncated reference scheme: Strang splitting
with an exactly unitary linear half-step, an exact pointwise phase step for
the power nonlinearity, and an exact phase step for conservative noise
(Euler–Maruyama fallback otherwise), so discrete mass is conserved to
rounding when every sub-step is an isometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import ZPrefix, detect_stopping_time
from .errors import ConfigError, MaxItersExceeded, MeshMismatch, NoContraction
from .exponents import ModelParams, z_exponents
from .grid_field import (
    ComplexField,
    Grid,
    Trajectory,
    lp_norm,
    mass_outside_central_halfbox,
)
from .noise import (
    BrownianPath,
    NoiseModel,
    noise_term,
    sample_brownian_path,
    stratonovich_drift,
)
from .propagator import get_plan
from .specs import build_field, build_noise_model

SCHEMES = ("picard", "splitstep")


@dataclass
class SimConfig:
    """Everything a single-path solve needs, JSON-representable.

    Physical data (params, grid, noise, initial condition, horizon) have no
    defaults; discretization and solver tolerances do.  `truncation_level`
    is the cutoff level of the Picard solver (inf disables the cutoff);
    split-step always solves the untruncated equation and only monitors the
    stopping time against this level.
    """

    params: ModelParams
    grid: Grid
    noise_spec: dict
    ic_spec: dict
    T: float
    dt: float
    scheme: str = "splitstep"
    truncation_level: float = math.inf
    picard_tol: float = 1e-8
    picard_max_iters: int = 60
    contraction_target: float = 0.5
    seed: int = 0
    enable_laplacian: bool = True
    enable_nonlinearity: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigError(f"horizon T must be positive and finite, got {self.T}")
        if not (self.dt > 0 and self.dt <= self.T):
            raise ConfigError(f"dt must lie in (0, T], got {self.dt}")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(steps, 1.0):
            raise ConfigError(f"dt={self.dt} does not divide T={self.T}")
        if not self.truncation_level > 0:
            raise ConfigError(f"truncation level must be positive, got {self.truncation_level}")
        if not 0 < self.contraction_target < 1:
            raise ConfigError(
                f"contraction target must lie in (0, 1), got {self.contraction_target}"
            )
        if self.picard_tol <= 0 or self.picard_max_iters < 1:
            raise ConfigError("picard_tol must be positive and picard_max_iters >= 1")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def mesh(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)


@dataclass
class WindowRecord:
    start: float
    length: float
    iterations: int
    final_ratio: float
    halvings: int = 0

    def as_dict(self) -> dict:
        return {
            "start": self.start,
            "length": self.length,
            "iterations": self.iterations,
            "final_ratio": self.final_ratio,
            "halvings": self.halvings,
        }


@dataclass
class SolveReport:
    """One solved path: trajectory, stopping time and window diagnostics."""

    trajectory: Trajectory
    tau: float
    windows: list
    truncation_ever_active: bool
    scheme: str
    halfbox_leakage: float
    seed: int
    path_index: int
    notes: list = field(default_factory=list)

    def summary_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "tau": self.tau,
            "truncation_ever_active": self.truncation_ever_active,
            "windows": [w.as_dict() for w in self.windows],
            "halfbox_leakage": self.halfbox_leakage,
            "seed": self.seed,
            "path_index": self.path_index,
            "notes": list(self.notes),
        }


def materialize(config: SimConfig):
    """(grid, noise model, initial state) from the config's specs."""
    grid = config.grid
    model = build_noise_model(config.noise_spec, grid)
    u0 = build_field(config.ic_spec, grid)
    return grid, model, u0


def path_for(config: SimConfig, path_index: int = 0, model: NoiseModel | None = None) -> BrownianPath:
    """Brownian path on the config mesh with the model's total mode count."""
    if model is None:
        _, model, _ = materialize(config)
    return sample_brownian_path(config.mesh(), model.total_modes, config.seed, path_index)


def _check_mesh(config: SimConfig, path: BrownianPath) -> np.ndarray:
    mesh = config.mesh()
    if path.mesh.size != mesh.size or not np.allclose(path.mesh, mesh, atol=1e-12):
        raise MeshMismatch(
            f"path mesh ({path.mesh.size} points) does not match config mesh ({mesh.size} points)"
        )
    return mesh


def solve(config: SimConfig, path: BrownianPath | None = None, path_index: int = 0, **kw) -> SolveReport:
    """Dispatch on config.scheme."""
    if config.scheme == "picard":
        return picard_solve(config, path, path_index=path_index, **kw)
    return splitstep_solve(config, path, path_index=path_index, **kw)


# ---------------------------------------------------------------------------
# Split-step reference integrator
# ---------------------------------------------------------------------------


def splitstep_solve(
    config: SimConfig,
    path: BrownianPath | None = None,
    path_index: int = 0,
    model: NoiseModel | None = None,
    u0: ComplexField | None = None,
    keep_states: bool = True,
) -> SolveReport:
    """Strang split step: half linear, nonlinear phase, noise step, half linear.

    The nonlinear and conservative-noise sub-steps are exact pointwise phase
    rotations (|u| invariant); with the unitary linear half-steps every
    sub-step is an isometry on the grid, so discrete mass is conserved to
    rounding.  Non-conservative noise falls back to one Euler–Maruyama step
    with the Itô correction drift.
    """
    grid, built_model, built_u0 = materialize(config)
    model = model if model is not None else built_model
    u0 = u0 if u0 is not None else built_u0
    if path is None:
        path = path_for(config, path_index, model)
    mesh = _check_mesh(config, path)
    params = config.params
    zexp = z_exponents(params)
    plan = get_plan(grid, config.enable_laplacian)
    dt = config.dt
    alpha = float(params.alpha)
    gamma = float(params.gamma)
    lam = params.lam if config.enable_nonlinearity else 0
    half_mult = plan.multiplier(0.5 * dt)
    exact_noise = model.conservative and model.linear_real
    n_e = model.n_modes
    coeffs_real = model.coeffs.real if exact_noise else None
    linear_real = model.linear_coeffs.real if exact_noise else None

    traj = Trajectory.start(u0, zexp, 0.0, keep_states=keep_states)
    leak = mass_outside_central_halfbox(u0)
    v = u0.values.copy()
    notes = _config_notes(config)
    for l in range(config.n_steps):
        v = plan.inverse(half_mult * plan.forward(v))
        if lam:
            v = v * np.exp(-1j * lam * dt * np.abs(v) ** (alpha - 1.0))
        if model.total_modes:
            inc = path.increments[:, l]
            if exact_noise:
                phase = np.zeros(grid.size)
                if n_e:
                    phase = (inc[:n_e] @ coeffs_real) * np.abs(v) ** (gamma - 1.0)
                if model.n_linear_modes:
                    phase = phase + inc[n_e:] @ linear_real
                v = v * np.exp(-1j * phase)
            else:
                u = ComplexField(grid, v)
                v = (
                    v
                    + dt * stratonovich_drift(u, model, gamma, 1.0).values
                    + noise_term(u, model, gamma, 1.0, inc).values
                )
        v = plan.inverse(half_mult * plan.forward(v))
        state = ComplexField(grid, v)
        traj.append(mesh[l + 1], state)
        leak = max(leak, mass_outside_central_halfbox(state))
    tau = detect_stopping_time(traj, config.truncation_level, config.T)
    return SolveReport(
        trajectory=traj,
        tau=tau,
        windows=[],
        truncation_ever_active=False,
        scheme="splitstep",
        halfbox_leakage=leak,
        seed=path.seed,
        path_index=path.path_index,
        notes=notes,
    )


def _config_notes(config: SimConfig) -> list:
    notes = []
    params = config.params
    if params.alpha_critical:
        notes.append("critical nonlinearity: only local existence is guaranteed")
        if params.lam == -1:
            notes.append("focusing critical run: deterministic blow-up data exist")
    if params.gamma_critical:
        notes.append("critical noise power")
    return notes


# ---------------------------------------------------------------------------
# Picard fixed-point solver
# ---------------------------------------------------------------------------


@dataclass
class _WindowAttempt:
    converged: bool
    iterations: int
    ratios: list
    block: np.ndarray | None
    phi_min: float
    diverged: bool = False

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    @property
    def final_ratio(self) -> float:
        return self.ratios[-1] if self.ratios else 0.0


class _PicardDriver:
    def __init__(self, config: SimConfig, model: NoiseModel, u0: ComplexField, path: BrownianPath):
        self.config = config
        self.grid = config.grid
        self.model = model
        self.u0 = u0
        self.path = path
        self.params = config.params
        self.zexp = z_exponents(self.params)
        self.plan = get_plan(self.grid, config.enable_laplacian)
        self.dt = config.dt
        self.alpha = float(self.params.alpha)
        self.gamma = float(self.params.gamma)
        self.lam = self.params.lam if config.enable_nonlinearity else 0
        self.level = config.truncation_level
        self.cell = self.grid.cell_volume
        self.q = float(self.zexp.q)
        self.p1 = float(self.zexp.p1)
        self.p2 = float(self.zexp.p2)
        self.qt = None if not self.zexp.q_tilde_finite else float(self.zexp.q_tilde)
        # E-norm uses the component with the dominant spatial exponent; on a
        # tie the (q, p1) branch wins.
        if self.zexp.p1 >= self.zexp.p2:
            self.qY, self.pY = self.q, self.p1
        else:
            self.qY, self.pY = float(self.zexp.q_tilde), self.p2
        self.mult_dt = self.plan.multiplier(self.dt)
        self.ksq_flat = self.plan.wavenumber_squares.reshape(-1)

    # -- norms -------------------------------------------------------------

    def _lp_rows(self, block_abs: np.ndarray, p: float) -> np.ndarray:
        return (np.sum(block_abs**p, axis=1) * self.cell) ** (1.0 / p)

    def _enorm(self, block: np.ndarray) -> float:
        a = np.abs(block)
        sup_l2 = float(np.max(np.sqrt(np.sum(a * a, axis=1) * self.cell)))
        y_pow = np.sum(self._lp_rows(a[:-1], self.pY) ** self.qY) * self.dt
        return sup_l2 + y_pow ** (1.0 / self.qY)

    # -- cutoff ------------------------------------------------------------

    def _phis(self, block: np.ndarray, prefix: ZPrefix, steps: int) -> np.ndarray:
        """Cutoff values at the window's left mesh points, chained."""
        if math.isinf(self.level):
            return np.ones(steps)
        a = np.abs(block[:steps])
        n1 = self._lp_rows(a, self.p1)
        acc1 = prefix.acc1 + self.dt * np.concatenate(([0.0], np.cumsum(n1**self.q)[:-1]))
        comp1 = np.where(acc1 > 0, acc1, 0.0) ** (1.0 / self.q)
        n2 = self._lp_rows(a, self.p2)
        if self.qt is not None:
            acc2 = prefix.acc2 + self.dt * np.concatenate(([0.0], np.cumsum(n2**self.qt)[:-1]))
            comp2 = np.where(acc2 > 0, acc2, 0.0) ** (1.0 / self.qt)
        else:
            comp2 = np.maximum.accumulate(np.concatenate(([prefix.acc2], n2[:-1])))
        z = comp1 + comp2
        return np.clip(2.0 - z / self.level, 0.0, 1.0)

    # -- one window attempt --------------------------------------------------

    def attempt_window(self, g: int, steps: int, u_start: np.ndarray, prefix: ZPrefix) -> _WindowAttempt:
        """Iterate the window map on [t_g, t_{g+steps}]; fixed increments."""
        cfg = self.config
        size = self.grid.size
        A = self.plan.forward(u_start)
        phases = np.exp(-1j * np.outer(self.dt * np.arange(steps + 1), self.ksq_flat))
        free_block = self.plan.inverse(phases * A[None, :])
        free_block[0] = u_start
        inc = self.path.increments[:, g : g + steps]
        n_e = self.model.n_modes
        # increment-weighted coefficient fields are iteration-independent
        weighted = inc[:n_e].T @ self.model.coeffs if n_e else None
        weighted_lin = (
            inc[n_e:].T @ self.model.linear_coeffs if self.model.n_linear_modes else None
        )
        v = free_block.copy()
        ratios: list = []
        prev_diff = None
        phi_min = 1.0
        for it in range(1, cfg.picard_max_iters + 1):
            phi = self._phis(v, prefix, steps)
            phi_min = min(phi_min, float(phi.min()) if steps else 1.0)
            vl = v[:steps]
            absv = np.abs(vl)
            forcing = np.zeros((steps, size), dtype=np.complex128)
            if self.lam:
                forcing += (-1j * self.lam) * (phi[:, None] * absv ** (self.alpha - 1.0) * vl)
            if n_e:
                forcing += (
                    phi[:, None]
                    * self.model.mu1[None, :]
                    * absv ** (2.0 * (self.gamma - 1.0))
                    * vl
                )
            if self.model.n_linear_modes:
                forcing += self.model.mu2[None, :] * vl
            kick = np.zeros((steps, size), dtype=np.complex128)
            if weighted is not None:
                kick += -1j * (phi[:, None] * weighted * absv ** (self.gamma - 1.0) * vl)
            if weighted_lin is not None:
                kick += -1j * weighted_lin * vl
            src_hat = self.plan.forward(forcing * self.dt + kick)
            conv_hat = np.zeros((steps + 1, size), dtype=np.complex128)
            c = np.zeros(size, dtype=np.complex128)
            for l in range(steps):
                c = self.mult_dt * (c + src_hat[l])
                conv_hat[l + 1] = c
            v_new = self.plan.inverse(phases * A[None, :] + conv_hat)
            v_new[0] = u_start
            diff = self._enorm(v_new - v)
            v = v_new
            if not np.isfinite(diff) or diff > 1e12:
                return _WindowAttempt(False, it, ratios, None, phi_min, diverged=True)
            if prev_diff is not None and prev_diff > 0.0:
                ratios.append(diff / prev_diff)
            if diff < cfg.picard_tol:
                return _WindowAttempt(True, it, ratios, v, phi_min)
            prev_diff = diff
        return _WindowAttempt(False, cfg.picard_max_iters, ratios, None, phi_min)


def picard_solve(
    config: SimConfig,
    path: BrownianPath | None = None,
    path_index: int = 0,
    model: NoiseModel | None = None,
    u0: ComplexField | None = None,
    keep_states: bool = True,
) -> SolveReport:
    """Mild-solution fixed point with adaptive window chaining.

    Windows shrink by halving until the iteration both converges below
    `picard_tol` in the discrete sup-L^2 + Y norm and contracts with every
    observed ratio <= `contraction_target`.  Raises NoContraction when a
    single-step window still fails to contract, MaxItersExceeded when a
    single-step window contracts but cannot reach the tolerance.
    """
    grid, built_model, built_u0 = materialize(config)
    model = model if model is not None else built_model
    u0 = u0 if u0 is not None else built_u0
    if path is None:
        path = path_for(config, path_index, model)
    mesh = _check_mesh(config, path)
    driver = _PicardDriver(config, model, u0, path)
    K = config.n_steps

    traj = Trajectory.start(u0, driver.zexp, 0.0, keep_states=True)
    prefix = ZPrefix.zero(driver.zexp.q_tilde_finite)
    windows: list = []
    leak = mass_outside_central_halfbox(u0)
    ever_active = False
    g = 0
    win = K
    u_start = u0.values
    while g < K:
        steps = min(win, K - g)
        halvings = 0
        while True:
            attempt = driver.attempt_window(g, steps, u_start, prefix)
            ok = attempt.converged and attempt.max_ratio <= config.contraction_target
            if ok:
                break
            if steps > 1:
                steps = steps // 2
                halvings += 1
                continue
            contracting = (
                not attempt.diverged
                and attempt.max_ratio <= config.contraction_target
                and attempt.ratios
            )
            if not attempt.converged and contracting:
                raise MaxItersExceeded(
                    f"window at t={mesh[g]:.6g} contracts but missed tolerance "
                    f"{config.picard_tol} within {config.picard_max_iters} iterations",
                    window_start=mesh[g],
                    iterations=attempt.iterations,
                )
            raise NoContraction(
                f"no contracting window at t={mesh[g]:.6g}: single-step ratios {attempt.ratios[-3:]}",
                window_start=mesh[g],
                window_steps=steps,
                ratios=attempt.ratios,
            )
        block = attempt.block
        phi_accepted = driver._phis(block, prefix, steps)
        ever_active = ever_active or bool(np.min(phi_accepted) < 1.0)
        for j in range(1, steps + 1):
            state = ComplexField(grid, block[j])
            traj.append(mesh[g + j], state)
            leak = max(leak, mass_outside_central_halfbox(state))
        prefix = ZPrefix.of(traj)
        windows.append(
            WindowRecord(
                start=float(mesh[g]),
                length=steps * config.dt,
                iterations=attempt.iterations,
                final_ratio=attempt.final_ratio,
                halvings=halvings,
            )
        )
        u_start = block[steps]
        g += steps
        win = min(2 * steps, K)
    tau = detect_stopping_time(traj, config.truncation_level, config.T)
    if not keep_states:
        traj.states = [None] * len(traj.states)
        traj.keep_states = False
    return SolveReport(
        trajectory=traj,
        tau=tau,
        windows=windows,
        truncation_ever_active=ever_active,
        scheme="picard",
        halfbox_leakage=leak,
        seed=path.seed,
        path_index=path.path_index,
        notes=_config_notes(config),
    )


def path_coincidence_check(config: SimConfig, path: BrownianPath, levels) -> float:
    """Max relative L^2 gap, up to the lower level's stopping time, between
    Picard solves at two cutoff levels on the same Brownian path."""
    n1, n2 = levels
    if not n1 < n2:
        raise ConfigError(f"levels must increase, got {levels}")
    rep1 = picard_solve(replace(config, scheme="picard", truncation_level=float(n1)), path)
    rep2 = picard_solve(replace(config, scheme="picard", truncation_level=float(n2)), path)
    t1, t2 = rep1.trajectory, rep2.trajectory
    worst = 0.0
    for j, t in enumerate(t1.times):
        if t > rep1.tau + 1e-12:
            break
        a = t1.state_at_index(j)
        b = t2.state_at_index(j)
        denom = max(lp_norm(a, 2), 1e-300)
        worst = max(worst, lp_norm(a - b, 2) / denom)
    return worst
