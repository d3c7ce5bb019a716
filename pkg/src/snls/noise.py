"""Finite-mode multiplicative noise: coefficients, paths, drifts, oracle.

The noise consists of M bounded coefficient fields e_m acting through
|u|^(gamma-1) u, plus an optional family of bounded multiplier fields b_m
acting linearly.  The Itô form of the dynamics carries the correction drift

    -1/2 (sum_m |e_m|^2) phi |u|^(2(gamma-1)) u  -  1/2 (sum_m |b_m|^2) u,

and the noise increment

    -i (sum_m e_m dbeta_m) phi |u|^(gamma-1) u  -  i (sum_m b_m dbeta'_m) u.

For real coefficients ("conservative" noise) the combined flow with the
Laplacian and the power nonlinearity switched off is solved exactly by a
pointwise phase rotation; `diffusion_only_exact` below is the package's
strongest oracle.

Brownian increments are generated with the counter-based Philox generator,
keyed by (seed, path index, mode), so every increment is a pure function of
its address and results are bitwise reproducible under any execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    GridMismatch,
    LengthMismatch,
    NotConservative,
    OutOfRange,
    UnboundedCoefficient,
)
from .grid_field import ComplexField, Grid

_REAL_TOL = 1e-14


@dataclass(frozen=True)
class NoiseModel:
    """Coefficient fields e_m (and linear multipliers b_m) on one grid.

    `coeffs` has shape (M, grid.size), `linear_coeffs` (M', grid.size);
    either may be empty.  `conservative` is True iff every e_m is real
    valued to 1e-14.  The discrete summability sums sum_m ||e_m||_inf^2 and
    sum_m ||b_m||_inf^2 are precomputed, as are the correction-drift fields
    mu1 = -1/2 sum |e_m|^2 and mu2 = -1/2 sum |b_m|^2.
    """

    grid: Grid
    coeffs: np.ndarray
    linear_coeffs: np.ndarray
    conservative: bool
    linear_real: bool
    sum_sq_sup_e: float
    sum_sq_sup_b: float
    mu1: np.ndarray
    mu2: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_linear_modes(self) -> int:
        return self.linear_coeffs.shape[0]

    @property
    def total_modes(self) -> int:
        return self.n_modes + self.n_linear_modes


def make_noise_model(coeffs, linear_coeffs=(), grid: Grid | None = None) -> NoiseModel:
    """Build a NoiseModel from ComplexFields or flat arrays of coefficients."""
    coeffs = list(coeffs)
    linear_coeffs = list(linear_coeffs)
    inferred = None
    for c in coeffs + linear_coeffs:
        if isinstance(c, ComplexField):
            inferred = c.grid
            break
    grid = grid or inferred
    if grid is None:
        raise GridMismatch("grid must be given when coefficients are raw arrays")

    def to_rows(items) -> list[np.ndarray]:
        rows = []
        for c in items:
            if isinstance(c, ComplexField):
                if c.grid != grid:
                    raise GridMismatch("coefficient grid differs from model grid")
                rows.append(np.asarray(c.values, dtype=np.complex128))
            else:
                rows.append(np.ascontiguousarray(c, dtype=np.complex128).reshape(-1))
        return rows

    e_rows = to_rows(coeffs)
    b_rows = to_rows(linear_coeffs)
    for row in e_rows + b_rows:
        if row.size != grid.size:
            raise GridMismatch("coefficient length does not match grid")
        if not np.all(np.isfinite(row.view(np.float64))):
            raise UnboundedCoefficient("coefficient contains NaN or Inf")
    e = np.array(e_rows, dtype=np.complex128).reshape(len(e_rows), grid.size)
    b = np.array(b_rows, dtype=np.complex128).reshape(len(b_rows), grid.size)
    e.setflags(write=False)
    b.setflags(write=False)
    conservative = bool(np.all(np.abs(e.imag) <= _REAL_TOL)) if e.size else True
    linear_real = bool(np.all(np.abs(b.imag) <= _REAL_TOL)) if b.size else True
    sum_e = float(np.sum(np.max(np.abs(e), axis=1) ** 2)) if e.size else 0.0
    sum_b = float(np.sum(np.max(np.abs(b), axis=1) ** 2)) if b.size else 0.0
    mu1 = -0.5 * np.sum(np.abs(e) ** 2, axis=0) if e.size else np.zeros(grid.size)
    mu2 = -0.5 * np.sum(np.abs(b) ** 2, axis=0) if b.size else np.zeros(grid.size)
    mu1.setflags(write=False)
    mu2.setflags(write=False)
    return NoiseModel(
        grid=grid,
        coeffs=e,
        linear_coeffs=b,
        conservative=conservative,
        linear_real=linear_real,
        sum_sq_sup_e=sum_e,
        sum_sq_sup_b=sum_b,
        mu1=mu1,
        mu2=mu2,
    )


def empty_noise_model(grid: Grid) -> NoiseModel:
    return make_noise_model([], [], grid)


# ---------------------------------------------------------------------------
# Brownian paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BrownianPath:
    """Gaussian increments dbeta_m(t_l) ~ N(0, dt_l) on a fixed mesh.

    `increments` has shape (M, len(mesh)-1); independent across modes and
    steps; bitwise reproducible from (seed, path_index).
    """

    mesh: np.ndarray
    increments: np.ndarray
    seed: int
    path_index: int

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1]

    def cumulative(self) -> np.ndarray:
        """beta_m at mesh points: shape (M, len(mesh)); beta_m(mesh[0]) = 0."""
        M = self.increments.shape[0]
        out = np.zeros((M, self.mesh.size))
        np.cumsum(self.increments, axis=1, out=out[:, 1:])
        return out


def sample_brownian_path(mesh, M: int, seed: int, path_index: int) -> BrownianPath:
    """Counter-addressed increments: mode m uses Philox at counter

        (0, 0, path_index, m) with key (seed, 0),

    so distinct (path, mode) streams occupy disjoint counter blocks and the
    full path is a pure function of (seed, path_index).
    """
    mesh = np.asarray(mesh, dtype=float)
    if mesh.ndim != 1:
        raise OutOfRange("mesh must be one-dimensional")
    if mesh.size >= 2 and not np.all(np.diff(mesh) > 0):
        raise OutOfRange("mesh must be strictly increasing")
    if seed < 0 or path_index < 0:
        raise OutOfRange("seed and path_index must be nonnegative")
    steps = max(mesh.size - 1, 0)
    increments = np.empty((M, steps))
    if steps and M:
        sqrt_dt = np.sqrt(np.diff(mesh))
        for m in range(M):
            bitgen = np.random.Philox(
                counter=np.array([0, 0, path_index, m], dtype=np.uint64),
                key=np.array([seed, 0], dtype=np.uint64),
            )
            gauss = np.random.Generator(bitgen).standard_normal(steps)
            increments[m] = gauss * sqrt_dt
    increments.setflags(write=False)
    mesh = mesh.copy()
    mesh.setflags(write=False)
    return BrownianPath(mesh=mesh, increments=increments, seed=seed, path_index=path_index)


def coarsen_path(path: BrownianPath, factor: int) -> BrownianPath:
    """Same Brownian motion on a mesh thinned by `factor` (increments summed)."""
    if factor < 1 or path.n_steps % factor != 0:
        raise OutOfRange(f"factor {factor} does not divide {path.n_steps} steps")
    mesh = path.mesh[::factor].copy()
    inc = path.increments.reshape(path.increments.shape[0], -1, factor).sum(axis=2)
    inc.setflags(write=False)
    mesh.setflags(write=False)
    return replace(path, mesh=mesh, increments=inc)


def negate_path(path: BrownianPath) -> BrownianPath:
    inc = -path.increments
    inc.setflags(write=False)
    return replace(path, increments=inc)


# ---------------------------------------------------------------------------
# Drift, diffusion and the exact diffusion-only solution
# ---------------------------------------------------------------------------


def _check_model_grid(u: ComplexField, model: NoiseModel) -> None:
    if u.grid != model.grid:
        raise GridMismatch("field grid differs from noise-model grid")


def stratonovich_drift(
    u: ComplexField, model: NoiseModel, gamma, phi: float = 1.0
) -> ComplexField:
    """Correction drift mu1 phi |u|^(2(gamma-1)) u + mu2 u, pointwise."""
    _check_model_grid(u, model)
    g = float(gamma)
    v = u.values
    out = model.mu2 * v
    if model.n_modes:
        out = out + model.mu1 * phi * np.abs(v) ** (2.0 * (g - 1.0)) * v
    return ComplexField(u.grid, out)


def noise_term(
    u: ComplexField, model: NoiseModel, gamma, phi: float, increments_at_step
) -> ComplexField:
    """-i sum_m e_m phi |u|^(gamma-1) u dbeta_m - i sum_m b_m u dbeta'_m."""
    _check_model_grid(u, model)
    inc = np.asarray(increments_at_step, dtype=float)
    if inc.shape != (model.total_modes,):
        raise LengthMismatch(
            f"expected {model.total_modes} increments, got shape {inc.shape}"
        )
    g = float(gamma)
    v = u.values
    out = np.zeros(u.grid.size, dtype=np.complex128)
    if model.n_modes:
        weighted = inc[: model.n_modes] @ model.coeffs
        out += -1j * phi * weighted * np.abs(v) ** (g - 1.0) * v
    if model.n_linear_modes:
        weighted_b = inc[model.n_modes :] @ model.linear_coeffs
        out += -1j * weighted_b * v
    return ComplexField(u.grid, out)


def diffusion_only_exact(
    u0: ComplexField, model: NoiseModel, gamma, path: BrownianPath, t: float
) -> ComplexField:
    """Exact pathwise solution with Laplacian and power nonlinearity off:

        u(t, x) = u0(x) exp(-i sum_m e_m(x) |u0(x)|^(gamma-1) beta_m(t)).

    Valid for conservative noise without a linear part, where the flow is a
    pure pointwise phase rotation and |u(t, x)| = |u0(x)| exactly.
    """
    _check_model_grid(u0, model)
    if not model.conservative or model.n_linear_modes:
        raise NotConservative(
            "exact diffusion-only solution requires real e_m and no linear part"
        )
    if path.increments.shape[0] != model.n_modes:
        raise LengthMismatch(
            f"path carries {path.increments.shape[0]} modes, model has {model.n_modes}"
        )
    g = float(gamma)
    mask = path.mesh[:-1] < t
    beta_t = path.increments[:, mask].sum(axis=1) if path.n_steps else np.zeros(model.n_modes)
    phase = (beta_t @ model.coeffs.real) * np.abs(u0.values) ** (g - 1.0)
    return ComplexField(u0.grid, u0.values * np.exp(-1j * phase))


def euler_maruyama_diffusion(
    u0: ComplexField, model: NoiseModel, gamma, path: BrownianPath
) -> ComplexField:
    """Euler–Maruyama march of the diffusion-only Itô dynamics to mesh end.

    One step: u += stratonovich_drift(u) dt + noise_term(u, dbeta).
    Reference scheme for strong-order checks against `diffusion_only_exact`.
    """
    _check_model_grid(u0, model)
    u = u0
    for l in range(path.n_steps):
        dt = path.mesh[l + 1] - path.mesh[l]
        drift = stratonovich_drift(u, model, gamma, 1.0)
        kick = noise_term(u, model, gamma, 1.0, path.increments[:, l])
        u = ComplexField(u.grid, u.values + dt * drift.values + kick.values)
    return u


def heun_stratonovich_diffusion(
    u0: ComplexField, model: NoiseModel, gamma, path: BrownianPath
) -> ComplexField:
    """Stratonovich–Heun march of the diffusion-only dynamics (no drift).

    Predictor-corrector on du = -i sum_m e_m |u|^(gamma-1) u o dbeta_m;
    used to re-verify the closed form of `diffusion_only_exact`.
    """
    _check_model_grid(u0, model)
    g = float(gamma)

    def b(v: np.ndarray, inc: np.ndarray) -> np.ndarray:
        weighted = inc[: model.n_modes] @ model.coeffs
        out = -1j * weighted * np.abs(v) ** (g - 1.0) * v
        if model.n_linear_modes:
            out += -1j * (inc[model.n_modes :] @ model.linear_coeffs) * v
        return out

    v = u0.values.copy()
    for l in range(path.n_steps):
        inc = path.increments[:, l]
        k1 = b(v, inc)
        k2 = b(v + k1, inc)
        v = v + 0.5 * (k1 + k2)
    return ComplexField(u0.grid, v)
