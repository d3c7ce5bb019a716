"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Every criterion is property-based and runs at desk scale with fixed seeds;
tolerances are pinned here, not calibrated elsewhere.  Run with `pytest -s
tests/test_acceptance.py` to see the per-criterion lines.
"""

import math
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np

from snls.dynamics import ZPrefix, chained_z_value, theta
from snls.exponents import (
    ModelParams,
    bootstrap_exponents,
    strichartz_pair,
    strichartz_q,
    z_exponents,
)
from snls.grid_field import (
    Grid,
    Trajectory,
    bochner_norm,
    gaussian_field,
    lp_norm,
    mass_outside_central_halfbox,
    random_field,
    z_process,
)
from snls.montecarlo import chebyshev_consistency, truncation_uniformity_study
from snls.noise import coarsen_path, diffusion_only_exact, euler_maruyama_diffusion, make_noise_model, sample_brownian_path
from snls.propagator import free_evolve
from snls.solver import SimConfig, materialize, path_coincidence_check, picard_solve, splitstep_solve


def _report(name: str, ok: bool, detail: str, elapsed: float, budget: float):
    line = f"{'PASS' if ok and elapsed < budget else 'FAIL'} {name}: {detail} [{elapsed:.1f}s < {budget:.0f}s]"
    print(line)
    assert ok, line
    assert elapsed < budget, line


def test_criterion_1_exponent_algebra():
    """Scaling identity exact on the (d, alpha) grid; pairs coincide at the
    critical power."""
    t0 = time.monotonic()
    ok = True
    count = 0
    for d in (1, 2, 3):
        for k in range(1, 32 // d + 1):
            alpha = 1 + Fraction(k, 8)
            if alpha > 1 + Fraction(4, d):
                continue
            count += 1
            pair = strichartz_pair(alpha + 1, d)
            ok &= 2 / pair.q + Fraction(d) / (alpha + 1) - Fraction(d, 2) == 0
            if alpha == 1 + Fraction(4, d):
                ok &= pair.q == alpha + 1
    for d in (1, 2, 3):
        ok &= strichartz_q(1 + Fraction(4, d) + 1, d) == 1 + Fraction(4, d) + 1
    _report("criterion-1-exponents", ok, f"exact rational identity on {count} grid points", time.monotonic() - t0, 1.0)


def test_criterion_2_propagator():
    """Unitarity and group-law residuals < 1e-12 on 1000 random fields
    (d=1, n=512); free-Gaussian sup-norm decay slope in [-0.55, -0.45]."""
    t0 = time.monotonic()
    grid = Grid(d=1, n=512, L=64.0)
    rng = np.random.default_rng(2024)
    worst_u = worst_g = 0.0
    for _ in range(1000):
        f = random_field(grid, rng)
        t = float(rng.uniform(-2.0, 2.0))
        s = float(rng.uniform(-2.0, 2.0))
        n0 = lp_norm(f, 2)
        worst_u = max(worst_u, abs(lp_norm(free_evolve(f, t), 2) - n0) / n0)
        worst_g = max(worst_g, lp_norm(free_evolve(free_evolve(f, s), t) - free_evolve(f, s + t), 2) / n0)
    wide = Grid(d=1, n=2048, L=512.0)
    u0 = gaussian_field(wide, 1.0, 1.0)  # width 1: exp(-x^2/(4a)) with a = 1/2
    ts = np.linspace(2.0, 10.0, 9)
    sups = []
    leak_ok = True
    for t in ts:
        ut = free_evolve(u0, float(t))
        leak_ok &= mass_outside_central_halfbox(ut) < 1e-8
        sups.append(lp_norm(ut, math.inf))
    slope = float(np.polyfit(np.log(ts), np.log(sups), 1)[0])
    ok = worst_u < 1e-12 and worst_g < 1e-12 and -0.55 <= slope <= -0.45 and leak_ok
    _report(
        "criterion-2-propagator",
        ok,
        f"unitarity {worst_u:.2e}, group-law {worst_g:.2e}, decay slope {slope:.3f}",
        time.monotonic() - t0,
        30.0,
    )


def test_criterion_3_sde_oracle():
    """Euler-Maruyama converges strongly to the exact diffusion-only flow
    with fitted order 0.5 +- 0.1 over dt in {2^-6..2^-10} T, 100 paths,
    gamma in {1, 2}."""
    t0 = time.monotonic()
    grid = Grid(d=1, n=64, L=16.0)
    e = gaussian_field(grid, amplitude=0.5, width=2.0)
    model = make_noise_model([e], [], grid)
    u0 = gaussian_field(grid, amplitude=2.0, width=2.0)
    T = 1.0
    fine = 2**10
    slopes = {}
    ok = True
    for gamma in (1.0, 2.0):
        errs = []
        for k in (6, 7, 8, 9, 10):
            per_path = []
            for pi in range(100):
                path = sample_brownian_path(np.linspace(0.0, T, fine + 1), 1, 11, pi)
                em = euler_maruyama_diffusion(u0, model, gamma, coarsen_path(path, fine // 2**k))
                exact = diffusion_only_exact(u0, model, gamma, path, T)
                per_path.append(lp_norm(em - exact, 2))
            errs.append(float(np.mean(per_path)))
        slope = float(np.polyfit([-6, -7, -8, -9, -10], np.log2(errs), 1)[0])
        slopes[gamma] = slope
        ok &= 0.4 <= slope <= 0.6
    _report(
        "criterion-3-sde-oracle",
        ok,
        f"strong orders gamma=1: {slopes[1.0]:.3f}, gamma=2: {slopes[2.0]:.3f}",
        time.monotonic() - t0,
        120.0,
    )


def _mass_cfg(gamma: Fraction, dt: float, scheme: str) -> SimConfig:
    return SimConfig(
        params=ModelParams(d=1, alpha=Fraction(3), gamma=gamma, lam=1),
        grid=Grid(d=1, n=128, L=32.0),
        noise_spec={"coefficients": [{"kind": "gaussian_bump", "amplitude": 0.5, "width": 3.0}]},
        ic_spec={"kind": "gaussian_bump", "amplitude": 1.0, "width": 2.0},
        T=1.0,
        dt=dt,
        scheme=scheme,
        seed=4,
    )


def test_criterion_4_mass_law():
    """Split-step conserves discrete mass to < 1e-10 relative over 1e3
    steps on 20 paths (gamma 1 and 3/2); the Picard sup-mass overshoot
    above ||u0||_2 shrinks at measured order >= 0.5 under dt-halving."""
    t0 = time.monotonic()
    worst_drift = 0.0
    for gamma in (Fraction(1), Fraction(3, 2)):
        cfg = _mass_cfg(gamma, 1.0 / 1000.0, "splitstep")
        for pi in range(20):
            rep = splitstep_solve(cfg, path_index=pi)
            m = np.asarray(rep.trajectory.running_mass)
            worst_drift = max(worst_drift, float(np.max(np.abs(m - m[0])) / m[0]))
    drift_ok = worst_drift < 1e-10

    fine = 512
    fine_mesh = np.linspace(0.0, 1.0, fine + 1)
    overshoots = []
    steps_list = (64, 128, 256, 512)
    for steps in steps_list:
        # weak noise so the deterministic quadrature error sets the rate;
        # the stochastic contribution alone would sit exactly at order 1/2
        cfg = replace(
            _mass_cfg(Fraction(1), 1.0 / steps, "picard"),
            noise_spec={"coefficients": [{"kind": "gaussian_bump", "amplitude": 0.1, "width": 3.0}]},
        )
        _, model, _ = materialize(cfg)
        per_path = []
        for pi in range(16):
            path = coarsen_path(sample_brownian_path(fine_mesh, model.total_modes, 5, pi), fine // steps)
            rep = picard_solve(cfg, path)
            m = np.asarray(rep.trajectory.running_mass)
            per_path.append(max(0.0, float(m.max() / m[0]) - 1.0))
        overshoots.append(float(np.mean(per_path)))
    if max(overshoots) < 1e-12:
        order = math.inf  # no overshoot at all: the inequality holds outright
    else:
        order = float(np.polyfit(np.log2([1.0 / s for s in steps_list]), np.log2(overshoots), 1)[0])
    ok = drift_ok and order >= 0.5
    _report(
        "criterion-4-mass-law",
        ok,
        f"max split-step drift {worst_drift:.2e}, overshoot order {order:.3f}",
        time.monotonic() - t0,
        180.0,
    )


def test_criterion_5_cross_validation():
    """Picard (cutoff inactive) vs split-step on identical increments:
    path-averaged relative L2 gap at T decreases at order >= 0.5 over four
    dt levels."""
    t0 = time.monotonic()
    params = ModelParams(d=1, alpha=Fraction(3), gamma=Fraction(1), lam=1)
    grid = Grid(d=1, n=256, L=32.0)
    base = dict(
        params=params,
        grid=grid,
        noise_spec={"coefficients": [{"kind": "gaussian_bump", "amplitude": 0.2, "width": 3.0}]},
        ic_spec={"kind": "gaussian_bump", "amplitude": 1.0, "width": 2.0},
        T=1.0,
        seed=3,
    )
    steps_list = (32, 64, 128, 256)
    fine = steps_list[-1]
    means = []
    for steps in steps_list:
        gaps = []
        for pi in range(12):
            fine_path = sample_brownian_path(np.linspace(0.0, 1.0, fine + 1), 1, 3, pi)
            path = coarsen_path(fine_path, fine // steps)
            ss = splitstep_solve(SimConfig(**base, dt=1.0 / steps), path)
            pic = picard_solve(SimConfig(**base, dt=1.0 / steps, scheme="picard"), path)
            a = ss.trajectory.state_at_index(-1)
            b = pic.trajectory.state_at_index(-1)
            gaps.append(lp_norm(a - b, 2) / lp_norm(a, 2))
        means.append(float(np.mean(gaps)))
    order = float(np.polyfit(np.log2([1.0 / s for s in steps_list]), np.log2(means), 1)[0])
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    ok = order >= 0.5 and decreasing
    _report(
        "criterion-5-cross-validation",
        ok,
        f"mean gaps {['%.2e' % g for g in means]}, order {order:.3f}",
        time.monotonic() - t0,
        300.0,
    )


def test_criterion_6_localization():
    """Picard runs at cutoff levels (n, 2n) on the same path coincide up to
    tau_n within 10 * picard_tol, on 20 paths."""
    t0 = time.monotonic()
    cfg = SimConfig(
        params=ModelParams(d=1, alpha=Fraction(3), gamma=Fraction(1), lam=1),
        grid=Grid(d=1, n=128, L=32.0),
        noise_spec={"coefficients": [{"kind": "gaussian_bump", "amplitude": 0.5, "width": 3.0}]},
        ic_spec={"kind": "gaussian_bump", "amplitude": 1.2, "width": 2.0},
        T=1.0,
        dt=1.0 / 64.0,
        scheme="picard",
        picard_tol=1e-8,
        seed=42,
    )
    _, model, _ = materialize(cfg)
    worst = 0.0
    interior_taus = 0
    for pi in range(20):
        path = sample_brownian_path(cfg.mesh(), model.total_modes, cfg.seed, pi)
        worst = max(worst, path_coincidence_check(cfg, path, (3.5, 7.0)))
        rep = picard_solve(replace(cfg, truncation_level=3.5), path)
        if 0.0 < rep.tau < cfg.T:
            interior_taus += 1
    ok = worst <= 10 * cfg.picard_tol and interior_taus > 0
    _report(
        "criterion-6-localization",
        ok,
        f"max discrepancy {worst:.2e} <= {10 * cfg.picard_tol:.0e}; {interior_taus}/20 paths stop inside (0, T)",
        time.monotonic() - t0,
        120.0,
    )


def test_criterion_7_global_existence_shadow():
    """Defocusing d=1, alpha=2, gamma=1, conservative noise, 200 paths:
    P(tau_n = T) non-decreasing over n in {4, 8, 16}, >= 0.95 at n = 16;
    the Markov/Chebyshev consistency check passes."""
    t0 = time.monotonic()
    cfg = SimConfig(
        params=ModelParams(d=1, alpha=Fraction(2), gamma=Fraction(1), lam=1),
        grid=Grid(d=1, n=128, L=32.0),
        noise_spec={"coefficients": [{"kind": "gaussian_bump", "amplitude": 0.4, "width": 3.0}]},
        ic_spec={"kind": "gaussian_bump", "amplitude": 1.2, "width": 2.0},
        T=1.0,
        dt=1.0 / 64.0,
        scheme="picard",
        seed=2024,
    )
    study = truncation_uniformity_study(cfg, [4.0, 8.0, 16.0], 200, seed=2024)
    freqs = [s.tau_equals_T_frequency for s in study.summaries]
    monotone = all(b >= a for a, b in zip(freqs, freqs[1:]))
    cheb = chebyshev_consistency(study.summaries[-1], [4.0, 8.0, 16.0])
    cheb_ok = bool(cheb) and all(r["ok"] for r in cheb)
    no_failures = all(s.n_failed == 0 for s in study.summaries)
    ok = monotone and freqs[-1] >= 0.95 and cheb_ok and no_failures
    _report(
        "criterion-7-global-existence",
        ok,
        f"frequencies {['%.3f' % f for f in freqs]} over n=4,8,16; chebyshev ok={cheb_ok}",
        time.monotonic() - t0,
        600.0,
    )


def test_criterion_8_truncation_machinery():
    """Cutoff Lipschitz bound holds on 1e4 random pairs; the two-window
    chaining identity matches the concatenated-trajectory oracle to 1e-12
    on 50 cases."""
    t0 = time.monotonic()
    rng = np.random.default_rng(88)
    lip_ok = True
    for _ in range(10**4):
        level = float(rng.uniform(0.05, 10.0))
        x, y = rng.uniform(0.0, 3.5 * level, size=2)
        lip_ok &= abs(theta(x, level) - theta(y, level)) <= abs(x - y) / level + 1e-15
    grid = Grid(d=1, n=32, L=8.0)
    params = ModelParams(d=1, alpha=Fraction(3), gamma=Fraction(3, 2), lam=1)
    zx = z_exponents(params)
    worst = 0.0
    for case in range(50):
        case_rng = np.random.default_rng(900 + case)
        n_total = int(case_rng.integers(4, 12))
        split = int(case_rng.integers(1, n_total))
        times = np.concatenate([[0.0], np.cumsum(case_rng.uniform(0.05, 0.3, size=n_total))])
        states = [random_field(grid, case_rng) for _ in range(n_total + 1)]
        full = Trajectory.start(states[0], zx)
        for j in range(1, n_total + 1):
            full.append(float(times[j]), states[j])
        head = Trajectory.start(states[0], zx)
        for j in range(1, split + 1):
            head.append(float(times[j]), states[j])
        prefix = ZPrefix.of(head)
        window = Trajectory.start(states[split], zx)
        for j in range(split + 1, n_total + 1):
            window.append(float(times[j] - times[split]), states[j])
        for j in range(split, n_total + 1):
            z_c = chained_z_value(prefix, window, float(times[j] - times[split]))
            z_f = z_process(full, float(times[j]))
            worst = max(worst, abs(z_c - z_f) / max(abs(z_f), 1e-30))
    ok = lip_ok and worst < 1e-12
    _report(
        "criterion-8-truncation",
        ok,
        f"lipschitz ok={lip_ok}, chaining max relative gap {worst:.2e}",
        time.monotonic() - t0,
        10.0,
    )


def test_criterion_9_discrete_interpolation():
    """The discrete Lyapunov/Hoelder chain holds with zero violations on
    100 random trajectories:
    ||u||_{Lqt L2g}^qt <= (sup_s ||u||_2)^(qt(1-th)) ||u||_{Lq Lp1}^(qt th)."""
    t0 = time.monotonic()
    grid = Grid(d=1, n=64, L=8.0)
    rng = np.random.default_rng(9)
    violations = 0
    cases = 0
    for _ in range(100):
        d_alpha = int(rng.integers(9, 33))  # alpha in (1, 5] on a 1/8 grid
        alpha = Fraction(d_alpha, 8)
        hi = min(Fraction(3), (alpha + 1) / 2)  # gamma <= 1 + 2/d and 2g <= a+1
        if hi <= 1:
            continue
        gamma = 1 + (hi - 1) * Fraction(int(rng.integers(1, 9)), 9)
        params = ModelParams(d=1, alpha=alpha, gamma=gamma, lam=1)
        zx = z_exponents(params)
        th = float(bootstrap_exponents(params).theta_interp)
        qt = float(zx.q_tilde)
        n_states = int(rng.integers(3, 9))
        states = [random_field(grid, rng) for _ in range(n_states)]
        times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.05, 0.4, size=n_states - 1))])
        traj = Trajectory.start(states[0], zx)
        for t, s in zip(times[1:], states[1:]):
            traj.append(float(t), s)
        t_end = float(times[-1])
        lhs = bochner_norm(traj, qt, float(zx.p2), t_end) ** qt
        sup_mass = max(lp_norm(s, 2) for s in states[:-1])
        rhs = sup_mass ** (qt * (1 - th)) * bochner_norm(traj, float(zx.q), float(zx.p1), t_end) ** (qt * th)
        cases += 1
        if lhs > rhs * (1 + 1e-12):
            violations += 1
    ok = violations == 0 and cases >= 90
    _report(
        "criterion-9-interpolation",
        ok,
        f"{violations} violations on {cases} random trajectories",
        time.monotonic() - t0,
        10.0,
    )
