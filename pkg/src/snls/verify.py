"""Named invariant suites behind the `verify` CLI subcommand.

Every suite runs with fixed seeds and desk-scale sizes and returns a
machine-readable record; a suite passes iff all of its checks pass.
Available suites: unitarity, mass, oracle-sde, strichartz, truncation,
exponents, all.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import exponents as xp
from .dynamics import ZPrefix, chained_z_value, theta
from .grid_field import (
    ComplexField,
    Grid,
    Trajectory,
    gaussian_field,
    lp_norm,
    random_field,
    z_process,
)
from .noise import (
    coarsen_path,
    diffusion_only_exact,
    euler_maruyama_diffusion,
    make_noise_model,
    sample_brownian_path,
)
from .propagator import estimate_strichartz_constant, free_evolve, get_plan
from .solver import SimConfig, splitstep_solve


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def suite_exponents() -> list[dict]:
    checks = []
    residual_ok = True
    critical_ok = True
    for d in (1, 2, 3):
        for k in range(1, 32 // d + 1):
            alpha = 1 + Fraction(k, 8)
            if alpha > 1 + Fraction(4, d):
                continue
            pair = xp.strichartz_pair(alpha + 1, d)
            if pair.scaling_residual() != 0:
                residual_ok = False
            if alpha == 1 + Fraction(4, d) and pair.q != alpha + 1:
                critical_ok = False
    checks.append(_check("scaling-identity-exact", residual_ok, "2/q + d/p = d/2 on the (d, alpha) grid"))
    for d in range(1, 7):
        alpha = 1 + Fraction(4, d)
        if xp.strichartz_q(alpha + 1, d) != alpha + 1:
            critical_ok = False
    checks.append(_check("critical-pair-coincides", critical_ok, "q = alpha + 1 at alpha = 1 + 4/d, d = 1..6"))

    bound_ok = True
    rng = np.random.default_rng(7)
    count = 0
    while count < 100:
        d = int(rng.integers(1, 4))
        num = int(rng.integers(1, 64))
        alpha = 1 + Fraction(num, 16)
        if not alpha < 1 + Fraction(4, d):
            continue
        count += 1
        if not xp.gamma_global_bound(d, alpha) < 1 + Fraction(2, d):
            bound_ok = False
    checks.append(_check("gamma-bound-inside-range", bound_ok, "bound < 1 + 2/d on 100 samples"))

    window_ok = True
    for _ in range(1000):
        d = int(rng.integers(1, 4))
        alpha = 1 + Fraction(int(rng.integers(1, 4 * 16 // d)), 16)
        delta = 1 + Fraction(d) * (1 - alpha) / 4
        if delta <= 0:
            continue
        K = float(rng.uniform(0.01, 50.0))
        C1 = float(rng.uniform(0.1, 10.0))
        T = float(rng.uniform(0.1, 20.0))
        sigma = xp.picard_window_length(K, C1, delta, alpha, T)
        lhs = C1 * sigma ** float(delta) * K ** float(alpha - 1)
        if lhs > 2.0 ** (-float(alpha + 1)) + 1e-15:
            window_ok = False
    checks.append(_check("window-length-inequality", window_ok, "C1 sigma^delta K^(alpha-1) <= 2^-(alpha+1) on 1000 samples"))

    roots_ok = True
    for alpha in (2, 3, 5):
        c1, c2 = xp.dichotomy_roots(Fraction(alpha))
        for c in (c1, c2):
            if abs(1 + c**alpha / 2 ** (alpha + 1) - c) > 1e-10:
                roots_ok = False
        if not (c1 <= 2.0 < c2):
            roots_ok = False
    checks.append(_check("dichotomy-roots", roots_ok, "both roots satisfy x = 1 + x^a/2^(a+1) to 1e-10, c1 <= 2 < c2"))
    return checks


def suite_unitarity() -> list[dict]:
    checks = []
    grid = Grid(d=1, n=512, L=64.0)
    rng = np.random.default_rng(11)
    worst_unit = worst_group = worst_rev = 0.0
    for _ in range(300):
        f = random_field(grid, rng)
        t = float(rng.uniform(-3.0, 3.0))
        s = float(rng.uniform(-3.0, 3.0))
        n0 = lp_norm(f, 2)
        worst_unit = max(worst_unit, abs(lp_norm(free_evolve(f, t), 2) - n0) / n0)
        ab = free_evolve(free_evolve(f, s), t)
        worst_group = max(worst_group, lp_norm(ab - free_evolve(f, s + t), 2) / n0)
        worst_rev = max(worst_rev, lp_norm(free_evolve(free_evolve(f, t), -t) - f, 2) / n0)
    checks.append(_check("unitarity", worst_unit < 1e-12, f"max relative L2 drift {worst_unit:.2e}"))
    checks.append(_check("group-law", worst_group < 1e-12, f"max residual {worst_group:.2e}"))
    checks.append(_check("time-reversal", worst_rev < 1e-12, f"max residual {worst_rev:.2e}"))

    wide = Grid(d=1, n=2048, L=512.0)
    u0 = gaussian_field(wide, 1.0, 1.0)
    ts = np.linspace(2.0, 10.0, 9)
    sups = [lp_norm(free_evolve(u0, float(t)), math.inf) for t in ts]
    slope = float(np.polyfit(np.log(ts), np.log(sups), 1)[0])
    checks.append(_check("dispersive-decay", -0.55 <= slope <= -0.45, f"log-log slope {slope:.4f}"))
    return checks


def _mass_config(gamma: Fraction) -> SimConfig:
    params = xp.ModelParams(d=1, alpha=Fraction(3), gamma=gamma, lam=1)
    return SimConfig(
        params=params,
        grid=Grid(d=1, n=128, L=32.0),
        noise_spec={"coefficients": [{"kind": "gaussian_bump", "amplitude": 0.5, "width": 3.0}]},
        ic_spec={"kind": "gaussian_bump", "amplitude": 1.0, "width": 2.0},
        T=1.0,
        dt=1.0 / 1000.0,
        scheme="splitstep",
        seed=5,
    )


def suite_mass() -> list[dict]:
    checks = []
    for gamma in (Fraction(1), Fraction(3, 2)):
        cfg = _mass_config(gamma)
        worst = 0.0
        for path_index in range(5):
            rep = splitstep_solve(cfg, path_index=path_index)
            m = np.asarray(rep.trajectory.running_mass)
            worst = max(worst, float(np.max(np.abs(m - m[0])) / m[0]))
        checks.append(
            _check(f"splitstep-mass-gamma-{gamma}", worst < 1e-10, f"max relative drift {worst:.2e} over 1000 steps x 5 paths")
        )
    return checks


def suite_oracle_sde() -> list[dict]:
    checks = []
    grid = Grid(d=1, n=64, L=16.0)
    e = gaussian_field(grid, amplitude=0.5, width=2.0)
    model = make_noise_model([e], [], grid)
    u0 = gaussian_field(grid, amplitude=2.0, width=2.0)
    T = 1.0
    fine = 2**10
    for gamma in (1.0, 2.0):
        errs = []
        ks = [6, 7, 8, 9, 10]
        for k in ks:
            per_path = []
            for pi in range(50):
                path = sample_brownian_path(np.linspace(0.0, T, fine + 1), 1, 11, pi)
                em = euler_maruyama_diffusion(u0, model, gamma, coarsen_path(path, fine // 2**k))
                exact = diffusion_only_exact(u0, model, gamma, path, T)
                per_path.append(lp_norm(em - exact, 2))
            errs.append(float(np.mean(per_path)))
        slope = float(np.polyfit([-k for k in ks], np.log2(errs), 1)[0])
        checks.append(
            _check(f"em-strong-order-gamma-{gamma}", 0.4 <= slope <= 0.6, f"fitted order {slope:.3f} over dt in 2^-6..2^-10")
        )
    return checks


def suite_strichartz() -> list[dict]:
    checks = []
    pair = xp.strichartz_pair(4, 1)  # (p, q) = (4, 8) in d = 1
    values = []
    for n in (256, 512, 1024):
        grid = Grid(d=1, n=n, L=64.0)
        u0 = gaussian_field(grid, 1.0, 1.5)
        plan = get_plan(grid)
        mesh = np.linspace(0.0, 1.0, 65)
        total = 0.0
        for l in range(64):
            ul = plan.free_evolve(u0, float(mesh[l]))
            total += lp_norm(ul, 4.0) ** 8.0 * (mesh[l + 1] - mesh[l])
        values.append(total**0.125 / lp_norm(u0, 2))
    spread = max(values) / min(values) - 1.0
    checks.append(
        _check(
            "homogeneous-constant-stable",
            max(values) < 10.0 and spread < 0.05,
            f"ratios {[f'{v:.4f}' for v in values]} across n=256,512,1024 (spread {spread:.2e})",
        )
    )
    grid = Grid(d=1, n=256, L=64.0)
    est = estimate_strichartz_constant(get_plan(grid), samples=20, pair=pair, T=1.0, seed=3)
    checks.append(_check("homogeneous-constant-bounded", est < 10.0, f"empirical lower bound {est:.4f} (never asserted as exact)"))

    # stochastic convolution moment ratio, 200 paths (95%-style convention)
    plan = get_plan(grid)
    g = gaussian_field(grid, 1.0, 1.5)
    mesh = np.linspace(0.0, 1.0, 65)
    mult = [plan.multiplier(float(1.0 - s)) for s in mesh[:-1]]
    ghat = plan.forward(g.values)
    ratios = []
    for pi in range(200):
        path = sample_brownian_path(mesh, 1, 17, pi)
        acc = np.zeros(grid.size, dtype=np.complex128)
        # J(T) = sum_l U(T - t_l) g dbeta(t_l)
        for l in range(64):
            acc += mult[l] * ghat * path.increments[0, l]
        jT = lp_norm(ComplexField(grid, plan.inverse(acc)), 2)
        ratios.append(jT**2)
    lhs = float(np.mean(ratios))
    rhs = 1.0 * lp_norm(g, 2) ** 2  # E ||Phi||^2_{L2(0,T;L2)} = T ||g||^2
    checks.append(
        _check("stochastic-moment-bounded", lhs <= 10.0 * rhs, f"E|J(T)|^2 / E||Phi||^2 = {lhs / rhs:.4f} (MC, 200 paths)")
    )
    return checks


def suite_truncation() -> list[dict]:
    checks = []
    rng = np.random.default_rng(23)
    lip_ok = True
    for _ in range(10**4):
        level = float(rng.uniform(0.1, 10.0))
        x, y = rng.uniform(0.0, 4.0 * level, size=2)
        if abs(theta(x, level) - theta(y, level)) > abs(x - y) / level + 1e-15:
            lip_ok = False
    checks.append(_check("cutoff-lipschitz", lip_ok, "|theta(x)-theta(y)| <= |x-y|/level on 1e4 pairs"))
    exact_ok = all(
        theta(v * 1.0, 1.0) == e for v, e in ((0.0, 1.0), (1.0, 1.0), (1.5, 0.5), (2.0, 0.0), (3.0, 0.0))
    )
    checks.append(_check("cutoff-breakpoints", exact_ok, "exact piecewise values at 0, n, 1.5n, 2n, 3n"))

    grid = Grid(d=1, n=32, L=8.0)
    params = xp.ModelParams(d=1, alpha=Fraction(3), gamma=Fraction(3, 2), lam=1)
    zx = xp.z_exponents(params)
    worst = 0.0
    for case in range(50):
        case_rng = np.random.default_rng(100 + case)
        n_total = int(case_rng.integers(4, 12))
        split = int(case_rng.integers(1, n_total))
        times = np.cumsum(case_rng.uniform(0.05, 0.3, size=n_total + 1))
        times -= times[0]
        states = [random_field(grid, case_rng) for _ in range(n_total + 1)]
        full = Trajectory.start(states[0], zx, 0.0)
        for j in range(1, n_total + 1):
            full.append(float(times[j]), states[j])
        prefix_traj = Trajectory.start(states[0], zx, 0.0)
        for j in range(1, split + 1):
            prefix_traj.append(float(times[j]), states[j])
        prefix = ZPrefix.of(prefix_traj)
        window = Trajectory.start(states[split], zx, 0.0)
        for j in range(split + 1, n_total + 1):
            window.append(float(times[j] - times[split]), states[j])
        for j in range(split, n_total + 1):
            z_chain = chained_z_value(prefix, window, float(times[j] - times[split]))
            z_full = z_process(full, float(times[j]))
            worst = max(worst, abs(z_chain - z_full) / max(z_full, 1e-30))
    checks.append(_check("window-chaining-identity", worst < 1e-12, f"max relative gap {worst:.2e} on 50 two-window cases"))
    return checks


SUITES = {
    "exponents": suite_exponents,
    "unitarity": suite_unitarity,
    "mass": suite_mass,
    "oracle-sde": suite_oracle_sde,
    "strichartz": suite_strichartz,
    "truncation": suite_truncation,
}


def run_suites(names) -> dict:
    """Run the named suites ("all" expands to every suite); collect results."""
    if isinstance(names, str):
        names = [names]
    expanded = []
    for name in names:
        if name == "all":
            expanded.extend(SUITES)
        elif name in SUITES:
            expanded.append(name)
        else:
            raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    seen = dict.fromkeys(expanded)
    results = {}
    for name in seen:
        checks = SUITES[name]()
        results[name] = {"passed": all(c["passed"] for c in checks), "checks": checks}
    return {
        "passed": all(r["passed"] for r in results.values()),
        "suites": results,
    }
