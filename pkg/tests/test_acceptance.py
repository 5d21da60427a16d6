"""Acceptance suite: one test per criterion.

Every test calls ``record`` before asserting, so the terminal summary prints a
PASS/FAIL line per criterion even when an assertion fails.
"""

import time

import numpy as np
import pytest

import perturbation_checks as tc
from conftest import record
from rrextrap import cli, diagnostics as dg, modes, problems
from rrextrap.rre import IterateWindow, build_differences, extrapolate, gamma_direct

pytestmark = pytest.mark.acceptance

KINDS = (None, "orthogonal", "general")
# distinct eigenvalues are drawn from this grid (spacing 0.05)
GRID = np.round(np.linspace(-0.85, 0.85, 35), 10)


def seeded_linear(seed):
    """N in [3, 20], at most 10 distinct eigenvalues, repeated to fill N."""
    rng = np.random.default_rng([2024, seed])
    N = int(rng.integers(3, 21))
    d = int(rng.integers(1, min(N, 10) + 1))
    base = rng.choice(GRID, d, replace=False)
    lam = np.concatenate([base, rng.choice(base, N - d)])
    spec = problems.make_linear(lam, similarity=KINDS[seed % 3], seed=seed)
    return spec, np.random.default_rng([seed, 99]).standard_normal(N)


def test_01_linear_exactness():
    specs = [seeded_linear(seed) for seed in range(20)]
    failures, worst = [], 0.0
    t0 = time.perf_counter()
    for seed, (spec, x0) in enumerate(specs):
        try:
            tr = modes.run_mc_mode(spec.problem, x0, modes.ModeConfig(mode="mc", tol=1e-8))
        except Exception as exc:  # noqa: BLE001 - reported as a failure below
            failures.append(f"seed {seed}: {exc}")
            continue
        rel = tr.final.error / np.linalg.norm(spec.solution)
        worst = max(worst, rel)
        if len(tr.records) != 2 or rel > 1e-8:
            failures.append(f"seed {seed}: {len(tr.records) - 1} cycles, rel err {rel:.2e}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 1.0
    record(1, ok, f"20 problems, worst rel err {worst:.1e}, {elapsed:.3f} s" + (f"; {failures}" if failures else ""))
    assert ok, failures or f"took {elapsed:.2f} s"


def random_windows(rng, count):
    for _ in range(count):
        k = int(rng.integers(1, 5))
        N = int(rng.integers(k + 2, 12))
        yield IterateWindow(rng.standard_normal((k + 2, N)))


def test_02_formulation_equivalence():
    rng = np.random.default_rng(2)
    worst_res, worst_sum = 0.0, 0.0
    for w in random_windows(rng, 100):
        res = extrapolate(w)
        r_direct = np.linalg.norm(build_differences(w).U @ gamma_direct(build_differences(w).U))
        worst_res = max(worst_res, abs(res.residual_norm - r_direct) / r_direct)
        worst_sum = max(worst_sum, abs(res.gamma.sum() - 1.0))
    ok = worst_res <= 1e-9 and worst_sum <= 1e-12
    record(2, ok, f"max rel residual gap {worst_res:.1e}, max |sum(gamma) - 1| {worst_sum:.1e}")
    assert ok


def test_03_residual_optimality():
    rng = np.random.default_rng(3)
    worst = -np.inf
    for w in random_windows(rng, 100):
        res = extrapolate(w)
        U = build_differences(w).U
        for _ in range(100):
            c = rng.standard_normal(w.k + 1) * rng.choice([1e-3, 1.0, 1e3])
            c[0] += 1.0 - c.sum()
            worst = max(worst, res.residual_norm - np.linalg.norm(U @ c))
    ok = worst <= 1e-9
    record(3, ok, f"max ||U gamma|| - ||U c|| = {worst:.2e} over 10000 pairs")
    assert ok


def test_04_pseudoinverse_perturbation():
    rng = np.random.default_rng(4)
    tol = 1.0 + 1e-10
    ns = np.unique(np.geomspace(1, 1e6, 40).astype(int))
    t0 = time.perf_counter()
    a1 = tc.check_scaled_product(rng, 500)
    a2 = tc.check_perturbed_norm(rng, 500)
    a3 = tc.check_perturbed_difference(rng, 500)
    conv = [tc.rank_preserving_sequence(rng, ns), tc.full_rank_sequence(rng, ns)]
    a4_conv = all(tc.monotone_tail(s) is not None and s[-1] < 1e-5 * s[0] for s in conv)
    drop = tc.rank_drop_sequence(ns)
    a4_div = bool(np.allclose(drop, ns, rtol=1e-12)) and drop[-1] >= 1e5
    elapsed = time.perf_counter() - t0
    ok = a1 <= tol and a2 <= tol and a3 <= tol and a4_conv and a4_div and elapsed < 10.0
    record(4, ok, f"worst ratios {a1:.6f} / {a2:.6f} / {a3:.6f}; limit converges {a4_conv}, "
                  f"rank-drop diverges {a4_div}; {elapsed:.2f} s")
    assert ok


def test_05_c_mode_linear_rate():
    spec = problems.make_linear(np.linspace(0.2, 0.8, 10), similarity="orthogonal", seed=5)
    T = spec.jacobian_at_solution
    bound = dg.theta_upper_bounds(T, 2).chebyshev
    tr = modes.run_c_mode(spec.problem, np.zeros(10), modes.ModeConfig(mode="c", n=0, k=2, tol=1e-14, max_cycles=9))
    errs = [r.error for r in tr.records]
    g = [np.linalg.norm((np.eye(10) - T) @ (r.s - spec.solution)) for r in tr.records]

    def gmean(v):
        return float(np.exp(np.mean(np.log([v[r] / v[r - 1] for r in range(3, 9)]))))

    e_rate, g_rate = gmean(errs), gmean(g)
    ok = len(errs) >= 9 and abs(bound - 2.0 / 9.0) < 1e-12 and e_rate <= bound + 1e-6 and g_rate <= bound + 1e-6
    record(5, ok, f"geometric-mean ratio cycles 3-8: error {e_rate:.4f}, G-norm {g_rate:.4f}; bound {bound:.4f}")
    assert ok


def test_06_mc_mode_quadratic():
    spec = problems.make_quadratic_perturbed([0.6, 0.35, -0.25, -0.5], 0.05, similarity="orthogonal", seed=3)
    norm_T = np.linalg.norm(spec.jacobian_at_solution, 2)
    spreads, misses = [], []
    for s in range(10):
        z = np.random.default_rng([s, 7]).standard_normal(4)
        x0 = 0.1 * z / np.linalg.norm(z)
        tr = modes.run_mc_mode(spec.problem, x0, modes.ModeConfig(mode="mc", tol=1e-13, max_cycles=6))
        e = [r.error for r in tr.records]
        ratios = [e[i + 1] / e[i] ** 2 for i in range(len(e) - 1) if e[i] >= 1e-6]
        if len(ratios) < 2 or min(e) > 1e-12:
            misses.append(s)
            continue
        spreads.append(max(ratios) / min(ratios))
    ok = abs(norm_T - 0.6) < 1e-12 and not misses and max(spreads) < 10.0
    record(6, ok, f"10 starts, max ratio spread {max(spreads, default=np.nan):.2f}; misses {misses}")
    assert ok


def test_07_n_mode_decay():
    lines, ok = [], True
    for name in ("cos", "coupled2d"):
        spec = problems.make_classic_nonlinear(name)
        L = dg.build_report(spec.jacobian_at_solution, [1]).L_estimate
        for k in (1, 2):
            tr = modes.run_n_mode(spec.problem, spec.start, k, 22)
            ratios = [r.error / r.eps_n_norm for r in tr.records]
            decay = all(r.error <= r.eps_n_norm for r in tr.records if r.index >= 2)
            tail = ratios[-4:]
            settled = max(tail) - min(tail) <= 0.05
            within = tail[-1] <= L**k + 0.05
            ok = ok and decay and settled and within and len(tr.records) == 23
            lines.append(f"{name} k={k}: limit {tail[-1]:.1e} vs {L**k:.3f}")
    record(7, ok, "; ".join(lines))
    assert ok


def test_08_error_formula_identity():
    xs = [np.array([0.1])]
    for _ in range(8):
        x = xs[-1]
        xs.append(0.5 * x + 0.1 * x * x)
    worst = 0.0
    for n in range(6):
        rep = dg.perturbation_quantities(np.array(xs[n:n + 3]), np.array([[0.5]]), np.zeros(1), k=1)
        worst = max(worst, np.linalg.norm(rep.s_diff - rep.s_check) / np.linalg.norm(rep.s_diff))
    ok = worst <= 1e-9
    record(8, ok, f"max relative mismatch {worst:.1e} over n = 0..5")
    assert ok


def _c_mode_suite():
    """The converging C-Mode runs monitored by criterion 9: ``(label, spec, x0, k)``."""
    quad = problems.make_quadratic_perturbed([0.6, 0.35, -0.25, -0.5], 0.05, similarity="orthogonal", seed=3)
    lin = problems.make_linear(np.linspace(0.2, 0.8, 10), similarity="orthogonal", seed=5)
    out = []
    for name, ks in (("cos", (1,)), ("coupled2d", (1, 2)), ("logistic2d", (1, 2)), ("bvp", (3, 5))):
        spec = problems.make_classic_nonlinear(name)
        out += [(f"{name} k={k}", spec, spec.start, k) for k in ks]
    out.append(("quad k=2", quad, np.full(4, 0.05), 2))
    out.append(("lin10 k=2", lin, np.zeros(10), 2))
    return out


# Frozen from the first green run: (min sigma_k(S(e_n)) floor, sum|gamma| ceiling).
# Floors are half and ceilings twice the values observed then.
FROZEN = {
    "cos k=1": (0.5, 2.0),
    "coupled2d k=1": (0.5, 7.454),
    "coupled2d k=2": (0.02431, 6.794),
    "logistic2d k=1": (0.5, 2.0),
    "logistic2d k=2": (0.04604, 2.0),
    "bvp k=3": (5.22e-6, 18.42),
    "bvp k=5": (5.22e-11, 60.86),
    "quad k=2": (0.0518, 4.246),
    "lin10 k=2": (0.04517, 22.28),
}


def c_mode_monitor():
    rows = {}
    for label, spec, x0, k in _c_mode_suite():
        tr = modes.run_c_mode(spec.problem, x0, modes.ModeConfig(mode="c", k=k, tol=1e-12, max_cycles=40))
        rep = dg.build_report(spec.jacobian_at_solution, [k], tr, spec.solution)
        rows[label] = (tr.termination, rep.sigma_k_S_min, max(rep.gamma_abs_sum))
    return rows


def test_09_global_assumption_monitor():
    rows = c_mode_monitor()
    bad = []
    for label, (term, smin, gsum) in rows.items():
        floor, ceiling = FROZEN[label]
        if term != modes.CONVERGED or smin is None or not smin > 0 or smin < floor or gsum > ceiling:
            bad.append(f"{label}: {term}, min sigma_k {smin}, max sum|gamma| {gsum:.3g}")
    lo = min(v[1] for v in rows.values())
    hi = max(v[2] for v in rows.values())
    record(9, not bad, f"{len(rows)} runs, smallest min sigma_k {lo:.2e}, largest sum|gamma| {hi:.3g}"
                       + (f"; {bad}" if bad else ""))
    assert not bad


CONFIGS = {
    "n": "[problem]\nname = coupled2d\n[mode]\nmode = n\nk = 2\nmax_cycles = 12\n"
         "[diagnostics]\nenabled = true\nk_values = 1, 2\ndelta = true\n",
    "c": "[problem]\nname = quadratic\neigenvalues = 0.6, 0.35, -0.25, -0.5\nsimilarity = orthogonal\nseed = 3\n"
         "x0_error = 0.1\n[mode]\nmode = c\nk = 2\n[diagnostics]\nenabled = true\ndelta = true\n",
    "mc": "[problem]\nname = linear\neigenvalues = 0.8, -0.5, 0.3, 0.3\nsimilarity = general\nseed = 7\n"
          "x0_error = 1.0\n[mode]\nmode = mc\n[diagnostics]\nenabled = true\n",
}


def test_10_reproducibility(tmp_path):
    mismatched = []
    for mode, text in CONFIGS.items():
        cfg = tmp_path / f"{mode}.ini"
        cfg.write_text(text)
        for verb in ("run", "compare", "diagnose"):
            outputs = []
            for rep in (1, 2):
                out = tmp_path / f"{mode}-{verb}-{rep}"
                cli.main([verb, "--config", str(cfg), "--out", str(out), "--seed", "11"])
                outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            if not outputs[0] or outputs[0] != outputs[1]:
                mismatched.append(f"{mode}/{verb}")
    record(10, not mismatched, f"{len(CONFIGS) * 3} config/verb pairs compared" + (f"; differ: {mismatched}" if mismatched else ""))
    assert not mismatched
