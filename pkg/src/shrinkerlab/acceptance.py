"""Acceptance suite: one callable per criterion, shared by the CLI and tests.

Each criterion function returns a CriterionResult with a pass flag and a
human-readable detail string; ``run_suite`` executes a selection and prints
one line per criterion.  Tolerances are fixed here, not configurable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import flow as fl
from . import functionals as fn
from . import heatlab as hl
from . import manifold as mf
from . import weights as wt

__all__ = ["CriterionResult", "ALL_IDS", "run_criterion", "run_suite"]

SQRT2PIE = math.sqrt(2.0 * math.pi / math.e)


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: str
    seconds: float


_SAMPLES: dict = {}


def _samples(key: str) -> mf.SampledManifold:
    if key not in _SAMPLES:
        name, params, res = {
            "circle_shrinker": ("sphere", (1, math.sqrt(2.0)), (512,)),
            "sphere_shrinker": ("sphere", (2, 2.0), (64, 128)),
            "veronese_unit": ("veronese", (1.0,), (64, 128)),
            "veronese_shrinker": ("veronese", (2.0,), (64, 128)),
            "clifford_shrinker": ("clifford_torus", (2.0,), (96, 96)),
            "cylinder_shrinker": ("cylinder", (math.sqrt(2.0), 64.0), (128, 384)),
        }[key]
        _SAMPLES[key] = mf.build_samples(mf.catalog_make(name, params), res)
    return _SAMPLES[key]


def _entropy(key: str) -> float:
    ekey = ("entropy", key)
    if ekey not in _SAMPLES:
        _SAMPLES[ekey] = fn.cm_entropy(_samples(key)).value
    return _SAMPLES[ekey]


def criterion_1() -> tuple[bool, str]:
    got1 = _entropy("circle_shrinker")
    got2 = _entropy("sphere_shrinker")
    want1, want2 = SQRT2PIE, 4.0 / math.e
    ok = abs(got1 - want1) <= 1e-3 and abs(got2 - want2) <= 1e-3
    return ok, (
        f"circle shrinker entropy {got1:.6f} (target {want1:.6f} +-1e-3), "
        f"sphere shrinker entropy {got2:.6f} (target {want2:.6f} +-1e-3)"
    )


def criterion_2() -> tuple[bool, str]:
    ent = _entropy("veronese_shrinker")
    conf = fn.ly_confvol(_samples("veronese_unit")).value
    ok = abs(ent - 6.0 / math.e) <= 5e-3 and abs(conf - 1.5) <= 5e-3
    return ok, (
        f"projective-plane shrinker entropy {ent:.6f} (target {6.0 / math.e:.6f} +-5e-3), "
        f"normalized conformal volume {conf:.6f} (target 1.5 +-5e-3)"
    )


def criterion_3() -> tuple[bool, str]:
    parts, ok = [], True
    for alpha in (0.0, 0.5, 1.0, 2.0):
        sm = mf.build_samples(mf.catalog_make("loxodrome", (alpha, 10.0)), 8192)
        want = math.sqrt(1.0 + alpha * alpha)
        e = fn.cm_entropy(sm).value
        c = fn.ly_confvol(sm).value
        ok = ok and abs(e - want) <= 1e-2 and abs(c - want) <= 1e-2
        parts.append(f"alpha={alpha}: entropy {e:.4f}, confvol {c:.4f} (target {want:.4f} +-1e-2)")
    return ok, "; ".join(parts)


def criterion_4() -> tuple[bool, str]:
    worst = 0.0
    charts = [
        ("circle", mf.catalog_make("sphere", (1, 1.0)), np.zeros(2), (128,)),
        ("segment", mf.catalog_make("plane_patch", (1, 1.0)), np.zeros(1), (64,)),
    ]
    for _, chart, y0, res in charts:
        for M in (1, 2):
            for rho in (0.5, 1.0, 2.0):
                lhs, rhs = fn.iterate_check(chart, M, rho, y0, half_width=60.0, resolution=res)
                worst = max(worst, abs(lhs - rhs) / rhs)
    return worst <= 1e-4, f"worst relative product-identity gap {worst:.2e} (<= 1e-4)"


def criterion_5() -> tuple[bool, str]:
    inc_ok = all(
        wt.c_hat(n, m + 1) > wt.c_hat(n, m) for n in (1, 2, 3, 4) for m in range(60)
    )
    exact_half = wt.c_hat(2, 0) == 0.5
    near_one = abs(wt.c_hat(2, 10**4) - 1.0) <= 1e-3
    agree = max(
        abs(wt.c_const(M, m) - wt.c_const(M, m, form="sphere")) / wt.c_const(M, m)
        for M in range(1, 7)
        for m in range(7)
    )
    ok = inc_ok and exact_half and near_one and agree <= 1e-12
    return ok, (
        f"Chat increasing in m: {inc_ok}; Chat(2,0)==1/2 exactly: {exact_half}; "
        f"|Chat(2,1e4)-1|={abs(wt.c_hat(2, 10**4) - 1.0):.2e} (<=1e-3); "
        f"C factorial vs sphere-form rel gap {agree:.2e} (<=1e-12)"
    )


def criterion_6() -> tuple[bool, str]:
    rng = np.random.default_rng(20240613)
    bad = 0
    worst = 0.0
    for _ in range(10**4):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(0, 40))
        rho = float(rng.uniform(0.05, 10.0))
        x = rng.uniform(-8.0, 8.0, size=int(rng.integers(1, 4)))
        g = wt.gaussian_eval(n, rho, np.zeros_like(x), x)
        w1 = wt.what_eval(n, m + 1, rho, np.zeros_like(x), x)
        w0 = wt.what_eval(n, m, rho, np.zeros_like(x), x)
        v = max(float(g - w1), float(w1 - w0)) / float(w0)
        worst = max(worst, v)
        if v > 1e-12:
            bad += 1
    return bad == 0, f"{bad} chain violations beyond 1e-12 in 10^4 samples (worst excess {worst:.1e})"


def criterion_7() -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    h = 1e-3
    worst = 0.0
    for _ in range(40):
        M = float(rng.uniform(0.5, 4.0))
        rho = float(rng.uniform(0.3, 1.5))
        x = rng.uniform(-2.0, 2.0, size=int(rng.integers(1, 4)))
        N = x.size
        exact = wt.log_hessian_weight(M, rho, x)
        fd = np.empty((N, N))
        logw = lambda y: math.log(float(wt.weight_eval(M, rho, np.zeros(N), y)))
        for i in range(N):
            for j in range(N):
                ei, ej = np.eye(N)[i], np.eye(N)[j]
                if i == j:
                    fd[i, i] = (logw(x + h * ei) - 2 * logw(x) + logw(x - h * ei)) / h**2
                else:
                    fd[i, j] = (
                        logw(x + h * ei + h * ej)
                        - logw(x + h * ei - h * ej)
                        - logw(x - h * ei + h * ej)
                        + logw(x - h * ei - h * ej)
                    ) / (4 * h**2)
        worst = max(worst, float(np.abs(exact - fd).max()))
    grid_w = hl.grid_from_callable(1, 60.0, 0.05, lambda y: wt.weight_eval(2.0, 1.0, np.zeros(1), y))
    tau_w = hl.estimate_virtual_time(grid_w).tau
    dens = hl.density_from_weight(1, 1, 1.0, 100.0, 0.05, tail_tol=1e-3)
    tau_hat = hl.estimate_virtual_time(dens).tau
    ok = worst <= 1e-6 and abs(tau_w - 0.5) <= 0.01 and abs(tau_hat - 1.0) <= 0.02
    return ok, (
        f"closed-form vs FD Hessian max error {worst:.2e} (<=1e-6); "
        f"tau(W(2,1))={tau_w:.4f} (target 0.5 +-2%); tau(What(1,1,1))={tau_hat:.4f} (target 1 +-2%)"
    )


def _growth_grid():
    L, K = 100.0, 4096
    return L, 2.0 * L / (K - 1)


def criterion_8() -> tuple[bool, str]:
    L, h = _growth_grid()
    bump = hl.bump_density(1, 30.0, 0.02, 2.0)
    hm = [hl.check_harnack(bump, t) for t in (0.25, 0.5, 1.0, 2.0)]
    dens = hl.density_from_weight(1, 1, 1.0, L, h, tail_tol=1e-3)
    times = [0.5, 1.0, 2.0, 4.0]
    gm = hl.check_tau_growth(dens, 1.0, times)
    gauss = hl.gaussian_density(1, 1.0, L, h)
    em = hl.check_tau_growth(gauss, 1.0, times)
    ok = (
        min(hm) >= -1e-3
        and all(m >= -0.02 * (1.0 + t) for m, t in zip(gm, times))
        and all(abs(m) <= 0.02 * (1.0 + t) for m, t in zip(em, times))
    )
    return ok, (
        f"bump Harnack margins {['%.4f' % m for m in hm]} (>= -1e-3); "
        f"weight-density growth margins {['%.3f' % m for m in gm]} (>= -2%); "
        f"Gaussian equality margins {['%.5f' % m for m in em]} (within 2%)"
    )


def criterion_9() -> tuple[bool, str]:
    L, h = _growth_grid()
    dens = hl.density_from_weight(1, 1, 1.0, L, h, tail_tol=1e-3)
    x0 = hl.grid_mean(dens)
    T0 = -hl.grid_second_moment(dens) / 2.0
    dists = [hl.gaussian_distance(hl.heat_at(dens, t), t, T0, x0) for t in (1.0, 4.0, 16.0)]
    l1s = [d[0] for d in dists]
    sups = [d[1] for d in dists]
    ok = all(b < a for a, b in zip(l1s, l1s[1:])) and all(b < a for a, b in zip(sups, sups[1:]))
    return ok, (
        f"L1 distances {['%.5f' % v for v in l1s]} and scaled sup distances "
        f"{['%.5f' % v for v in sups]} strictly decreasing over t=1,4,16: {ok}"
    )


def criterion_10() -> tuple[bool, str]:
    tr_e = fl.run_flow(fl.ellipse_curve(2.0, 1.0, 384), 0.8, fl.FlowConfig())
    ev = [r.value for r in tr_e.entropies]
    max_inc = max(b - a for a, b in zip(ev, ev[1:]))
    tr_c = fl.run_flow(fl.circle_curve(math.sqrt(2.0), 256), 0.8, fl.FlowConfig())
    cv = [r.value for r in tr_c.entropies]
    dev = max(abs(v - SQRT2PIE) for v in cv)
    ok = max_inc <= 2e-3 and dev <= 2e-3
    return ok, (
        f"ellipse entropy {ev[0]:.5f} -> {ev[-1]:.5f}, max increase {max_inc:.1e} (<= 2e-3); "
        f"shrinking-circle entropy deviation {dev:.1e} from {SQRT2PIE:.5f} (<= 2e-3)"
    )


def criterion_11() -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    parts, ok = [], True
    for key in ("circle_shrinker", "sphere_shrinker", "veronese_shrinker"):
        sm = _samples(key)
        lam = _entropy(key)
        conf = fn.ly_confvol(sm).value
        stab = [fn.stabilized_confvol(sm, m).value for m in (0, 1, 2, 5)]
        mono = all(b >= a - 1e-9 for a, b in zip(stab, stab[1:]))
        worst = -math.inf
        n, N = sm.intrinsic_dim, sm.ambient_dim
        for m in (N - n, N - n + 2, N - n + 5):
            for rho in np.geomspace(0.05, 20.0, 8):
                for x0 in (np.zeros(N), rng.normal(0, 1.0, N), rng.normal(0, 2.0, N)):
                    worst = max(worst, fn.vt_lower_bound(sm, m, float(rho), x0) - lam)
        good = conf <= lam + 5e-3 and mono and worst <= 1e-2
        ok = ok and good
        parts.append(
            f"{sm.label}: confvol {conf:.4f} <= entropy {lam:.4f}+5e-3, stabilized "
            f"{['%.4f' % v for v in stab]} nondecreasing={mono}, max vt-probe excess {worst:.1e}"
        )
    return ok, "; ".join(parts)


def criterion_12() -> tuple[bool, str]:
    x1, y1 = 0.0, math.sqrt(2.0)
    x2, y2 = 0.5, math.sqrt(3.0) / 2.0
    got1, got2 = wt.lattice_bound(x1, y1), wt.lattice_bound(x2, y2)
    want1 = math.pi * y1 / (x1 * x1 + y1 * y1 - x1 + 1.0)
    want2 = math.pi * y2 / (x2 * x2 + y2 * y2 - x2 + 1.0)
    exact = got1 == want1 and got2 == want2
    close = abs(got1 - math.sqrt(2.0) * math.pi / 3.0) <= 1e-12 and abs(
        got2 - math.sqrt(3.0) * math.pi / 3.0
    ) <= 1e-12
    ok = exact and close
    return ok, (
        f"rectangular point {got1:.6f} (sqrt(2)pi/3 = {math.sqrt(2) * math.pi / 3:.6f}), "
        f"hexagonal point {got2:.6f} (sqrt(3)pi/3 = {math.sqrt(3) * math.pi / 3:.6f}); bit-exact: {exact}"
    )


def criterion_13() -> tuple[bool, str]:
    rng = np.random.default_rng(13)
    parts, ok = [], True
    keys = (
        "circle_shrinker",
        "sphere_shrinker",
        "cylinder_shrinker",
        "veronese_shrinker",
        "clifford_shrinker",
    )
    for key in keys:
        sm = _samples(key)
        lam = _entropy(key)
        n, N = sm.intrinsic_dim, sm.ambient_dim
        lo, hi = sm.bounding_box()
        if key == "cylinder_shrinker":
            lo[2], hi[2] = -32.0, 32.0  # stay below the truncation margin
        diam = float(np.linalg.norm(hi - lo))
        probes = []
        for _ in range(100):
            p = lo + rng.uniform(0.0, 1.0, N) * (hi - lo)
            R = float(rng.uniform(0.05 * diam, 0.45 * diam))
            probes.append((p, R))
        bound = math.exp(math.pi) * lam
        worst = max(
            fn.area_ratio_theta(sm, [(p, R)]) * fn.unit_ball_volume(n) / bound for p, R in probes
        )
        good = worst <= 1.0
        ok = ok and good
        parts.append(f"{sm.label}: max |B_R cap|/(e^pi lambda R^n) = {worst:.3f}")
    return ok, "; ".join(parts)


_CRITERIA = {
    1: ("sphere shrinker entropies", criterion_1),
    2: ("projective-plane shrinker values", criterion_2),
    3: ("spiral closed forms", criterion_3),
    4: ("product-integration identity", criterion_4),
    5: ("combinatorial constants", criterion_5),
    6: ("pointwise weight chain", criterion_6),
    7: ("closed-form log-Hessian and virtual times", criterion_7),
    8: ("Harnack margin and virtual-time growth", criterion_8),
    9: ("long-time convergence to the Gaussian", criterion_9),
    10: ("flow entropy monotonicity", criterion_10),
    11: ("inequality chain on shrinkers", criterion_11),
    12: ("lattice-torus bound evaluator", criterion_12),
    13: ("area-ratio bound", criterion_13),
}

ALL_IDS = tuple(sorted(_CRITERIA))


def run_criterion(cid: int) -> CriterionResult:
    name, func = _CRITERIA[cid]
    t0 = time.perf_counter()
    passed, detail = func()
    return CriterionResult(cid, name, passed, detail, time.perf_counter() - t0)


def run_suite(ids=None, printer=print) -> list[CriterionResult]:
    results = []
    for cid in ids or ALL_IDS:
        r = run_criterion(int(cid))
        results.append(r)
        printer(f"{'PASS' if r.passed else 'FAIL'} criterion {r.cid} ({r.name}) [{r.seconds:.1f}s]: {r.detail}")
    return results
