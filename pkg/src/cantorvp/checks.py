"""Named verification checks used by ``cantorvp check``.

``invariant_checks`` runs property checks on one configured tree and
exponent.  ``acceptance_checks`` runs the fixed acceptance grid; each check
there carries its own pinned tolerance.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import heat, operator as vp, process, wavelets
from .measure_zeta import (check_factorisation, connes_measure, estimate_abscissa)
from .operator import OperatorParams
from .tree import LevelRegular, PAdic, TreeSpec, build_tree, distance


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _run(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"error: {exc!r}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def symmetrised(tree, M):
    r = np.sqrt(tree.leaf_measures)
    S = r[:, None] * M / r[None, :]
    return 0.5 * (S + S.T)


def spectra_match(tree, params, rel=1e-9):
    """Max scaled gap between dense eigenvalues and the closed-form multiset."""
    M = vp.assemble_matrix(tree, params).entries
    dense = np.sort(np.linalg.eigvalsh(symmetrised(tree, M)))
    closed = np.sort(vp.spectrum(tree, params))
    gap = np.abs(dense - closed) / np.maximum(np.abs(closed), 1.0)
    return float(gap.max()), bool(gap.max() < rel)


# --------------------------------------------------------------------------
# invariant suite for a configured tree


def invariant_checks(tree, params: OperatorParams, seed: int = 0, times=(0.1, 0.5, 1.0)):
    rng = np.random.default_rng(seed)
    N = tree.n_leaves
    mu = tree.leaf_measures
    out = []

    def ultrametric():
        leaves = tree.leaves
        idx = rng.integers(0, N, size=(min(2000, N**3), 3)) if N > 12 \
            else np.array(list(itertools.product(range(N), repeat=3)))
        worst = 0
        for a, b, c in idx:
            x, y, z = leaves[a], leaves[b], leaves[c]
            if distance(tree, x, z) > max(distance(tree, x, y), distance(tree, y, z)):
                worst += 1
        return worst == 0, f"{len(idx)} triples, {worst} violations"

    def additivity():
        cm = connes_measure(tree)
        ok = all(cm.total(lvl) == 1 for lvl in range(tree.depth + 1))
        return ok, "each level sums to exactly 1" if ok else "level totals differ from 1"

    basis = wavelets.WaveletBasis(tree)

    def orthonormal():
        err = float(np.abs(basis.gram() - np.eye(N)).max())
        return err < 1e-12, f"max |Gram - I| = {err:.2e}"

    def adjoint():
        F = rng.standard_normal((100, N)) + 1j * rng.standard_normal((100, N))
        G = rng.standard_normal((100, N)) + 1j * rng.standard_normal((100, N))
        DF, DG = vp.apply(tree, params, F), vp.apply(tree, params, G)
        lhs = np.sum(DF * G.conj() * mu, axis=1)
        rhs = np.sum(F * DG.conj() * mu, axis=1)
        err = float(np.abs(lhs - rhs).max())
        quad = np.real(np.sum(DF * F.conj() * mu, axis=1)).min()
        return err < 1e-10 and quad >= -1e-10, f"max asym {err:.2e}, min <Df,f> {quad:.3e}"

    def eigen():
        gap, ok = spectra_match(tree, params)
        return ok, f"max relative gap {gap:.2e}"

    def fast_apply():
        F = rng.standard_normal((20, N))
        err = float(np.abs(vp.apply(tree, params, F) - vp.apply(tree, params, F, "direct")).max())
        return err < 1e-12 * max(1.0, float(np.abs(vp.apply(tree, params, F)).max())), \
            f"max |fast - direct| = {err:.2e}"

    sd = heat.spectral_decomposition(tree, params)

    def heat_oracle():
        err = max(float(np.abs(heat.transition_matrix(tree, params, t, sd)
                               - heat.matrix_exponential_oracle(tree, params, t)).max())
                  for t in times)
        return err < 1e-8, f"max |spectral - expm| = {err:.2e}"

    def stochastic():
        P = {t: heat.transition_matrix(tree, params, t, sd) for t in times}
        rows = max(float(np.abs(p.sum(axis=1) - 1).max()) for p in P.values())
        neg = min(float(p.min()) for p in P.values())
        ck = max(float(np.abs(P[a] @ P[b] - heat.transition_matrix(tree, params, a + b, sd)).max())
                 for a in times for b in times)
        rev = max(float(np.abs(mu[:, None] * p - (mu[:, None] * p).T).max()) for p in P.values())
        stat = max(float(np.abs(mu @ p - mu).max()) for p in P.values())
        ok = rows < 1e-10 and neg >= -1e-12 and ck < 1e-9 and rev < 1e-10 and stat < 1e-10
        return ok, (f"row sums {rows:.1e}, min entry {neg:.1e}, Chapman-Kolmogorov {ck:.1e}, "
                    f"reversibility {rev:.1e}, stationarity {stat:.1e}")

    def markov():
        rep = heat.markov_checks(tree, params, times, trials=100, seed=seed, decomposition=sd)
        return rep.passed, (f"min {rep.positivity_min:.3e}, max {rep.upper_max:.3f}, "
                            f"conservation {rep.conservation_error:.1e}, "
                            f"contraction excess {rep.contraction_excess:.1e}")

    def rates():
        r = process.build_rates(tree, params)
        M = vp.assemble_matrix(tree, params).entries
        ok = np.array_equal(r.rates, np.diag(M)) and np.allclose(r.jump.sum(axis=1), 1, atol=1e-12)
        return ok, "exit rates equal diag(M), jump rows sum to 1"

    for name, fn in [("ultrametric_inequality", ultrametric), ("measure_additivity", additivity),
                     ("wavelet_orthonormality", orthonormal), ("self_adjoint_psd", adjoint),
                     ("eigenstructure", eigen), ("fast_apply", fast_apply),
                     ("heat_vs_expm", heat_oracle), ("stochasticity", stochastic),
                     ("markov_property", markov), ("jump_rates", rates)]:
        out.append(_run(name, fn))
    return out


# --------------------------------------------------------------------------
# acceptance grid

GRID_FAMILIES = (PAdic(2), PAdic(3), LevelRegular([2, 3]))
GRID_S = (1.5, 3.0, 4.0, 5.0)


def _haar():
    bad = []
    for p in (2, 3, 5):
        cm = connes_measure(build_tree(TreeSpec(PAdic(p), 8)))
        for lvl in range(9):
            vals = np.unique(cm.inverse[lvl])
            if len(vals) != 1 or int(vals[0]) != p**lvl or len(cm.inverse[lvl]) != p**lvl:
                bad.append((p, lvl))
    return not bad, "every level-l ball has measure p^-l" if not bad else f"mismatch at {bad}"


def _abscissa():
    res = []
    for fam in (PAdic(2), PAdic(5), LevelRegular([2, 3])):
        est = estimate_abscissa(build_tree(TreeSpec(fam, 20)), tolerance=1e-3)
        res.append(est.s0)
    ok = all(abs(s - 1.0) <= 1e-3 for s in res)
    return ok, "s0 = " + ", ".join(f"{s:.6f}" for s in res)


def _factorisation():
    parts, ok = [], True
    for fam in (PAdic(3), LevelRegular([2, 3])):
        rep = check_factorisation(build_tree(TreeSpec(fam, 20)), [1.5, 2.0, 3.0], tol=1e-6)
        ok &= rep.passed
        parts.append(f"{fam}: max dev {rep.max_corrected_deviation:.2e}"
                     + ("" if rep.passed else f", failing vertices {[str(v) for v in rep.offending[:4]]}"))
    return ok, "; ".join(parts)


def _small_trees():
    for fam in GRID_FAMILIES:
        for depth in (1, 2, 3, 4):
            yield build_tree(TreeSpec(fam, depth))
    for depth in (2, 3, 4):
        yield build_tree(TreeSpec(PAdic(2), depth, "baire"))


def _orthonormality():
    worst = 0.0
    for tree in _small_trees():
        if tree.n_leaves > 256:
            continue
        B = wavelets.WaveletBasis(tree)
        worst = max(worst, float(np.abs(B.gram() - np.eye(len(B))).max()))
    return worst < 1e-12, f"max |Gram - I| = {worst:.2e}"


def _eigenfunctions():
    off = dev = 0.0
    for fam in GRID_FAMILIES:
        tree = build_tree(TreeSpec(fam, 4))
        B = wavelets.WaveletBasis(tree)
        for s in GRID_S:
            rep = vp.wavelet_matrix(tree, OperatorParams(s), B)
            off, dev = max(off, rep.max_off_diagonal), max(dev, rep.max_diagonal_deviation)
    return off < 1e-10 and dev < 1e-10, f"max off-diagonal {off:.2e}, max diagonal gap {dev:.2e}"


def _oracle_spectrum():
    worst = 0.0
    for fam in GRID_FAMILIES:
        tree = build_tree(TreeSpec(fam, 4))
        for s in GRID_S:
            gap, _ = spectra_match(tree, OperatorParams(s))
            worst = max(worst, gap)
    return worst < 1e-9, f"max relative gap {worst:.2e}"


def _exact_s4():
    tree = build_tree(TreeSpec(PAdic(2), 4))
    P = OperatorParams(4.0)
    lam = vp.spectrum(tree, P)[1:]
    lam_err = float(np.abs(lam - 2).max())
    rng = np.random.default_rng(4)
    F = rng.standard_normal((100, tree.n_leaves))
    mean = (F @ tree.leaf_measures)[:, None]
    err = 0.0
    for t in (0.1, 1.0):
        want = np.exp(-2 * t) * (F - mean) + mean
        err = max(err, float(np.abs(heat.semigroup_apply(tree, P, F, t) - want).max()))
    return lam_err < 1e-12 and err < 1e-10, f"max |lambda - 2| = {lam_err:.1e}, semigroup {err:.1e}"


def _heat_vs_expm():
    worst = 0.0
    for fam in GRID_FAMILIES:
        tree = build_tree(TreeSpec(fam, 4))
        for s in (3.0, 4.0):
            P = OperatorParams(s)
            sd = heat.spectral_decomposition(tree, P)
            for t in (0.1, 1.0, 10.0):
                worst = max(worst, float(np.abs(heat.transition_matrix(tree, P, t, sd)
                                                - heat.matrix_exponential_oracle(tree, P, t)).max()))
    return worst < 1e-8, f"max abs difference {worst:.2e}"


def _markov():
    msgs, ok = [], True
    times = (0.1, 0.5, 1.0)
    for fam in GRID_FAMILIES:
        tree = build_tree(TreeSpec(fam, 4))
        for s in (1.5, 3.0, 4.0):
            P = OperatorParams(s)
            sd = heat.spectral_decomposition(tree, P)
            pt = {t: heat.transition_matrix(tree, P, t, sd) for t in times}
            rows = max(float(np.abs(p.sum(axis=1) - 1).max()) for p in pt.values())
            neg = min(float(p.min()) for p in pt.values())
            ck = max(float(np.abs(pt[a] @ pt[b] - heat.transition_matrix(tree, P, a + b, sd)).max())
                     for a in times for b in times)
            rep = heat.markov_checks(tree, P, times, trials=100, decomposition=sd)
            good = rows < 1e-10 and neg >= -1e-12 and ck < 1e-9 and rep.passed
            ok &= good
            if not good:
                msgs.append(f"{fam} s={s}: rows {rows:.1e} min {neg:.1e} CK {ck:.1e} {rep}")
    return ok, "all stochasticity, positivity, conservation, contraction and CK checks hold" \
        if ok else "; ".join(msgs)


def _green():
    tree = build_tree(TreeSpec(PAdic(2), 4))
    g = heat.green_function(tree, OperatorParams(1.5))
    g4 = heat.green_function(tree, OperatorParams(4.0))
    ok = (g.convergence_class == "Convergent" and g.identity_error < 1e-8
          and g4.convergence_class == "Divergent")
    return ok, (f"s=1.5 {g.convergence_class} (|MG - (I - P0)| = {g.identity_error:.1e}); "
                f"s=4 {g4.convergence_class}")


def _monte_carlo():
    tree = build_tree(TreeSpec(PAdic(2), 3))
    P = OperatorParams(3.0)
    rates = process.build_rates(tree, P)
    emp = process.sample_paths(rates, 0, 1.0, 200_000, seed=20240601)
    tv = process.tv_distance(emp.distribution, heat.transition_matrix(tree, P, 1.0)[0])
    return tv <= 0.01, f"TV = {tv:.4f} with 200000 paths"


ACCEPTANCE = [
    ("1_haar_measure", _haar),
    ("2_abscissa", _abscissa),
    ("3_factorisation", _factorisation),
    ("4_wavelet_orthonormality", _orthonormality),
    ("5_eigenfunctions", _eigenfunctions),
    ("6_oracle_spectrum", _oracle_spectrum),
    ("7_exact_s4", _exact_s4),
    ("8_heat_vs_expm", _heat_vs_expm),
    ("9_markov_property", _markov),
    ("10_green_function", _green),
    ("11_monte_carlo", _monte_carlo),
]


def acceptance_checks(names=None):
    return [_run(name, fn) for name, fn in ACCEPTANCE if names is None or name in names]
