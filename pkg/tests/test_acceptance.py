"""Acceptance suite: one PASS/FAIL line per criterion, printed even under capture.

Criteria 2 and 4 are run exactly as written and are expected to be red; the
``corrected`` tests next to them check the relation that does hold.
"""

import itertools
import time
from collections import Counter

import numpy as np
import pytest

from fqpatterns.cli import main
from fqpatterns.equidist import check_condition_v, check_condition_v_many, classify_single
from fqpatterns.fpt_ring import FpPoly, irreducibles
from fqpatterns.fqfield import field
from fqpatterns.group_fourier import fourier, gowers_norm, gowers_power, u2_fourier_identity
from fqpatterns.lemma_verifier import LEMMAS, _avg, _l2, _rand_fn, run_suite, verify_finite_index
from fqpatterns.equidist import TwistedPoly
from fqpatterns.pattern_counter import (
    PatternInstance,
    count_nontrivial,
    count_patterns,
    coset_instance,
    degenerate_bound_factor,
    fit_gamma,
    inequality_chain,
    main_term,
    monotone_trend,
)
from fqpatterns.poly_structure import PolyY, d_deg, pet_trace


@pytest.fixture
def verdict(capsys):
    def emit(label, ok, msg, extra=()):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}: {msg}")
            for line in extra:
                print(f"    {line}")
        return ok

    return emit


# 1. coset counterexample

def test_criterion_1_coset_counterexample(verdict):
    t0 = time.perf_counter()
    rows, ok = [], True
    for p in (2, 3):
        for k in (3, 4, 5):
            q = p**k
            inst = coset_instance(q)
            N, mt = count_patterns(inst), main_term(inst.sizes, q)
            ok &= N == 0 and mt > 0 and mt == inst.sizes[0] * inst.sizes[1]
            rows.append(f"q={q}: N={N} main_term={mt:g}")
    dt = time.perf_counter() - t0
    ok &= dt < 5
    verdict("criterion 1", ok, f"N = 0 with positive main term at 6 field sizes in {dt:.2f}s", rows)
    assert ok


# 2. classifier ground truth

def _exhaustive(p, max_exp):
    for cs in itertools.product(range(p), repeat=max_exp):
        if any(cs):
            yield PolyY(p, {e + 1: FpPoly(p, (c,)) for e, c in enumerate(cs) if c})


def _random(p, max_exp, n, seed):
    rng = np.random.default_rng([seed, p, max_exp])
    for _ in range(n):
        cs = rng.integers(p, size=max_exp) * (rng.random(max_exp) < 0.25)
        if cs.any():
            yield PolyY(p, {e + 1: FpPoly(p, (int(c),)) for e, c in enumerate(cs) if c})


def _criterion_2_polys():
    yield from _exhaustive(2, 8)
    yield from _exhaustive(3, 9)
    yield from _random(3, 27, 20_000, 0)


EXAMPLES = [("y", "good"), ("y^{p+1}", "good"), ("y^p", "not_good"), ("y^p - y", "not_good")]


def test_criterion_2_classifier_ground_truth(verdict):
    t0 = time.perf_counter()
    bad_examples = [
        f"{text} p={p}: {classify_single(text, p).verdict}"
        for p in (2, 3, 5)
        for text, want in EXAMPLES
        if classify_single(text, p).verdict != want
    ]
    moduli = {p: [Q for d in range(1, 5) for Q in irreducibles(p, d)] for p in (2, 3)}
    n, kinds, sample = 0, Counter(), []
    for P in _criterion_2_polys():
        n += 1
        good = classify_single(P).verdict == "good"
        full = all(r.full for r in check_condition_v_many(P, moduli[P.p]))
        if good != full:
            kinds["not_good but full at every irreducible Q" if full else "good but not full"] += 1
            if len(sample) < 5:
                sample.append(f"p={P.p} P={P}")
    dt = time.perf_counter() - t0
    ok = not bad_examples and not kinds and dt < 60
    extra = bad_examples + [f"{k}: {v}" for k, v in kinds.items()] + [f"e.g. {s}" for s in sample]
    verdict("criterion 2", ok, f"{sum(kinds.values())} disagreements over {n} polynomials in {dt:.1f}s", extra)
    assert ok


def test_criterion_2_corrected_relation(verdict):
    # good => full at every modulus tried; not_good => not full at the certificate's witness modulus
    t0 = time.perf_counter()
    moduli = {p: [Q for d in range(1, 5) for Q in irreducibles(p, d)] for p in (2, 3)}
    n, failures, no_witness = 0, [], 0
    for P in _criterion_2_polys():
        n += 1
        cert = classify_single(P)
        if cert.verdict == "good":
            if not all(r.full for r in check_condition_v_many(P, moduli[P.p])):
                failures.append(str(P))
        elif cert.witness_modulus is None:
            no_witness += 1
        elif check_condition_v(P, cert.witness_modulus).full:
            failures.append(str(P))
    examples_ok = all(classify_single(t, p).verdict == w for p in (2, 3, 5) for t, w in EXAMPLES)
    dt = time.perf_counter() - t0
    ok = not failures and examples_ok
    verdict(
        "criterion 2 (corrected relation)",
        ok,
        f"{n} polynomials, {len(failures)} violations, {no_witness} without a witness in range, {dt:.1f}s",
        failures[:5],
    )
    assert ok


# 3. norm identities

def test_criterion_3_norm_identities(verdict):
    worst = {"u2": 0.0, "parseval": 0.0, "fast_vs_naive": 0.0}
    for q in (2**4, 2**6, 3**4):
        F = field(q)
        for seed in range(100):
            rng = np.random.default_rng([seed, q])
            v = np.sqrt(rng.random(q)) * np.exp(2j * np.pi * rng.random(q))
            lhs, rhs = u2_fourier_identity(v, F)
            spec = fourier(v, "fast", F)
            worst["u2"] = max(worst["u2"], abs(lhs - rhs))
            worst["parseval"] = max(worst["parseval"], spec.parseval_gap(v))
            naive = fourier(v, "naive", F)
            worst["fast_vs_naive"] = max(worst["fast_vs_naive"], float(np.max(np.abs(spec.coeffs - naive.coeffs))))
    ok = all(v <= 1e-10 for v in worst.values())
    verdict("criterion 3", ok, ", ".join(f"max {k} error {v:.1e}" for k, v in worst.items()))
    assert ok


# 4. lemma suite

SUITE_QS = (16, 27, 64)
SUITE_SEEDS = range(60)


def _suite_summary(dual_variant):
    t0 = time.perf_counter()
    reports = [r for q in SUITE_QS for r in run_suite(q, SUITE_SEEDS, dual_variant=dual_variant, threads=4)]
    dt = time.perf_counter() - t0
    per = {}
    for lem in LEMMAS:
        rs = [r for r in reports if r.lemma == lem]
        live = [r for r in rs if not r.vacuous]
        per[lem] = (len(live), [r for r in rs if r.failed])
    return per, dt


def _suite_lines(per):
    lines = []
    for lem, (live, failed) in per.items():
        where = ", ".join(f"q={r.instance['q']} seed={r.instance['seed']}" for r in failed[:3])
        lines.append(f"{lem}: {live} non-vacuous, {len(failed)} failed" + (f" ({where})" if where else ""))
    return lines


def test_criterion_4_lemma_suite(verdict):
    per, dt = _suite_summary("proof")
    enough = all(live >= 50 for live, _ in per.values())
    clean = all(not failed for _, failed in per.values())
    ok = enough and clean and dt < 300
    nfail = sum(len(f) for _, f in per.values())
    verdict("criterion 4", ok, f"{nfail} failing instances, {dt:.1f}s", _suite_lines(per))
    assert ok


def test_criterion_4_with_conjugated_dual_function(verdict):
    per, dt = _suite_summary("conjugate")
    ok = all(live >= 50 and not failed for live, failed in per.values()) and dt < 300
    verdict("criterion 4 (conjugated dual function)", ok, f"all lemmas, {dt:.1f}s", _suite_lines(per))
    assert ok


# 5. finite-index equality case

def test_criterion_5_finite_index_equality(verdict):
    worst = 0.0
    for q in (4, 8, 9, 16, 27):
        F = field(q)
        ident = TwistedPoly.from_coeffs(F.p, [1])
        for s in (1, 2, 3):
            if s == 3 and q > 16:
                continue
            for seed in range(5):
                rep = verify_finite_index(_rand_fn(F, np.random.default_rng([seed, q, s])), ident, s, q)
                worst = max(worst, abs(rep.lhs - rep.rhs))
    ok = worst <= 1e-10
    verdict("criterion 5", ok, f"max |lhs - rhs| = {worst:.1e} with H = G")
    assert ok


# 6. PET trace

PET_FAMILIES = [(["y", "y^2"], 3), (["y", "y^3"], 2), (["y^2", "y^2 + y"], 3)]


def test_criterion_6_pet_trace(verdict):
    lines, ok = [], True
    for fam, p in PET_FAMILIES:
        tr = pet_trace(fam, p)
        ws = [st.weight for st in tr.steps]
        decreasing = all(b < a for a, b in zip(ws, ws[1:]))
        last = tr.steps[-1]
        base = last.kind == "base" and len(last.family) == 1 and d_deg(last.family[0]) == 1
        polys = [PolyY.parse(x, p) for x in fam]
        worst, worst_c1 = -np.inf, -np.inf
        for k in (3, 4):
            q = p**k
            F = field(q)
            V = [P.values(F) for P in polys]
            for e in range(20):
                rng = np.random.default_rng([e, q, p])
                fs = [_rand_fn(F, rng) for _ in polys]
                lhs = _l2(_avg(F, fs, V, np.ones(q)))
                u = gowers_norm(fs[tr.controlled_index], tr.s, F)
                worst = max(worst, lhs - tr.bound(u, q))
                worst_c1 = max(worst_c1, lhs - tr.c1 * u ** float(tr.alpha))
        fam_ok = decreasing and base and worst <= 1e-12
        ok &= fam_ok
        lines.append(
            f"{fam} p={p}: {len(tr.steps)} states, s={tr.s}, alpha={tr.alpha}, C2={tr.c2:.3f}, beta={tr.beta}, "
            f"max(lhs - bound)={worst:.3f}, max(lhs - C1 term)={worst_c1:.3f}"
        )
    verdict("criterion 6", ok, "traces terminate with decreasing weight; bound holds on 20 ensembles at q = p^3, p^4", lines)
    assert ok


# 7. decay trend

def test_criterion_7_decay_trend(verdict):
    t0 = time.perf_counter()
    qs = [9, 27, 81, 243]
    good = fit_gamma(["y", "y^2"], qs, p=3, threads=4)
    maxima = [r["max_discrepancy"] for r in good.per_q]
    decays, inv = monotone_trend(maxima, allowed_inversions=0)
    ok_good = all(m > 0 for m in maxima) and decays and good.gamma > 0 and len(good.residuals) == len(qs)
    bad = fit_gamma(["y^p - y"], qs, p=3, threads=4)
    bad_max = [r["max_discrepancy"] for r in bad.per_q]
    ok_bad = abs(bad.slope) <= 1e-9 and all(abs(m - 1) <= 1e-9 for m in bad_max)
    dt = time.perf_counter() - t0
    ok = ok_good and ok_bad and dt < 600
    lines = [
        f"{{y, y^2}}: max discrepancy {['%.4g' % m for m in maxima]}, gamma_hat={good.gamma:.4f}, "
        f"residuals {['%.2e' % r for r in good.residuals]}",
        f"{{y^p - y}}: max discrepancy {bad_max}, slope={bad.slope:.2e}",
    ]
    verdict("criterion 7", ok, f"decay fitted in {dt:.1f}s", lines)
    assert ok


# 8. counting inequality chain

def test_criterion_8_inequality_chain(verdict):
    rng = np.random.default_rng(8)
    pool = ["y", "y^2", "y^3", "t*y^2 + y", "y^p", "y^{p+1}", "(t+1)*y^3 + y^2"]
    n_chain = n_degen = 0
    for i in range(100):
        q = int(rng.choice([4, 8, 9, 16, 25, 27, 32, 49, 64, 81]))
        F = field(q)
        m = int(rng.integers(1, 3))
        while True:
            fam = [PolyY.parse(t, F.p) for t in rng.choice(pool, size=m, replace=False)]
            if all(not P.is_constant() for P in fam) and (m == 1 or not (fam[0] - fam[1]).is_constant()):
                break
        inst = PatternInstance.random(fam, q, rng, density=float(rng.uniform(0.1, 0.9)))
        n_chain += inequality_chain(inst).holds
        A = inst.sets[0]
        cnt = count_nontrivial(A, fam, q)
        n_degen += cnt.degenerate <= degenerate_bound_factor(fam) * int(A.sum())
    ok = n_chain == 100 and n_degen == 100
    verdict("criterion 8", ok, f"chain holds on {n_chain}/100, degenerate bound on {n_degen}/100")
    assert ok


# 9. determinism across thread counts

CLI_RUNS = [
    ["classify", "--family", "y; t*y^2", "--p", "2", "--q-list", "8,16,32", "--seed", "1"],
    ["count", "--family", "y; y^2", "--q", "27", "--seed", "4", "--trials", "3"],
    ["count", "--instance", "coset", "--q", "81"],
    ["discrepancy", "--family", "y^2", "--q", "81", "--seed", "2", "--trials", "5"],
    ["fit-gamma", "--family", "y; y^2", "--q-list", "9,27,81", "--seed", "0", "--trials", "5"],
    ["verify", "all", "--q", "16", "--seeds", "10", "--seed", "0"],
    ["pet-trace", "--family", "y; y^3", "--p", "2"],
    ["fourier", "--q", "64", "--seed", "7", "--generator", "phase"],
]


def test_criterion_9_determinism(verdict, tmp_path):
    diffs = []
    for i, argv in enumerate(CLI_RUNS):
        outs = []
        for th in (1, 8):
            out = tmp_path / f"{i}_{th}"
            code = main([*argv, "--threads", str(th), "--out", str(out)])
            outs.append((code, {p.name: p.read_bytes() for p in sorted(out.iterdir())}))
        if outs[0] != outs[1]:
            diffs.append(" ".join(argv))
    ok = not diffs
    verdict("criterion 9", ok, f"{len(CLI_RUNS) - len(diffs)}/{len(CLI_RUNS)} commands byte-identical at 1 vs 8 threads", diffs)
    assert ok
