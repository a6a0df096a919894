"""Command-line entry point.

Every command writes ``<command>.json`` (and a CSV where there is tabular
output) into ``--out``; each file carries the tool version and a hash of the
effective configuration.  Exit codes: 0 ok, 2 negative verdict or failed
check, 3 empirical-only verdict, 4 error (bad input, budget exceeded).

Predicted cost (elementary operations) checked against ``--budget``:
  classify      sum over q of min(q^m, samples) * q
  count         trials * m * q^2
  discrepancy   trials * |ensembles| * m * q^2
  fit-gamma     sum over q of (trials * |ensembles| * m * q^2 + q^m)
  verify        seeds * |lemmas| * 4 * q^3
  fourier       q * log2(q)
  pet-trace     not guarded (bounded by the member budget)
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import equidist, lemma_verifier, pattern_counter
from .fqfield import field, prime_power
from .group_fourier import GroupFn, fourier, inverse_fourier, u2_fourier_identity
from .parsing import ParseError
from .poly_structure import PolyY, pet_trace
from .reporting import csv_text, json_text, parse_config, write_text

EXIT_OK, EXIT_NEGATIVE, EXIT_EMPIRICAL, EXIT_ERROR = 0, 2, 3, 4
DEFAULT_BUDGET = 1e9

COMMANDS = ("classify", "count", "discrepancy", "fit-gamma", "verify", "pet-trace", "fourier")


class BudgetExceeded(Exception):
    pass


class UsageError(Exception):
    pass


def split_family(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    parts = [s.strip() for s in re.split(r"[;,]", str(text))]
    parts = [s for s in parts if s]
    if not parts:
        raise UsageError("empty family")
    return parts


def _q_list(v) -> list[int]:
    if v is None:
        return []
    if isinstance(v, (list, tuple)):
        return [int(x) for x in v]
    return [int(x) for x in re.split(r"[,\s]+", str(v).strip("[] ")) if x]


def _guard(cost: float, budget: float, what: str):
    if cost > budget:
        raise BudgetExceeded(f"{what}: predicted {cost:.3g} operations exceeds budget {budget:.3g}")


# config handling

def build_config(args: argparse.Namespace) -> dict:
    cfg = {}
    if args.config:
        cfg.update(parse_config(Path(args.config).read_text()))
    for k, v in vars(args).items():
        if k in ("config", "command", "func"):
            continue
        if v is not None:
            cfg[k] = v
    cfg["command"] = args.command
    if "family" in cfg:
        cfg["family"] = split_family(cfg["family"])
    if "q_list" in cfg:
        cfg["q_list"] = _q_list(cfg["q_list"])
    if "ensemble" in cfg:
        cfg["ensemble"] = split_family(cfg["ensemble"])
    q = cfg.get("q")
    if cfg.get("p") is None:
        qs = ([int(q)] if q else []) + cfg.get("q_list", [])
        if qs:
            cfg["p"] = prime_power(qs[0])[0]
    p = cfg.get("p")
    for qq in ([int(q)] if q else []) + cfg.get("q_list", []):
        qp, _ = prime_power(qq)
        if p is not None and qp != p:
            raise UsageError(f"q = {qq} is not a power of p = {p}")
    return cfg


def _need(cfg: dict, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise UsageError(f"missing --{k.replace('_', '-')}")


def _out(cfg: dict) -> Path:
    return Path(cfg.get("out") or ".")


def _family(cfg: dict) -> list[PolyY]:
    _need(cfg, "family", "p")
    return [PolyY.parse(s, int(cfg["p"])) for s in cfg["family"]]


# commands

def cmd_classify(cfg: dict) -> tuple[int, list]:
    fam = _family(cfg)
    p = int(cfg["p"])
    single = len(fam) == 1 and fam[0].has_fp_coefficients() and not fam[0].is_constant()
    if single:
        cert = equidist.classify_single(fam[0], p)
        result = {"mode": "exact", "family": [str(P) for P in fam], **cert.to_json()}
        code = EXIT_OK if cert.verdict == "good" else EXIT_NEGATIVE
    else:
        q_list = cfg.get("q_list") or [p**k for k in range(2, 5)]
        samples = int(cfg.get("samples", equidist.DEFAULT_SAMPLES))
        cost = sum(min(q ** len(fam), samples) * q for q in q_list)
        _guard(cost, cfg["budget"], "classify")
        ev = equidist.classify_family_empirical(fam, q_list, p, samples=samples, seed=int(cfg.get("seed", 0)))
        result = {"mode": "empirical", **ev.to_json()}
        code = EXIT_NEGATIVE if ev.verdict == "not-good" else EXIT_EMPIRICAL
    path = write_text(_out(cfg) / "classify.json", json_text(result, cfg))
    return code, [path]


def cmd_count(cfg: dict) -> tuple[int, list]:
    _need(cfg, "q")
    q = int(cfg["q"])
    instance_kind = cfg.get("instance", "random")
    rows = []
    if instance_kind == "coset":
        inst = pattern_counter.coset_instance(q)
        insts = [(0, inst)]
    else:
        fam = _family(cfg)
        _need(cfg, "seed")
        trials = int(cfg.get("trials", 1))
        _guard(trials * len(fam) * q * q, cfg["budget"], "count")
        dens = float(cfg.get("density", 0.5))
        insts = []
        for t in range(trials):
            rng = np.random.default_rng([int(cfg["seed"]), q, t])
            insts.append((t, pattern_counter.PatternInstance.random(fam, q, rng, dens)))
    for t, inst in insts:
        N = pattern_counter.count_patterns(inst)
        mt = pattern_counter.main_term(inst.sizes, q)
        rows.append([q, t, N, mt, " ".join(str(s) for s in inst.sizes)])
    header = ["q", "trial", "N", "main_term", "sizes"]
    fam_str = [str(P) for P in insts[0][1].family]
    result = {"family": fam_str, "instance": instance_kind, "rows": [dict(zip(header, r)) for r in rows]}
    out = _out(cfg)
    paths = [
        write_text(out / "count.csv", csv_text(header, rows, cfg)),
        write_text(out / "count.json", json_text(result, cfg)),
    ]
    return EXIT_OK, paths


def _ensembles(cfg: dict, default) -> list[str]:
    ens = cfg.get("ensemble") or list(default)
    for e in ens:
        if e not in pattern_counter.ENSEMBLES:
            raise UsageError(f"unknown ensemble {e!r}")
    return ens


def cmd_discrepancy(cfg: dict) -> tuple[int, list]:
    fam = _family(cfg)
    _need(cfg, "q", "seed")
    q = int(cfg["q"])
    trials = int(cfg.get("trials", 20))
    ens = [e for e in _ensembles(cfg, ("sign", "set25", "set50")) if e != "characters"]
    _guard(trials * len(ens) * len(fam) * q * q, cfg["budget"], "discrepancy")
    F = field(q)
    V = np.stack([P.values(F) for P in fam])
    rows = [
        [q, e, t, pattern_counter._trial_discrepancy(fam, q, e, t, int(cfg["seed"]), V)]
        for e in ens
        for t in range(trials)
    ]
    header = ["q", "ensemble", "trial", "discrepancy"]
    summary = {
        "family": [str(P) for P in fam],
        "q": q,
        "max_discrepancy": max(r[3] for r in rows),
        "mean_discrepancy": float(np.mean([r[3] for r in rows])),
    }
    out = _out(cfg)
    return EXIT_OK, [
        write_text(out / "discrepancy.csv", csv_text(header, rows, cfg)),
        write_text(out / "discrepancy.json", json_text(summary, cfg)),
    ]


def cmd_fit_gamma(cfg: dict) -> tuple[int, list]:
    fam = _family(cfg)
    _need(cfg, "q_list", "seed")
    q_list = cfg["q_list"]
    trials = int(cfg.get("trials", 20))
    ens = _ensembles(cfg, pattern_counter.ENSEMBLES)
    cost = sum(trials * len(ens) * len(fam) * q * q + q ** len(fam) for q in q_list)
    _guard(cost, cfg["budget"], "fit-gamma")
    fit = pattern_counter.fit_gamma(
        fam, q_list, ens, trials=trials, seed=int(cfg["seed"]), threads=int(cfg.get("threads", 1)), p=int(cfg["p"])
    )
    out = _out(cfg)
    return EXIT_OK, [
        write_text(out / "fit_gamma.csv", csv_text(["q", "ensemble", "trial", "discrepancy"], fit.rows, cfg)),
        write_text(out / "fit_gamma.json", json_text(fit.to_json(), cfg)),
    ]


def cmd_verify(cfg: dict) -> tuple[int, list]:
    lemma = cfg.get("lemma", "all")
    lemmas = list(lemma_verifier.LEMMAS) if lemma == "all" else [lemma]
    for lem in lemmas:
        if lem not in lemma_verifier.LEMMAS:
            raise UsageError(f"unknown lemma {lem!r}; choose from all, {', '.join(lemma_verifier.LEMMAS)}")
    q = int(cfg.get("q", 16))
    if q > 64:
        raise UsageError("lemma instances are limited to |G| <= 64")
    seeds = int(cfg.get("seeds", 20))
    base = int(cfg.get("seed", 0))
    _guard(seeds * len(lemmas) * 4 * q**3, cfg["budget"], "verify")
    reports = lemma_verifier.run_suite(q, range(base, base + seeds), lemmas, threads=int(cfg.get("threads", 1)))
    failed = [r for r in reports if r.failed]
    result = {
        "q": q,
        "lemmas": lemmas,
        "instances": len(reports),
        "non_vacuous": sum(not r.vacuous for r in reports),
        "failures": len(failed),
        "reports": [r.to_json() for r in reports],
    }
    path = write_text(_out(cfg) / "verify.json", json_text(result, cfg))
    return (EXIT_NEGATIVE if failed else EXIT_OK), [path]


def cmd_pet_trace(cfg: dict) -> tuple[int, list]:
    fam = _family(cfg)
    tr = pet_trace(fam, int(cfg["p"]), mode=cfg.get("mode", "standardize"))
    header = ["step", "kind", "weight", "standard", "i0", "N", "s", "C1_log_p", "alpha", "C2", "beta", "family"]
    rows = []
    for st in tr.steps:
        b = st.bound
        rows.append([
            st.index, st.kind, " ".join(map(str, st.weight.as_tuple())), st.standard,
            "" if st.i0 is None else st.i0, st.N, b.get("s", ""), b.get("C1_log_p", ""), b.get("alpha", ""),
            b.get("C2", ""), b.get("beta", ""), " ; ".join(str(P) for P in st.family),
        ])
    out = _out(cfg)
    return EXIT_OK, [
        write_text(out / "pet_trace.csv", csv_text(header, rows, cfg)),
        write_text(out / "pet_trace.json", json_text(tr.to_json(), cfg)),
    ]


def cmd_fourier(cfg: dict) -> tuple[int, list]:
    _need(cfg, "q")
    q = int(cfg["q"])
    F = field(q)
    _guard(q * math.log2(q), cfg["budget"], "fourier")
    if cfg.get("input"):
        f = GroupFn.from_csv(F, Path(cfg["input"]).read_text())
        source = {"input": str(cfg["input"])}
    else:
        _need(cfg, "seed")
        gen = cfg.get("generator", "sign")
        rng = np.random.default_rng([int(cfg["seed"]), q])
        if gen == "sign":
            f = GroupFn.random_sign(F, rng)
        elif gen == "phase":
            f = GroupFn.random_phase(F, rng)
        elif gen.startswith("set"):
            f = GroupFn.random_set(F, float(cfg.get("density", 0.5)), rng)
        else:
            raise UsageError(f"unknown generator {gen!r}")
        source = {"generator": gen}
    spec = fourier(f)
    back = inverse_fourier(spec)
    lhs, rhs = u2_fourier_identity(f)
    summary = {
        **source,
        "q": q,
        "modulus": str(F.modulus.Q),
        "roundtrip_max_error": float(np.max(np.abs(back.values - f.values))),
        "parseval_gap": spec.parseval_gap(f),
        "u2_power": lhs,
        "l4_spectrum": rhs,
    }
    rows = [[s, c.real, c.imag] for s, c in enumerate(spec.coeffs)]
    out = _out(cfg)
    return EXIT_OK, [
        write_text(out / "fourier.csv", csv_text(["character", "re", "im"], rows, cfg)),
        write_text(out / "fourier.json", json_text(summary, cfg)),
    ]


HANDLERS = {
    "classify": cmd_classify,
    "count": cmd_count,
    "discrepancy": cmd_discrepancy,
    "fit-gamma": cmd_fit_gamma,
    "verify": cmd_verify,
    "pet-trace": cmd_pet_trace,
    "fourier": cmd_fourier,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--p", type=int)
    common.add_argument("--family", help="polynomials in y separated by ';' or ','")
    common.add_argument("--q", type=int)
    common.add_argument("--q-list", dest="q_list")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--budget", type=float)
    common.add_argument("--threads", type=int)

    ap = argparse.ArgumentParser(prog="fqpatterns", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common]).add_argument("--samples", type=int)
    c = sub.add_parser("count", parents=[common])
    c.add_argument("--instance", choices=["random", "coset"])
    c.add_argument("--density", type=float)
    d = sub.add_parser("discrepancy", parents=[common])
    d.add_argument("--ensemble")
    g = sub.add_parser("fit-gamma", parents=[common])
    g.add_argument("--ensemble")
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("lemma", nargs="?", help="lemma id or 'all'")
    v.add_argument("--seeds", type=int)
    t = sub.add_parser("pet-trace", parents=[common])
    t.add_argument("--mode", choices=["standardize", "target"])
    f = sub.add_parser("fourier", parents=[common])
    f.add_argument("--input", help="CSV with columns index,re,im")
    f.add_argument("--generator", choices=["sign", "phase", "set"])
    f.add_argument("--density", type=float)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = build_config(args)
        cfg["budget"] = float(cfg.get("budget") or DEFAULT_BUDGET)
        code, paths = HANDLERS[args.command](cfg)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (UsageError, BudgetExceeded, ValueError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    for pth in paths:
        print(pth)
    return code


if __name__ == "__main__":
    sys.exit(main())
