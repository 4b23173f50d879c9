"""Command-line front end: one subcommand per experiment.

Configuration is a flat ``key = value`` text file (``--config``) overridden by
``--key value`` flags.  Every written file carries the hash of the effective
configuration; the process exits 0 only when every checked property holds.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import averaging, expsums, pet, sequences, systems
from .torus import e, fixed64_to_unit, frac_fixed64, make_constant

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

COMMON = {
    "B": ("2", "bad exponent set, comma separated"),
    "variant": ("single", "single | multiple | pointwise"),
    "ell": (1, "l for the multiple variant"),
    "alpha": ("golden_mean", "rotation constant label"),
    "precision": (256, "bits for stored constants"),
    "J_max": (12, "last block index of the schedule"),
    "seed": (0, "random seed"),
    "out": ("", "output directory (empty: no files)"),
}

SUBCOMMANDS = {
    "build-seq": {
        "N": (16, "enumerate S up to N"),
    },
    "divergence": {
        "j": ("7..10", "block range a..b"),
        "b": (0, "exponent whose gap is measured (0: least element of B)"),
        "threshold": (0.03, "every gap must reach this value"),
        "weights": ("S", "S or a constant weight (control)"),
    },
    "convergence": {
        "g": (1, "power of s_n in the phase"),
        "N": (262144, "final checkpoint (terms of S)"),
        "N_compare": (16384, "earlier checkpoint the defect must improve on"),
        "window": (2, "dyadic pairs in the Cauchy defect"),
        "threshold": (0.05, "largest admissible defect at N"),
    },
    "weyl-check": {
        "b": ("2,3", "degrees of the general check"),
        "m_max": (5, "largest m in the general check"),
        "log2N": ("10..16", "exponents of N in the general check"),
        "base_m_max": (200, "largest m in the linear base case"),
        "base_N_max": (100000, "largest N in the linear base case"),
        "fib_index": (80, "bad-approximation check runs to F_index"),
        "random_samples": (32, "random polynomial coefficient draws"),
        "strict": (False, "use the constant with the extra factor"),
    },
    "bsg-check": {
        "pairs": ("1:2,1:3,2:3", "b:g pairs"),
        "m": (1, "multiplier"),
        "log2N": ("12,14,16", "exponents of N"),
        "eps": (0.05, "epsilon in the exponent"),
    },
    "vdc-check": {
        "instances": (1000, "random instances"),
        "N_max": (1000, "largest instance length"),
    },
    "eta-check": {
        "gamma": (2.0, "base of the geometric checkpoints"),
        "K": (100, "number of geometric terms"),
        "l_max": (40, "block-sum inequality checked for l <= l_max"),
        "N_max": (1000000, "range of the monotonicity check"),
        "tail": (80, "tail index for the summability increments"),
        "tol": (1e-6, "largest admissible tail increment"),
    },
    "wierdl-check": {
        "N": (1048576, "final N"),
        "threshold": (0.01, "largest admissible |avg| at N"),
        "j0": (4, "first block of the term-by-term bound"),
    },
    "pet": {
        "family": ("{n^2; 2n^2}", "family, e.g. {n^2; 2n^2}"),
        "rule": ("leading", "leading | member"),
        "random": (0, "number of random families to test instead"),
        "max_steps": (50, "step budget for random families"),
        "max_members": (1000, "size budget for random families"),
        "soundness": (100, "random rewrite soundness instances"),
    },
    "simulate": {
        "system": ("skew", "skew | rotation"),
        "k": (1, "character frequency"),
        "beta": ("sqrt2", "second rotation constant of the skew system"),
        "sequence": ("n", "n | S"),
        "power": (1, "use s_n**power"),
        "N": (65536, "number of terms"),
        "points": (256, "sample points"),
        "expect": ("converge", "converge | diverge"),
        "threshold": (0.05, "defect bound (upper for converge, lower for diverge)"),
    },
    "reduce-check": {
        "k": (1, "character frequency"),
        "beta": ("sqrt2", "second rotation constant"),
        "N": (10000, "number of terms"),
        "points": (100, "sample points"),
        "sequence": ("S", "n | S"),
        "tol": (2.0 ** -40, "largest admissible discrepancy"),
    },
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

def parse_int(text) -> int:
    if isinstance(text, int):
        return text
    t = str(text).strip().replace("**", "^")
    if "^" in t:
        base, exp = t.split("^", 1)
        return int(base) ** int(exp)
    return int(t)


def int_list(text: str) -> list[int]:
    """'1,2,5' or '3..6' (inclusive) or a mix."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..", 1)
            out.extend(range(parse_int(a), parse_int(b) + 1))
        else:
            out.append(parse_int(part))
    return out


def defaults_for(sub: str) -> dict:
    table = {k: v for k, (v, _) in COMMON.items()}
    table.update({k: v for k, (v, _) in SUBCOMMANDS[sub].items()})
    return table


def coerce(key: str, value, default):
    try:
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
            v = str(value).strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            return parse_int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def read_config_file(path: str) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def resolve_config(sub: str, file_values: dict, flag_values: dict) -> dict:
    defaults = defaults_for(sub)
    cfg = dict(defaults)
    for source in (file_values, flag_values):
        for k, v in source.items():
            if v is None:
                continue
            if k not in defaults:
                raise ConfigError(f"unknown key {k} for {sub}")
            cfg[k] = coerce(k, v, defaults[k])
    validate(cfg)
    return cfg


CHOICES = {
    "variant": ("single", "multiple", "pointwise"),
    "rule": ("leading", "member"),
    "system": ("skew", "rotation"),
    "sequence": ("n", "S"),
    "expect": ("converge", "diverge"),
}

POSITIVE = ("ell", "J_max", "N", "N_compare", "window", "m_max", "base_m_max", "base_N_max",
            "fib_index", "K", "l_max", "N_max", "instances", "max_steps", "max_members",
            "points", "power")


def validate(cfg: dict) -> None:
    """Field-level checks; the error names the offending key."""
    for k, allowed in CHOICES.items():
        if k in cfg and cfg[k] not in allowed:
            raise ConfigError(f"bad value for {k}: {cfg[k]!r} (expected one of {', '.join(allowed)})")
    for k in POSITIVE:
        if k in cfg and cfg[k] < 1:
            raise ConfigError(f"bad value for {k}: must be positive")
    if cfg["precision"] < 64:
        raise ConfigError("bad value for precision: at least 64 bits are needed")
    if cfg["seed"] < 0:
        raise ConfigError("bad value for seed: must be non-negative")
    if "weights" in cfg and cfg["weights"] != "S":
        try:
            float(cfg["weights"])
        except ValueError:
            raise ConfigError(f"bad value for weights: {cfg['weights']!r}") from None
    if "gamma" in cfg and cfg["gamma"] <= 1:
        raise ConfigError("bad value for gamma: must exceed 1")
    try:
        [int(b) for b in str(cfg["B"]).split(",")]
    except ValueError:
        raise ConfigError(f"bad value for B: {cfg['B']!r}") from None


def format_config(cfg: dict) -> str:
    return "".join(f"{k} = {cfg[k]}\n" for k in sorted(cfg))


def config_hash(sub: str, cfg: dict) -> str:
    relevant = {k: v for k, v in cfg.items() if k != "out"}
    text = f"subcommand = {sub}\n" + format_config(relevant)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# shared helpers

def _variant(cfg) -> sequences.SequenceVariant:
    return sequences.SequenceVariant(cfg["variant"], cfg["ell"] if cfg["variant"] == "multiple" else 1)


def _alpha(cfg):
    return make_constant(cfg["alpha"], cfg["precision"])


def _bad_set(cfg) -> list[int]:
    B = int_list(cfg["B"])
    if not B or min(B) < 1:
        raise ConfigError("B must list positive integers")
    return B


def _schedule(cfg):
    return sequences.default_schedule(_bad_set(cfg), _variant(cfg), cfg["J_max"])


def _sequence_terms(cfg, count: int) -> list[int]:
    """First ``count`` elements of S."""
    sch, alpha, var = _schedule(cfg), _alpha(cfg), _variant(cfg)
    n_max = 4 * count + 1024
    while True:
        s = sequences.enumerate_S(sch, alpha, n_max, var)
        if len(s) >= count:
            return [int(x) for x in s[:count]]
        n_max *= 2


@dataclass
class Outcome:
    checks: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    stdout: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _csv_rows(header, rows) -> str:
    import csv
    import io
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands

def cmd_build_seq(cfg) -> Outcome:
    sch, alpha, var = _schedule(cfg), _alpha(cfg), _variant(cfg)
    N = cfg["N"]
    s = sequences.enumerate_S(sch, alpha, N, var) if N >= 2 else np.zeros(0, dtype=np.int64)
    listed = set(int(x) for x in s)
    upto = min(N, 4096)
    consistent = all(sequences.member(n, sch, alpha, var) == (n in listed) for n in range(2, upto + 1))
    text = "".join(f"{int(x)}\n" for x in s)
    out = Outcome({"member_consistent": consistent, "increasing": bool(np.all(np.diff(s) > 0))})
    out.artifacts = {"S.txt": text, "schedule.json": sch.to_dict(),
                     "report.json": {"count": len(s), "N": N, "density": len(s) / max(N, 1)}}
    out.stdout = text
    return out


def cmd_divergence(cfg) -> Outcome:
    sch, alpha = _schedule(cfg), _alpha(cfg)
    b = cfg["b"] or min(_bad_set(cfg))
    weights = cfg["weights"]
    w = "S" if weights == "S" else float(weights)
    js = int_list(cfg["j"])
    recs = averaging.divergence_gap(sch, alpha, b, js, _variant(cfg), weights=w,
                                    scheduled_only=(w == "S"))
    out = Outcome()
    if w == "S":
        out.checks["gaps_above_threshold"] = all(r.gap >= cfg["threshold"] for r in recs)
    else:
        out.checks["control_gap_below_threshold"] = abs(recs[-1].gap) < cfg["threshold"]
    out.artifacts = {"gaps.csv": averaging.gaps_to_csv(recs),
                     "report.json": {"b": b, "gaps": {str(r.j): r.gap for r in recs},
                                     "lower_bound_limit": averaging.GAP_LIMIT,
                                     "limit": averaging.GAP_EXACT_LIMIT}}
    out.stdout = "".join(f"j={r.j} gap={r.gap:.6f}\n" for r in recs)
    return out


def cmd_convergence(cfg) -> Outcome:
    N, N_cmp, window, g = cfg["N"], cfg["N_compare"], cfg["window"], cfg["g"]
    if N & (N - 1) or N_cmp & (N_cmp - 1):
        raise ConfigError("N and N_compare must be powers of two")
    s = np.array(_sequence_terms(cfg, N), dtype=np.int64)
    rows, worst_N, worst_cmp = [], 0.0, 0.0
    for beta in sequences.default_beta_grid():
        tr = averaging.sequence_exp_trace(s, beta, g, averaging.dyadic(N))
        dN = averaging.cauchy_defect(tr, window)
        dC = averaging.cauchy_defect(tr.upto(N_cmp), window)
        rows.append((beta.label, dN, dC))
        worst_N, worst_cmp = max(worst_N, dN), max(worst_cmp, dC)
    out = Outcome({"defect_below_threshold": worst_N <= cfg["threshold"],
                   "defect_decreasing": worst_N < worst_cmp})
    out.artifacts = {"defects.csv": _csv_rows(["beta", f"defect_{N}", f"defect_{N_cmp}"], rows),
                     "report.json": {"defect": worst_N, "defect_compare": worst_cmp, "g": g}}
    out.stdout = f"sup defect at N={N}: {worst_N:.6g}; at N={N_cmp}: {worst_cmp:.6g}\n"
    return out


def cmd_weyl_check(cfg) -> Outcome:
    alpha = _alpha(cfg)
    base = expsums.gsb_base_case(cfg["base_m_max"], cfg["base_N_max"], alpha)
    bad = expsums.bad_approximation_check(index=cfg["fib_index"])
    rows, worst = [], 0.0
    for b in int_list(cfg["b"]):
        samples = expsums.polynomial_samples(b, cfg["random_samples"], cfg["seed"], alpha)
        for m in range(1, cfg["m_max"] + 1):
            for k in int_list(cfg["log2N"]):
                rep = expsums.check_gsb(m, 1 << k, b, samples, alpha, cfg["strict"])
                rows.append((b, m, 1 << k, rep["max_abs"], rep["bound"], rep["max_ratio"]))
                worst = max(worst, rep["max_ratio"])
    out = Outcome({"base_case": base["holds"], "bad_approximation": bad["holds"], "general": worst <= 1})
    out.artifacts = {"gsb.csv": _csv_rows(["b", "m", "N", "max_abs_sum", "bound", "ratio"], rows),
                     "report.json": {"base_case": base, "bad_approximation": {k: v for k, v in bad.items()},
                                     "max_ratio": worst,
                                     "constants": {str(b): expsums.gsb_constant(b, cfg["strict"])
                                                   for b in int_list(cfg["b"])}}}
    out.stdout = (f"base case max ratio {base['max_ratio']:.6f}; bad approximation "
                  f"{'ok' if bad['holds'] else 'FAILED'}; general max ratio {worst:.6f}\n")
    return out


def cmd_bsg_check(cfg) -> Outcome:
    alpha = _alpha(cfg)
    Ns = [1 << k for k in int_list(cfg["log2N"])]
    rows, reports, ok = [], [], True
    for pair in cfg["pairs"].split(","):
        b, g = (int(x) for x in pair.split(":"))
        slopes = expsums.bsg_slopes(cfg["m"], b, g, Ns, alpha=alpha) if len(Ns) > 1 else {}
        for N in Ns:
            rep = expsums.check_bsg(cfg["m"], b, g, N, cfg["eps"], alpha=alpha)
            ok &= rep["holds"]
            for r in rep["rows"]:
                rows.append((b, g, N, r["beta"], r["case"], r["abs_sum"], r["exponent"]))
            reports.append({"b": b, "g": g, "N": N, "max_exponent": rep["max_exponent"],
                            "threshold": rep["threshold"]})
        reports.append({"b": b, "g": g, "slopes": slopes})
    out = Outcome({"exponents_below_threshold": bool(ok)})
    out.artifacts = {"bsg.csv": _csv_rows(["b", "g", "N", "beta", "case", "abs_sum", "exponent"], rows),
                     "report.json": {"results": reports}}
    out.stdout = "".join(f"b={r['b']} g={r['g']} N={r['N']} max exponent {r['max_exponent']:.4f}\n"
                         for r in reports if "N" in r)
    return out


def vdc_instances(count: int, N_max: int, seed: int):
    """Seeded unit-modulus test sequences: random phases, polynomial phases, vectors."""
    rng = np.random.default_rng(seed)
    for i in range(count):
        N = int(rng.integers(1, N_max + 1))
        kind = i % 3
        n = np.arange(1, N + 1)
        if kind == 0:
            v = np.exp(2j * np.pi * rng.random(N))
        elif kind == 1:
            a, b = rng.random(2)
            v = np.exp(2j * np.pi * (a * n * n + b * n))
        else:
            d = int(rng.integers(2, 5))
            z = rng.normal(size=(N, d)) + 1j * rng.normal(size=(N, d))
            v = z / np.linalg.norm(z, axis=1, keepdims=True)
        yield N, v


def cmd_vdc_check(cfg) -> Outcome:
    failures, count = [], 0
    for i, (N, v) in enumerate(vdc_instances(cfg["instances"], cfg["N_max"], cfg["seed"])):
        for H in sorted({1, math.isqrt(N), N}):
            lhs, rhs, holds = expsums.vdc_check(v, H)
            count += 1
            if not holds:
                failures.append({"instance": i, "N": N, "H": H, "lhs": lhs, "rhs": rhs})
    out = Outcome({"vdc_inequality": not failures})
    out.artifacts = {"report.json": {"checks": count, "failures": failures}}
    out.stdout = f"{count} checks, {len(failures)} failures\n"
    return out


def cmd_eta_check(cfg) -> Outcome:
    rep = averaging.eta_checks(cfg["gamma"], cfg["K"], cfg["l_max"], cfg["N_max"], cfg["tail"], cfg["tol"])
    out = Outcome({k: rep[k]["passed"] for k in ("eta1", "eta2", "eta3", "block_bound")})
    out.artifacts = {"report.json": rep}
    out.stdout = "".join(f"{k}: {'pass' if v else 'FAIL'}\n" for k, v in out.checks.items())
    return out


def golden_block_family(alpha):
    """u_{n,j} = e(n frac(j alpha))."""
    P = alpha.precision_bits

    def u(n, j):
        theta = make_constant(Fraction((j * alpha.scaled_value) % (1 << P), 1 << P))
        return e(fixed64_to_unit(frac_fixed64(n, theta)))
    return u


def cmd_wierdl_check(cfg) -> Outcome:
    alpha = _alpha(cfg)
    u = golden_block_family(alpha)
    N = cfg["N"]
    _, trace = averaging.wierdl_concatenate(u, N)
    final = abs(trace.checkpoints[-1].avg)
    bound = averaging.wierdl_bound(u, N, cfg["j0"])
    out = Outcome({"final_average_small": final <= cfg["threshold"], "term_bound_holds": bound["holds"]})
    bound = dict(bound, eps={str(k): v for k, v in bound["eps"].items()})
    out.artifacts = {"trace.csv": trace.to_csv(), "report.json": {"final_abs_avg": final, "bound": bound}}
    out.stdout = f"|avg| at N={N}: {final:.6g}; term-by-term bound {bound['bound']:.6g}\n"
    return out


def cmd_pet(cfg) -> Outcome:
    out = Outcome()
    if cfg["random"]:
        rng = random.Random(cfg["seed"])
        rows = []
        for i in range(cfg["random"]):
            fam = pet.random_family(rng)
            try:
                tr = pet.pet_run(fam, cfg["rule"], cfg["max_steps"], cfg["max_members"])
                rows.append({"family": str(fam), "steps": len(tr.steps), "descending": tr.strictly_descending(),
                             "status": "terminated"})
            except pet.PETGuardError as exc:
                status = "exceeds" if exc.min_total_steps > cfg["max_steps"] else "undetermined"
                rows.append({"family": str(fam), "steps": exc.steps, "min_total_steps": exc.min_total_steps,
                             "status": status, "reason": str(exc)})
        sound_rng = random.Random(cfg["seed"] + 1)
        sound = []
        while len(sound) < cfg["soundness"]:
            fam = pet.random_family(sound_rng)
            # exercise later steps too, where h parameters are present
            depth = sound_rng.randint(0, 2)
            for _ in range(depth):
                if not len(fam) or len(fam) > 64:
                    break
                fam = pet.vdc_step(fam, pet.choose_p(fam))
            if not len(fam):
                continue
            idx = sound_rng.randrange(len(fam))
            sound.append(pet.rewrite_soundness(fam, idx, sound_rng))
        out.checks = {"terminate_within_budget": all(r["status"] == "terminated" for r in rows),
                      "strict_descent": all(r.get("descending", True) for r in rows),
                      "rewrite_soundness": all(sound)}
        out.artifacts = {"random.json": {"families": rows, "soundness_instances": len(sound)}}
        counts = {s: sum(r["status"] == s for r in rows) for s in ("terminated", "exceeds", "undetermined")}
        out.stdout = (f"{counts['terminated']} terminated, {counts['exceeds']} certified over budget, "
                      f"{counts['undetermined']} undetermined; soundness {sum(sound)}/{len(sound)}\n")
        return out
    fam = pet.HPolyFamily.parse(cfg["family"])
    tr = pet.pet_run(fam, cfg["rule"])
    out.checks = {"terminates": True, "strict_descent": tr.strictly_descending()}
    out.stdout = tr.format() + "\n"
    out.artifacts = {"trace.txt": out.stdout,
                     "report.json": {"family": str(fam), "steps": len(tr.steps),
                                     "types": [list(t) for t in tr.types]}}
    return out


def _sim_sequence(cfg, count) -> list[int]:
    if cfg["sequence"] == "n":
        s = list(range(1, count + 1))
    elif cfg["sequence"] == "S":
        s = _sequence_terms(cfg, count)
    else:
        raise ConfigError("sequence must be n or S")
    return [x ** cfg["power"] for x in s] if cfg.get("power", 1) != 1 else s


def cmd_simulate(cfg) -> Outcome:
    N, k = cfg["N"], cfg["k"]
    if N & (N - 1):
        raise ConfigError("N must be a power of two")
    s = _sim_sequence(cfg, N)
    if cfg["system"] == "skew":
        sysm = systems.SkewSystemT3(_alpha(cfg), make_constant(cfg["beta"], cfg["precision"]), 192)
        fns = list(systems.lflw_characters(k))
    elif cfg["system"] == "rotation":
        sysm = systems.RotationSystem(_alpha(cfg))
        fns = [systems.CharacterFn((k,))]
    else:
        raise ConfigError("system must be skew or rotation")
    res = systems.multi_average(sysm, s, len(fns), fns, checkpoints=averaging.dyadic(N),
                                seed=cfg["seed"], n_points=cfg["points"])
    last = res.defects[N // 2]
    exact = res.exact_defects[N // 2]
    if cfg["expect"] == "converge":
        checks = {"defect_small": last <= cfg["threshold"]}
    elif cfg["expect"] == "diverge":
        checks = {"defect_large": last >= cfg["threshold"]}
    else:
        raise ConfigError("expect must be converge or diverge")
    out = Outcome(checks)
    out.artifacts = {"traces.csv": res.to_csv(), "summary.json": res.summary()}
    out.stdout = f"L2 defect at N={N // 2}: {last:.6g} (exact integral {exact:.6g})\n"
    return out


def cmd_reduce_check(cfg) -> Outcome:
    sysm = systems.SkewSystemT3(_alpha(cfg), make_constant(cfg["beta"], cfg["precision"]), 192)
    cfg = dict(cfg, power=1)
    s = _sim_sequence(cfg, cfg["N"])
    pts = sysm.random_points(cfg["points"], cfg["seed"])
    rep = systems.lflw_reduction_check(sysm, cfg["k"], s, cfg["N"], pts)
    out = Outcome({"identity_within_tolerance": rep["max_discrepancy"] <= cfg["tol"]})
    out.artifacts = {"report.json": rep}
    out.stdout = f"max discrepancy {rep['max_discrepancy']:.3g}\n"
    return out


HANDLERS = {
    "build-seq": cmd_build_seq,
    "divergence": cmd_divergence,
    "convergence": cmd_convergence,
    "weyl-check": cmd_weyl_check,
    "bsg-check": cmd_bsg_check,
    "vdc-check": cmd_vdc_check,
    "eta-check": cmd_eta_check,
    "wierdl-check": cmd_wierdl_check,
    "pet": cmd_pet,
    "simulate": cmd_simulate,
    "reduce-check": cmd_reduce_check,
}


# ---------------------------------------------------------------------------
# output

def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not serialisable: {type(x).__name__}")


def render(name: str, content, sub: str, h: str, seed: int) -> str:
    if name.endswith(".json"):
        doc = {"subcommand": sub, "config_hash": h, "seed": seed, "result": content}
        return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    return f"# config_hash={h} seed={seed}\n" + content


def run_subcommand(sub: str, cfg: dict, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    h = config_hash(sub, cfg)
    try:
        outcome = HANDLERS[sub](cfg)
    except ConfigError:
        raise
    except Exception as exc:  # module failure -> machine-readable record
        outcome = Outcome({"completed": False}, details={"error": f"{type(exc).__name__}: {exc}"})
    out_dir = Path(cfg["out"]) if cfg["out"] else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "config.txt").write_text(f"# config_hash={h}\nsubcommand = {sub}\n" + format_config(
            {k: v for k, v in cfg.items() if k != "out"}))
        for name, content in outcome.artifacts.items():
            (out_dir / name).write_text(render(name, content, sub, h, cfg["seed"]))
    stdout.write(outcome.stdout)
    if outcome.passed:
        return EXIT_OK
    record = {"subcommand": sub, "config_hash": h, "seed": cfg["seed"],
              "failed": sorted(k for k, v in outcome.checks.items() if not v), **outcome.details}
    text = json.dumps(record, sort_keys=True, default=_json_default)
    if out_dir is not None:
        (out_dir / "failure.json").write_text(text + "\n")
    stderr.write(text + "\n")
    return EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergolab", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None, help="worker cap (also ERGOLAB_THREADS)")
    parser.add_argument("--dump-defaults", action="store_true", help="print every default and exit")
    subs = parser.add_subparsers(dest="subcommand")
    for name, keys in SUBCOMMANDS.items():
        sp = subs.add_parser(name)
        sp.add_argument("--config", help="flat key = value file")
        sp.add_argument("--dump-defaults", action="store_true", help="print defaults for this subcommand")
        sp.add_argument("--threads", type=int, default=None, dest="sub_threads")
        for k, (default, help_) in {**COMMON, **keys}.items():
            sp.add_argument(f"--{k}", dest=f"key_{k}", default=None, help=f"{help_} (default: {default})")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        if args.dump_defaults:
            sys.stdout.write(format_config({k: v for k, (v, _) in COMMON.items()}))
            for name in SUBCOMMANDS:
                sys.stdout.write(f"# {name}\n" + format_config({k: v for k, (v, _) in SUBCOMMANDS[name].items()}))
            return EXIT_OK
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    sub = args.subcommand
    threads = args.sub_threads if args.sub_threads is not None else args.threads
    if threads is not None:
        os.environ["ERGOLAB_THREADS"] = str(max(1, threads))
    if args.dump_defaults:
        sys.stdout.write(format_config(defaults_for(sub)))
        return EXIT_OK
    flags = {k[4:]: v for k, v in vars(args).items() if k.startswith("key_")}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(sub, file_values, flags)
        return run_subcommand(sub, cfg)
    except ConfigError as exc:
        sys.stderr.write(f"ergolab {sub}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
