"""Config-driven experiment runner.

    lab <subcommand> --config <path> [--out <dir>] [--seed <int>]

The config is an INI file with one section named after the subcommand
holding flat ``key = value`` pairs.  Every report echoes the effective
config (given values plus defaults) in '#' header lines.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import random
import sys
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Callable

import mpmath

from . import density, entropy, measure, padic
from .arith import factorize, valuation
from .errors import ConfigError, HypothesisViolation, LabError
from .reports import write_csv, write_summary
from .seqgen import Geometric, SequenceSpec, parse_spec
from .torus import IrrationalSurrogate, approx_irrational, orbit

log = logging.getLogger("furstlab")

SUBCOMMANDS = ("orbit", "entropy", "padic", "density", "measure", "dim", "pipeline")
REQUIRED = object()


# -- value parsers ---------------------------------------------------------

def int_list(text: str) -> tuple[int, ...]:
    """'1-6' -> (1, ..., 6); '3,5,8' -> (3, 5, 8)."""
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(v) for v in text.split(","))


def big_int(text: str) -> int:
    """Integer, also written as a power: '10^50'."""
    base, sep, exp = text.strip().partition("^")
    return int(base) ** int(exp) if sep else int(base)


def optional(parse: Callable) -> Callable:
    return lambda text: None if text.strip().lower() in ("", "none") else parse(text)


def boolean(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def fraction_pair(text: str) -> tuple[Fraction, Fraction]:
    lo, hi = text.split(",")
    return Fraction(lo.strip()), Fraction(hi.strip())


SCHEMAS: dict[str, dict[str, tuple[Callable, object]]] = {
    "orbit": {
        "x": (str, REQUIRED), "digits": (int, 60), "q": (int, REQUIRED), "L": (int, REQUIRED),
    },
    "entropy": {
        "spec": (parse_spec, REQUIRED), "q": (int, REQUIRED), "N_max": (int, 8),
        "threshold_ratio": (Decimal, entropy.DEFAULT_THRESHOLD_RATIO),
        "threshold": (optional(Decimal), None),
    },
    "padic": {
        "a": (int, REQUIRED), "p": (optional(int), None), "q": (optional(int), None),
        "N": (int, 20), "k_max": (int, 32), "spec": (optional(parse_spec), None),
    },
    "density": {
        "x": (str, "sqrt2"), "digits": (int, 200),
        "a": (parse_spec, REQUIRED), "b": (parse_spec, REQUIRED), "c": (parse_spec, REQUIRED),
        "max_index": (int_list, REQUIRED), "max_product": (optional(big_int), None),
        "h_max": (int, 2), "write_cloud": (boolean, False),
        "scan_spec": (optional(parse_spec), None), "scan_interval": (fraction_pair, "0,1/10"),
        "scan_Q": (int, 729), "scan_M": (int, 64),
    },
    "measure": {
        "x": (str, "sqrt2"), "digits": (int, 200), "q": (int, REQUIRED),
        "a": (parse_spec, REQUIRED), "N_range": (int_list, "1-4"), "delta": (Fraction, "1/2"),
        "h_max": (int, 8), "checks": (int, 0),
    },
    "dim": {
        "source": (str, REQUIRED), "d_min": (Fraction, REQUIRED), "d_max": (Fraction, REQUIRED),
        "scales": (int, 8),
    },
    "pipeline": {
        "x": (str, "sqrt2"), "digits": (int, 200), "q": (int, REQUIRED),
        "a": (parse_spec, REQUIRED), "b": (parse_spec, REQUIRED),
        "N_range": (int_list, "1-3"), "delta": (Fraction, "1/2"), "N_max": (int, 8),
        "h_max": (int, 8), "max_index": (int_list, "6,30,6"),
        "max_product": (optional(big_int), None), "k_norms": (int, 8),
    },
}


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict
    echo: dict  # key -> text as given or defaulted
    seed: int = 0
    out: Path = Path("reports")
    source: str = ""

    def rng(self, name: str) -> random.Random:
        """Named generator derived from the single seed."""
        return random.Random(f"{self.seed}:{name}")

    def header(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed, **self.echo}


def load_config(path: Path | str, subcommand: str, seed: int | None = None,
                out: Path | str | None = None) -> ExperimentConfig:
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    parser = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if not parser.has_section(subcommand):
        raise ConfigError(f"config has no [{subcommand}] section")
    raw = dict(parser.items(subcommand))
    schema = SCHEMAS[subcommand]
    unknown = sorted(set(raw) - set(schema) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown keys in [{subcommand}]: {', '.join(unknown)}")
    if seed is None:
        try:
            seed = int(raw.get("seed", 0))
        except ValueError:
            raise ConfigError("seed must be an integer") from None
    params, echo = {}, {}
    for key, (parse, default) in schema.items():
        if key in raw:
            text = raw[key]
        elif default is REQUIRED:
            raise ConfigError(f"[{subcommand}] is missing required key {key!r}")
        elif default is None:
            params[key], echo[key] = None, "none"
            continue
        else:
            text = str(default)
        try:
            params[key] = parse(text) if isinstance(text, str) else text
        except LabError:
            raise
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key!r}: {text!r} ({exc})") from None
        echo[key] = text
    return ExperimentConfig(subcommand, params, echo, seed,
                            Path(out) if out is not None else Path("reports"), str(path))


# -- helpers ---------------------------------------------------------------

def _decimal(x: Fraction, digits: int = 30) -> str:
    with localcontext() as ctx:
        ctx.prec = digits + 5
        return f"{Decimal(x.numerator) / x.denominator:.{digits}f}"


def _point(cfg: ExperimentConfig) -> IrrationalSurrogate:
    tag = cfg.params["x"]
    if ":" not in tag and ("/" in tag or tag.isdigit()):
        tag = f"rational:{tag}"
    return approx_irrational(tag, cfg.params["digits"])


def _csv_rows(rows: list[list]) -> str:
    return "".join(",".join(str(v) for v in row) + "\n" for row in rows)


# -- subcommands -----------------------------------------------------------

def run_orbit(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    x = _point(cfg)
    exact = x.target_tag.startswith("rational:")
    if not exact:
        x.check_multiplier(p["q"] ** (p["L"] - 1), Fraction(1, 10 ** 30))
    pts = orbit(x.point, p["q"], p["L"])
    rows = [["n", "point"]]
    rows += [[n, str(pt) if exact else _decimal(pt.value)] for n, pt in enumerate(pts)]
    write_csv(cfg.out / "orbit.csv", _csv_rows(rows), cfg.header())
    period = next((n for n in range(1, len(pts)) if pts[n] == pts[0]), None)
    return {"length": len(pts), "period": period, "returns_to_start": pts[-1] == pts[0]}


def run_entropy(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    rep = entropy.local_positivity(p["spec"], p["q"], p["N_max"],
                                   threshold=p["threshold"],
                                   threshold_ratio=p["threshold_ratio"])
    for prime, prof in rep.profiles.items():
        write_csv(cfg.out / f"entropy_p{prime}.csv", prof.to_csv(), cfg.header())
    out = rep.to_dict()
    out["verdict_text"] = (f"positive via p={','.join(map(str, rep.positive_primes))}"
                           if rep.positive else "negative")
    return out


def _padic_rows(a: int, primes: list[int], N: int, spec: SequenceSpec, k_max: int) -> list[list]:
    rows = [["p", "d", "S", "v_log", "guard_ok", "critical_points", "continuity"]]
    for p in primes:
        verdict = padic.continuity_test(spec, p, k_max).verdict
        if a % p == 0:
            rows.append([p, "", "", "", "not_a_unit", "", verdict])
            continue
        cert = padic.interpolation_stride(a, p)
        crit = padic.critical_point_scan(cert, N).count if cert.guard_ok else ""
        rows.append([p, cert.d, cert.S, cert.v_log, cert.guard_ok, crit, verdict])
    return rows


def run_padic(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    if p["p"] is None and p["q"] is None:
        raise ConfigError("[padic] needs p or q")
    primes = [p["p"]] if p["p"] is not None else sorted(factorize(p["q"]))
    spec = p["spec"] or Geometric(p["a"])
    if p["p"] is not None:
        padic.interpolation_stride(p["a"], p["p"])  # surfaces guard errors for a single prime
    rows = _padic_rows(p["a"], primes, p["N"], spec, p["k_max"])
    write_csv(cfg.out / "padic.csv", _csv_rows(rows), cfg.header())
    keys = rows[0]
    return {"a": p["a"], "certificates": [dict(zip(keys, r)) for r in rows[1:]]}


def _density_metrics(cloud: density.PointCloud, h_max: int) -> list[list]:
    rows = [["metric", "value"], ["points", len(cloud)],
            ["max_gap", _decimal(density.max_gap(cloud), 20)],
            ["star_discrepancy", _decimal(density.star_discrepancy(cloud), 20)]]
    for h in range(1, h_max + 1):
        rows.append([f"weyl_{h}", mpmath.nstr(density.weyl_sum(cloud, h), 20,
                                              min_fixed=-30, max_fixed=30)])
    return rows


def run_density(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    if len(p["max_index"]) != 3:
        raise ConfigError("max_index needs three entries")
    x = _point(cfg)
    budget = density.Budget(p["max_index"], p["max_product"])
    cloud = density.triple_product_points(x, p["a"], p["b"], p["c"], budget)
    rows = _density_metrics(cloud, p["h_max"])
    write_csv(cfg.out / "density.csv", _csv_rows(rows), cfg.header())
    if p["write_cloud"]:
        body = "".join(_decimal(pt.value, 30) + "\n" for pt in cloud.points)
        write_csv(cfg.out / "cloud.csv", "value\n" + body, cfg.header())
    out = {r[0]: r[1] for r in rows[1:]}
    if p["scan_spec"] is not None:
        scan = density.exceptional_scan(p["scan_spec"], p["scan_interval"],
                                        p["scan_Q"], p["scan_M"])
        write_csv(cfg.out / "scan.csv", scan.to_csv(), cfg.header())
        out["scan"] = scan.summary()
    return out


def run_measure(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    x = _point(cfg)
    rep = measure.entropy_growth_experiment(x, p["q"], p["a"], p["N_range"], p["delta"],
                                            h_max=p["h_max"])
    write_csv(cfg.out / "growth.csv", rep.to_csv(), cfg.header())
    wit = ["N,n,ell,gcd_d,residual\n"]
    for N, ws in sorted(rep.witness_lists.items()):
        body = measure.witnesses_to_csv(ws).split("\n", 1)[1]
        wit.extend(f"{N},{line}\n" for line in body.splitlines())
    write_csv(cfg.out / "witnesses.csv", "".join(wit), cfg.header())
    out = rep.summary()
    if p["checks"] > 0:
        ineq = measure.inequality_suite(p["checks"], cfg.rng("inequalities"))
        write_csv(cfg.out / "inequalities.csv", ineq.to_csv(), cfg.header())
        out["inequalities"] = {"cases": ineq.cases, "violations": len(ineq.violations)}
        if not ineq.ok:
            raise HypothesisViolation(f"{len(ineq.violations)} entropy inequality violations")
    return out


def _dim_source(text: str) -> list[Fraction]:
    kind, _, arg = text.partition(":")
    if kind == "cantor":
        return density.cantor_endpoints(int(arg))
    if kind == "grid":
        n = int(arg)
        return [Fraction(j, n) for j in range(n)]
    raise ConfigError(f"unknown dim source {text!r} (use cantor:<level> or grid:<n>)")


def run_dim(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    try:
        pts = _dim_source(p["source"])
    except ValueError:
        raise ConfigError(f"bad dim source {p['source']!r}") from None
    est = density.box_dimension_estimate(density.PointCloud.of(pts), p["d_min"], p["d_max"],
                                         p["scales"])
    body = _csv_rows([["scale", "count"]] + [[str(d), c] for d, c in est.counts])
    write_csv(cfg.out / "dim.csv", body, cfg.header())
    return {"slope": est.slope, "points": len(pts),
            "window": [str(est.window[0]), str(est.window[1])]}


# -- the composed pipeline -------------------------------------------------

def _norm_valuations(spec: SequenceSpec, p: int, count: int, cap: int = 64) -> list[int]:
    """val_p(b_k) for k = 1..count, capped at ``cap``."""
    m = p ** cap
    out = []
    for k in range(1, count + 1):
        v = valuation(spec.term_mod(k, m), p)
        out.append(cap if v is None else v)
    return out


def host_check(spec: SequenceSpec, p: int, k_norms: int = 8) -> list:
    """One hypothesis-table row: [condition, prime, method, value, status]."""
    base = spec.exponential_base
    if base is not None and base % p == 0:
        vals = _norm_valuations(spec, p, k_norms)
        to_zero = all(a <= b for a, b in zip(vals, vals[1:])) and vals[-1] > vals[0]
        return ["q_host", p, "norm_to_zero", " ".join(map(str, vals)),
                "pass" if to_zero else "fail"]
    if base is not None:
        cert = padic.interpolation_stride(base, p)
        return ["q_host", p, "stride", f"S={cert.S} v_log={cert.v_log}",
                "pass" if cert.guard_ok else "fail"]
    rep = padic.continuity_test(spec, p)
    return ["q_host", p, "continuity", rep.verdict,
            "pass" if rep.verdict == "plausible" else "fail"]


@dataclass
class PipelineResult:
    table: list[list] = field(default_factory=lambda: [["condition", "prime", "method",
                                                        "value", "status"]])
    summary: dict = field(default_factory=dict)


def pipeline_theorem2(cfg: ExperimentConfig) -> PipelineResult:
    """Stages: (i) positivity of a, (ii) host conditions on b, (iii) the
    entropy growth construction, (iv) density of {q^n a_m b_k x}."""
    p = cfg.params
    q, a, b = p["q"], p["a"], p["b"]
    res = PipelineResult()
    header = cfg.header()

    def flush():
        write_csv(cfg.out / "hypotheses.csv", _csv_rows(res.table), header)

    # (i)
    pos = entropy.local_positivity(a, q, p["N_max"])
    for prime, prof in pos.profiles.items():
        ratio = prof.tail_sup / entropy.ln(prime)
        res.table.append(["positive_entropy", prime, "tail_sup/ln_p", f"{ratio:.6f}",
                          "pass" if prime in pos.positive_primes else "fail"])
    res.summary["stage_i"] = pos.to_dict()
    if not pos.positive:
        flush()
        raise HypothesisViolation("stage (i): a has no positive local entropy at any p | q")

    # (ii)
    rows = [host_check(b, prime, p["k_norms"]) for prime in sorted(factorize(q))]
    res.table.extend(rows)
    res.summary["stage_ii"] = [dict(zip(res.table[0], r)) for r in rows]
    if any(r[4] != "pass" for r in rows):
        flush()
        raise HypothesisViolation("stage (ii): b fails the host condition at some p | q")
    flush()

    # (iii)
    x = _point(cfg)
    try:
        growth = measure.entropy_growth_experiment(x, q, a, p["N_range"], p["delta"],
                                                   h_max=p["h_max"])
    except LabError as exc:
        raise type(exc)(f"stage (iii): {exc}") from exc
    write_csv(cfg.out / "growth.csv", growth.to_csv(), header)
    res.summary["stage_iii"] = growth.summary()

    # (iv)
    if len(p["max_index"]) != 3:
        raise ConfigError("max_index needs three entries")
    max_product = p["max_product"] or 10 ** (x.error_exponent - 7)
    try:
        cloud = density.triple_product_points(x, Geometric(q), a, b,
                                              density.Budget(p["max_index"], max_product))
    except LabError as exc:
        raise type(exc)(f"stage (iv): {exc}") from exc
    metrics = _density_metrics(cloud, 2)
    write_csv(cfg.out / "density.csv", _csv_rows(metrics), header)
    res.summary["stage_iv"] = {r[0]: r[1] for r in metrics[1:]}
    return res


def run_pipeline(cfg: ExperimentConfig) -> dict:
    return pipeline_theorem2(cfg).summary


RUNNERS = {
    "orbit": run_orbit, "entropy": run_entropy, "padic": run_padic, "density": run_density,
    "measure": run_measure, "dim": run_dim, "pipeline": run_pipeline,
}


def run(cfg: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit status."""
    try:
        summary = RUNNERS[cfg.subcommand](cfg)
    except LabError as exc:
        print(f"lab {cfg.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"lab {cfg.subcommand}: invalid parameters: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    write_summary(cfg.out / "summary.json", {"config": cfg.header(), "result": summary})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lab", description=__doc__.split("\n\n")[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", type=Path, default=None,
                    help="report directory (default: reports/)")
    ap.add_argument("--seed", type=int, default=None,
                    help="overrides a 'seed' key in the config (default 0)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.subcommand, args.seed, args.out)
    except LabError as exc:
        print(f"lab {args.subcommand}: {exc}", file=sys.stderr)
        return exc.exit_code
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
