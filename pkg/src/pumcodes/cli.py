"""Command-line front end.

Every subcommand writes delimited rows (CSV by default, JSON with
``--format json``) to ``--output`` or stdout.  Options may also come from a
JSON file given with ``--config``; explicit flags win over file values.

Exit codes: 0 success, 2 configuration error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import analytic
from .channel import (
    DecodingRadii,
    binomial_weight_distribution,
    load_weight_distribution_csv,
    threshold_probabilities,
)
from .codec import InconsistentSystemError, build_rs_pum_code, codec_simulation, write_matrix_csv
from .sim import monte_carlo_success

log = logging.getLogger("pumcodes")

SCHEMA_VERSION = 1

REFERENCE_GRID = "0.2,0.3,0.4,0.5,0.6,0.7"

DEFAULTS = {
    "common": {"n": 15, "k": 5, "L": 100, "t": 50, "format": "csv", "output": None, "streaming": False},
    "analyze": {"k1": 2, "grid": REFERENCE_GRID, "pum_radii": None, "um_radii": None, "weights": None, "success": False},
    "simulate": {"k1": 2, "mode": "pum", "grid": "0.3,0.4,0.5,0.6,0.7", "radii": None, "trials": 100_000,
                 "seed": 1, "workers": 1, "confidence": 0.95},
    "sweep": {"grid": "0.3", "k1s": None},
    "crossover": {"k1": 2, "mode": "both", "radii": None, "step": 1e-3},
    "codec-sim": {"k1": 2, "m": 4, "grid": "0.3,0.5", "L": 10, "trials": 1000, "seed": 1, "workers": 1,
                  "summary": None},
    "export-code": {"k1": 2, "m": 4, "outdir": "."},
}


class ConfigError(ValueError):
    pass


# -- formatting -------------------------------------------------------------

def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_cell(text: str):
    if text == "":
        return None
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_cell(row[h]) for h in header])
    return buf.getvalue()


def reparse_csv(text: str):
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return header, [dict(zip(header, map(parse_cell, r))) for r in reader]


def render_json(command: str, header, rows, extra=None) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, "columns": list(header), "rows": rows}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def emit(cfg, command, header, rows, extra=None) -> None:
    text = render_csv(header, rows) if cfg["format"] == "csv" else render_json(command, header, rows, extra)
    if cfg["output"]:
        Path(cfg["output"]).write_text(text)
    else:
        sys.stdout.write(text)


# -- option parsing ---------------------------------------------------------

def parse_grid(text) -> list[float]:
    """``"0.1,0.2"`` or ``"start:stop:step"`` (stop inclusive)."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        values = [float(v) for v in text]
    elif ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad grid {text!r}; expected start:stop:step") from None
        if step <= 0:
            raise ConfigError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 12) for i in range(count)]
    else:
        try:
            values = [float(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"bad grid {text!r}") from None
    if not values:
        raise ConfigError("empty grid")
    for p in values:
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"grid value {p} outside [0, 1]")
    return values


def parse_int_range(text) -> list[int]:
    if isinstance(text, list):
        return [int(v) for v in text]
    try:
        if ":" in text:
            lo, hi = (int(x) for x in text.split(":"))
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad integer range {text!r}") from None


def parse_radii(text) -> DecodingRadii:
    parts = text if isinstance(text, list) else str(text).split(",")
    if len(parts) != 4:
        raise ConfigError(f"radii need four values tau_alpha,tau_0,tau_1,tau_01; got {text!r}")
    try:
        a, b, c = (int(v) for v in parts[:3])
        d = math.inf if str(parts[3]).strip().lower() in ("inf", "infinity") else int(parts[3])
        return DecodingRadii(a, b, c, d)
    except ValueError as exc:
        raise ConfigError(f"invalid radii {text!r}: {exc}") from None


def _standard_radii(radii: DecodingRadii) -> DecodingRadii:
    if radii.tau_0 != radii.tau_1:
        raise ConfigError(f"the analysis needs tau_0 == tau_1, got {radii.as_tuple()}")
    return radii


def _check_block(cfg):
    if cfg["L"] < 1 or not 1 <= cfg["t"] <= cfg["L"]:
        raise ConfigError(f"need 1 <= t <= L, got t={cfg['t']}, L={cfg['L']}")


def _mds(cfg, k1) -> DecodingRadii:
    try:
        return DecodingRadii.from_mds(cfg["n"], cfg["k"], k1)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -- commands ---------------------------------------------------------------

def cmd_analyze(cfg) -> None:
    _check_block(cfg)
    pum = _standard_radii(parse_radii(cfg["pum_radii"]) if cfg["pum_radii"] else _mds(cfg, cfg["k1"]))
    um = _standard_radii(parse_radii(cfg["um_radii"]) if cfg["um_radii"] else _mds(cfg, cfg["k"]))
    if not um.is_unit_memory:
        raise ConfigError("UM radii need tau_01 = inf")
    L, t, streaming = cfg["L"], cfg["t"], cfg["streaming"]
    if cfg["weights"]:
        points = [("custom", load_weight_distribution_csv(cfg["weights"]))]
    else:
        points = [(p, binomial_weight_distribution(cfg["n"], p)) for p in parse_grid(cfg["grid"])]
    kind = "success" if cfg["success"] else "failure"
    header = ["p", f"{kind}_exact_pum", f"{kind}_exact_um", f"{kind}_ind", f"{kind}_main_pum", f"{kind}_main_um"]
    rows = []
    for p, dist in points:
        tp_pum = threshold_probabilities(dist, pum)
        tp_um = threshold_probabilities(dist, um)
        rp = analytic.pum_block_success(tp_pum, t, L, streaming)
        ru = analytic.um_block_success(tp_um, t, L, streaming)
        if cfg["success"]:
            vals = (rp.p_success, ru.p_success, analytic.independent_block_success(tp_pum), rp.p_main_term, ru.p_main_term)
        else:
            vals = (rp.failure, ru.failure, analytic.independent_block_failure(tp_pum), rp.main_failure, ru.main_failure)
        rows.append(dict(zip(header, (p, *vals))))
    emit(cfg, "analyze", header, rows)


def _mode_radii(cfg, mode):
    if cfg.get("radii"):
        radii = parse_radii(cfg["radii"])
    else:
        radii = _mds(cfg, cfg["k"] if mode == "um" else cfg["k1"])
    if mode == "um" and not radii.is_unit_memory:
        raise ConfigError("UM mode needs tau_01 = inf")
    return radii


def cmd_simulate(cfg) -> None:
    _check_block(cfg)
    mode = cfg["mode"]
    if mode not in ("pum", "um"):
        raise ConfigError(f"--mode must be pum or um for simulate, got {mode!r}")
    radii = _standard_radii(_mode_radii(cfg, mode))
    if cfg["trials"] < 1:
        raise ConfigError("--trials must be >= 1")
    if not 0 < cfg["confidence"] < 1:
        raise ConfigError("--confidence must lie in (0, 1)")
    grid = parse_grid(cfg["grid"])
    header = ["p", "estimate", "ci_low", "ci_high", "trials", "seed", "exact"]
    rows = []
    for p in grid:
        dist = binomial_weight_distribution(cfg["n"], p)
        rep = monte_carlo_success(
            dist, radii, cfg["L"], cfg["t"], mode, cfg["trials"], cfg["seed"],
            streaming=cfg["streaming"], workers=cfg["workers"], confidence=cfg["confidence"],
        )
        exact = analytic.block_success(threshold_probabilities(dist, radii), cfg["t"], cfg["L"], mode, cfg["streaming"])
        est, lo, hi = rep.failure_interval()
        rows.append(dict(zip(header, (p, est, lo, hi, rep.trials, rep.master_seed, exact.failure))))
        log.info("p=%g failure estimate %.6g [%.6g, %.6g]", p, est, lo, hi)
    emit(cfg, "simulate", header, rows)


def cmd_sweep(cfg) -> None:
    _check_block(cfg)
    n, k = cfg["n"], cfg["k"]
    k1s = parse_int_range(cfg["k1s"]) if cfg["k1s"] is not None else list(range(0, min(k, n - k) + 1))
    if not k1s:
        raise ConfigError("empty k1 range")
    for k1 in k1s:
        _mds(cfg, k1)
    table = analytic.parameter_sweep(n, k, parse_grid(cfg["grid"]), k1s, cfg["L"], cfg["t"])
    header = ["p", "k1", "mode", "tau_alpha", "tau_0", "tau_1", "tau_01", "failure"]
    rows = [
        dict(zip(header, (r.p, r.k1, r.mode, *r.radii.as_tuple(), r.failure)))
        for r in table
    ]
    emit(cfg, "sweep", header, rows)


def cmd_crossover(cfg) -> None:
    _check_block(cfg)
    modes = ("pum", "um") if cfg["mode"] == "both" else (cfg["mode"],)
    for mode in modes:
        if mode not in ("pum", "um"):
            raise ConfigError(f"--mode must be pum, um or both, got {mode!r}")
    if cfg.get("radii") and len(modes) > 1:
        raise ConfigError("--radii needs an explicit --mode")
    configs = [(mode, _standard_radii(_mode_radii(cfg, mode))) for mode in modes]
    header = ["mode", "tau_alpha", "tau_0", "tau_1", "tau_01", "p_prime", "p_prime_lower_bound", "roots", "sanity_ok", "status"]
    rows = []
    for mode, radii in configs:
        bound = analytic.crossover_lower_bound(cfg["n"], radii, mode, cfg["step"])
        try:
            res = analytic.crossover_point(cfg["n"], radii, mode, cfg["L"], cfg["t"], cfg["step"])
        except analytic.NoCrossoverError as exc:
            vals = (None, bound, "", False, str(exc))
        else:
            vals = (res.p_prime, bound, ";".join(repr(r) for r in res.roots), res.sanity_ok, "ok")
        rows.append(dict(zip(header, (mode, *radii.as_tuple(), *vals))))
    emit(cfg, "crossover", header, rows)


def cmd_codec_sim(cfg) -> None:
    if cfg["L"] < 1:
        raise ConfigError("--L must be >= 1")
    if cfg["trials"] < 1:
        raise ConfigError("--trials must be >= 1")
    try:
        build_rs_pum_code(cfg["n"], cfg["k"], cfg["k1"], cfg["m"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    header = ["p", "trial", "t", "weight", "automaton_pred", "codec_success"]
    rows, runs = [], []
    for p in parse_grid(cfg["grid"]):
        s = codec_simulation(cfg["n"], cfg["k"], cfg["k1"], cfg["m"], p, cfg["L"], cfg["trials"], cfg["seed"],
                             workers=cfg["workers"])
        rows.extend(dict(zip(header, (p, *r))) for r in s.rows)
        runs.append(s.as_dict())
        if s.implication_violations:
            log.error("p=%g: %d implication violations", p, s.implication_violations)
    summary = {"schema_version": SCHEMA_VERSION, "command": "codec-sim", "runs": runs}
    emit(cfg, "codec-sim", header, rows)
    text = json.dumps(summary, indent=2) + "\n"
    if cfg["summary"]:
        Path(cfg["summary"]).write_text(text)
    else:
        sys.stderr.write(text)
    if any(r["implication_violations"] for r in runs):
        raise InconsistentSystemError("automaton-predicted blocks were not recovered by the codec")


def cmd_export_code(cfg) -> None:
    try:
        code = build_rs_pum_code(cfg["n"], cfg["k"], cfg["k1"], cfg["m"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    outdir = Path(cfg["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    for name, mat in code.matrices().items():
        write_matrix_csv(mat, outdir / f"{name}.csv")
        print(outdir / f"{name}.csv")


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "crossover": cmd_crossover,
    "codec-sim": cmd_codec_sim,
    "export-code": cmd_export_code,
}


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file of option values; flags override it")
    common.add_argument("--n", type=int, help="block length (default 15)")
    common.add_argument("--k", type=int, help="information symbols per block (default 5)")
    common.add_argument("--L", type=int, help="sequence length in blocks")
    common.add_argument("--t", type=int, help="block index to evaluate (1-based)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--output", "-o", help="write rows here instead of stdout")
    common.add_argument("--streaming", action="store_true", help="i_L unknown to the receiver")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pumcodes", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], argument_default=S,
                       help="exact failure probabilities over a channel grid",
                       description="Columns: p, failure_exact_pum, failure_exact_um, failure_ind, "
                                   "failure_main_pum, failure_main_um.  failure_exact_* is 1 - P_t including the "
                                   "finite-length remainder; failure_main_* is the closed-form limit without it; "
                                   "failure_ind is a single block code decodable up to tau_0.  With --success the "
                                   "success probabilities are emitted instead.")
    p.add_argument("--k1", type=int, help="memory symbols of the PUM code (default 2)")
    p.add_argument("--grid", help="channel parameters: list a,b,c or start:stop:step")
    p.add_argument("--pum-radii", dest="pum_radii", help="override PUM radii tau_a,tau_0,tau_1,tau_01")
    p.add_argument("--um-radii", dest="um_radii", help="override UM radii tau_a,tau_0,tau_1,inf")
    p.add_argument("--weights", help="CSV weight,probability to use instead of the binomial grid")
    p.add_argument("--success", action="store_true", help="emit success instead of failure probabilities")

    p = sub.add_parser("simulate", parents=[common], argument_default=S,
                       help="Monte-Carlo failure estimates with Wilson intervals",
                       description="Columns: p, estimate, ci_low, ci_high, trials, seed, exact (all failure "
                                   "probabilities).  Output is identical for any --workers.")
    p.add_argument("--k1", type=int)
    p.add_argument("--mode", choices=("pum", "um"))
    p.add_argument("--grid")
    p.add_argument("--radii", help="override radii tau_a,tau_0,tau_1,tau_01")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--confidence", type=float)

    p = sub.add_parser("sweep", parents=[common], argument_default=S,
                       help="rank k1 choices by exact failure probability",
                       description="Columns: p, k1, mode, tau_alpha, tau_0, tau_1, tau_01, failure; sorted by "
                                   "p then failure.  Radii follow MDS constituent codes.")
    p.add_argument("--grid")
    p.add_argument("--k1s", help="k1 values: list a,b or range lo:hi (default 0..min(k, n-k))")

    p = sub.add_parser("crossover", parents=[common], argument_default=S,
                       help="channel parameter below which (P)UM beats independent coding",
                       description="Columns: mode, radii, p_prime, p_prime_lower_bound (from tail bounds), "
                                   "roots (all sign changes), sanity_ok, status.")
    p.add_argument("--k1", type=int)
    p.add_argument("--mode", choices=("pum", "um", "both"))
    p.add_argument("--radii")
    p.add_argument("--step", type=float, help="scan grid spacing (default 1e-3)")

    p = sub.add_parser("codec-sim", parents=[common], argument_default=S,
                       help="end-to-end GF(2^m) erasure trials against the automaton",
                       description="Per-block columns: p, trial, t, weight, automaton_pred, codec_success.  "
                                   "A JSON summary goes to --summary (or stderr).")
    p.add_argument("--k1", type=int)
    p.add_argument("--m", type=int, help="field GF(2^m) (default 4)")
    p.add_argument("--grid", help="erasure probabilities")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--summary")

    p = sub.add_parser("export-code", parents=[common], argument_default=S,
                       help="write the generator submatrices as CSV")
    p.add_argument("--k1", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--outdir")
    return parser


def resolve_config(ns: argparse.Namespace) -> dict:
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "verbose")}
    cfg = {**DEFAULTS["common"], **DEFAULTS[ns.command]}
    if getattr(ns, "config", None):
        try:
            file_cfg = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        file_cfg = {k.replace("-", "_"): v for k, v in file_cfg.items()}
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {ns.command}: {sorted(unknown)}")
        cfg.update(file_cfg)
    cfg.update(given)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(ns)
        COMMANDS[ns.command](cfg)
    except (InconsistentSystemError, AssertionError) as exc:
        print(f"pumcodes: internal invariant violated: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"pumcodes: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
