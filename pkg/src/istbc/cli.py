"""Command-line front end: design inspection, metric analysis, simulation.

Exit status: 0 on success, 2 on validation errors, 3 on resource or
budget refusals.  Data files (CSV/JSON) are byte-identical across
reruns of the same command; the run manifest written alongside them
carries the timestamp and the full parameter set.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .constellation import make_qam
from .designs import get_design, normalize
from .errors import BudgetError
from .fixedpoint import min_bits_integer_code
from .metrics import (SPECTRUM_CSV_HEADER, code_papr, difference_spectrum,
                      normalized_min_trace, reference_papr_note, spectrum_csv_row)
from .montecarlo import SimConfig, run_cer, run_quantization_sweep

# Enumerations above this many difference combinations need --allow-long.
CLI_LONG_RUN_THRESHOLD = 10 ** 8

_CONFIG_KEYS = ("code", "n", "m", "snr", "axis", "decoder", "encoder", "seed",
                "max_trials", "target_errors", "confidence", "batch_size")


def _parse_grid(text: str) -> tuple:
    """SNR grids as start:step:stop dB triplets, or comma lists."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(count))
    return tuple(float(p) for p in text.split(","))


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",")]


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _write_manifest(out_dir: Path, stem: str, subcommand: str, params: dict,
                    outputs: list[str], master_seed: int | None = None) -> Path:
    manifest = {
        "subcommand": subcommand,
        "parameters": params,
        "master_seed": master_seed,
        "tool_version": __version__,
        "outputs": sorted(outputs),
        "created_utc": _utc_now(),
    }
    path = out_dir / f"{stem}.manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _dump_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _design_report(args) -> dict:
    design = get_design(args.code, args.n, args.m)
    report = {
        "name": design.name,
        "n": design.n,
        "k_real": design.k_real,
        "exact_integer": design.exact_integer,
        "basis": [{"re": b.real.tolist(), "im": b.imag.tolist()} for b in design.basis],
    }
    if design.alpha is not None:
        d = 2 ** (design.m * design.n // 2) - 1
        report.update({
            "m": design.m,
            "alpha": design.alpha,
            "entry_range": d,
            "min_encoding_bits": min_bits_integer_code(design.n, design.m),
        })
    return report


def cmd_design(args) -> int:
    report = _design_report(args)
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"design_{args.code}_n{args.n}_m{args.m}"
        _dump_json(out / f"{stem}.json", report)
        _write_manifest(out, stem, "design",
                        {"code": args.code, "n": args.n, "m": args.m},
                        [f"{stem}.json"])
    return 0


def _analyze_papr(args, out: Path | None) -> list[str]:
    design = get_design(args.code, args.n, args.m)
    constellation = make_qam(args.m)
    db = code_papr(design, constellation)
    note = reference_papr_note(design.name, args.n, args.m, db)
    report = {"code": design.name, "n": args.n, "m": args.m, "papr_db": db}
    if note:
        report["note"] = note
    print(json.dumps(report, indent=2, sort_keys=True))
    outputs = []
    if out:
        stem = f"papr_{args.code}_n{args.n}_m{args.m}"
        _dump_json(out / f"{stem}.json", report)
        outputs.append(f"{stem}.json")
    return outputs


def _analyze_spectrum(args, out: Path | None) -> list[str]:
    design = get_design(args.code, args.n, args.m)
    constellation = make_qam(args.m)
    mode = args.mode
    if mode == "exhaustive":
        deltas = 2 ** (args.m // 2 + 1) - 1
        combos = deltas ** (2 * args.n * args.n)
        if combos > CLI_LONG_RUN_THRESHOLD and not args.allow_long:
            raise BudgetError(f"exhaustive spectrum over {combos} combinations is a "
                              f"long run; pass --allow-long")
    spectrum = difference_spectrum(design, constellation, mode=mode, budget=args.budget,
                                   allow_long=args.allow_long, seed=args.seed)
    print(json.dumps(spectrum.to_dict(), indent=2, sort_keys=True))
    outputs = []
    if out:
        stem = f"spectrum_{args.code}_n{args.n}_m{args.m}"
        _dump_json(out / f"{stem}.json", spectrum.to_dict())
        with open(out / f"{stem}.csv", "w") as fh:
            fh.write(SPECTRUM_CSV_HEADER + "\n" + spectrum_csv_row(spectrum) + "\n")
        outputs += [f"{stem}.json", f"{stem}.csv"]
    return outputs


def _analyze_trace(args, out: Path | None) -> list[str]:
    n_list = _parse_int_list(args.n_list)
    m_list = _parse_int_list(args.m_list)
    rows = []
    for m in m_list:
        constellation = make_qam(m)
        for n in n_list:
            design = get_design(args.code, n, m)
            rows.append((n, m, normalized_min_trace(design, constellation)))
    for n, m, val in rows:
        print(f"n={n} m={m} min_trace={val!r}")
    outputs = []
    if out:
        stem = f"trace_{args.code}"
        with open(out / f"{stem}.csv", "w") as fh:
            fh.write("n,m,min_trace\n")
            for n, m, val in rows:
                fh.write(f"{n},{m},{val!r}\n")
        outputs.append(f"{stem}.csv")
        if args.plot:
            from .plotting import save_trace_figure
            save_trace_figure(rows, out / f"{stem}.png")
            outputs.append(f"{stem}.png")
    return outputs


def cmd_analyze(args) -> int:
    out = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
    if args.which == "papr":
        outputs = _analyze_papr(args, out)
        params = {"code": args.code, "n": args.n, "m": args.m}
        stem = f"papr_{args.code}_n{args.n}_m{args.m}"
    elif args.which == "spectrum":
        outputs = _analyze_spectrum(args, out)
        params = {"code": args.code, "n": args.n, "m": args.m, "mode": args.mode,
                  "budget": args.budget, "allow_long": args.allow_long, "seed": args.seed}
        stem = f"spectrum_{args.code}_n{args.n}_m{args.m}"
    else:
        outputs = _analyze_trace(args, out)
        params = {"code": args.code, "n_list": args.n_list, "m_list": args.m_list}
        stem = f"trace_{args.code}"
    if out:
        _write_manifest(out, stem, f"analyze {args.which}", params, outputs,
                        master_seed=getattr(args, "seed", None))
    return 0


def _load_config_file(path: str) -> dict:
    """Flat key = value lines mirroring the simulate flags; # comments."""
    values: dict = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{line_no}: unknown key {key!r}")
        values[key] = val.strip()
    return values


def _sim_config(args) -> SimConfig:
    file_values = _load_config_file(args.config) if args.config else {}

    def pick(key, flag_value, cast):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return cast(file_values[key])
        return None

    code = pick("code", args.code, str)
    n = pick("n", args.n, int)
    m = pick("m", args.m, int)
    snr = pick("snr", args.snr, str)
    if code is None or n is None or m is None or snr is None:
        raise ValueError("simulate needs --code, -n, -m, and --snr "
                         "(from flags or the config file)")
    grid = _parse_grid(snr) if isinstance(snr, str) else snr
    return SimConfig(
        code=code, n=n, m=m, snr_db=grid,
        axis=pick("axis", args.axis, str) or "snr",
        decoder=pick("decoder", args.decoder, str) or "sphere",
        encoder=pick("encoder", args.encoder, str) or "exact",
        master_seed=pick("seed", args.seed, int) or 0,
        max_trials=pick("max_trials", args.max_trials, int) or 1_000_000,
        target_errors=pick("target_errors", args.target_errors, int) or 100,
        confidence=pick("confidence", args.confidence, float) or 0.95,
        batch_size=pick("batch_size", args.batch_size, int) or 4096,
    )


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    workers = args.workers or int(os.environ.get("ISTBC_WORKERS", "1"))
    if args.q_sweep:
        results = run_quantization_sweep(cfg, _parse_int_list(args.q_sweep),
                                         workers=workers)
    else:
        results = [run_cer(cfg, workers=workers)]

    for res in results:
        enc = res.config.encoder
        print(f"# encoder={enc} eta={res.eta!r}")
        print(",".join(("snr_db", "axis", "trials", "errors", "cer", "ci_low", "ci_high")))
        for p in res.points:
            print(f"{p.snr_db!r},{p.axis},{p.trials},{p.errors},{p.cer!r},"
                  f"{p.ci_low!r},{p.ci_high!r}")

    outputs = []
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        base = f"cer_{cfg.code}_n{cfg.n}_m{cfg.m}_{cfg.axis}"
        for res in results:
            tag = res.config.encoder.replace("=", "")
            stem = f"{base}_{tag}"
            res.write_csv(out / f"{stem}.csv")
            res.write_json(out / f"{stem}.json")
            outputs += [f"{stem}.csv", f"{stem}.json"]
        if args.plot:
            from .plotting import save_cer_figure
            save_cer_figure(results, out / f"{base}.png",
                            title=f"{cfg.code} n={cfg.n} {2 ** cfg.m}-QAM")
            outputs.append(f"{base}.png")
        _write_manifest(out, base, "simulate", asdict(cfg), outputs,
                        master_seed=cfg.master_seed)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="istbc",
                                 description="Integer space-time block codes: designs, "
                                             "metrics, and link simulation")
    ap.add_argument("--version", action="version", version=f"istbc {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    pd = sub.add_parser("design", help="inspect a design and its dynamic range")
    pd.add_argument("--code", required=True, choices=["ic", "golden", "alamouti"])
    pd.add_argument("-n", type=int, default=2)
    pd.add_argument("-m", type=int, default=2)
    pd.add_argument("--out")
    pd.set_defaults(func=cmd_design)

    pa = sub.add_parser("analyze", help="PAPR, difference spectrum, or trace metric")
    pa.add_argument("which", choices=["papr", "spectrum", "trace"])
    pa.add_argument("--code", required=True, choices=["ic", "golden", "alamouti"])
    pa.add_argument("-n", type=int, default=2)
    pa.add_argument("-m", type=int, default=2)
    pa.add_argument("--n-list", default="2,3,4", help="trace: comma list of antenna counts")
    pa.add_argument("--m-list", default="2,4,6", help="trace: comma list of bits per symbol")
    pa.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    pa.add_argument("--budget", type=int, default=100_000, help="sampled-mode draw count")
    pa.add_argument("--allow-long", action="store_true")
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--out")
    pa.add_argument("--plot", action="store_true")
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("simulate", help="measure CER over an SNR or PSNR grid")
    ps.add_argument("--config", help="flat key = value file; flags override")
    ps.add_argument("--code", choices=["ic", "golden", "alamouti"])
    ps.add_argument("-n", type=int)
    ps.add_argument("-m", type=int)
    ps.add_argument("--snr", help="grid as start:step:stop or comma list (dB)")
    ps.add_argument("--axis", choices=["snr", "psnr"])
    ps.add_argument("--decoder", choices=["exhaustive", "sphere"])
    ps.add_argument("--encoder", help="exact or q=<bits>")
    ps.add_argument("--seed", type=int)
    ps.add_argument("--max-trials", type=int, dest="max_trials")
    ps.add_argument("--target-errors", type=int, dest="target_errors")
    ps.add_argument("--confidence", type=float)
    ps.add_argument("--batch-size", type=int, dest="batch_size")
    ps.add_argument("--q-sweep", help="comma list of quantizer widths to sweep")
    ps.add_argument("--workers", type=int, help="worker processes (default $ISTBC_WORKERS or 1)")
    ps.add_argument("--out")
    ps.add_argument("--plot", action="store_true")
    ps.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
