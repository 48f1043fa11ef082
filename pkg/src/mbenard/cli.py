"""Command-line entry point: ``mbenard {run,resume,converge,probe,analyze}``.

Exit status 0 on success, 1 on a domain error (the message names the violated
contract) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import configfile
from . import experiments as ex
from .diagnostics import CSV_COLUMNS, FLAVORS, format_row
from .dynamics import SimConfig
from .errors import ConfigurationError, InstabilityError, MBenardError, UsageError
from .integrate import CsvSink, InitialSpec, load_checkpoint, run

log = logging.getLogger("mbenard")

CSV_NAME = "diagnostics.csv"
REPORT_NAME = "report.json"


def _common(p: argparse.ArgumentParser, flavor_default=None):
    p.add_argument("--out-dir", help="output directory (default: out_dir from the config, else ./out)")
    p.add_argument("--checkpoint-every", type=int, metavar="STEPS",
                   help="checkpoint cadence in steps; 0 keeps only the initial and final checkpoints (default 0)")
    p.add_argument("--diag-every", type=int, metavar="STEPS", help="diagnostic cadence in steps (default 1)")
    p.add_argument("--norm-flavor", choices=FLAVORS, default=flavor_default,
                   help="norm used for the headline BKM integrals (default besov)")
    p.add_argument("--seed", type=int, help="seed for random initial data (default 0)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mbenard", description="Truncated ideal magnetic Benard simulator and diagnostics.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, metavar="{run,resume,converge,probe,analyze}")

    p = sub.add_parser("run", help="run a simulation from a config file")
    p.add_argument("--config", required=True, help="key = value config file")
    _common(p)

    p = sub.add_parser("resume", help="continue a run from a checkpoint")
    p.add_argument("checkpoint", help="MBSPEC01 checkpoint written by 'run'")
    p.add_argument("--config", help="config file; only t_end, workers and output keys may differ from the checkpoint")
    p.add_argument("--t-end", type=float, help="new final time (default: the checkpoint's)")
    _common(p)

    p = sub.add_parser("converge", help="run a convergence, truncation-decay or blow-up study from a JSON manifest")
    p.add_argument("manifest", help="JSON manifest with a 'study' key")
    p.add_argument("--out-dir")

    p = sub.add_parser("probe", help="run inequality probe ensembles")
    p.add_argument("--probe", action="append", choices=sorted(ex.PROBES),
                   help="probe to run; repeat for several (default: all)")
    p.add_argument("--count", type=int, help="fields per ensemble")
    p.add_argument("--dim", type=int, choices=(2, 3), help="dimension (interpolation uses both unless given)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir")

    p = sub.add_parser("analyze", help="recompute diagnostics and verdicts from stored checkpoints")
    p.add_argument("paths", nargs="+", help="checkpoint files or directories holding ckpt_*.mbspec")
    p.add_argument("--norm-flavor", choices=FLAVORS)
    p.add_argument("--out-dir")
    return ap


def _echo(settings: configfile.RunSettings) -> dict:
    # output location is left out so the CSV does not depend on where it lands
    d = settings.to_dict()
    d.pop("out_dir", None)
    return d


def _run_outputs(settings, state, report, out: Path, extra=None) -> dict:
    recs = report.records
    summary = {
        "settings": settings.to_dict(),
        "run": report.to_dict(),
        "final": recs[-1].to_dict() if recs else None,
    }
    summary.update(extra or {})
    ex.write_json(out / REPORT_NAME, summary)
    return summary


def _execute(settings: configfile.RunSettings, out: Path, append=False) -> int:
    out.mkdir(parents=True, exist_ok=True)
    sink = CsvSink(out / CSV_NAME, _echo(settings), append=append)
    try:
        state, report = run(
            settings.sim,
            settings.init,
            [sink],
            diag_every=settings.diag_every,
            checkpoint_every=settings.checkpoint_every,
            checkpoint_dir=out / "checkpoints",
            norm_flavor=settings.norm_flavor,
            final_checkpoint=True,
        )
    except InstabilityError as exc:
        if exc.report is not None:
            _run_outputs(settings, None, exc.report, out, {"error": str(exc)})
        raise
    finally:
        sink.close()
    _run_outputs(settings, state, report, out)
    print(f"{report.termination}: t={report.t_final:.6g} after {report.steps} steps; outputs in {out}")
    return 0


def cmd_run(args) -> int:
    values = configfile.load(args.config)
    settings = configfile.resolve(
        values,
        checkpoint_every=args.checkpoint_every,
        diag_every=args.diag_every,
        norm_flavor=args.norm_flavor,
        seed=args.seed,
        out_dir=args.out_dir,
    )
    if settings.init.kind == "from_checkpoint":
        raise UsageError("use 'resume' to continue from a checkpoint")
    return _execute(settings, Path(settings.out_dir))


def cmd_resume(args) -> int:
    ck = Path(args.checkpoint)
    _, header = load_checkpoint(ck)
    cfg = SimConfig.from_dict(header["config"])
    resume = header.get("run", {})
    values = configfile.load(args.config) if args.config else {}
    overrides = {
        "t_end": args.t_end if args.t_end is not None else values.get("t_end", cfg.t_end),
        "workers": values.get("workers", cfg.workers),
    }
    new_cfg = cfg.with_(**overrides)
    if args.config:
        check = configfile.resolve(values, out_dir=args.out_dir).sim.with_(**overrides)
        if check != new_cfg:
            raise ConfigurationError("config file disagrees with the checkpoint's physical parameters")
    flavor = args.norm_flavor or resume.get("monitor", {}).get("flavor", "besov")
    if args.norm_flavor and resume.get("monitor") and args.norm_flavor != resume["monitor"]["flavor"]:
        raise UsageError("cannot change the norm flavor on resume")
    init = InitialSpec(kind="from_checkpoint", path=str(ck), seed=header.get("init", {}).get("seed", 0))
    out = Path(args.out_dir or values.get("out_dir") or ck.resolve().parent.parent)
    settings = configfile.RunSettings(
        new_cfg,
        init,
        args.diag_every or resume.get("diag_every", 1),
        args.checkpoint_every if args.checkpoint_every is not None else resume.get("checkpoint_every", 0),
        flavor,
        str(out),
    )
    return _execute(settings, out, append=True)


def cmd_converge(args) -> int:
    try:
        m = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read manifest {args.manifest}: {exc}") from exc
    out = Path(args.out_dir or m.get("out_dir") or "out")
    study = m.get("study")
    if study == "convergence":
        cfg = SimConfig.from_dict(m["config"])
        rep = ex.convergence_study(cfg, m["R_list"], InitialSpec(**m.get("init", {})),
                                   sample_every=m.get("sample_every", 1), s_prime=m.get("s_prime", 1.0), out_dir=out)
        print(f"D = {rep.D}, epsilon_hat = {rep.epsilon_hat}; outputs in {out}")
    elif study == "truncation_decay":
        from .spectral import Grid

        rep = ex.truncation_decay_study(m.get("a"), m["s"], m["k"], m["R_list"], Grid(m.get("dim", 2), m.get("N", 256)),
                                        seed=m.get("seed", 0), out_dir=out)
        print(f"fitted order = {rep.fitted_order}; outputs in {out}")
    elif study == "blowup":
        cfg = SimConfig.from_dict(m["config"])
        rep = ex.blowup_study(cfg, InitialSpec(**m.get("init", {})), m.get("flavor", "besov"), out_dir=out,
                              diag_every=m.get("diag_every", 1))
        print(f"{rep.verdict}; outputs in {out}")
    else:
        raise ConfigurationError(f"manifest 'study' must be convergence, truncation_decay or blowup, got {study!r}")
    return 0


def cmd_probe(args) -> int:
    names = args.probe or sorted(ex.PROBES)
    params = {}
    for n in names:
        kw = {"seed": args.seed}
        if args.count is not None:
            kw["count"] = args.count
        if args.dim is not None:
            kw["dims" if n == "interpolation" else "dim"] = (args.dim,) if n == "interpolation" else args.dim
        params[n] = kw
    out = Path(args.out_dir or "out")
    reports = ex.probe_study(names, out_dir=out, **params)
    for n, r in reports.items():
        growth = "" if r.growth is None else f", growth {r.growth:+.3%}"
        mx = max(v["max"] for v in r.by_n.values())
        print(f"{n}: max ratio {mx:.6g}{growth}")
    return 0


def _checkpoint_paths(items) -> list:
    paths = []
    for it in items:
        p = Path(it)
        paths += sorted(p.glob("ckpt_*.mbspec")) if p.is_dir() else [p]
    if not paths:
        raise UsageError("no checkpoint files found")
    return paths


def cmd_analyze(args) -> int:
    res = ex.analyze_checkpoints(_checkpoint_paths(args.paths), args.norm_flavor)
    out = Path(args.out_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    echo = {"config": res.config, "flavor": res.flavor, "checkpoints": res.paths}
    with open(out / "analysis.csv", "w", encoding="utf-8") as fh:
        for line in json.dumps(echo, sort_keys=True, indent=1).splitlines():
            fh.write(f"# {line}\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in res.records:
            fh.write(format_row(r.row()) + "\n")
    ex.write_json(out / "analysis.json", res.to_dict())
    print(
        f"{len(res.records)} checkpoints; L2 growth bound {'pass' if res.l2_growth['passed'] else 'FAIL'}; "
        f"BKM accumulator {'consistent' if res.bkm_consistent else 'INCONSISTENT'}; outputs in {out}"
    )
    return 0


COMMANDS = {"run": cmd_run, "resume": cmd_resume, "converge": cmd_converge, "probe": cmd_probe, "analyze": cmd_analyze}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except MBenardError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1
    except (KeyError, TypeError) as exc:
        print(f"error [ConfigurationError]: malformed input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
