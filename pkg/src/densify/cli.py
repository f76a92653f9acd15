"""Command-line front end.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 integrator
failure, 5 I/O error. Every failure prints one line
``error[<class>]: <reason>`` to stderr.
"""
import argparse
import sys

from .driver import load_scenario, run_scenario, write_section, yield_section
from .errors import DensifyError, ParameterError, ScenarioParseError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INTEGRATOR = 4
EXIT_IO = 5


def _parser():
    ap = argparse.ArgumentParser(
        prog="densify",
        description="Material-point driver for a finite-strain powder compaction model.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the loading program of a scenario")
    run.add_argument("scenario")
    run.add_argument("--out", help="CSV output path (default: output.file, else stdout)")
    run.add_argument("--stride", type=int, help="write every N-th step")

    sec = sub.add_parser("yield-section", help="trace the yield locus in a plane")
    sec.add_argument("scenario")
    sec.add_argument("--plane", choices=("meridian", "deviatoric"), required=True)
    sec.add_argument("--at", type=float, required=True,
                     help="Lode angle [rad] for meridian, pressure [MPa] for deviatoric")
    sec.add_argument("--resolution", type=int, default=101)
    sec.add_argument("--pc", type=float, help="hardening pressure [MPa] (default: initial.pc0)")
    sec.add_argument("--out", help="CSV output path (default: stdout)")

    chk = sub.add_parser("check", help="validate a scenario without running it")
    chk.add_argument("scenario")
    return ap


def _fail(kind, message, code):
    print(f"error[{kind}]: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if args.command == "check":
            print(f"ok: {args.scenario}: {len(scenario.legs)} leg(s), "
                  f"{sum(leg.steps for leg in scenario.legs)} step(s)")
            return EXIT_OK
        if args.command == "run":
            if args.stride is not None and args.stride < 1:
                raise ParameterError([f"--stride must be >= 1 (got {args.stride})"])
            out = args.out or scenario.output.file or sys.stdout
            run_scenario(scenario, out=out, stride=args.stride)
            return EXIT_OK
        points = yield_section(scenario, args.plane, args.at, args.resolution, args.pc)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                write_section(points, fh, args.plane)
        else:
            write_section(points, sys.stdout, args.plane)
        return EXIT_OK
    except ScenarioParseError as exc:
        return _fail("parse", f"{args.scenario}: {exc}", EXIT_PARSE)
    except ParameterError as exc:
        return _fail("validation", f"{args.scenario}: {exc}", EXIT_VALIDATION)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    except DensifyError as exc:
        return _fail("integrator", exc, EXIT_INTEGRATOR)


if __name__ == "__main__":
    sys.exit(main())
