"""Command-line interface.

Subcommands mirror the library modules:

  frequency   continued-fraction table and approximation scores
  orbit       even-repetition search for rotations and skew-shifts
  sample      coefficient windows from sampling functions
  gordon      certification and spectral-evidence tables
  cmv         finite truncations: matrix dump, spectrum, profiles
  run         config-driven scenario pipeline

Every subcommand writes delimited output (CSV) plus a JSON summary into
--out and prints a single summary line; `run` exit status is 0 for PASS,
2 for evidence FAIL, 1 for an execution error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .arith import DEFAULT_PRECISION_BITS, as_fraction
from .cmv import assemble, eigenvector_profile, spectrum
from .dynamics import Rotation, SkewShift, TorusPoint, find_even_repetition, iterate
from .errors import QpcmvError
from .frequency import badly_approximable_score, parse_frequency
from .pipeline import ExperimentConfig, _write_json, run
from .sampling import (
    ConstantFunction,
    HarmonicFunction,
    VerblunskySequence,
    tube_function,
    verblunsky_window,
)
from .transfer import certify_gordon, no_point_spectrum_evidence


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_point(text: str) -> TorusPoint:
    return TorusPoint([as_fraction(c) for c in text.split(",")])


def _parse_complex(text: str) -> complex:
    re, im = (text.split(",") + ["0"])[:2]
    return complex(float(re), float(im))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_frequency(args) -> int:
    out = _out_dir(args)
    if args.liouville:
        spec = f"liouville:{args.liouville}"
    elif args.value:
        spec = args.value
    else:
        raise QpcmvError("need --value or --liouville")
    freq = parse_frequency(spec, bits=args.precision_bits)
    scan = badly_approximable_score(freq, args.max_q)
    with open(out / "frequency.csv", "w", newline="") as fh:
        fh.write(f"# seed={args.seed}\n")
        w = csv.writer(fh)
        w.writerow(["q", "p", "q_dist"])
        for (p, q), (_, s) in zip(freq.convergents, scan.per_convergent):
            w.writerow([q, p, repr(float(s))])
    _write_json(
        out / "frequency.json",
        {
            "seed": args.seed,
            "value": f"{freq.value.numerator}/{freq.value.denominator}",
            "float_value": float(freq.value),
            "partial_quotients": list(freq.partial_quotients),
            "convergent_denominators": list(freq.convergent_denominators()),
            "designated_denominators": list(freq.designated_denominators),
            "truncated": freq.truncated,
            "precision_limited": freq.precision_limited,
            "min_score": float(scan.min_score),
            "argmin_q": scan.argmin_q,
            "reported_badly_approximable": scan.reported_badly_approximable,
        },
    )
    print(
        f"frequency: min q*<qa> = {float(scan.min_score):.6g} at q={scan.argmin_q} "
        f"over q<={args.max_q}; badly-approximable (finite scan): "
        f"{scan.reported_badly_approximable}"
    )
    return 0


def _cmd_orbit(args) -> int:
    out = _out_dir(args)
    freq = parse_frequency(args.freq, bits=args.precision_bits)
    omega = _parse_point(args.omega)
    if args.system == "rotation":
        system = Rotation([freq.value] * omega.dim)
    else:
        system = SkewShift(freq.value)
    eps = as_fraction(args.epsilon)
    s = as_fraction(args.s)
    cert = find_even_repetition(system, omega, eps, s, args.qmax)
    if cert is None:
        _write_json(
            out / "orbit.json",
            {"seed": args.seed, "found": False, "qmax": args.qmax},
        )
        print(f"orbit: no even repetition time q <= {args.qmax}")
        return 0
    with open(out / "orbit.csv", "w", newline="") as fh:
        fh.write(f"# seed={args.seed} q={cert.q}\n")
        w = csv.writer(fh)
        w.writerow(["n", "dist"])
        for n in range(cert.window + 1):
            d = iterate(system, omega, n).dist(iterate(system, omega, n + cert.q))
            w.writerow([n, repr(float(d))])
    _write_json(
        out / "orbit.json",
        {
            "seed": args.seed,
            "found": True,
            "q": cert.q,
            "epsilon": str(eps),
            "s": str(s),
            "window": cert.window,
            "max_deviation": float(cert.max_deviation),
            "validated": cert.validated,
        },
    )
    print(
        f"orbit: q={cert.q}, max deviation {float(cert.max_deviation):.6g} "
        f"over {cert.window + 1} steps ({cert.validated})"
    )
    return 0


def _cmd_sample(args) -> int:
    out = _out_dir(args)
    n_min, n_max = (int(x) for x in args.window.split(":"))
    if args.construct_ck:
        with open(args.construct_ck) as fh:
            spec = json.load(fh)
        freq = parse_frequency(str(spec["freq"]), bits=args.precision_bits)
        center = TorusPoint([as_fraction(str(c)) for c in spec["center"]])
        if spec.get("system", "rotation") == "rotation":
            system = Rotation([freq.value] * center.dim)
        else:
            system = SkewShift(freq.value)
        values = [complex(v[0], v[1]) for v in spec["values"]]
        period = int(spec["period"])
        radius_spec = spec["radius"]
        if radius_spec == "auto":
            from .sampling import ball_radius

            radius = ball_radius(
                system, center, period, as_fraction(str(spec["epsilon"]))
            ).radius
        else:
            radius = as_fraction(str(radius_spec))
        f = tube_function(system, center, period, radius, values)
        omega = f.gordon_point()
    else:
        if args.family == "constant":
            f = ConstantFunction(_parse_complex(args.params))
        elif args.family == "harmonic":
            f = HarmonicFunction(_parse_complex(args.params))
        else:
            raise QpcmvError(f"unknown family {args.family!r}")
        freq = parse_frequency(args.freq, bits=args.precision_bits)
        omega = _parse_point(args.omega)
        system = Rotation([freq.value] * omega.dim)
    seq = verblunsky_window(f, system, omega, n_min, n_max)
    seq.to_csv(out / "verblunsky.csv", seed=args.seed)
    print(
        f"sample: wrote window [{n_min},{n_max}] "
        f"(sup|alpha| = {float(np.abs(seq.values).max()):.6g})"
    )
    return 0


def _cmd_gordon(args) -> int:
    out = _out_dir(args)
    seq = VerblunskySequence.from_csv(args.seq_file)
    pairs = []
    for item in args.k_list.split(","):
        k_s, q_s = item.split(":")
        pairs.append((int(k_s), int(q_s)))
    cert = certify_gordon(seq, pairs, sequence_id=Path(args.seq_file).stem)
    table = None
    if cert.largest_passing() is not None:
        table = no_point_spectrum_evidence(seq, certificate=cert, z_grid=args.z_grid)
    elif args.q is not None:
        table = no_point_spectrum_evidence(seq, q=args.q, z_grid=args.z_grid)
    doc = {
        "seed": args.seed,
        "sequence": cert.sequence_id,
        "levels": [
            {
                "k": l.k, "q": l.q, "r": l.r, "defect": l.defect,
                "threshold": l.threshold, "passed": l.passed,
                "underflowed": l.underflowed,
            }
            for l in cert.levels
        ],
        "all_passed": cert.all_passed,
    }
    if table is not None:
        with open(out / "evidence.csv", "w", newline="") as fh:
            fh.write(f"# seed={args.seed} q={table.q} source={table.source}\n")
            w = csv.writer(fh)
            w.writerow(["angle", "c", "norm_forward", "norm_double",
                        "norm_backward"])
            for r in table.rows:
                w.writerow([repr(r.angle), repr(r.c), repr(r.norm_forward),
                            repr(r.norm_double), repr(r.norm_backward)])
        doc["evidence"] = {
            "q": table.q,
            "min_c": table.min_c,
            "argmin_angle": table.argmin_angle,
            "verdict": table.verdict,
        }
    report_path = Path(args.report) if args.report else out / "gordon.json"
    _write_json(report_path, doc)
    worst = min((l.defect - l.threshold for l in cert.levels), default=0.0)
    print(
        f"gordon: {'PASS' if cert.all_passed else 'FAIL'} "
        f"({len(cert.levels)} levels, worst slack {-worst:.3e})"
        + (f"; evidence {table.verdict} (min c = {table.min_c:.4g})" if table else "")
    )
    return 0


def _cmd_cmv(args) -> int:
    out = _out_dir(args)
    seq = VerblunskySequence.from_csv(args.seq_file)
    n_min, n_max = (int(x) for x in args.window.split(":"))
    bm, bp = (s.strip() for s in args.boundary.split(";"))
    op = assemble(
        seq, n_min, n_max, boundary=(_parse_complex(bm), _parse_complex(bp))
    )
    with open(out / "matrix.txt", "w") as fh:
        op.dump_triplets(fh, seed=args.seed)
    msg = (
        f"cmv: N={op.size}, unitarity defect {op.unitarity_defect:.3e}, "
        f"band agreement {op.band_agreement:.3e}"
    )
    if args.eig or args.profile:
        dec = spectrum(op)
        with open(out / "eigenvalues.csv", "w", newline="") as fh:
            fh.write(f"# seed={args.seed}\n")
            w = csv.writer(fh)
            w.writerow(["angle", "residual"])
            for lam, r in zip(dec.eigenvalues, dec.residuals):
                w.writerow([repr(float(np.angle(lam))), repr(float(r))])
        msg += f", max residual {float(dec.residuals.max()):.3e}"
        if args.profile:
            if args.profile == "all":
                indices = range(op.size)
            else:
                indices = [int(args.profile)]
            with open(out / "profile.csv", "w", newline="") as fh:
                fh.write(f"# seed={args.seed}\n")
                w = csv.writer(fh)
                w.writerow(["eigenvector", "shell", "mass", "participation_ratio"])
                for i in indices:
                    p = eigenvector_profile(op, dec, i)
                    for s, m in enumerate(p.shell_masses):
                        w.writerow([i, s, repr(m), repr(p.participation_ratio)])
    print(msg)
    return 0


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.precision_bits is not None:
        cfg.precision_bits = args.precision_bits
    doc, code = run(cfg, args.out)
    print(
        f"run[{cfg.scenario}]: {doc['overall']} "
        f"(verdicts: {', '.join(f'{k}={v}' for k, v in sorted(doc['verdicts'].items()))})"
    )
    return code


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qpcmv",
        description="CMV operators with quasiperiodic Verblunsky coefficients",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=20240601)
        p.add_argument(
            "--precision-bits", type=int, default=DEFAULT_PRECISION_BITS
        )

    p = sub.add_parser("frequency", help="continued-fraction analysis")
    p.add_argument("--value", help="decimal, p/q, or 'golden'")
    p.add_argument("--liouville", metavar="BASE,DEPTH")
    p.add_argument("--max-q", type=int, default=1000)
    common(p)
    p.set_defaults(func=_cmd_frequency)

    p = sub.add_parser("orbit", help="even-repetition search")
    p.add_argument("--system", choices=("rotation", "skew"), default="rotation")
    p.add_argument("--freq", required=True)
    p.add_argument("--omega", default="0")
    p.add_argument("--epsilon", default="1/100")
    p.add_argument("--s", default="4")
    p.add_argument("--qmax", type=int, default=1000)
    common(p)
    p.set_defaults(func=_cmd_orbit)

    p = sub.add_parser("sample", help="coefficient windows")
    p.add_argument("--family", choices=("constant", "harmonic"))
    p.add_argument("--params", default="0.5,0")
    p.add_argument("--construct-ck", metavar="FILE",
                   help="JSON tube-construction spec")
    p.add_argument("--freq", default="golden")
    p.add_argument("--omega", default="0")
    p.add_argument("--window", default="-8:8", metavar="N_MIN:N_MAX")
    common(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("gordon", help="certification and evidence")
    p.add_argument("--seq-file", required=True)
    p.add_argument("--k-list", default="1:2", metavar="K:Q,K:Q,...")
    p.add_argument("--z-grid", type=int, default=512)
    p.add_argument("--q", type=int, help="explicit period for negative controls")
    p.add_argument("--report", metavar="OUT_JSON")
    common(p)
    p.set_defaults(func=_cmd_gordon)

    p = sub.add_parser("cmv", help="finite truncation diagnostics")
    p.add_argument("--seq-file", required=True)
    p.add_argument("--window", default="-25:24", metavar="N_MIN:N_MAX")
    p.add_argument("--boundary", default="1,0;1,0", metavar="RE,IM;RE,IM")
    p.add_argument("--eig", action="store_true")
    p.add_argument("--profile", metavar="IDX|all")
    common(p)
    p.set_defaults(func=_cmd_cmv)

    p = sub.add_parser("run", help="config-driven pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int)
    p.add_argument("--precision-bits", type=int)
    p.set_defaults(func=_cmd_run)

    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QpcmvError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
