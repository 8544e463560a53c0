"""Config-driven experiment pipelines with reproducible artifacts.

A run chains frequency analysis, repetition search, sampling-function
construction, Gordon certification, spectral evidence and CMV diagnostics,
writing one artifact file per stage plus a deterministic ``report.json``.
Wall-clock timings go to a ``timings.json`` sidecar so that reports are
byte-identical across repeat runs with the same config and seed.

Exit status: 0 all verdicts PASS, 2 evidence FAIL, 1 execution error.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .arith import as_fraction
from .cmv import assemble, eigenvector_profile, spectrum
from .dynamics import Rotation, TorusPoint, find_even_repetition, iterate
from .errors import QpcmvError
from .frequency import Frequency, badly_approximable_score, liouville_frequency
from .sampling import (
    VerblunskySequence,
    ball_radius,
    tube_function,
    verblunsky_window,
)
from .transfer import (
    certify_gordon,
    no_point_spectrum_evidence,
    validate_three_step_lipschitz,
)

CONFIG_SCHEMA = "qpcmv-config/1"
REPORT_SCHEMA = "qpcmv-report/1"

SCENARIOS = ("free", "liouville-rotation", "impurity-control")


@dataclass
class ExperimentConfig:
    """Validated run configuration; see README for the JSON schema."""

    scenario: str
    seed: int = 20240601
    precision_bits: int = 256
    z_grid: int = 512
    k_list: tuple[int, ...] = (1, 2, 3)
    # free scenario
    free_value: complex = 0j
    free_q_list: tuple[int, ...] = (2, 4, 8)
    # liouville-rotation scenario
    liouville_base: int = 2
    liouville_depth: int = 4
    omega: tuple[str, ...] = ("0",)
    tube_value_radius: float = 0.5
    score_q_max: int = 1000
    repetition_q_max: int = 2000
    window_factor: str = "4"
    # impurity-control scenario
    impurity_background: complex = 0.5 + 0j
    impurity_value: complex = -0.99 + 0j
    impurity_q: int = 8
    # cmv stage
    cmv_n: int = 200
    boundary: tuple[complex, complex] = (1 + 0j, 1 + 0j)
    # validation stage
    lipschitz_r: float = 0.5
    lipschitz_samples: int = 20000
    evidence_threshold: float = 0.25

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise QpcmvError(f"unknown scenario {self.scenario!r}")

    @staticmethod
    def _complex(v) -> complex:
        if isinstance(v, (list, tuple)):
            return complex(float(v[0]), float(v[1]))
        return complex(v)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if d.get("schema") != CONFIG_SCHEMA:
            raise QpcmvError(
                f"config schema must be {CONFIG_SCHEMA!r}, got {d.get('schema')!r}"
            )
        kw: dict[str, Any] = {"scenario": d["scenario"]}
        for key in ("seed", "precision_bits", "z_grid", "score_q_max",
                    "repetition_q_max", "cmv_n", "impurity_q",
                    "liouville_base", "liouville_depth", "lipschitz_samples"):
            if key in d:
                kw[key] = int(d[key])
        for key in ("k_list", "free_q_list"):
            if key in d:
                kw[key] = tuple(int(x) for x in d[key])
        for key in ("free_value", "impurity_background", "impurity_value"):
            if key in d:
                kw[key] = cls._complex(d[key])
        if "boundary" in d:
            kw["boundary"] = (
                cls._complex(d["boundary"][0]),
                cls._complex(d["boundary"][1]),
            )
        if "omega" in d:
            kw["omega"] = tuple(str(x) for x in d["omega"])
        for key in ("tube_value_radius", "lipschitz_r", "evidence_threshold"):
            if key in d:
                kw[key] = float(d[key])
        if "window_factor" in d:
            kw["window_factor"] = str(d["window_factor"])
        return cls(**kw)

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, tuple):
                return [enc(x) for x in v]
            return v

        d = {"schema": CONFIG_SCHEMA}
        for key, val in self.__dict__.items():
            d[key] = enc(val)
        return d

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Artifact helpers
# ---------------------------------------------------------------------------


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode()


def _write_json(path: Path, obj):
    path.write_bytes(_json_bytes(obj))


def _frac_str(x) -> str:
    f = as_fraction(x)
    return f"{f.numerator}/{f.denominator}"


class _Report:
    """Collects stage outcomes; finalizes to a deterministic report dict."""

    def __init__(self, config: ExperimentConfig, out: Path):
        self.out = out
        self.stages: dict[str, dict] = {}
        self.verdicts: dict[str, str] = {}
        self.timings: dict[str, float] = {}
        self.config = config
        self.failure: Optional[str] = None

    def stage(self, name: str):
        report = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()
                return report.stages.setdefault(
                    name, {"status": "ok", "artifacts": []}
                )

            def __exit__(self, exc_type, exc, tb):
                report.timings[name] = time.perf_counter() - self.t0
                if exc is not None:
                    report.stages[name]["status"] = "failed"
                    report.stages[name]["error"] = f"{exc_type.__name__}: {exc}"
                    report.failure = name
                return False

        return _Ctx()

    def artifact(self, stage: str, name: str) -> Path:
        self.stages[stage]["artifacts"].append(name)
        return self.out / name

    def finalize(self) -> tuple[dict, int]:
        if self.failure is not None:
            overall, code = "ERROR", 1
        elif any(v == "FAIL" for v in self.verdicts.values()):
            overall, code = "FAIL", 2
        else:
            overall, code = "PASS", 0
        doc = {
            "schema": REPORT_SCHEMA,
            "tool_version": __version__,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "stages": self.stages,
            "verdicts": self.verdicts,
            "overall": overall,
            "exit_code": code,
            "timings_file": "timings.json",
        }
        return doc, code


def _gordon_rows(cert) -> list[dict]:
    return [
        {
            "k": l.k,
            "q": l.q,
            "r": l.r,
            "defect": l.defect,
            "threshold": l.threshold,
            "passed": l.passed,
            "underflowed": l.underflowed,
        }
        for l in cert.levels
    ]


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def _frequency_stage(rep: _Report, cfg: ExperimentConfig) -> Frequency:
    with rep.stage("frequency") as st:
        freq = liouville_frequency(cfg.liouville_base, cfg.liouville_depth)
        scan = badly_approximable_score(freq, cfg.score_q_max)
        path = rep.artifact("frequency", "frequency.csv")
        with open(path, "w", newline="") as fh:
            fh.write(f"# seed={cfg.seed}\n")
            w = csv.writer(fh)
            w.writerow(["q", "p", "q_dist"])
            for (p, q), (_, s) in zip(freq.convergents, scan.per_convergent):
                w.writerow([q, p, repr(float(s))])
        _write_json(
            rep.artifact("frequency", "frequency.json"),
            {
                "seed": cfg.seed,
                "value": _frac_str(freq.value),
                "partial_quotients": list(freq.partial_quotients),
                "designated_denominators": list(freq.designated_denominators),
                "truncated": freq.truncated,
                "min_score": repr(float(scan.min_score)),
                "argmin_q": scan.argmin_q,
                "reported_badly_approximable": scan.reported_badly_approximable,
            },
        )
        st["min_score"] = float(scan.min_score)
    return freq


def _repetition_stage(rep: _Report, cfg: ExperimentConfig, system, omega):
    """Even repetition times for each level k (epsilon = 1/k)."""
    results = {}
    with rep.stage("repetition") as st:
        s = as_fraction(cfg.window_factor)
        rows = []
        for k in cfg.k_list:
            eps = Fraction(1, k)
            cert = find_even_repetition(
                system, omega, eps, s, cfg.repetition_q_max
            )
            if cert is None:
                raise QpcmvError(f"no even repetition time at level {k}")
            results[k] = cert
            rows.append(
                {
                    "k": k,
                    "epsilon": _frac_str(eps),
                    "q": cert.q,
                    "max_deviation": repr(float(cert.max_deviation)),
                    "window": cert.window,
                    "validated": cert.validated,
                }
            )
        _write_json(
            rep.artifact("repetition", "orbit.json"),
            {"seed": cfg.seed, "certificates": rows},
        )
        k_top = max(results)
        cert = results[k_top]
        path = rep.artifact("repetition", "orbit.csv")
        with open(path, "w", newline="") as fh:
            fh.write(f"# seed={cfg.seed} k={k_top} q={cert.q}\n")
            w = csv.writer(fh)
            w.writerow(["n", "dist"])
            for n in range(cert.window + 1):
                d = iterate(system, omega, n).dist(
                    iterate(system, omega, n + cert.q)
                )
                w.writerow([n, repr(float(d))])
        st["periods"] = {str(k): results[k].q for k in results}
    return results


def _tube_stage(rep: _Report, cfg: ExperimentConfig, system, omega, reps):
    """Per-level tube constructions, coefficient windows starting at the
    designated orbit point."""
    sequences = {}
    constructions = {}
    with rep.stage("sampling") as st:
        for k, cert in reps.items():
            q = cert.q
            br = ball_radius(system, omega, q, cert.epsilon)
            values = [
                cfg.tube_value_radius * np.exp(2j * np.pi * j / q)
                for j in range(q)
            ]
            f = tube_function(system, omega, q, br.radius, values)
            w0 = f.gordon_point()
            seq = verblunsky_window(f, system, w0, -2 * q, 3 * q + 1)
            sequences[k] = seq
            constructions[k] = (f, br)
        k_top = max(sequences)
        path = rep.artifact("sampling", "verblunsky.csv")
        sequences[k_top].to_csv(path, seed=cfg.seed)
        st["levels"] = sorted(sequences)
    return sequences, constructions


def _evidence_stage(rep: _Report, cfg: ExperimentConfig, seq, certificate=None,
                    q=None, extra_angles=(), expect_fail=False):
    with rep.stage("evidence") as st:
        table = no_point_spectrum_evidence(
            seq,
            certificate=certificate,
            q=q,
            z_grid=cfg.z_grid,
            extra_angles=extra_angles,
        )
        path = rep.artifact("evidence", "evidence.csv")
        with open(path, "w", newline="") as fh:
            fh.write(f"# seed={cfg.seed} q={table.q} source={table.source}\n")
            w = csv.writer(fh)
            w.writerow(
                ["angle", "c", "norm_forward", "norm_double", "norm_backward"]
            )
            for r in table.rows:
                w.writerow(
                    [repr(r.angle), repr(r.c), repr(r.norm_forward),
                     repr(r.norm_double), repr(r.norm_backward)]
                )
        _write_json(
            rep.artifact("evidence", "evidence.json"),
            {
                "seed": cfg.seed,
                "q": table.q,
                "source": table.source,
                "min_c": table.min_c,
                "argmin_angle": table.argmin_angle,
                "threshold": table.threshold,
                "verdict": table.verdict,
            },
        )
        st["min_c"] = table.min_c
        if expect_fail:
            st["expected"] = "FAIL"
            rep.verdicts["evidence"] = table.verdict
            rep.verdicts["evidence-negative-control"] = (
                "PASS" if table.verdict == "FAIL" else "FAIL"
            )
        else:
            rep.verdicts["evidence"] = table.verdict
    return table


def _cmv_stage(rep: _Report, cfg: ExperimentConfig, seq,
               check_free_profile=False, find_bound_state=False):
    out = {}
    with rep.stage("cmv") as st:
        n = cfg.cmv_n
        half = n // 2
        lo, hi = -half, n - half - 1
        op = assemble(seq, lo, hi, boundary=cfg.boundary)
        dec = spectrum(op)
        st["unitarity_defect"] = op.unitarity_defect
        st["band_agreement"] = op.band_agreement
        rep.verdicts["unitarity"] = (
            "PASS"
            if op.unitarity_defect <= 1e-12 and op.band_agreement <= 1e-14
            else "FAIL"
        )
        path = rep.artifact("cmv", "eigenvalues.csv")
        with open(path, "w", newline="") as fh:
            fh.write(f"# seed={cfg.seed}\n")
            w = csv.writer(fh)
            w.writerow(["angle", "residual"])
            for lam, r in zip(dec.eigenvalues, dec.residuals):
                w.writerow([repr(float(np.angle(lam))), repr(float(r))])
        with open(rep.artifact("cmv", "matrix.txt"), "w") as fh:
            op.dump_triplets(fh, seed=cfg.seed)
        profiles = [eigenvector_profile(op, dec, i) for i in range(op.size)]
        prs = np.array([p.participation_ratio for p in profiles])
        imin = int(np.argmin(prs))
        path = rep.artifact("cmv", "profile.csv")
        with open(path, "w", newline="") as fh:
            fh.write(f"# seed={cfg.seed} eigenvector={imin}\n")
            w = csv.writer(fh)
            w.writerow(["shell", "mass"])
            for s, m in enumerate(profiles[imin].shell_masses):
                w.writerow([s, repr(m)])
        st["min_participation_ratio"] = float(prs.min())
        if check_free_profile:
            rep.verdicts["profile"] = (
                "PASS" if prs.min() >= op.size / 4 else "FAIL"
            )
        out["operator"] = op
        out["decomposition"] = dec
        out["profiles"] = profiles
        if find_bound_state:
            cut = op.size / 10
            cands = [
                (p.participation_ratio, i)
                for i, p in enumerate(profiles)
                if p.participation_ratio <= cut
                and abs(p.peak) <= op.size // 4
            ]
            if not cands:
                raise QpcmvError("no localized central eigenvector found")
            _, ibest = min(cands)
            angle = float(np.angle(dec.eigenvalues[ibest]))
            st["bound_state_angle"] = angle
            st["bound_state_pr"] = float(
                profiles[ibest].participation_ratio
            )
            out["bound_state_angle"] = angle
    return out


def _lipschitz_stage(rep: _Report, cfg: ExperimentConfig):
    with rep.stage("lipschitz-validation") as st:
        val = validate_three_step_lipschitz(
            cfg.lipschitz_r, samples=cfg.lipschitz_samples, seed=cfg.seed
        )
        st["max_ratio"] = val.max_ratio
        st["bound"] = val.bound
        rep.verdicts["lipschitz"] = "PASS" if val.violations == 0 else "FAIL"


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def _run_free(rep: _Report, cfg: ExperimentConfig):
    pad = 2 * max(cfg.free_q_list) + 2
    half = cfg.cmv_n // 2
    lo = min(-pad, -half - 1)
    hi = max(pad, cfg.cmv_n - half)
    seq = VerblunskySequence.constant(cfg.free_value, lo, hi)
    with rep.stage("sampling"):
        seq.to_csv(rep.artifact("sampling", "verblunsky.csv"), seed=cfg.seed)
    with rep.stage("gordon"):
        pairs = list(zip(cfg.k_list, cfg.free_q_list))
        cert = certify_gordon(seq, pairs, sequence_id="free")
        _write_json(
            rep.artifact("gordon", "gordon.json"),
            {"seed": cfg.seed, "levels": _gordon_rows(cert)},
        )
        rep.verdicts["gordon"] = "PASS" if cert.all_passed else "FAIL"
    _evidence_stage(rep, cfg, seq, certificate=cert)
    _cmv_stage(rep, cfg, seq, check_free_profile=True)
    _lipschitz_stage(rep, cfg)


def _run_liouville_rotation(rep: _Report, cfg: ExperimentConfig):
    freq = _frequency_stage(rep, cfg)
    system = Rotation([freq.value])
    omega = TorusPoint([as_fraction(cfg.omega[0])])
    reps = _repetition_stage(rep, cfg, system, omega)
    sequences, constructions = _tube_stage(rep, cfg, system, omega, reps)
    certs = {}
    with rep.stage("gordon"):
        rows = []
        for k in sorted(sequences):
            cert = certify_gordon(
                sequences[k], [(k, reps[k].q)], sequence_id=f"level-{k}"
            )
            certs[k] = cert
            rows.extend(_gordon_rows(cert))
        _write_json(
            rep.artifact("gordon", "gordon.json"),
            {"seed": cfg.seed, "levels": rows},
        )
        rep.verdicts["gordon"] = (
            "PASS" if all(c.all_passed for c in certs.values()) else "FAIL"
        )
    k_top = max(sequences)
    _evidence_stage(rep, cfg, sequences[k_top], certificate=certs[k_top])
    # CMV diagnostics on the periodized top-level tube values
    q = reps[k_top].q
    f, _ = constructions[k_top]
    half = cfg.cmv_n // 2
    vals = [
        f.values[(n - 1) % q] for n in range(-half - 1, cfg.cmv_n - half + 1)
    ]
    periodic = VerblunskySequence(-half - 1, cfg.cmv_n - half, np.array(vals))
    _cmv_stage(rep, cfg, periodic)
    _lipschitz_stage(rep, cfg)


def _run_impurity_control(rep: _Report, cfg: ExperimentConfig):
    half = cfg.cmv_n // 2
    pad = max(2 * cfg.impurity_q + 2, half + 2)
    seq = VerblunskySequence.impurity(
        cfg.impurity_background, cfg.impurity_value, -pad, pad
    )
    with rep.stage("sampling"):
        seq.to_csv(rep.artifact("sampling", "verblunsky.csv"), seed=cfg.seed)
    out = _cmv_stage(rep, cfg, seq, find_bound_state=True)
    with rep.stage("gordon") as st:
        cert = certify_gordon(
            seq,
            [(k, cfg.impurity_q) for k in cfg.k_list],
            sequence_id="impurity",
        )
        _write_json(
            rep.artifact("gordon", "gordon.json"),
            {"seed": cfg.seed, "levels": _gordon_rows(cert)},
        )
        st["expected"] = "FAIL"
        rep.verdicts["gordon-negative-control"] = (
            "PASS" if not cert.all_passed else "FAIL"
        )
    _evidence_stage(
        rep,
        cfg,
        seq,
        q=cfg.impurity_q,
        extra_angles=[out["bound_state_angle"]],
        expect_fail=True,
    )
    _lipschitz_stage(rep, cfg)


def run(config: ExperimentConfig, out_dir) -> tuple[dict, int]:
    """Execute the configured scenario; returns (report dict, exit code).

    Artifacts land in ``out_dir``; the report is also written there as
    ``report.json`` with timings in ``timings.json``.  A stage failure
    retains earlier artifacts, marks the report and yields exit code 1.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep = _Report(config, out)
    try:
        if config.scenario == "free":
            _run_free(rep, config)
        elif config.scenario == "liouville-rotation":
            _run_liouville_rotation(rep, config)
        else:
            _run_impurity_control(rep, config)
    except Exception:
        if rep.failure is None:
            raise
    doc, code = rep.finalize()
    _write_json(out / "report.json", doc)
    _write_json(
        out / "timings.json",
        {"stages": {k: round(v, 6) for k, v in rep.timings.items()}},
    )
    return doc, code
