"""Batch front end: JSON job specs in, machine/human reports out.

Exit codes: 0 success, 2 when a check ends with failed conditions
(a mathematical verdict, not an error), 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import factors, petcore, simulate, systems
from .polyalg import VPoly

COMMANDS = ("pet", "factors", "check", "simulate")


class JobSpecError(ValueError):
    pass


@dataclass
class JobSpec:
    command: str
    family: list[VPoly]
    system: systems.TorusSystem | None = None
    options: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "command": self.command,
            "family": [p.to_json() for p in self.family],
            "system": self.system.to_json() if self.system else None,
            "options": self.options,
        }


def _parse_family(obj) -> list[VPoly]:
    if not isinstance(obj, list) or not obj:
        raise JobSpecError("family must be a non-empty list of polynomials")
    fam = []
    for i, entry in enumerate(obj):
        try:
            p = VPoly.from_json(entry)
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise JobSpecError(f"family[{i}]: {exc}") from exc
        if p.s != 0:
            raise JobSpecError(f"family[{i}]: family polynomials must have s = 0")
        if not p.integer_valued():
            raise JobSpecError(f"family[{i}]: polynomial is not integer-valued")
        fam.append(p)
    shapes = {(p.L, p.d) for p in fam}
    if len(shapes) > 1:
        raise JobSpecError(f"family members disagree on (L, d): {sorted(shapes)}")
    return fam


def parse_jobspec(text: str) -> JobSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JobSpecError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(obj, dict):
        raise JobSpecError("job spec must be a JSON object")
    command = obj.get("command")
    if command not in COMMANDS:
        raise JobSpecError(f"command must be one of {COMMANDS}, got {command!r}")
    family = _parse_family(obj.get("family"))
    system = None
    if obj.get("system") is not None:
        try:
            system = systems.TorusSystem.from_json(obj["system"])
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise JobSpecError(f"system: {exc}") from exc
    options = obj.get("options", {}) or {}
    spec = JobSpec(command, family, system, options)
    _validate(spec)
    return spec


def _validate(spec: JobSpec) -> None:
    if spec.command in ("pet", "factors", "check"):
        try:
            petcore.check_non_degenerate(spec.family)
        except petcore.PetError as exc:
            raise JobSpecError(str(exc)) from exc
    if spec.command == "pet":
        target = spec.options.get("target")
        if not isinstance(target, int) or not 1 <= target <= len(spec.family):
            raise JobSpecError(f"pet requires options.target in 1..{len(spec.family)}")
    if spec.command in ("check", "simulate"):
        if spec.system is None:
            raise JobSpecError(f"{spec.command} requires a system")
        if spec.system.action_dim != spec.family[0].d:
            raise JobSpecError(
                f"system acts on Z^{spec.system.action_dim} but family maps to "
                f"Z^{spec.family[0].d}"
            )
    if spec.command == "check" and spec.options.get("theorem") not in ("t1", "t2"):
        raise JobSpecError("check requires options.theorem = 't1' or 't2'")


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def run(spec: JobSpec) -> tuple[dict, int]:
    """Execute a validated job; returns (report, exit_code)."""
    if spec.command == "pet":
        return _run_pet(spec), 0
    if spec.command == "factors":
        return _run_factors(spec), 0
    if spec.command == "check":
        return _run_check(spec)
    return _run_simulate(spec), 0


def _run_pet(spec: JobSpec) -> dict:
    target = spec.options["target"] - 1
    manual = spec.options.get("manual_rho")
    cap = spec.options.get("step_cap", 64)
    res = petcore.run_pet(
        petcore.family_tuple(spec.family), target, manual=manual, step_cap=cap
    )
    return {"command": "pet", "family": [p.to_json() for p in spec.family], "run": res.to_json()}


def _run_factors(spec: JobSpec) -> dict:
    analyses = []
    for i in range(len(spec.family)):
        manual = (spec.options.get("manual_rho_per_target") or {}).get(str(i + 1))
        analyses.append(
            factors.analyze_target(
                spec.family, i, manual=manual, step_cap=spec.options.get("step_cap", 64)
            )
        )
    cert = factors.certificate(spec.family)
    coarse = factors.SeminormDescriptor(
        -1, factors.dedup_factors(factors.r_lattice_view(factors.thmT2_R(spec.family)))
    )
    return {
        "command": "factors",
        "family": [p.to_json() for p in spec.family],
        "targets": [a.to_json() for a in analyses],
        "coarse_descriptor": coarse.to_json(),
        "certificate": cert.to_json(),
    }


def _run_check(spec: JobSpec) -> tuple[dict, int]:
    theorem = spec.options["theorem"]
    if theorem == "t1":
        scalar = _t1_scalar(spec)
        report = systems.check_t1(spec.system, scalar)
    else:
        report = systems.check_t2(spec.system, spec.family)
    code = 0 if report.all_hold() else 2
    out = {
        "command": "check",
        "family": [p.to_json() for p in spec.family],
        "system": spec.system.to_json(),
        "report": report.to_json(),
    }
    return out, code


def _t1_scalar(spec: JobSpec) -> VPoly:
    if len(spec.family) == 1 and spec.family[0].d == 1:
        return spec.family[0]
    scalar = systems._t1_shape(spec.family, spec.system.action_dim)
    if scalar is None:
        raise JobSpecError(
            "theorem t1 needs either one scalar polynomial or the family "
            "p_i = p * e_i with a common scalar p"
        )
    return scalar


def _run_simulate(spec: JobSpec) -> dict:
    opts = spec.options
    binding = simulate.NumericBinding(
        assignments=_parse_bindings(opts.get("bind", {})),
        samples=int(opts.get("samples", 64)),
        seed=int(opts.get("seed", 2024)),
    )
    schedule = [int(x) for x in opts.get("schedule", [10000, 100000, 200000])]
    kmax = int(opts.get("kmax", 3))
    if opts.get("characters"):
        panel = [tuple(tuple(int(x) for x in k) for k in ch) for ch in opts["characters"]]
    else:
        panel = simulate.character_panel(kmax, len(spec.family), spec.system.torus_dim)
    warn = None
    series = []
    per_char = []
    for N in schedule:
        b = simulate.NumericBinding(
            assignments=binding.assignments, box=(0, N), samples=binding.samples,
            seed=binding.seed,
        )
        worst_f = worst_m = 0.0
        rows = []
        for ch in panel:
            f = simulate.multi_average_norm(spec.system, b, spec.family, ch, "fourier")
            mc = simulate.multi_average_norm(spec.system, b, spec.family, ch, "montecarlo")
            rows.append({"characters": [list(k) for k in ch], "fourier": f, "montecarlo": mc})
            worst_f, worst_m = max(worst_f, f), max(worst_m, mc)
        series.append({"N": N, "fourier": worst_f, "montecarlo": worst_m})
        per_char.append({"N": N, "rows": rows})
    return {
        "command": "simulate",
        "family": [p.to_json() for p in spec.family],
        "system": spec.system.to_json(),
        "seed": binding.seed,
        "samples": binding.samples,
        "bindings": {s: binding.value(s) for s in spec.system.irrationals},
        "series": series,
        "per_character": per_char,
        "warning": warn,
    }


def _parse_bindings(obj) -> dict[str, float]:
    out = {}
    if isinstance(obj, str):
        obj = dict(pair.split("=", 1) for pair in obj.split(",") if pair)
    for sym, val in obj.items():
        if isinstance(val, str) and val in simulate.NAMED_CONSTANTS:
            out[sym] = simulate.NAMED_CONSTANTS[val]
        else:
            out[sym] = float(val)
    return out


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def emit_report(report: dict, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(report, indent=2, sort_keys=True) + "\n").encode()
    if fmt != "text":
        raise ValueError(f"unknown format '{fmt}'")
    return ("\n".join(_text_lines(report)) + "\n").encode()


def _text_lines(report: dict) -> list[str]:
    cmd = report.get("command", "?")
    lines = [f"petlab {cmd} report"]
    if cmd == "pet":
        run_ = report["run"]
        lines.append(f"target: f{run_['target']}")
        lines.append(f"steps: {len(run_['trace'])}")
        for step in run_["trace"]:
            rho = step["rho"]
            head = "dimension increment" if rho is None else f"rho={rho} [{step['case']}]"
            lines.append(f"  {head}: ell={step['tuple']['ell']}, s={step['tuple']['s']}")
        lines.append(f"flags: {', '.join(run_['flags']) or 'none'}")
    elif cmd == "factors":
        for tgt in report["targets"]:
            lines.append(f"target f{tgt['target']}:")
            for i, h in enumerate(tgt["h_lattices"]):
                lines.append(f"  H_{tgt['target']},{i + 1} = {_lat_str(h)}")
            lines.append("  descriptor (raw): " + _desc_str(tgt["descriptor_raw"]))
            lines.append(
                "  descriptor (simplified): " + _desc_str(tgt["descriptor_simplified"])
            )
        cert = report["certificate"]
        lines.append("R lattices: " + ", ".join(_lat_str(l) for l in cert["R_lattices"]))
        for cond in cert["conditions"]:
            lines.append(f"  condition [{cond['status']}]: {cond['name']}")
    elif cmd == "check":
        rep = report["report"]
        for cond in rep["conditions"]:
            lines.append(f"  [{cond['status']}] {cond['name']}")
            if "witness" in cond:
                w = cond["witness"]
                lines.append(
                    f"      witness: character {w['character']}, "
                    f"eigenvalue phase {w['eigenvalue']['rat']}, {w['reason']}"
                )
        lines.append(f"verdict: {rep['verdict']}")
    elif cmd == "simulate":
        lines.append(f"seed: {report['seed']}")
        for row in report["series"]:
            lines.append(
                f"  N={row['N']}: fourier={row['fourier']:.6f} "
                f"montecarlo={row['montecarlo']:.6f}"
            )
    return lines


def _lat_str(obj) -> str:
    basis = obj["basis"]
    if not basis:
        return "0"
    if len(basis) == obj["dim"]:
        return f"Z^{obj['dim']}"
    return "Z<" + ", ".join("(" + ",".join(map(str, b)) + ")" for b in basis) + ">"


def _desc_str(obj) -> str:
    parts = [
        f"{_lat_str(f['lattice'])}^{f['multiplicity']}" for f in obj["factors"]
    ]
    return "Z_{" + ", ".join(parts) + "}"


def emit_csv(report: dict) -> bytes:
    lines = ["N,norm_fourier,norm_mc,seed"]
    for row in report.get("series", []):
        lines.append(
            f"{row['N']},{row['fourier']!r},{row['montecarlo']!r},{report['seed']}"
        )
    return ("\n".join(lines) + "\n").encode()


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="petlab",
        description="PET induction, joint-ergodicity certificates, and "
        "torus-rotation verification for polynomial multiple averages.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, system=False):
        p.add_argument("--family", required=True, metavar="F.json")
        if system:
            p.add_argument("--system", required=True, metavar="S.json")
        p.add_argument("--format", choices=["json", "text"], default="json")
        p.add_argument("--output", metavar="FILE", default=None)

    pet = sub.add_parser("pet", help="run the vdC induction for one target function")
    common(pet)
    pet.add_argument("--target", type=int, required=True, metavar="i")
    pet.add_argument("--manual-rho", default=None, metavar="2,3,2")
    pet.add_argument("--step-cap", type=int, default=64)

    fac = sub.add_parser("factors", help="derive lattices, descriptors and the certificate")
    common(fac)
    fac.add_argument("--step-cap", type=int, default=64)

    chk = sub.add_parser("check", help="evaluate theorem conditions on a symbolic system")
    common(chk, system=True)
    chk.add_argument("--theorem", choices=["t1", "t2"], required=True)

    sim = sub.add_parser("simulate", help="numeric convergence probe on a bound system")
    common(sim, system=True)
    sim.add_argument("--bind", default="", metavar="xi1=sqrt2,xi2=sqrt3")
    sim.add_argument("--schedule", default="1e4,1e5,2e5", metavar="1e4,1e5,2e5")
    sim.add_argument("--seed", type=int, default=2024)
    sim.add_argument("--samples", type=int, default=64)
    sim.add_argument("--kmax", type=int, default=3)
    sim.add_argument("--csv", metavar="FILE", default=None)

    job = sub.add_parser("run", help="run a JSON job spec")
    job.add_argument("--job", required=True, metavar="JOB.json")
    job.add_argument("--format", choices=["json", "text"], default="json")
    job.add_argument("--output", metavar="FILE", default=None)
    return ap


def _spec_from_args(args) -> JobSpec:
    if args.command == "run":
        return parse_jobspec(Path(args.job).read_text(encoding="utf-8"))
    obj: dict = {
        "command": args.command,
        "family": json.loads(Path(args.family).read_text(encoding="utf-8")),
        "options": {},
    }
    if getattr(args, "system", None):
        obj["system"] = json.loads(Path(args.system).read_text(encoding="utf-8"))
    if args.command == "pet":
        obj["options"]["target"] = args.target
        if args.manual_rho:
            obj["options"]["manual_rho"] = [int(x) for x in args.manual_rho.split(",")]
        obj["options"]["step_cap"] = args.step_cap
    elif args.command == "factors":
        obj["options"]["step_cap"] = args.step_cap
    elif args.command == "check":
        obj["options"]["theorem"] = args.theorem
    elif args.command == "simulate":
        obj["options"].update(
            {
                "bind": args.bind,
                "schedule": [int(float(x)) for x in args.schedule.split(",") if x],
                "seed": args.seed,
                "samples": args.samples,
                "kmax": args.kmax,
            }
        )
    return parse_jobspec(json.dumps(obj))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = _spec_from_args(args)
        if spec.command == "simulate":
            _warn_period_cost(spec)
        report, code = run(spec)
    except (JobSpecError, petcore.PetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = emit_report(report, getattr(args, "format", "json"))
    if getattr(args, "output", None):
        Path(args.output).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode())
    if getattr(args, "csv", None) and spec.command == "simulate":
        Path(args.csv).write_bytes(emit_csv(report))
    return code


def _warn_period_cost(spec: JobSpec) -> None:
    # the exact rational uniformity test walks a full period box
    from math import lcm

    den = 1
    for p in spec.family:
        for c in p.terms.values():
            den = lcm(den, *(x.denominator for x in c))
    rational_dens = [
        ph.rational.denominator
        for row in spec.system.alpha
        for ph in row
        if ph.rational != 0
    ]
    q = lcm(*rational_dens) if rational_dens else 1
    if (q * den) ** spec.family[0].L > 10**8:
        print(
            f"warning: exact period box has (q*den)^L = {(q * den) ** spec.family[0].L} "
            "points; expect a slow run",
            file=sys.stderr,
        )


if __name__ == "__main__":
    sys.exit(main())
