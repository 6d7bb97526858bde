"""Command-line front end.

Exit codes: 0 success, 1 I/O error, 2 validation or domain error,
3 a toy-vs-quantum comparison that ran but failed its tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction

from erft import __version__
from erft.audit import admissible_probes, no_signalling_check, taint_trace
from erft.circuit import Circuit, validate
from erft.dsl import ParseError, parse
from erft.dynamics import apply_transformation_ontic
from erft.ensemble import (
    convergence_experiment,
    format_fraction,
    format_label,
    run_ensemble,
    run_exact,
)
from erft.ontology import DomainError
from erft.quantum import run_quantum

EXIT_OK, EXIT_IO, EXIT_DOMAIN, EXIT_MISMATCH = 0, 1, 2, 3
DEFAULT_TOLERANCE = 1e-9


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class RunConfig:
    circuit_path: str
    mode: str = "exact"
    trials: int = 1
    seed: int = 0
    format: str = "json"
    tolerance: float = DEFAULT_TOLERANCE
    deterministic: bool = False
    workers: int = 1
    engine: str = "toy"

    def __post_init__(self) -> None:
        if self.mode == "sample" and self.trials < 1:
            raise CliError(EXIT_DOMAIN, f"sample mode needs --trials >= 1, got {self.trials}")


@dataclass(frozen=True)
class ComparisonRow:
    outcome: str
    toy: Fraction
    quantum: float

    @property
    def diff(self) -> float:
        return abs(float(self.toy) - self.quantum)


@dataclass(frozen=True)
class ComparisonReport:
    circuit: str
    tolerance: float
    rows: tuple[ComparisonRow, ...]

    @property
    def verdict(self) -> str:
        return "pass" if all(r.diff <= self.tolerance for r in self.rows) else "fail"

    def to_dict(self) -> dict:
        return {
            "circuit": self.circuit,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "rows": [
                {"outcome": r.outcome, "toy": format_fraction(r.toy), "quantum": r.quantum, "diff": r.diff}
                for r in self.rows
            ],
        }


def compare(c: Circuit, tolerance: float = DEFAULT_TOLERANCE, rule=apply_transformation_ontic) -> ComparisonReport:
    """Toy exact distribution against the quantum oracle, outcome by outcome."""
    toy = run_exact(c, rule)
    quantum = run_quantum(c)
    keys = sorted(set(toy.entries) | set(quantum.entries))
    rows = tuple(ComparisonRow(format_label(k), Fraction(toy[k]), float(quantum[k])) for k in keys)
    return ComparisonReport(c.name, tolerance, rows)


# --- helpers ----------------------------------------------------------------------------------


def load_circuit(path: str) -> Circuit:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_IO, f"{path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise CliError(EXIT_IO, f"{path}: not UTF-8 ({exc.reason})") from exc
    try:
        return parse(text)
    except ParseError as exc:
        raise CliError(EXIT_DOMAIN, f"{path}:{exc.line}:{exc.column}: {exc.message}") from exc


def require_toy_domain(c: Circuit, path: str) -> None:
    findings = validate(c)
    if findings:
        raise CliError(EXIT_DOMAIN, "\n".join(f"{path}: {f}" for f in findings))


def resolve_seed(arg: int | None) -> int:
    if arg is not None:
        seed = arg
    else:
        raw = os.environ.get("ERFT_SEED", "0")
        try:
            seed = int(raw)
        except ValueError:
            raise CliError(EXIT_DOMAIN, f"ERFT_SEED must be an integer, got {raw!r}") from None
    if seed < 0:
        raise CliError(EXIT_DOMAIN, f"seed must be nonnegative, got {seed}")
    return seed


def parse_trials_list(raw: str | None) -> list[int]:
    if raw is None or not raw.strip():
        raise CliError(EXIT_DOMAIN, "--trials-list is empty")
    try:
        values = [int(x) for x in raw.split(",")]
    except ValueError:
        raise CliError(EXIT_DOMAIN, f"--trials-list must be comma-separated integers, got {raw!r}") from None
    return values


def meta(seed, trials, deterministic: bool) -> dict:
    out = {"seed": seed, "trials": trials, "version": __version__}
    if not deterministic:
        out["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return out


def _table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[str(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render(report: dict, fmt: str, header: list[str], rows: list[list]) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        return _csv(header, rows)
    return _table(header, rows)


def _probability_text(p) -> str:
    return format_fraction(p) if isinstance(p, Fraction) else repr(float(p))


# --- commands -----------------------------------------------------------------------------------


def cmd_run(cfg: RunConfig) -> tuple[str, int]:
    c = load_circuit(cfg.circuit_path)
    if cfg.engine == "quantum":
        if cfg.mode != "exact":
            raise CliError(EXIT_DOMAIN, "the quantum engine only runs in exact mode")
        try:
            dist = run_quantum(c)
        except DomainError as exc:
            raise CliError(EXIT_DOMAIN, f"{cfg.circuit_path}: {exc}") from exc
    else:
        require_toy_domain(c, cfg.circuit_path)
        if cfg.mode == "exact":
            dist = run_exact(c)
        else:
            dist = run_ensemble(c, cfg.trials, cfg.seed, cfg.workers)
    trials = cfg.trials if cfg.mode == "sample" else None
    seed = cfg.seed if cfg.mode == "sample" else None
    report = {
        "circuit": c.name,
        "engine": cfg.engine,
        "kind": dist.kind if cfg.mode == "exact" else "estimated",
        "outcomes": dist.to_json_outcomes(),
        "meta": meta(seed, trials, cfg.deterministic),
    }
    rows = [[format_label(k), _probability_text(p)] for k, p in dist.entries.items()]
    return render(report, cfg.format, ["outcome", "probability"], rows), EXIT_OK


def cmd_compare(cfg: RunConfig, rule=apply_transformation_ontic) -> tuple[str, int]:
    c = load_circuit(cfg.circuit_path)
    require_toy_domain(c, cfg.circuit_path)
    cmp = compare(c, cfg.tolerance, rule)
    report = cmp.to_dict() | {"meta": meta(None, None, cfg.deterministic)}
    rows = [[r.outcome, format_fraction(r.toy), repr(r.quantum), f"{r.diff:.3g}"] for r in cmp.rows]
    rows.append(["verdict", cmp.verdict, "", ""])
    text = render(report, cfg.format, ["outcome", "toy", "quantum", "diff"], rows)
    return text, EXIT_OK if cmp.verdict == "pass" else EXIT_MISMATCH


def cmd_audit(cfg: RunConfig) -> tuple[str, int]:
    c = load_circuit(cfg.circuit_path)
    require_toy_domain(c, cfg.circuit_path)
    audit = taint_trace(c, cfg.trials, cfg.seed)
    deviations = [no_signalling_check(p).deviation for p in admissible_probes(c)]
    worst = max(deviations, default=Fraction(0))
    report = audit.to_dict() | {
        "no_signalling": {"probes": len(deviations), "max_deviation": format_fraction(Fraction(worst))},
        "meta": meta(cfg.seed, cfg.trials, cfg.deterministic),
    }
    rows = [["off-mode accesses", len(audit.findings)], ["no-signalling probes", len(deviations)],
            ["max deviation", format_fraction(Fraction(worst))]]
    rows += [["finding", str(f)] for f in audit.findings]
    code = EXIT_OK if audit.ok and worst == 0 else EXIT_MISMATCH
    return render(report, cfg.format, ["check", "value"], rows), code


def cmd_converge(cfg: RunConfig, n_list: list[int]) -> tuple[str, int]:
    c = load_circuit(cfg.circuit_path)
    require_toy_domain(c, cfg.circuit_path)
    rep = convergence_experiment(c, n_list, cfg.seed, cfg.workers)
    report = rep.to_dict() | {"meta": meta(cfg.seed, max(n_list), cfg.deterministic)}
    rows = [[row["trials"], f"{row['tv']:.6g}", f"{row['bound']:.6g}"] for row in report["rows"]]
    return render(report, cfg.format, ["trials", "tv", "bound"], rows), EXIT_OK


def cmd_check(cfg: RunConfig) -> tuple[str, int]:
    c = load_circuit(cfg.circuit_path)
    findings = [str(f) for f in validate(c)]
    report = {"circuit": c.name, "findings": findings, "meta": meta(None, None, cfg.deterministic)}
    rows = [[f] for f in findings] or [["ok"]]
    return render(report, cfg.format, ["finding"], rows), EXIT_DOMAIN if findings else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="erft", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"erft {__version__}")
    parser.add_argument("command", choices=["run", "compare", "audit", "converge", "check"])
    parser.add_argument("circuit", help="circuit file (.ifc)")
    parser.add_argument("--mode", choices=["exact", "sample"], default="exact")
    parser.add_argument("--engine", choices=["toy", "quantum"], default="toy")
    parser.add_argument("--trials", type=int, default=None, help="trial count (sample mode, audit)")
    parser.add_argument("--seed", type=int, default=None, help="master seed (default: $ERFT_SEED or 0)")
    parser.add_argument("--trials-list", default=None, help="comma-separated increasing trial counts")
    parser.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    parser.add_argument("--format", choices=["json", "csv", "table"], default="json")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--output", "-o", default=None, help="write the report here instead of stdout")
    parser.add_argument("--deterministic", action="store_true", help="omit the timestamp from reports")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        default_trials = 1000 if args.command == "audit" else 1
        cfg = RunConfig(
            circuit_path=args.circuit,
            mode=args.mode,
            trials=args.trials if args.trials is not None else default_trials,
            seed=resolve_seed(args.seed),
            format=args.format,
            tolerance=args.tolerance,
            deterministic=args.deterministic,
            workers=max(1, args.workers),
            engine=args.engine,
        )
        if args.command == "run":
            text, code = cmd_run(cfg)
        elif args.command == "compare":
            text, code = cmd_compare(cfg)
        elif args.command == "audit":
            text, code = cmd_audit(cfg)
        elif args.command == "converge":
            text, code = cmd_converge(cfg, parse_trials_list(args.trials_list))
        else:
            text, code = cmd_check(cfg)
    except CliError as exc:
        print(f"erft: {exc}", file=sys.stderr)
        return exc.code
    except DomainError as exc:
        print(f"erft: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"erft: {args.output}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
