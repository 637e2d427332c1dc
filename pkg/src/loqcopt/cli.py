"""Command-line front end.

Verbs: ``optimize`` runs a restart sweep and writes ``results.csv`` plus
``best.json``; ``verify`` re-checks a saved matrix; ``baseline-toffoli`` prints
the composite-construction reference; ``gates-list`` shows built-in targets.

Run documents are JSON objects whose keys mirror the long flags (``tol-f`` may
be spelled ``tol_f``). Flags given on the command line override the document.
Mode indices in masks are 1-based here and 0-based in the library.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from loqcopt import __version__
from loqcopt.gates import BUILTIN_GATES, TargetGate, decode_complex, dump_gate, encode_complex, get_gate, load_gate
from loqcopt.optimize import (
    DEFAULT_PENALTIES,
    OptimizeConfig,
    RunResult,
    manifold_dimension,
    sweep,
    verify,
)
from loqcopt.param import ParamVector
from loqcopt.transfer import ModeConfig

log = logging.getLogger("loqcopt")

EXIT_OK, EXIT_NO_SOLUTION, EXIT_INPUT = 0, 1, 2
TOFFOLI_BASELINE = (2 / 27) ** 2 / 2

DOCUMENT_KEYS = {
    "gate",
    "ancillas",
    "ancilla_pattern",
    "vacuum",
    "measure_pattern",
    "chart",
    "mask",
    "restarts",
    "seed",
    "tol_f",
    "tol_g",
    "max_iters",
    "penalty_weights",
    "gradient",
    "workers",
    "out_dir",
}


class InputError(Exception):
    """Bad document, flag or file; reported with exit status 2."""


@dataclass(frozen=True)
class RunDocument:
    gate: TargetGate
    cfg: ModeConfig
    chart: str
    mask: tuple[int, ...]  # 1-based
    restarts: int
    seed: int
    tol_f: float
    tol_g: float
    max_iters: int
    penalty_weights: tuple[float, ...]
    gradient: str
    workers: int | None
    out_dir: Path

    def to_config(self) -> OptimizeConfig:
        return OptimizeConfig(
            gate=self.gate,
            cfg=self.cfg,
            chart=self.chart,
            mask=frozenset(m - 1 for m in self.mask),
            restarts=self.restarts,
            seed=self.seed,
            tol_fidelity=self.tol_f,
            tol_gradient=self.tol_g,
            max_iters=self.max_iters,
            penalty_weights=self.penalty_weights,
            gradient=self.gradient,
            workers=self.workers,
        )

    def to_json(self) -> dict[str, Any]:
        gate = self.gate.name if self.gate.name in BUILTIN_GATES else dump_gate(self.gate)
        return {
            "gate": gate,
            "ancilla_pattern": list(self.cfg.ancilla_input),
            "vacuum": self.cfg.n_vacuum_modes,
            "measure_pattern": list(self.cfg.measurement),
            "chart": self.chart,
            "mask": list(self.mask),
            "restarts": self.restarts,
            "seed": self.seed,
            "tol_f": self.tol_f,
            "tol_g": self.tol_g,
            "max_iters": self.max_iters,
            "penalty_weights": list(self.penalty_weights),
            "gradient": self.gradient,
        }


def _int_list(text: str | Sequence[int]) -> list[int]:
    if isinstance(text, str):
        try:
            return [int(t) for t in text.replace(" ", "").split(",") if t]
        except ValueError as exc:
            raise InputError(f"expected comma-separated integers, got {text!r}") from exc
    if not all(isinstance(t, int) and not isinstance(t, bool) for t in text):
        raise InputError(f"expected a list of integers, got {text!r}")
    return list(text)


def _resolve_gate(spec: Any) -> TargetGate:
    if isinstance(spec, dict):
        return load_gate(spec)
    if not isinstance(spec, str):
        raise InputError("gate must be a built-in name, a path to a gate file or an inline definition")
    if spec in BUILTIN_GATES:
        return get_gate(spec)
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return load_gate(_read_json(path))
    raise InputError(f"unknown gate {spec!r}; built-in gates are {sorted(BUILTIN_GATES)}")


def _read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def build_document(raw: dict[str, Any]) -> RunDocument:
    """Validate a merged document (file values overridden by flags)."""
    unknown = set(raw) - DOCUMENT_KEYS
    if unknown:
        raise InputError(f"unknown run-document keys: {sorted(unknown)}")
    if "gate" not in raw:
        raise InputError("no gate given (use --gate or the 'gate' key)")
    gate = _resolve_gate(raw["gate"])

    if raw.get("ancilla_pattern") is not None:
        pattern = _int_list(raw["ancilla_pattern"])
        if raw.get("ancillas") is not None and sum(pattern) != int(raw["ancillas"]):
            raise InputError(f"ancilla pattern {pattern} does not hold {raw['ancillas']} photons")
    elif raw.get("ancillas") is not None:
        pattern = [1] * int(raw["ancillas"])
    else:
        raise InputError("give --ancillas or --ancilla-pattern")
    measurement = _int_list(raw["measure_pattern"]) if raw.get("measure_pattern") is not None else None
    try:
        cfg = ModeConfig(
            gate.n_comp_modes,
            tuple(pattern),
            int(raw.get("vacuum", 0)),
            None if measurement is None else tuple(measurement),
            gate.comp_photons,
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid mode layout: {exc}") from exc

    mask = tuple(sorted(set(_int_list(raw.get("mask") or []))))
    if any(m < 1 or m > cfg.n_modes for m in mask):
        raise InputError(f"mask {list(mask)} must use 1-based mode numbers in 1..{cfg.n_modes}")
    chart = raw.get("chart", "unitary")
    if chart not in ("unitary", "general"):
        raise InputError(f"chart must be 'unitary' or 'general', got {chart!r}")
    try:
        doc = RunDocument(
            gate=gate,
            cfg=cfg,
            chart=chart,
            mask=mask,
            restarts=int(raw.get("restarts", 1)),
            seed=int(raw.get("seed", 0)),
            tol_f=float(raw.get("tol_f", 1e-9)),
            tol_g=float(raw.get("tol_g", 1e-8)),
            max_iters=int(raw.get("max_iters", 5000)),
            penalty_weights=tuple(float(m) for m in raw.get("penalty_weights", DEFAULT_PENALTIES)),
            gradient=raw.get("gradient", "analytic"),
            workers=None if raw.get("workers") is None else int(raw["workers"]),
            out_dir=Path(raw.get("out_dir", ".")),
        )
        doc.to_config()  # runs the optimizer-side validation now
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid run document: {exc}") from exc
    return doc


def _merged(args: argparse.Namespace) -> dict[str, Any]:
    raw: dict[str, Any] = {}
    if getattr(args, "config", None):
        doc = _read_json(Path(args.config))
        if not isinstance(doc, dict):
            raise InputError(f"{args.config} must hold a JSON object")
        raw.update({k.replace("-", "_"): v for k, v in doc.items()})
    for key in DOCUMENT_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    return raw


def write_results(path: Path, runs: Sequence[RunResult]) -> None:
    """One row per restart, ascending in success."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["restart_id", "fidelity", "success", "on_manifold", "iterations"])
        for r in runs:
            w.writerow([r.restart_id, repr(r.fidelity), repr(r.success), int(r.on_manifold), r.iterations])


def best_document(r: RunResult, doc: RunDocument) -> dict[str, Any]:
    return {
        "matrix": encode_complex(r.final_U),
        "coords": [float(c) for c in r.final_x.coords],
        "chart": doc.chart,
        "mask": list(doc.mask),
        "restart_id": r.restart_id,
        "fidelity": r.fidelity,
        "success": r.success,
        "config": doc.to_json(),
        "version": __version__,
    }


def cmd_optimize(args: argparse.Namespace) -> int:
    doc = build_document(_merged(args))
    oc = doc.to_config()

    def progress(r: RunResult) -> None:
        log.info("restart %d: F=%.12f S=%.6f on_manifold=%s %s", r.restart_id, r.fidelity, r.success, r.on_manifold, r.message)

    res = sweep(oc, progress)
    try:
        doc.out_dir.mkdir(parents=True, exist_ok=True)
        write_results(doc.out_dir / "results.csv", res.runs)
        (doc.out_dir / "run.json").write_text(json.dumps(doc.to_json(), indent=2))
    except OSError as exc:
        raise InputError(f"cannot write to {doc.out_dir}: {exc.strerror}") from exc
    for p in res.plateaus:
        print(f"plateau S={p.value:.6f} count={p.count}")
    best = res.best
    if best is None:
        print(f"no restart reached |1-F| < {doc.tol_f:g}")
        return EXIT_NO_SOLUTION
    (doc.out_dir / "best.json").write_text(json.dumps(best_document(best, doc), indent=2))
    print(f"best: restart {best.restart_id}, F={best.fidelity:.12f}, S={best.success:.6f}")
    return EXIT_OK


def _load_matrix_file(path: Path) -> dict[str, Any]:
    data = _read_json(path)
    if not isinstance(data, dict) or "matrix" not in data:
        raise InputError(f"{path} has no 'matrix' entry")
    try:
        data["matrix"] = decode_complex(data["matrix"])
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed matrix: {exc}") from exc
    if data["matrix"].ndim != 2 or data["matrix"].shape[0] != data["matrix"].shape[1]:
        raise InputError(f"{path}: matrix must be square, got shape {data['matrix'].shape}")
    return data


def cmd_verify(args: argparse.Namespace) -> int:
    data = _load_matrix_file(Path(args.matrix))
    raw = dict(data.get("config") or {})
    raw.update(_merged(args))
    raw.pop("out_dir", None)
    doc = build_document(raw)
    u = data["matrix"]
    if u.shape != (doc.cfg.n_modes, doc.cfg.n_modes):
        raise InputError(f"matrix is {u.shape[0]}x{u.shape[1]} but the layout has {doc.cfg.n_modes} modes")
    rep = verify(u, doc.gate, doc.cfg, args.tol)
    line = rep.summary()
    if args.manifold_dimension:
        if not rep.passed:
            line += ", manifold-dimension=n/a"
        else:
            oc = doc.to_config()
            coords = data.get("coords")
            if coords is None or len(coords) != oc.problem.dim:
                if doc.chart == "general" and not doc.mask:
                    coords = oc.problem.layout.coords_of(u)
                elif doc.chart == "general":
                    raise InputError("masked general-chart matrices need their 'coords' for the manifold dimension")
                else:
                    coords = np.zeros(oc.problem.dim)  # the unitary Hessian is re-centred at U anyway
            point = ParamVector(np.asarray(coords, dtype=float), doc.chart, doc.cfg.n_modes, oc.mask)
            r = RunResult(0, point, u, rep.fidelity, rep.success, True, 0, 0.0)
            line += f", manifold-dimension={manifold_dimension(r, oc)}"
    print(line)
    return EXIT_OK if rep.passed else EXIT_NO_SOLUTION


def cmd_baseline(args: argparse.Namespace) -> int:
    print(f"baseline S=(2/27)^2/2={TOFFOLI_BASELINE:.6f}")
    s = args.success
    if args.matrix is not None:
        data = _read_json(Path(args.matrix))
        if not isinstance(data, dict) or "success" not in data:
            raise InputError(f"{args.matrix} has no 'success' entry")
        s = float(data["success"])
    if s is not None:
        print(f"S={s:.6f}, ratio={s / TOFFOLI_BASELINE:.4f}")
    return EXIT_OK


def cmd_gates_list(args: argparse.Namespace) -> int:
    for name in sorted(BUILTIN_GATES):
        g = get_gate(name)
        print(f"{name:10s} comp_modes={g.n_comp_modes} dc={g.dc} out_dim={len(g.out_basis)}")
    return EXIT_OK


def _add_layout_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run document; flags override its values")
    p.add_argument("--gate", help="built-in gate name or path to a gate JSON file")
    p.add_argument("--ancillas", type=int, help="ancilla photons, one per ancilla mode")
    p.add_argument("--ancilla-pattern", dest="ancilla_pattern", help="ancilla occupations, e.g. 1,1 or 2,0")
    p.add_argument("--vacuum", type=int, help="number of vacuum modes")
    p.add_argument("--measure-pattern", dest="measure_pattern", help="heralding photocounts on ancilla+vacuum modes")
    p.add_argument("--chart", choices=("unitary", "general"))
    p.add_argument("--mask", help="1-based modes held at identity, e.g. 2,4,6")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loqcopt", description="Design heralded linear-optical gates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every restart")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="run a restart sweep")
    _add_layout_flags(p)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol-f", dest="tol_f", type=float, help="success threshold on |1-F|")
    p.add_argument("--tol-g", dest="tol_g", type=float, help="gradient tolerance for each ascent")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default: environment or CPU count)")
    p.add_argument("--out-dir", dest="out_dir", help="directory for results.csv, best.json and run.json")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="check a saved matrix against its gate")
    p.add_argument("matrix", help="best.json from optimize, or any file with a 'matrix' entry")
    _add_layout_flags(p)
    p.add_argument("--tol", type=float, default=1e-9, help="pass if |1-F| is below this")
    p.add_argument("--manifold-dimension", action="store_true", help="also report the F=1 tangent dimension")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("baseline-toffoli", help="composite Toffoli reference success and ratio")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--success", type=float, help="optimized success to compare")
    g.add_argument("--matrix", help="best.json whose success to compare")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("gates-list", help="list built-in target gates")
    p.set_defaults(func=cmd_gates_list)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        # gate documents and layouts raise ValueError subclasses naming the violated rule
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
