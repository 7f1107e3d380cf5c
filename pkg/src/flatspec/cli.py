"""Command-line front end.

Exit codes: 0 success, 2 invalid input (bad or missing files, failed
validation), 3 a search budget ran out.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import spectra
from .curves import CurvePath, chain_from_json, tighten
from .errors import BudgetError, FlatSpecError, SurfaceError
from .geodesy import enumerate_saddle_connections, to_csv
from .sl2opt import infimal_length
from .surface import load_surface
from .zonogon import auxiliary_polygon

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3


@dataclass
class JobConfig:
    command: str
    surface: str
    curve: str | None = None
    cutoffs: list = field(default_factory=list)
    tol: float = 1e-12
    fmt: str = "json"
    cache_dir: str | None = None
    threads: int = 1

    def __post_init__(self):
        if any(c <= 0 for c in self.cutoffs) or any(b <= a for a, b in zip(self.cutoffs, self.cutoffs[1:])):
            raise ValueError("cutoffs must be positive and strictly ascending")
        if not self.tol > 0:
            raise ValueError("tolerances must be positive")
        if self.threads < 1:
            raise ValueError("--threads must be at least 1")


def _positive(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _lengths(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _dump(obj, out):
    out.write(json.dumps(obj, indent=1, allow_nan=False, default=_jsonable) + "\n")


def _jsonable(x):
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _read_json(path):
    p = Path(path)
    if not p.exists() or p.is_dir():
        raise FileNotFoundError(f"no such file {str(path)!r}")
    return json.loads(p.read_text())


def _load_curve(q, cfg, max_length):
    obj = _read_json(cfg.curve)
    kind = obj.get("type")
    if kind == "path":
        path = CurvePath.from_json(obj)
        rep = tighten(q, path, tol=cfg.tol)
        # re-run against an enumeration so edge indices can be reused in chain files
        L = max(sc.length for sc, _ in rep.traversals()) * (1 + 1e-9)
        scs = enumerate_saddle_connections(q, L, workers=cfg.threads)
        rep = tighten(q, path, tol=cfg.tol, lookup={sc.key: sc for sc in scs})
        rep.index_cutoff = L
        return rep
    if kind == "chain":
        L = max_length if max_length is not None else obj.get("max_length")
        if L is None:
            raise ValueError("chain curve files need --max-length or a max_length field")
        scs = enumerate_saddle_connections(q, float(L), workers=cfg.threads)
        return chain_from_json(q, obj, scs)
    raise ValueError(f"unknown curve type {kind!r}")


def _sc_json(sc):
    return {
        "idx": sc.idx,
        "start": sc.start,
        "end": sc.end,
        "holonomy": list(sc.holonomy),
        "length": sc.length,
    }


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flatspec", description="Saddle connections, zonogons and spectra of flat surfaces.")
    p.add_argument("--threads", type=int, default=1, help="worker processes for enumeration")
    p.add_argument("--cache-dir", default=None, help="saddle-connection cache (defaults to $FLATSPEC_CACHE_DIR)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a surface file and print a summary")
    s.add_argument("surface")

    s = sub.add_parser("sc", help="saddle connections")
    scs = s.add_subparsers(dest="action", required=True)
    e = scs.add_parser("enumerate")
    e.add_argument("surface")
    e.add_argument("--max-length", type=_positive, required=True)
    e.add_argument("--format", choices=("json", "csv"), default="json")
    e.add_argument("--node-budget", type=int, default=10**7, help="cap on developed triangles before giving up")

    s = sub.add_parser("curve", help="curves")
    cs = s.add_subparsers(dest="action", required=True)
    t = cs.add_parser("tighten")
    t.add_argument("surface")
    t.add_argument("--path", required=True)
    t.add_argument("--tol", type=_positive, default=1e-12)

    for name in ("polygon", "illength"):
        s = sub.add_parser(name)
        s.add_argument("surface")
        s.add_argument("--curve", required=True)
        s.add_argument("--tol", type=_positive, default=1e-12)
        s.add_argument("--max-length", type=_positive, default=None, help="cutoff used to index chain files")

    s = sub.add_parser("spectrum")
    s.add_argument("kind", choices=spectra.KINDS)
    s.add_argument("surface")
    s.add_argument("--max-length", type=_positive, required=True)
    s.add_argument("--bins", type=int, default=20)
    s.add_argument("--cap", type=_positive, default=None)
    s.add_argument("--format", choices=("json", "csv"), default="json")

    s = sub.add_parser("veech-probe")
    s.add_argument("surface")
    s.add_argument("--lengths", type=_lengths, required=True)
    s.add_argument("--format", choices=("json", "csv"), default="json")

    s = sub.add_parser("pa-il")
    s.add_argument("surface")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--max-length", type=_positive, required=True)
    return p


def _execute(args, out):
    cfg = JobConfig(
        command=args.command,
        surface=args.surface,
        curve=getattr(args, "curve", None) or getattr(args, "path", None),
        cutoffs=list(getattr(args, "lengths", None) or ([args.max_length] if getattr(args, "max_length", None) else [])),
        tol=getattr(args, "tol", 1e-12),
        fmt=getattr(args, "format", "json"),
        cache_dir=args.cache_dir,
        threads=args.threads,
    )
    q = load_surface(cfg.surface)
    cmd = cfg.command

    if cmd == "validate":
        out.write(q.summary() + "\n")
    elif cmd == "sc":
        scs = enumerate_saddle_connections(q, args.max_length, node_budget=args.node_budget, workers=cfg.threads)
        if cfg.fmt == "csv":
            out.write(to_csv(scs))
        else:
            _dump({"surface": q.spec_hash(), "max_length": args.max_length, "saddle_connections": [_sc_json(s) for s in scs]}, out)
    elif cmd == "curve":
        rep = _load_curve(q, cfg, None)
        obj = rep.to_json()
        obj["max_length"] = rep.index_cutoff
        _dump(obj, out)
    elif cmd == "polygon":
        _dump(auxiliary_polygon(_load_curve(q, cfg, args.max_length)).to_json(), out)
    elif cmd == "illength":
        Z = auxiliary_polygon(_load_curve(q, cfg, args.max_length))
        _dump(infimal_length(Z, tol=cfg.tol).to_json(), out)
    elif cmd == "spectrum":
        spec = spectra.spectrum(args.kind, q, args.max_length, workers=cfg.threads, cache_dir=cfg.cache_dir)
        report = spectra.gap_report(spec, bins=args.bins, cap=args.cap) if spec.values else None
        if cfg.fmt == "csv":
            if report is None:
                raise spectra.EmptySpectrum(f"{args.kind} spectrum is empty at cutoff {args.max_length!r}")
            out.write(report.histogram_csv())
        else:
            obj = spec.to_json()
            obj["gap"] = None if report is None else report.to_json()
            _dump(obj, out)
    elif cmd == "veech-probe":
        rep = spectra.veech_probe(q, cfg.cutoffs, workers=cfg.threads, cache_dir=cfg.cache_dir)
        if cfg.fmt == "csv":
            out.write(rep.trend_csv("vt"))
        else:
            _dump(rep.to_json(), out)
    elif cmd == "pa-il":
        _dump(spectra.pa_il_query(q, args.a, args.max_length), out)
    return EXIT_OK


def run(argv=None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INVALID
    try:
        return _execute(args, out)
    except BudgetError as exc:
        err.write(f"budget exceeded: {exc}\n")
        return EXIT_BUDGET
    except (FileNotFoundError, SurfaceError, FlatSpecError, ValueError, KeyError, json.JSONDecodeError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())
