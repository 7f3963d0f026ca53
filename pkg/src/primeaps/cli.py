"""Batch experiment runner.

Each subcommand wraps one library surface, writes its outputs (CSV or
JSON) plus a run manifest, and exits 0. Validation failures exit 2,
compute failures 3, I/O failures 4, always with an error JSON on stderr.

Determinism contract: a fixed config and seed reproduce every output file
byte for byte; the manifest's deterministic_hash covers everything except
wall-clock timings.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, arcs, fourier, measures, roth, sieve
from .errors import (
    ConfigError,
    DegenerateInputError,
    DomainError,
    ParameterError,
    PreconditionError,
    StageError,
    TableRangeError,
)
from .numutil import fsum_real, rng_stream

OUTPUT_DIR_ENV = "PRIMEAPS_OUTPUT_DIR"
VALIDATION_ERRORS = (
    ConfigError,
    ParameterError,
    PreconditionError,
    TableRangeError,
    DegenerateInputError,
    DomainError,
)

SUBCOMMANDS = (
    "sieve-stats",
    "measure-build",
    "transform-scan",
    "arc-scan",
    "majorant",
    "restriction",
    "mz-check",
    "roth-pipeline",
    "behrend",
    "varnavides",
)


@dataclass
class RunConfig:
    subcommand: str
    N: object = None
    b: int = 1
    m: int = 1
    Q: list[int] | None = None
    p_exponent: float = 2.5
    W: int | None = None
    delta: float = 0.1
    eps: float = 0.1
    oversample: int = 8
    B_override: float | None = None
    seed: int = 0
    output_dir: str = "primeaps-out"
    format: str = "csv"
    source: str = "primes"
    alpha: float | None = None
    draws: int = 20
    constants: dict | None = None


@dataclass
class RunManifest:
    tool: str
    version: str
    subcommand: str
    config: dict
    effective: dict
    results: dict
    outputs: list[dict]
    deterministic_hash: str = ""
    timings: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of printing usage + SystemExit(2)."""

    def error(self, message):
        raise ConfigError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _json_dict(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"constants must be a JSON object: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("constants must be a JSON object")
    return obj


def build_parser() -> _Parser:
    parser = _Parser(prog="primeaps", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, n_list=False):
        if n_list:
            sp.add_argument("--N", type=_int_list, required=True,
                            help="scale(s), comma-separated")
        else:
            sp.add_argument("--N", type=int, required=True, help="scale")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--output-dir", dest="output_dir", default="primeaps-out")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        return sp

    sp = common(subs.add_parser("sieve-stats"))
    sp.add_argument("--Q", type=_int_list, default=None)

    sp = common(subs.add_parser("measure-build"))
    sp.add_argument("--b", type=int, default=1)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--Q", type=_int_list, default=None)
    sp.add_argument("--p", dest="p_exponent", type=float, default=None,
                    help="restriction exponent; enables the dyadic split")

    sp = common(subs.add_parser("transform-scan"))
    sp.add_argument("--b", type=int, default=1)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--Q", type=_int_list, default=None)
    sp.add_argument("--p", dest="p_exponent", type=float, default=2.5)
    sp.add_argument("--oversample", type=int, default=8)

    sp = common(subs.add_parser("arc-scan"))
    sp.add_argument("--b", type=int, default=1)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--Q", type=_int_list, required=True)
    sp.add_argument("--p", dest="p_exponent", type=float, default=2.5)
    sp.add_argument("--oversample", type=int, default=4)
    sp.add_argument("--B-override", dest="B_override", type=float, default=None)

    sp = common(subs.add_parser("majorant"), n_list=True)
    sp.add_argument("--p", dest="p_exponent", type=float, default=4.0)
    sp.add_argument("--draws", type=int, default=20)
    sp.add_argument("--oversample", type=int, default=2)

    sp = common(subs.add_parser("restriction"), n_list=True)
    sp.add_argument("--b", type=int, default=1)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--p", dest="p_exponent", type=float, default=2.5)
    sp.add_argument("--draws", type=int, default=20)
    sp.add_argument("--oversample", type=int, default=2)

    sp = common(subs.add_parser("mz-check"), n_list=True)
    sp.add_argument("--p", dest="p_exponent", type=float, default=2.5)
    sp.add_argument("--draws", type=int, default=20)
    sp.add_argument("--oversample", type=int, default=2)

    sp = common(subs.add_parser("roth-pipeline"))
    sp.add_argument("--source", choices=roth.SOURCES, default="primes")
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--W", type=int, default=None)
    sp.add_argument("--constants", type=_json_dict, default=None)

    common(subs.add_parser("behrend"), n_list=True)

    sp = common(subs.add_parser("varnavides"))
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--constants", type=_json_dict, default=None)

    return parser


# ---------------------------------------------------------------------------
# output plumbing

def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats stringified."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


class Emitter:
    """Writes output files atomically and records (path, sha256, bytes)."""

    def __init__(self, outdir: Path, fmt: str):
        self.outdir = outdir
        self.format = fmt
        self.outputs: list[dict] = []

    def _record(self, name: str, data: bytes) -> None:
        _atomic_write(self.outdir / name, data)
        self.outputs.append({
            "path": name,
            "sha256": hashlib.sha256(data).hexdigest(),
            "bytes": len(data),
        })

    def table(self, stem: str, header: list[str], rows) -> None:
        """Tabular output in the configured format (csv or json)."""
        if self.format == "json":
            payload = {"columns": header, "rows": [[_clean(v) for v in r] for r in rows]}
            text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
            self._record(stem + ".json", text.encode("utf-8"))
            return
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        self._record(stem + ".csv", buf.getvalue().encode("utf-8"))

    def json_file(self, stem: str, obj) -> None:
        text = json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"
        self._record(stem + ".json", text.encode("utf-8"))

    def raw(self, name: str, data: bytes) -> None:
        self._record(name, data)

    def measure(self, stem: str, f: measures.Measure) -> None:
        rows = zip(f.positions().tolist(), f.weights.tolist())
        self.table(stem, ["index", "weight"], rows)


def emit_plotdata(emitter: Emitter, stem: str, rows) -> None:
    """Long-form (x, series, value) rows, sorted for bit-stable output."""
    ordered = sorted(rows, key=lambda r: (str(r[1]), float(r[0])))
    emitter.table(stem, ["x", "series", "value"], ordered)


def _spectrum_rows(spec: fourier.Spectrum):
    for r, re_, im_ in fourier.spectrum_to_rows(spec):
        yield r, re_, im_


def _scan_profile_rows(result: arcs.ScanResult):
    for row in result.profile:
        yield (row.theta, row.re, row.im, row.abs, row.arc_kind,
               "" if row.a is None else row.a, "" if row.q is None else row.q)


# ---------------------------------------------------------------------------
# subcommand handlers; each returns (effective, results)

def _measure_params(cfg: RunConfig, N: int, Q: int | None = None) -> measures.MeasureParams:
    return measures.MeasureParams(b=cfg.b, m=cfg.m, N=N, Q=Q,
                                  p_exponent=cfg.p_exponent)


def _table_for(limit: int) -> sieve.FactorTable:
    return sieve.build_factor_table(max(int(limit), 4))


def _run_sieve_stats(cfg: RunConfig, em: Emitter):
    N = cfg.N
    table = _table_for(N)
    ps = table.primes_up_to(N)
    theta = fsum_real(np.log(ps.astype(np.float64))) if ps.size else 0.0
    results = {
        "pi_N": int(ps.size),
        "chebyshev_theta_over_N": theta / N,
        "largest_prime": int(ps[-1]) if ps.size else None,
    }
    rows = []
    for Q in cfg.Q or []:
        prod = sieve.mertens_product(Q, 1, table)
        rows.append((Q, "mertens_product", prod))
        if Q >= 3:
            rows.append((Q, "mertens_reference",
                         math.exp(-np.euler_gamma) / math.log(Q)))
    if rows:
        emit_plotdata(em, "sieve_stats", rows)
    return {"table_limit": table.limit}, results


def _run_measure_build(cfg: RunConfig, em: Emitter):
    N = cfg.N
    table = _table_for(cfg.m * N + cfg.b)
    params = _measure_params(cfg, N)
    lam = measures.lambda_measure(params, table)
    em.measure("measure_lambda", lam)
    em.raw("measure_lambda.bin", measures.measure_to_bytes(lam))
    results = {"total": lam.total, "sup": lam.sup_norm()}
    effective = {"table_limit": table.limit}
    rough_totals = {}
    for Q in cfg.Q or []:
        pq = _measure_params(cfg, N, Q=Q)
        lamq = measures.lambda_q_measure(pq, table)
        em.measure(f"measure_rough_Q{Q}", lamq)
        rough_totals[str(Q)] = lamq.total
    if rough_totals:
        results["rough_totals"] = rough_totals
    if cfg.p_exponent is not None:
        pieces, K = measures.dyadic_pieces(params, table)
        norms = measures.piece_sup_norms(pieces)
        em.table("dyadic_sup_norms", ["j", "sup", "reference"],
                 [(n.j, n.sup, n.reference) for n in norms])
        recon = np.zeros(N)
        for piece in pieces:
            recon += piece.weights
        effective["A"] = params.A
        effective["K"] = K
        results["dyadic_pieces"] = len(pieces)
        results["reconstruction_max_err"] = float(
            np.max(np.abs(recon - lam.weights))
        )
    return effective, results


def _run_transform_scan(cfg: RunConfig, em: Emitter):
    N = cfg.N
    table = _table_for(cfg.m * N + cfg.b)
    Qs = cfg.Q or [None]
    grid = fourier.TorusGrid(oversample=cfg.oversample)
    effective = {"table_limit": table.limit, "grid_points": grid.points(N)}
    results = {}
    for Q in Qs:
        params = _measure_params(cfg, N, Q=Q)
        f = (measures.lambda_measure(params, table) if Q is None
             else measures.lambda_q_measure(params, table))
        M = grid.points(N)
        vals = fourier.measure_wedge_grid(f, M)
        mags = np.abs(vals)
        step = max(1, M // 4096)
        idx = np.arange(0, M, step)
        j_star = int(np.argmax(mags))
        if j_star not in idx:
            idx = np.sort(np.append(idx, j_star))
        tag = "lambda" if Q is None else f"rough_Q{Q}"
        em.table(
            f"transform_{tag}",
            ["theta", "re", "im", "abs"],
            [(j / M, vals[j].real, vals[j].imag, mags[j]) for j in idx.tolist()],
        )
        off = mags.copy()
        off[0] = -1.0
        results[tag] = {
            "mass": f.total,
            "sup_offzero_grid": float(np.max(off)),
            "l2_norm": fourier.lp_norm_torus(f, 2.0, grid),
            "lp_norm": fourier.lp_norm_torus(f, cfg.p_exponent, grid),
        }
    return effective, results


def _run_arc_scan(cfg: RunConfig, em: Emitter):
    N = cfg.N
    table = _table_for(max(cfg.m * N + cfg.b, max(cfg.Q) + 1))
    grid = fourier.TorusGrid(oversample=cfg.oversample)
    aparams = arcs.ArcParams(N=N, p_exponent=cfg.p_exponent,
                             b_override=cfg.B_override)
    effective = {
        "table_limit": table.limit,
        "A": aparams.A,
        "B_formula": aparams.B_formula,
        "B": aparams.B,
        "q_cutoff": aparams.q_cutoff,
        "Qmax": aparams.Qmax,
        "degenerate": aparams.degenerate,
        "grid_points": grid.points(N),
    }
    results = {}
    summary_rows = []
    for Q in cfg.Q:
        params = _measure_params(cfg, N, Q=Q)
        scan = arcs.sup_diff_scan(params, grid, table, arc_params=aparams)
        em.table(
            f"arc_scan_Q{Q}",
            ["theta", "re", "im", "abs", "arc_kind", "a", "q"],
            _scan_profile_rows(scan),
        )
        results[str(Q)] = {
            "sup": scan.sup,
            "argmax_theta": scan.argmax_theta,
            "theta0_mass_diff": scan.theta0_mass_diff,
            "reference": scan.reference,
            "sup_major_profiled": scan.sup_major_profiled,
            "sup_minor_profiled": scan.sup_minor_profiled,
        }
        summary_rows.append((Q, "sup", scan.sup))
        summary_rows.append((Q, "reference", scan.reference))
    emit_plotdata(em, "arc_summary", summary_rows)
    return effective, results


def _run_majorant(cfg: RunConfig, em: Emitter):
    Ns = cfg.N
    table = _table_for(max(Ns))
    grid = fourier.TorusGrid(oversample=cfg.oversample)
    results = {}
    sweep_rows = []
    draw_rows = []
    for N in Ns:
        n_primes = int(table.primes_up_to(N).size)
        rng = rng_stream(cfg.seed, f"majorant-N{N}")
        ratios = []
        for d in range(cfg.draws):
            signs = rng.integers(0, 2, size=n_primes) * 2 - 1
            ratio = fourier.majorant_ratio(signs.astype(np.float64),
                                           cfg.p_exponent, N, table, grid)
            ratios.append(ratio)
            draw_rows.append((N, d, ratio))
        results[str(N)] = {"max_ratio": max(ratios), "draws": cfg.draws}
        sweep_rows.append((N, "max_ratio", max(ratios)))
    em.table("majorant_draws", ["N", "draw", "ratio"], draw_rows)
    emit_plotdata(em, "majorant_sweep", sweep_rows)
    return {"table_limit": table.limit, "p": cfg.p_exponent}, results


def _run_restriction(cfg: RunConfig, em: Emitter):
    Ns = cfg.N
    table = _table_for(cfg.m * max(Ns) + cfg.b)
    grid = fourier.TorusGrid(oversample=cfg.oversample)
    results = {}
    rows = []
    draw_rows = []
    for N in Ns:
        params = _measure_params(cfg, N)
        lam = measures.lambda_measure(params, table)
        support = int(np.count_nonzero(lam.weights))
        rng = rng_stream(cfg.seed, f"restriction-N{N}")
        ratios = []
        for d in range(cfg.draws):
            fvals = rng.standard_normal(support) + 1j * rng.standard_normal(support)
            ratios.append(fourier.restriction_ratio(fvals, cfg.p_exponent,
                                                    lam, grid))
            draw_rows.append((N, d, ratios[-1]))
        results[str(N)] = {"max_ratio": max(ratios), "support": support}
        rows.append((N, "max_ratio", max(ratios)))
    em.table("restriction_draws", ["N", "draw", "ratio"], draw_rows)
    emit_plotdata(em, "restriction_sweep", rows)
    return {"table_limit": table.limit, "p": cfg.p_exponent}, results


def _run_mz_check(cfg: RunConfig, em: Emitter):
    Ns = cfg.N
    grid = fourier.TorusGrid(oversample=cfg.oversample)
    results = {}
    rows = []
    draw_rows = []
    for N in Ns:
        rng = rng_stream(cfg.seed, f"mz-N{N}")
        ratios = []
        for d in range(cfg.draws):
            w = rng.standard_normal(N)
            f = measures.Measure(N, w, signed=True)
            ratios.append(fourier.mz_ratio(f, cfg.p_exponent, grid))
            draw_rows.append((N, d, ratios[-1]))
        results[str(N)] = {"max_ratio": max(ratios)}
        rows.append((N, "max_ratio", max(ratios)))
    em.table("mz_draws", ["N", "draw", "ratio"], draw_rows)
    emit_plotdata(em, "mz_sweep", rows)
    return {"p": cfg.p_exponent, "oversample": cfg.oversample}, results


def _run_roth_pipeline(cfg: RunConfig, em: Emitter):
    n = cfg.N
    W = cfg.W if cfg.W is not None else roth.default_w(n)
    m = 1
    for p in sieve.build_factor_table(max(W, 2) + 1).primes().tolist():
        if p <= max(W, 2):
            m *= p
    table = _table_for(4 * n + m + 16)
    artifacts: dict = {}
    report = roth.density_experiment(
        cfg.source, n, table, seed=cfg.seed, delta=cfg.delta, eps=cfg.eps,
        W=cfg.W, constants=cfg.constants, artifacts=artifacts,
    )
    em.json_file("report", report)
    em.table("set_A0", ["value"], [(v,) for v in artifacts["A0"].tolist()])
    em.table("set_A", ["value"], [(v,) for v in artifacts["A"].tolist()])
    em.table("bohr_members", ["value"],
             [(v,) for v in artifacts["bohr"].members.tolist()])
    em.table("spectrum_a", ["r", "re", "im"],
             _spectrum_rows(artifacts["spectrum"]))
    em.measure("measure_mu", artifacts["mu"])
    em.measure("measure_a", artifacts["a"])
    em.measure("granular_a1", artifacts["a1"])
    wt = artifacts["w_trick"]
    effective = {
        "table_limit": table.limit,
        "W": wt.W,
        "m": wt.m,
        "b": wt.b,
        "N": wt.N,
        "m_le_logN": wt.m_le_logN,
    }
    results = {
        "alpha": report["w_trick"]["alpha"],
        "k": report["spectrum"]["k"],
        "bohr_size": report["bohr"]["size"],
        "sup_a1": report["setlike"]["sup_a1"],
        "setlike": report["setlike"]["setlike"],
        "A_3aps_line_nontrivial": report["counts"]["A_3aps_line_nontrivial"],
        "contradiction": report["bounds"]["contradiction"],
    }
    return effective, results


def _run_behrend(cfg: RunConfig, em: Emitter):
    results = {}
    rows = []
    for N in cfg.N:
        S = roth.behrend_set(N)
        em.table(f"behrend_N{N}", ["value"], [(v,) for v in S.tolist()])
        size = int(S.size)
        fitted_c = -math.log(size / N) / math.sqrt(math.log(N)) if size < N else 0.0
        results[str(N)] = {"size": size, "fitted_c": fitted_c}
        rows.append((N, "size", size))
        rows.append((N, "fitted_c", fitted_c))
    emit_plotdata(em, "behrend_sweep", rows)
    return {}, results


def _run_varnavides(cfg: RunConfig, em: Emitter):
    consts = dict(roth.DEFAULT_CONSTANTS)
    consts.update(cfg.constants or {})
    if cfg.alpha is None:
        raise ConfigError("--alpha is required")
    vb = roth.varnavides_bound(cfg.alpha, cfg.N, C1=consts["C1"])
    results = asdict(vb)
    em.json_file("varnavides", results)
    return {"C1": consts["C1"]}, _clean(results)


_HANDLERS = {
    "sieve-stats": _run_sieve_stats,
    "measure-build": _run_measure_build,
    "transform-scan": _run_transform_scan,
    "arc-scan": _run_arc_scan,
    "majorant": _run_majorant,
    "restriction": _run_restriction,
    "mz-check": _run_mz_check,
    "roth-pipeline": _run_roth_pipeline,
    "behrend": _run_behrend,
    "varnavides": _run_varnavides,
}


# ---------------------------------------------------------------------------
# driver

def _config_from_namespace(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(subcommand=ns.subcommand)
    for key, value in vars(ns).items():
        if key != "subcommand" and hasattr(cfg, key):
            setattr(cfg, key, value)
    return cfg


def run(cfg: RunConfig) -> RunManifest:
    """Execute one experiment; writes outputs and manifest.json."""
    outdir = Path(os.environ.get(OUTPUT_DIR_ENV) or cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    em = Emitter(outdir, cfg.format)
    t0 = time.perf_counter()
    effective, results = _HANDLERS[cfg.subcommand](cfg, em)
    elapsed = time.perf_counter() - t0
    effective = _clean(dict(effective, output_dir=str(outdir)))
    results = _clean(results)
    base = {
        "tool": "primeaps",
        "version": __version__,
        "subcommand": cfg.subcommand,
        "config": _clean(asdict(cfg)),
        "effective": effective,
        "results": results,
        "outputs": em.outputs,
    }
    # hash covers content, not file locations: identical experiments hash
    # equal no matter where their outputs land
    basis = dict(base)
    basis["config"] = {k: v for k, v in base["config"].items() if k != "output_dir"}
    basis["effective"] = {
        k: v for k, v in base["effective"].items() if k != "output_dir"
    }
    canon = json.dumps(basis, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canon.encode("utf-8")).hexdigest()
    manifest = RunManifest(
        tool="primeaps",
        version=__version__,
        subcommand=cfg.subcommand,
        config=base["config"],
        effective=effective,
        results=results,
        outputs=em.outputs,
        deterministic_hash=digest,
        timings={"wall_seconds": elapsed},
    )
    data = json.dumps(asdict(manifest), sort_keys=True, indent=2) + "\n"
    _atomic_write(outdir / "manifest.json", data.encode("utf-8"))
    return manifest


def _emit_error(kind: str, exc: Exception, stage: str | None = None) -> None:
    payload = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    if stage is not None:
        payload["stage"] = stage
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = _config_from_namespace(ns)
    except ConfigError as exc:
        _emit_error("validation", exc)
        return 2
    try:
        run(cfg)
        return 0
    except VALIDATION_ERRORS as exc:
        _emit_error("validation", exc)
        return 2
    except StageError as exc:
        _emit_error("compute", exc, stage=exc.stage)
        return 3
    except OSError as exc:
        _emit_error("io", exc)
        return 4
    except Exception as exc:  # noqa: BLE001 - tagged as internal
        _emit_error("compute", exc, stage="internal")
        return 3


if __name__ == "__main__":
    sys.exit(main())
