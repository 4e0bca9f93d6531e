"""Command line entry point: ``cantorvp <subcommand> [options]``.

Exit codes: 0 success, 2 invalid configuration, 3 a check failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, checks, heat, operator as vp, process
from .config import ConfigError, load_config, parse_config
from .measure_zeta import zeta_partial
from .tree import Vertex, build_tree
from .wavelets import WaveletBasis

SUBCOMMANDS = ("zeta", "measure", "wavelets", "spectrum", "heat", "green", "simulate", "check")
OUT_ENV = "CANTORVP_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


def _num(x) -> str:
    return repr(float(x))


# --------------------------------------------------------------------------
# output


class Outputs:
    """Collects files for one run and writes them atomically with a manifest."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.files: dict[str, bytes] = {}
        self.warnings: list[str] = []

    def csv(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.files[name] = buf.getvalue().encode("utf-8")

    def json(self, name, obj):
        self.files[name] = (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")

    def emit(self, manifest: dict) -> list[Path]:
        self.directory.mkdir(parents=True, exist_ok=True)
        manifest = dict(manifest, files={n: hashlib.sha256(b).hexdigest()
                                         for n, b in sorted(self.files.items())},
                        warnings=self.warnings)
        self.json("manifest.json", manifest)
        written = []
        for name, data in self.files.items():
            written.append(_atomic_write(self.directory / name, data))
        return written


def _atomic_write(path: Path, data: bytes) -> Path:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# --------------------------------------------------------------------------
# subcommands


def run_zeta(cfg, tree, out):
    zp = zeta_partial(tree, cfg.s, cfg.zeta_levels)
    out.csv("zeta.csv", ["level", "term", "cumulative"],
            [(lvl, _num(t), _num(c)) for lvl, (t, c) in enumerate(zip(zp.level_terms, zp.cumulative))])


def run_measure(cfg, tree, out):
    rows = []
    for lvl in range(tree.depth + 1):
        for v in tree.vertices(lvl):
            rows.append((str(v), _num(tree.diameter(v)), _num(tree.measure(v))))
    out.csv("measure.csv", ["address", "diameter", "measure"], rows)


def run_wavelets(cfg, tree, out):
    basis = WaveletBasis(tree)
    phi = basis.matrix
    leaves = tree.leaf_addresses
    rows = [("", 0, leaves[i], _num(phi[i, 0].real), _num(phi[i, 0].imag))
            for i in range(tree.n_leaves)]
    for k, el in enumerate(basis.elements[1:], start=1):
        sup = str(el.support)
        for i in np.flatnonzero(np.abs(phi[:, k]) > 0):
            rows.append((sup, el.frequency, leaves[i], _num(phi[i, k].real), _num(phi[i, k].imag)))
    out.csv("wavelets.csv", ["support_address", "j", "leaf_address", "re", "im"], rows)


def spectrum_rows(tree, params):
    """Closed-form eigenvalue per support, paired with the matched dense eigenvalues."""
    records = vp.spectrum_records(tree, params)
    M = vp.assemble_matrix(tree, params).entries
    dense = np.sort(np.linalg.eigvalsh(checks.symmetrised(tree, M)))
    closed = [(0.0, -1)] + [(r.lam, k) for k, r in enumerate(records) for _ in range(r.multiplicity)]
    order = sorted(range(len(closed)), key=lambda i: closed[i][0])
    matched = {}
    for rank, i in enumerate(order):
        matched.setdefault(closed[i][1], []).append(dense[rank])
    rows = []

    def row(address, level, mult, lam, found):
        worst = max(found, key=lambda d: abs(d - lam))
        rows.append((address, level, mult, _num(lam), _num(worst), _num(abs(worst - lam))))

    row("", -1, 1, 0.0, matched[-1])
    for k, r in enumerate(records):
        row(str(r.support), r.support.level, r.multiplicity, r.lam, matched[k])
    return rows


def run_spectrum(cfg, tree, out):
    out.csv("spectrum.csv", ["support_address", "level", "multiplicity", "lambda_closed_form",
                             "lambda_dense_oracle", "abs_diff"], spectrum_rows(tree, cfg.params))


def _matrix_rows(tree, values):
    leaves = tree.leaf_addresses
    return [(leaves[i], leaves[k], _num(values[i, k]))
            for i in range(tree.n_leaves) for k in range(tree.n_leaves)]


def run_heat(cfg, tree, out):
    if not cfg.times:
        out.warnings.append("empty times list: no heat kernel written")
        return
    sd = heat.spectral_decomposition(tree, cfg.params)
    for n, t in enumerate(cfg.times):
        pt = np.real(heat.transition_matrix(tree, cfg.params, t, sd))
        out.csv(f"heat_{n:03d}_t{t:g}.csv", ["row_address", "col_address", "value"],
                _matrix_rows(tree, pt))


def run_green(cfg, tree, out):
    band = cfg.tolerances.get("green_band", 1e-2)
    g = heat.green_function(tree, cfg.params, band=band)
    side = {"convergence_class": g.convergence_class, "level_sums": g.level_sums,
            "ratios": g.ratios, "s": cfg.s, "depth": tree.depth}
    if g.values is not None:
        side["identity_error"] = g.identity_error
        out.csv("green.csv", ["row_address", "col_address", "value"],
                _matrix_rows(tree, np.real(g.values)))
    else:
        out.warnings.append(f"Green sum classified {g.convergence_class}; no values written")
    out.json("green.json", side)


def run_simulate(cfg, tree, out):
    x0 = Vertex.parse(cfg.x0) if cfg.x0 else Vertex((0,) * tree.depth)
    i0 = tree.leaf_index(x0)
    rates = process.build_rates(tree, cfg.params)
    emp = process.sample_paths(rates, i0, cfg.T, cfg.paths, cfg.seed)
    analytic = np.real(heat.transition_matrix(tree, cfg.params, cfg.T))[i0]
    leaves = tree.leaf_addresses
    out.json("simulate.json", {
        "counts": {leaves[i]: int(c) for i, c in enumerate(emp.counts)},
        "analytic": {leaves[i]: float(p) for i, p in enumerate(analytic)},
        "tv_distance": process.tv_distance(emp.distribution, analytic),
        "x0": str(x0), "T": cfg.T, "paths": cfg.paths, "seed": cfg.seed,
        "depth": tree.depth, "s": cfg.s,
    })


def run_check(cfg, tree, out, acceptance=False):
    results = checks.invariant_checks(tree, cfg.params, seed=cfg.seed)
    if acceptance:
        results += checks.acceptance_checks()
    for r in results:
        print(r.line())
    out.json("check.json", {"checks": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                                       for r in results]})
    return all(r.passed for r in results)


RUNNERS = {"zeta": run_zeta, "measure": run_measure, "wavelets": run_wavelets,
           "spectrum": run_spectrum, "heat": run_heat, "green": run_green,
           "simulate": run_simulate}


# --------------------------------------------------------------------------
# argument handling


def _family_override(text: str) -> dict:
    try:
        return _parse_family(text)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("--family", f"cannot parse {text!r}: {exc}") from None


def _parse_family(text: str) -> dict:
    name, _, arg = text.partition(":")
    if name == "padic":
        return {"family": "padic", "p": int(arg)}
    if name == "level_regular":
        return {"family": "level_regular", "branching": [int(b) for b in arg.split(",")]}
    if name == "random":
        lo, hi, *seed = (int(x) for x in arg.split(","))
        return {"family": "random", "low": lo, "high": hi, "seed": seed[0] if seed else 0}
    if name == "explicit":
        return {"family": "explicit", "file": arg}
    raise ConfigError("--family", f"unknown family {name!r}; expected padic:P, level_regular:B0,B1,..., "
                                  "random:LOW,HIGH[,SEED] or explicit:FILE")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cantorvp", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./cantorvp-out)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--depth", type=int)
    ap.add_argument("--s", type=float)
    ap.add_argument("--family", help="padic:P | level_regular:B0,B1,.. | random:LOW,HIGH[,SEED] | explicit:FILE")
    ap.add_argument("--metric", choices=["canonical", "baire"])
    ap.add_argument("--acceptance", action="store_true", help="check: also run the acceptance grid")
    return ap


def resolve_config(args) -> tuple[dict, Path]:
    base = Path(".")
    data = {}
    if args.config:
        data = load_config(args.config)
        base = Path(args.config).resolve().parent
    tree = dict(data.get("tree", {}))
    if args.family:
        for key in ("p", "branching", "low", "high", "seed", "file", "counts"):
            tree.pop(key, None)
        tree.update(_family_override(args.family))
    if args.depth is not None:
        tree["depth"] = args.depth
    if args.metric:
        tree.pop("diameters", None)
        tree["metric"] = args.metric
    if tree:
        data["tree"] = tree
    if args.s is not None:
        data["s"] = args.s
    if args.seed is not None:
        data["seed"] = args.seed
    return data, base


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    report = {"subcommand": args.subcommand, "version": __version__, "status": "error"}
    out_dir = Path(args.out or os.environ.get(OUT_ENV) or "cantorvp-out")
    try:
        data, base = resolve_config(args)
        cfg = parse_config(data, base)
    except ConfigError as exc:
        print(f"cantorvp: invalid configuration: {exc}", file=sys.stderr)
        report.update(status="invalid-config", error=str(exc))
        _write_report(out_dir if args.out or os.environ.get(OUT_ENV) else None, report, started)
        return EXIT_CONFIG
    if not args.out and cfg.output_dir:
        out_dir = Path(cfg.output_dir)
    problem = _unwritable(out_dir)
    if problem:
        print(f"cantorvp: invalid configuration: output_dir: {problem}", file=sys.stderr)
        report.update(status="invalid-config", error=f"output_dir: {problem}")
        _write_report(None, report, started)
        return EXIT_CONFIG
    report["config_sha256"] = cfg.digest()
    tree = build_tree(cfg.tree)
    outputs = Outputs(out_dir)
    code = EXIT_OK
    if args.subcommand == "check":
        if not run_check(cfg, tree, outputs, acceptance=args.acceptance):
            code = EXIT_CHECK
    else:
        RUNNERS[args.subcommand](cfg, tree, outputs)
    for w in outputs.warnings:
        print(f"cantorvp: warning: {w}", file=sys.stderr)
    manifest = {"subcommand": args.subcommand, "version": __version__,
                "config_sha256": cfg.digest(), "config": cfg.raw}
    written = outputs.emit(manifest)
    report.update(status="ok" if code == EXIT_OK else "check-failed",
                  outputs=sorted(str(p) for p in written))
    _write_report(out_dir, report, started)
    return code


def _unwritable(out_dir: Path):
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return f"cannot create {str(out_dir)!r}: {exc.strerror}"
    if not os.access(out_dir, os.W_OK):
        return f"{str(out_dir)!r} is not writable"
    return None


def _write_report(out_dir, report, started):
    report["seconds"] = round(time.perf_counter() - started, 6)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_dir is None:
        print(text, file=sys.stderr)
        return
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(out_dir / "run_report.json", text.encode())
    except OSError:
        print(text, file=sys.stderr)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
