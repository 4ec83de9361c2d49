"""Command-line batch interface.

Tuples are read from JSON documents of the form::

    {"n": 2, "d": 2, "matrices": [[[[re, im], ...], ...], ...], "metadata": {...}}

Reports are JSON (or CSV rows), deterministic for a given seed: residuals
are rounded to six significant digits and wall time is only included with
``--timing``.  Exit status is 0 when every check passes, 2 on a failure and
3 when the aggregate verdict is inconclusive.  Unreadable input exits with 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .chartriple import (
    TripleConstructionError,
    build_triple,
    char_fn,
    eval_char_fn,
    triples_equivalent,
    verify_kernel_identity,
    verify_model_identity,
)
from .corpus import generate_corpus
from .dilation import build_dilation, verify_fundamental_identity
from .factorization import (
    Colligation,
    canonical_transfer,
    factor_through_universal,
    psi_eval,
    relate_transfer_functions,
    verify_m1_reduction,
    verify_psi_coisometry,
    verify_thm_factchar,
)
from .rkhs import sample_pairs, sample_points
from .tuples import (
    NonCommutingError,
    OperatorTuple,
    dilation_tail,
    is_m_hypercontraction,
    nilpotency_order,
    purity_certificate,
)

EXIT_PASS, EXIT_INPUT, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3
DEGREE_CAP = 60
TAIL_TARGET = 1e-14


# ---------------------------------------------------------------------------
# Tuple documents


class TupleDocumentError(ValueError):
    pass


@dataclass
class TupleDocument:
    n: int
    d: int
    matrices: list
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "TupleDocument":
        try:
            n, d, raw = int(doc["n"]), int(doc["d"]), doc["matrices"]
        except (KeyError, TypeError, ValueError) as exc:
            raise TupleDocumentError(f"missing or malformed field: {exc}") from exc
        if len(raw) != n:
            raise TupleDocumentError(f"expected {n} matrices, found {len(raw)}")
        mats = []
        for idx, M in enumerate(raw, start=1):
            arr = np.asarray(M, dtype=float)
            if arr.shape != (d, d, 2):
                raise TupleDocumentError(f"matrix {idx} has shape {arr.shape[:-1] if arr.ndim == 3 else arr.shape}, expected ({d}, {d}) of [re, im] pairs")
            if not np.all(np.isfinite(arr)):
                raise TupleDocumentError(f"matrix {idx} has non-finite entries")
            mats.append(arr[..., 0] + 1j * arr[..., 1])
        return cls(n, d, mats, dict(doc.get("metadata", {})))

    @classmethod
    def from_tuple(cls, T: OperatorTuple, metadata: dict | None = None) -> "TupleDocument":
        return cls(T.n, T.d, [np.array(M) for M in T.matrices], dict(metadata or {}))

    def to_dict(self) -> dict:
        mats = [[[[float(x.real), float(x.imag)] for x in row] for row in M] for M in self.matrices]
        return {"n": self.n, "d": self.d, "matrices": mats, "metadata": self.metadata}

    def to_tuple(self) -> OperatorTuple:
        try:
            return OperatorTuple(self.matrices)
        except NonCommutingError as exc:
            i, j = exc.pair
            raise TupleDocumentError(
                f"matrices T_{i + 1} and T_{j + 1} do not commute (residual {exc.residual:.3e})"
            ) from exc


def load_tuple(path) -> OperatorTuple:
    """Read a tuple document; reject non-commuting input naming the pair."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise TupleDocumentError(f"{path}: not valid JSON ({exc})") from exc
    return TupleDocument.from_dict(doc).to_tuple()


def save_tuple(T: OperatorTuple, path, metadata: dict | None = None) -> None:
    Path(path).write_text(json.dumps(TupleDocument.from_tuple(T, metadata).to_dict(), indent=1) + "\n")


# ---------------------------------------------------------------------------
# Reports


def _round(x):
    if x is None or isinstance(x, (bool, str, int)):
        return x
    x = float(x)
    if not np.isfinite(x):
        return str(x)
    return float(f"{x:.6g}")


@dataclass
class CheckRecord:
    check: str
    verdict: str
    residuals: dict
    threshold: float | None
    reason: str = ""
    wall_time: float | None = None

    def to_dict(self, timing: bool) -> dict:
        out = {
            "check": self.check,
            "verdict": self.verdict,
            "residuals": {k: _round(v) for k, v in self.residuals.items()},
            "threshold": _round(self.threshold),
            "reason": self.reason,
        }
        if timing and self.wall_time is not None:
            out["wall_time"] = round(self.wall_time, 4)
        return out


@dataclass
class Report:
    parameters: dict
    records: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        verdicts = [r.verdict for r in self.records]
        if "fail" in verdicts:
            return "fail"
        if "inconclusive" in verdicts or not verdicts:
            return "inconclusive"
        return "pass"

    @property
    def exit_code(self) -> int:
        return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(self.verdict, EXIT_INCONCLUSIVE)

    def to_json(self, timing: bool = False) -> str:
        doc = {
            "version": __version__,
            "parameters": {k: _round(v) for k, v in self.parameters.items()},
            "verdict": self.verdict,
            "checks": [r.to_dict(timing) for r in self.records],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self, timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "verdict", "residual_name", "residual", "threshold", "reason"])
        for r in self.records:
            items = sorted(r.residuals.items()) or [("", None)]
            for name, val in items:
                w.writerow([r.check, r.verdict, name, _round(val), _round(r.threshold), r.reason])
        w.writerow(["aggregate", self.verdict, "", "", "", ""])
        return buf.getvalue()


def _verdict(value: float, threshold: float) -> str:
    return "pass" if value <= threshold else "fail"


# ---------------------------------------------------------------------------
# Suite


CHECK_ORDER = (
    "hypercontraction",
    "purity",
    "dilation",
    "fundamental",
    "triple",
    "kernel",
    "model",
    "factorization",
    "psi",
    "reduction",
)

DEPENDS = {
    "purity": ("hypercontraction",),
    "dilation": ("purity",),
    "fundamental": ("hypercontraction",),
    "triple": ("dilation", "fundamental"),
    "kernel": ("triple",),
    "model": ("triple",),
    "factorization": ("triple",),
    "psi": (),
    "reduction": ("triple",),
}


def auto_degree(T: OperatorTuple, m: int, cap: int = DEGREE_CAP) -> int:
    """Nilpotency order minus one, or the first degree with dilation tail below 1e-14."""
    nu = nilpotency_order(T)
    if nu is not None:
        return max(nu - 1, 0)
    for N in range(1, cap + 1):
        if dilation_tail(T, m, N) < TAIL_TARGET:
            return N
    return cap


def _closure(checks) -> list:
    wanted = set(checks)
    stack = list(wanted)
    while stack:
        for dep in DEPENDS.get(stack.pop(), ()):
            if dep not in wanted:
                wanted.add(dep)
                stack.append(dep)
    return [c for c in CHECK_ORDER if c in wanted]


def run_suite(
    T: OperatorTuple,
    m: int,
    N: int | None = None,
    seed: int = 0,
    samples: int = 25,
    tol: float = 1e-8,
    checks=None,
    dump: Path | None = None,
) -> Report:
    """Run the selected checks in dependency order.

    A failed or inconclusive dependency marks every downstream check
    inconclusive without running it.  Requested checks pull in their
    dependencies.
    """
    order = _closure(checks) if checks else list(CHECK_ORDER)
    nu = nilpotency_order(T)
    N = auto_degree(T, m) if N is None else N
    params = {"m": m, "N": N, "seed": seed, "samples": samples, "tol": tol, "n": T.n, "d": T.d,
              "nilpotency_order": nu}
    report = Report(params)
    status: dict = {}
    ctx: dict = {}
    pts = sample_points(T.n, samples, seed)
    pairs = sample_pairs(T.n, samples, seed + 1)
    exact = nu is not None

    for name in order:
        blocked = [dep for dep in DEPENDS.get(name, ()) if status.get(dep) != "pass"]
        if blocked:
            rec = CheckRecord(name, "inconclusive", {}, None, f"skipped: dependency {blocked[0]} did not pass")
        else:
            t0 = time.perf_counter()
            try:
                rec = _run_check(name, T, m, N, tol, pts, pairs, exact, ctx)
            except (TripleConstructionError, ValueError, np.linalg.LinAlgError) as exc:
                rec = CheckRecord(name, "fail", {}, None, f"{type(exc).__name__}: {exc}")
            rec.wall_time = time.perf_counter() - t0
        status[name] = rec.verdict
        report.records.append(rec)

    if dump is not None:
        _dump(dump, T, ctx)
    return report


def _run_check(name, T, m, N, tol, pts, pairs, exact, ctx) -> CheckRecord:
    if name == "hypercontraction":
        rep = is_m_hypercontraction(T, m)
        res = {"min_eig_order_1": rep.min_eig_p1, f"min_eig_order_{m}": rep.min_eig_pm}
        return CheckRecord(name, "pass" if rep else "fail", res, -rep.tol)

    if name == "purity":
        cert = purity_certificate(T, m=m, degree=N)
        ctx["certificate"] = cert
        verdict = {"pure": "pass", "not-pure": "fail"}.get(cert.verdict, "inconclusive")
        res = {"last_iterate": cert.iterates[-1] if cert.iterates else 0.0, "tail_bound": cert.tail_bound}
        return CheckRecord(name, verdict, res, None, cert.heuristic or cert.verdict)

    if name == "dilation":
        dil = build_dilation(T, m, N, certificate=ctx.get("certificate"))
        ctx["dilation"] = dil
        thr = 1e-12 if exact else dil.tail_bound + 1e-10
        ok = dil.isometry_residual <= thr and dil.intertwining_residual <= 1e-10
        res = {"isometry": dil.isometry_residual, "intertwining": dil.intertwining_residual,
               "tail_bound": dil.tail_bound}
        return CheckRecord(name, "pass" if ok else "fail", res, thr)

    if name == "fundamental":
        r = verify_fundamental_identity(T, m, N)
        thr = 1e-12 if exact else dilation_tail(T, m, N) + 1e-10
        return CheckRecord(name, _verdict(r, thr), {"residual": r}, thr)

    if name == "triple":
        t1 = build_triple(T, m, N)
        t2 = build_triple(T, m, N, method="qr-reversed")
        ctx["triple"] = t1
        eq = triples_equivalent(t1, t2)
        res = {"unitarity": t1.unitarity_residual, "equivalence": eq.residual,
               "isometry_defect": t1.isometry_defect}
        thr = 1e-12 if exact else 1e-10
        ok = t1.unitarity_residual <= thr and eq.residual <= 1e-10
        return CheckRecord(name, "pass" if ok else "fail", res, thr)

    if name == "kernel":
        r = verify_kernel_identity(ctx["triple"], pairs)
        return CheckRecord(name, _verdict(r, tol), {"residual": r}, tol)

    if name == "model":
        rep = verify_model_identity(ctx["triple"])
        res = {"model": rep.model_residual, "partial_isometry": rep.partial_isometry_residual}
        ok = max(res.values()) <= tol
        return CheckRecord(name, "pass" if ok else "fail", res, tol)

    if name == "factorization":
        rep = verify_thm_factchar(ctx["triple"], pts)
        res = {"residual": rep.residual}
        ok = rep.residual <= tol
        if rep.m1_psi_exact is not None:
            res["first_fiber"] = rep.m1_first_row_residual
            ok = ok and rep.m1_psi_exact
        return CheckRecord(name, "pass" if ok else "fail", res, tol)

    if name == "psi":
        rep = verify_psi_coisometry(m, 1, T.n, 4, pairs, kernel_degree=80)
        res = {"coisometry": rep.coisometry_residual, "kernel": rep.kernel_residual}
        return CheckRecord(name, _verdict(max(res.values()), 1e-10), res, 1e-10)

    if name == "reduction":
        res = {"row_characteristic": verify_m1_reduction(T, pts)}
        t = ctx["triple"]
        for m1 in range(1, m):
            t1 = build_triple(T, m1, N)
            rep = relate_transfer_functions(T, m1, m, t1, t, pts)
            res[f"relate_{m1}_{m}"] = rep.residual
        ok = res["row_characteristic"] <= 1e-10 and all(v <= tol for k, v in res.items() if k.startswith("relate"))
        return CheckRecord(name, "pass" if ok else "fail", res, tol)

    raise ValueError(f"unknown check {name!r}")


def _dump(directory: Path, T: OperatorTuple, ctx: dict) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for i, M in enumerate(T.matrices, start=1):
        np.save(directory / f"T{i}.npy", M)
    dil = ctx.get("dilation")
    if dil is not None:
        np.save(directory / "Pi.npy", dil.pi_matrix)
        np.save(directory / "defect.npy", dil.defect.defect_operator)
    t = ctx.get("triple")
    if t is not None:
        np.save(directory / "B.npy", t.B)
        np.save(directory / "C.npy", t.cmt.c_matrix)
        np.save(directory / "D.npy", t.D_core)
        np.save(directory / "U.npy", t.unitary())


# ---------------------------------------------------------------------------
# Grids


def grid_points(n: int, radius: float, points: int, kind: str = "radial", angles: int = 8) -> list:
    """Deterministic grid in the ball.

    ``radial``: ``t u`` for ``t`` in ``linspace(0, radius, points)`` and
    ``u = (1, ..., 1)/sqrt(n)``.  ``polar``: the same radii times ``angles``
    phases ``exp(2 pi i a / angles)`` applied to ``u``.
    """
    if not 0 < radius < 1:
        raise ValueError(f"grid radius must lie in (0, 1), got {radius}")
    u = np.ones(n, dtype=complex) / np.sqrt(n)
    radii = np.linspace(0.0, radius, points)
    if kind == "radial":
        return [t * u for t in radii]
    if kind == "polar":
        out = []
        for t in radii:
            for a in range(angles if t > 0 else 1):
                out.append(t * np.exp(2j * np.pi * a / angles) * u)
        return out
    raise ValueError(f"unknown grid kind {kind!r}")


def grid_eval(obj: str, pts: list, T: OperatorTuple | None = None, m: int = 1, N: int | None = None,
              r: int = 1, psi_degree: int = 20) -> str:
    """CSV rows: z coordinates, matrix entries (re, im) and the operator norm."""
    n = T.n if T is not None else len(pts[0])
    for z in pts:
        if len(z) != n:
            raise ValueError(f"point {list(z)} has {len(z)} coordinates, expected {n}")
        if np.vdot(z, z).real >= 1:
            raise ValueError(f"point {list(z)} is outside the open unit ball")
    if obj in ("charfn", "transfer"):
        if T is None:
            raise ValueError(f"{obj} needs a tuple")
        t = build_triple(T, m, auto_degree(T, m) if N is None else N)
        col = Colligation.from_triple(t)
        f = (lambda z: eval_char_fn(t, z)) if obj == "charfn" else (lambda z: canonical_transfer(t, z, None, col))
    elif obj == "psi":
        f = lambda z: psi_eval(m, r, z, psi_degree, n=n)
    else:
        raise ValueError(f"unknown grid object {obj!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header_done = False
    for z in pts:
        V = np.atleast_2d(f(z))
        if not header_done:
            head = []
            for i in range(len(z)):
                head += [f"z{i + 1}_re", f"z{i + 1}_im"]
            for a in range(V.shape[0]):
                for b in range(V.shape[1]):
                    head += [f"e{a + 1}_{b + 1}_re", f"e{a + 1}_{b + 1}_im"]
            w.writerow(head + ["norm"])
            header_done = True
        row = []
        for zi in z:
            row += [repr(float(zi.real)), repr(float(zi.imag))]
        for x in V.ravel():
            row += [f"{x.real:.12g}", f"{x.imag:.12g}"]
        row.append(f"{np.linalg.norm(V, 2):.12g}")
        w.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Subcommands


def _parse_point(text: str) -> np.ndarray:
    return np.array([complex(part.replace(" ", "")) for part in text.split(",")])


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_check(args) -> int:
    T = load_tuple(args.tuple)
    checks = args.checks.split(",") if args.checks else None
    if checks:
        unknown = [c for c in checks if c not in CHECK_ORDER]
        if unknown:
            raise TupleDocumentError(f"unknown checks: {', '.join(unknown)}")
    report = run_suite(T, args.m, args.degree, args.seed, args.samples, args.tol, checks,
                       Path(args.dump) if args.dump else None)
    text = report.to_csv(args.timing) if args.format == "csv" else report.to_json(args.timing)
    _emit(text, args.output)
    return report.exit_code


def cmd_triple(args) -> int:
    T = load_tuple(args.tuple)
    N = auto_degree(T, args.m) if args.degree is None else args.degree
    t = build_triple(T, args.m, N)
    t2 = build_triple(T, args.m, N, method="qr-reversed")
    eq = triples_equivalent(t, t2)
    rep = Report({"m": args.m, "N": N, "tol": args.tol})
    res = {"unitarity": t.unitarity_residual, "equivalence": eq.residual, "isometry_defect": t.isometry_defect}
    res.update({f"block: {k}": v for k, v in t.block_identities().items()})
    rep.records.append(CheckRecord("triple", _verdict(max(res.values()), 1e-10), res, 1e-10,
                                   f"core_degree={t.core_degree}; core_dim={t.core_dim}; defect_rank={t.r}"))
    if args.dump:
        _dump(Path(args.dump), T, {"triple": t})
    _emit(rep.to_csv() if args.format == "csv" else rep.to_json(), args.output)
    return rep.exit_code


def cmd_charfn(args) -> int:
    T = load_tuple(args.tuple)
    N = auto_degree(T, args.m) if args.degree is None else args.degree
    pts = [_parse_point(p) for p in args.z] if args.z else sample_points(T.n, args.samples, args.seed)
    _emit(grid_eval("charfn", pts, T, args.m, N), args.output)
    return EXIT_PASS


def cmd_factor(args) -> int:
    T = load_tuple(args.tuple)
    N = auto_degree(T, args.m) if args.degree is None else args.degree
    t = build_triple(T, args.m, N)
    pts = sample_points(T.n, args.samples, args.seed)
    rep = Report({"m": args.m, "N": N, "seed": args.seed, "samples": args.samples, "tol": args.tol})
    fc = verify_thm_factchar(t, pts)
    rep.records.append(CheckRecord("psi-times-transfer", _verdict(fc.residual, args.tol), {"residual": fc.residual}, args.tol))
    if t.exact:
        deg = max(t.core_degree, t.nilpotency)
        phi = char_fn(t, deg)
        ft = factor_through_universal(phi, args.m, deg, pts[: min(len(pts), 10)])
        res = {"reconstruction": ft.reconstruction_residual, "contractivity": ft.contractivity,
               "kernel_min_eig": ft.positivity_min_eig}
        rep.records.append(CheckRecord("factor-through-universal", _verdict(ft.reconstruction_residual, args.tol),
                                       res, args.tol, "verdict uses the reconstruction residual"))
    else:
        rep.records.append(CheckRecord("factor-through-universal", "inconclusive", {}, None,
                                       "tuple is not nilpotent; Phi_T is not a polynomial"))
    _emit(rep.to_csv() if args.format == "csv" else rep.to_json(), args.output)
    return rep.exit_code


def cmd_relate(args) -> int:
    T = load_tuple(args.tuple)
    m1, m2 = args.m1, args.m2 if args.m2 is not None else args.m
    N = auto_degree(T, m2) if args.degree is None else args.degree
    pts = sample_points(T.n, args.samples, args.seed)
    t1, t2 = build_triple(T, m1, N), build_triple(T, m2, N)
    rel = relate_transfer_functions(T, m1, m2, t1, t2, pts)
    rep = Report({"m1": m1, "m2": m2, "N": N, "seed": args.seed, "samples": args.samples, "tol": args.tol})
    res = {"residual": rel.residual, "Y_isometry": rel.y_isometry_defect, "X_unitarity": rel.x_unitarity_defect,
           "C_gram": rel.range_defect_C, "B_gram": rel.range_defect_B}
    rep.records.append(CheckRecord("relate", _verdict(rel.residual, args.tol), res, args.tol))
    rep.records.append(CheckRecord("row-characteristic", _verdict(verify_m1_reduction(T, pts), 1e-10),
                                   {"residual": verify_m1_reduction(T, pts)}, 1e-10))
    if args.dump:
        d = Path(args.dump)
        d.mkdir(parents=True, exist_ok=True)
        np.save(d / "Y.npy", rel.Y)
        np.save(d / "X.npy", rel.X)
    _emit(rep.to_csv() if args.format == "csv" else rep.to_json(), args.output)
    return rep.exit_code


def cmd_grid(args) -> int:
    T = load_tuple(args.tuple) if args.tuple else None
    n = T.n if T is not None else args.n
    pts = grid_points(n, args.radius, args.points, args.grid, args.angles)
    _emit(grid_eval(args.object, pts, T, args.m, args.degree, args.r), args.output)
    return EXIT_PASS


def cmd_gen_corpus(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for mem in generate_corpus(args.seed):
        meta = {"name": mem.name, "family": mem.family, "seed": mem.seed, "nilpotent": mem.nilpotent}
        save_tuple(mem.tuple, out / f"{mem.name}.json", meta)
        manifest.append(meta | {"file": f"{mem.name}.json"})
    (out / "manifest.json").write_text(json.dumps({"seed": args.seed, "members": manifest}, indent=2) + "\n")
    sys.stdout.write(f"wrote {len(manifest)} tuples to {out}\n")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=int, default=2, help="hypercontraction order (default 2)")
    common.add_argument("--degree", type=int, default=None, help="truncation degree N")
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=25)
    common.add_argument("--dump", default=None, help="directory for intermediate matrices (.npy)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", default=None, help="write to a file instead of stdout")

    p = argparse.ArgumentParser(prog="hypercontraction", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="run the check suite")
    s.add_argument("tuple")
    s.add_argument("--checks", default=None, help=f"comma-separated subset of {','.join(CHECK_ORDER)}")
    s.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identity)")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("triple", parents=[common], help="build a characteristic triple")
    s.add_argument("tuple")
    s.set_defaults(func=cmd_triple)

    s = sub.add_parser("charfn", parents=[common], help="evaluate the characteristic function (CSV)")
    s.add_argument("tuple")
    s.add_argument("--z", action="append", help="point as comma-separated complex numbers, e.g. 0.1+0.2j,0.3")
    s.set_defaults(func=cmd_charfn)

    s = sub.add_parser("factor", parents=[common], help="factorization through the universal multiplier")
    s.add_argument("tuple")
    s.set_defaults(func=cmd_factor)

    s = sub.add_parser("relate", parents=[common], help="relate transfer functions of two orders")
    s.add_argument("tuple")
    s.add_argument("--m1", type=int, default=1)
    s.add_argument("--m2", type=int, default=None, help="defaults to --m")
    s.set_defaults(func=cmd_relate)

    s = sub.add_parser("grid", parents=[common], help="tabulate charfn, transfer or psi on a grid (CSV)")
    s.add_argument("tuple", nargs="?", default=None)
    s.add_argument("--object", choices=("charfn", "transfer", "psi"), default="charfn")
    s.add_argument("--grid", choices=("radial", "polar"), default="radial")
    s.add_argument("--radius", type=float, default=0.9)
    s.add_argument("--points", type=int, default=5)
    s.add_argument("--angles", type=int, default=8)
    s.add_argument("--n", type=int, default=1, help="number of variables when no tuple is given")
    s.add_argument("--r", type=int, default=1, help="fiber dimension for psi")
    s.set_defaults(func=cmd_grid)

    s = sub.add_parser("gen-corpus", parents=[common], help="write the test corpus as tuple documents")
    s.add_argument("--out", default="corpus")
    s.set_defaults(func=cmd_gen_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.m < 1:
        sys.stderr.write("error: --m must be at least 1\n")
        return EXIT_INPUT
    try:
        return args.func(args)
    except (TupleDocumentError, OSError, TripleConstructionError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
