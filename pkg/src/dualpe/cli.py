"""Command-line front end: moment scans, gap scans, ring Monte-Carlo, verification.

Every scan writes a CSV plus a JSON sidecar carrying the schema version and
the complete configuration, so a run is reproducible from its artifacts
alone. Data rows never hide how they were produced: the method column names
the route (enumeration, transfer, sampling) chosen for each point.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .dual_chain import extract_W, verify_duality, verify_isometry
from .ensembles import (
    MOMENT_DIM_LIMIT,
    delta_from_moment,
    delta_k,
    exact_moment_transfer,
    moment,
    projected_ensemble_direct,
    projected_ensemble_dual,
    sampled_ensemble,
)
from .kicked_ising import KickedIsingParams, is_exceptional
from .linalg import proportional_up_to_phase
from .pbc import extract_W_pbc, pbc_mc_scan, verify_pbc_duality
from .structure import (
    cluster_relation_check,
    last_site_factor,
    lemma3_scan,
    rotation_decompose,
    theta1,
    v_p,
    w1_w2,
)
from .transfer import spectrum, transfer_matrix, verify_fixed_space

SCHEMA_VERSION = 1
_TRANSFER_DIM_BUDGET = 2**14


@dataclass
class RunConfig:
    """Everything needed to reproduce one CLI run."""

    command: str
    params: dict
    out: str | None
    seed: int
    threads: int


def parse_angle(text: str) -> float:
    """Angle in radians; accepts plain floats and 'pi' fractions like '3pi/8'.

    The fraction syntax evaluates as coefficient * pi / denominator in a
    single rounding step, so exceptional points like pi/4 classify exactly.
    """
    text = text.strip().replace(" ", "").replace("*", "")
    m = re.fullmatch(r"([+-]?\d*\.?\d*)pi(?:/(\d+))?", text)
    if m:
        coef = float(m.group(1)) if m.group(1) not in ("", "+", "-") else float(m.group(1) + "1")
        den = int(m.group(2)) if m.group(2) else 1
        return coef * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}") from None


def parse_angle_ratio(text: str) -> Fraction:
    """Angle as an exact rational multiple of pi; grid flags require this form.

    Grids built from these ratios place points like pi/4 exactly (the ratio
    arithmetic is rational; pi multiplies once at the end).
    """
    text = text.strip().replace(" ", "").replace("*", "")
    if text in ("0", "0.0"):
        return Fraction(0)
    m = re.fullmatch(r"([+-]?\d*)pi(?:/(\d+))?", text)
    if not m:
        raise argparse.ArgumentTypeError(
            f"grid angle {text!r} must be an exact pi fraction such as pi/200 or 0"
        )
    coef = int(m.group(1)) if m.group(1) not in ("", "+", "-") else int(m.group(1) + "1")
    den = int(m.group(2)) if m.group(2) else 1
    return Fraction(coef, den)


def parse_int_list(text: str) -> list[int]:
    """Comma list with ranges: '1-3,5' -> [1, 2, 3, 5]."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part.lstrip("-"):
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty integer list")
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header: list[str], rows: list[list]) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_sidecar(out_path: str, config: RunConfig, columns: list[str]) -> None:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "command": config.command,
        "config": asdict(config),
        "columns": columns,
    }
    with open(out_path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _choose_method(n_a: int, t: int, n_b: int, k: int) -> str:
    """Cheapest exact route for one scan point, sampling as the last resort."""
    if k == 1:
        return "transfer"
    if n_b <= 12:
        return "enumeration"
    if t <= n_a and (1 << (2 * t * k)) <= _TRANSFER_DIM_BUDGET:
        return "transfer"
    return "sampling"


def _design_point(n_a, t, n_b, k_list, g, samples, seed, boundary):
    """All requested k for one (t, n_b); sampled ensembles are shared across k."""
    results = []
    if boundary == "periodic":
        params = KickedIsingParams(n_sites=n_a + n_b, g=g, boundary="periodic")
        ensemble = projected_ensemble_direct(params, t, n_a)
        for k in k_list:
            results.append((k, delta_k(ensemble, k), "enumeration_ring", None))
        return results
    methods = {k: _choose_method(n_a, t, n_b, k) for k in k_list}
    w = extract_W(n_a, t, g)
    enum_ensemble = None
    sample_ensemble = None
    for k in k_list:
        method = methods[k]
        if method == "transfer":
            delta = delta_from_moment(exact_moment_transfer(n_a, t, g, n_b, k, w=w))
            results.append((k, delta, method, None))
        elif method == "enumeration":
            if enum_ensemble is None:
                enum_ensemble = projected_ensemble_dual(n_a, t, g, n_b, w=w)
            results.append((k, delta_k(enum_ensemble, k), method, None))
        else:
            if sample_ensemble is None:
                sample_ensemble = sampled_ensemble(n_a, t, g, n_b, samples, seed)
            results.append((k, delta_k(sample_ensemble, k), method, samples))
    return results


def cmd_design_scan(args) -> int:
    g = args.g
    k_list = args.k
    if (1 << (args.na * max(k_list))) > MOMENT_DIM_LIMIT:
        print(
            f"error: moment dimension 2^(n_a k) = 2^{args.na * max(k_list)} "
            f"exceeds the budget {MOMENT_DIM_LIMIT}",
            file=sys.stderr,
        )
        return 2
    if args.boundary == "periodic" and args.na + max(args.nb) > 24:
        print("error: periodic enumeration limited to n_a + n_b <= 24 sites", file=sys.stderr)
        return 2
    points = []
    if args.boundary == "open":
        # Panel 1: depth scan at a fixed large n_b, exact in the transfer
        # picture (or sampled where no exact route fits the budget).
        points.extend(("t", t, t, args.steps) for t in args.t)
    points.extend(("n_b", nb, args.na, nb) for nb in args.nb)

    def task(point):
        _, _, t, n_b = point
        return _design_point(args.na, t, n_b, k_list, g, args.samples, args.seed, args.boundary)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            outputs = list(pool.map(task, points))
    else:
        outputs = [task(p) for p in points]

    header = ["scan_index", "panel", "n_a", "t", "n_b", "k", "g", "delta", "method", "samples", "seed"]
    rows = []
    for (panel, _, t, n_b), result in zip(points, outputs):
        for k, delta, method, used_samples in result:
            rows.append(
                [len(rows), panel, args.na, t, n_b, k, g, delta, method,
                 used_samples, args.seed if used_samples else None]
            )
    _write_csv(args.out, header, rows)
    _write_sidecar(args.out, _config_from(args, "design-scan"), header)
    print(f"{len(rows)} rows -> {args.out}")
    return 0


def cmd_gap_scan(args) -> int:
    if (1 << (2 * args.t[0] * args.k[0])) > _TRANSFER_DIM_BUDGET:
        print(
            f"error: transfer dimension 4^(t k) exceeds {_TRANSFER_DIM_BUDGET} "
            f"at t={args.t[0]}, k={args.k[0]}",
            file=sys.stderr,
        )
        return 2
    t, k = args.t[0], args.k[0]
    if args.gstep <= 0 or args.gmax < args.gmin:
        print("error: need gstep > 0 and gmax >= gmin", file=sys.stderr)
        return 2
    ratios = []
    r = args.gmin
    while r <= args.gmax:
        ratios.append(r)
        r = r + args.gstep

    def task(ratio):
        g = math.pi * float(ratio)
        return spectrum(transfer_matrix(t, k, g), k, g=g)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            spectra = list(pool.map(task, ratios))
    else:
        spectra = [task(r) for r in ratios]

    header = ["scan_index", "t", "k", "g", "g_ratio", "gap", "gap_below_unimodular",
              "unimodular_count", "method"]
    rows = [
        [i, t, k, sp.g, str(ratio), sp.gap, sp.gap_below_unimodular,
         sp.unimodular_count, "transfer_block"]
        for i, (ratio, sp) in enumerate(zip(ratios, spectra))
    ]
    _write_csv(args.out, header, rows)
    _write_sidecar(args.out, _config_from(args, "gap-scan"), header)
    print(f"{len(rows)} rows -> {args.out}")
    return 0


def cmd_pbc_mc(args) -> int:
    if max(args.t) > 3:
        print("error: ring extraction limited to t <= 3", file=sys.stderr)
        return 2
    if (1 << (args.na * max(args.k))) > MOMENT_DIM_LIMIT:
        print("error: moment dimension 2^(n_a k) out of budget", file=sys.stderr)
        return 2
    m_list = []
    m = 100
    while m < args.samples:
        m_list.append(m)
        m *= 10
    m_list.append(args.samples)
    maps = {t: extract_W_pbc(args.na, t, args.g) for t in args.t}
    tasks = [(t, k) for t in args.t for k in args.k]

    def task(tk):
        t, k = tk
        return pbc_mc_scan(args.na, t, k, args.g, m_list, args.seed, w=maps[t])

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            outputs = list(pool.map(task, tasks))
    else:
        outputs = [task(tk) for tk in tasks]

    header = ["M", "k", "t", "n_a", "g", "delta", "seed", "method"]
    rows = [
        [r.m, r.k, r.t, r.n_a, r.g, r.delta, r.seed, "haar_mc"]
        for scan in outputs
        for r in scan
    ]
    _write_csv(args.out, header, rows)
    _write_sidecar(args.out, _config_from(args, "pbc-mc"), header)
    print(f"{len(rows)} rows -> {args.out}")
    return 0


def _circular_gap(a: float, b: float) -> float:
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def _verify_checks(g: float, negative_control: bool):
    """The identity suite: (name, parameters, residual_fn, tolerance) records.

    Each residual_fn returns a scalar; the check passes when it stays under
    its tolerance. Checks are independent; one failure never stops the rest.
    """
    g_duality = g + 2e-3 if negative_control else g

    def duality_open_t2():
        return verify_duality(2, 2, g, 5, w=extract_W(2, 2, g_duality))

    def duality_open_t3():
        return verify_duality(2, 3, g, 5)

    def duality_ring():
        return verify_pbc_duality(extract_W_pbc(2, 2, g), 5)

    def isometry():
        return verify_isometry(extract_W(2, 3, g)).deviation

    def fixed_space():
        report = verify_fixed_space(2, 2, g)
        dist = 0.0 if report.projector_distance is None else report.projector_distance
        return max(report.residual_max, dist)

    def transfer_unimodular():
        sp = spectrum(transfer_matrix(2, 2, g), 2, g=g)
        top = sp.eigenvalues[: sp.unimodular_count]
        residual = float(np.abs(np.abs(top) - 1.0).max())
        expected_two = not is_exceptional(g)
        if expected_two != (sp.unimodular_count == 2):
            return 1.0
        return residual

    def lemma_rotations():
        w1, w2 = w1_w2(2, g)
        w1_site, dev1 = last_site_factor(w1)
        w2_site, dev2 = last_site_factor(w2)
        target = np.diag(np.exp(1j * 4 * g * np.array([1.0, -1.0])))
        ok, _ = proportional_up_to_phase(w2_site, target)
        dec = rotation_decompose(w1_site)
        angle_dev = _circular_gap(dec.theta, theta1(g))
        v0_dev = float(np.abs(v_p(0, 2, g) - np.diag([1, -1, 1, -1]).astype(complex)).max())
        return max(dev1, dev2, angle_dev, v0_dev, 0.0 if ok else 1.0)

    def interval_scan():
        return 0.0 if lemma3_scan(10**4) == [1, 4, 6] else 1.0

    def cluster_grids():
        _, f22 = cluster_relation_check(2, 2, g)
        _, f33 = cluster_relation_check(3, 3, g)
        return 1.0 - min(f22, f33)

    return [
        ("duality_open_t2", {"n_a": 2, "t": 2, "n_b": 5, "g": g_duality}, duality_open_t2, 1e-9),
        ("duality_open_t3", {"n_a": 2, "t": 3, "n_b": 5, "g": g}, duality_open_t3, 1e-9),
        ("duality_ring", {"n_a": 2, "t": 2, "n_b": 5, "g": g}, duality_ring, 1e-9),
        ("isometry", {"n_a": 2, "t": 3, "g": g}, isometry, 1e-9),
        ("fixed_space", {"t": 2, "k": 2, "g": g}, fixed_space, 1e-8),
        ("transfer_unimodular", {"t": 2, "k": 2, "g": g}, transfer_unimodular, 1e-8),
        ("lemma_rotations", {"t": 2, "g": g}, lemma_rotations, 1e-10),
        ("interval_scan", {"n_max": 10**4}, interval_scan, 0.5),
        ("cluster_grids", {"grids": [[2, 2], [3, 3]], "g": g}, cluster_grids, 1e-10),
    ]


def cmd_verify(args) -> int:
    records = []
    all_passed = True
    for name, params, fn, tol in _verify_checks(args.g, args.negative_control):
        start = time.perf_counter()
        try:
            residual = float(fn())
            error = None
        except Exception as exc:
            residual = math.inf
            error = f"{type(exc).__name__}: {exc}"
        seconds = time.perf_counter() - start
        passed = residual < tol
        all_passed = all_passed and passed
        record = {
            "name": name,
            "parameters": params,
            "residual": residual,
            "tolerance": tol,
            "passed": passed,
            "seconds": round(seconds, 4),
        }
        if error:
            record["error"] = error
        records.append(record)
        print(f"{'PASS' if passed else 'FAIL'} {name:22s} residual={residual:.3e} ({seconds:.2f}s)")
    report = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "g": args.g,
        "negative_control": args.negative_control,
        "passed": all_passed,
        "checks": records,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"report -> {args.out}")
    return 0 if all_passed else 1


def _config_from(args, command: str) -> RunConfig:
    params = {
        key: (str(val) if isinstance(val, Fraction) else val)
        for key, val in vars(args).items()
        if key not in ("func", "out", "seed", "threads")
    }
    return RunConfig(
        command=command,
        params=params,
        out=args.out,
        seed=getattr(args, "seed", 0),
        threads=getattr(args, "threads", 1),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualpe",
        description="Projected-ensemble scans for the self-dual kicked Ising chain.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    design = sub.add_parser(
        "design-scan",
        help="trace distances from Haar moments versus depth and versus n_b",
    )
    design.add_argument("--na", type=int, default=3, help="subsystem size N_A")
    design.add_argument("--t", type=parse_int_list, default=[1, 2, 3, 4, 5, 6],
                        help="depth grid for the t panel")
    design.add_argument("--nb", type=parse_int_list, default=list(range(1, 13)),
                        help="bath-size grid for the n_b panel (run at t = --na)")
    design.add_argument("--k", type=parse_int_list, default=[1, 2, 3, 4], help="moment orders")
    design.add_argument("--g", type=parse_angle, default=math.pi / 9,
                        help="field angle (accepts pi fractions)")
    design.add_argument("--steps", type=int, default=100,
                        help="fixed n_b for the t panel (transfer steps)")
    design.add_argument("--boundary", choices=["open", "periodic"], default="open",
                        help="periodic enumerates the ring directly; n_b panel only")
    design.add_argument("--samples", type=int, default=20000,
                        help="sample count where no exact route fits")
    design.add_argument("--seed", type=int, default=0)
    design.add_argument("--threads", type=int, default=1)
    design.add_argument("--out", required=True, help="output CSV path")
    design.set_defaults(func=cmd_design_scan)

    gap = sub.add_parser("gap-scan", help="transfer-spectrum gap over a field-angle grid")
    gap.add_argument("--t", type=parse_int_list, default=[3])
    gap.add_argument("--k", type=parse_int_list, default=[2])
    gap.add_argument("--gmin", type=parse_angle_ratio, default=Fraction(0),
                     help="grid start as an exact pi fraction")
    gap.add_argument("--gmax", type=parse_angle_ratio, default=Fraction(1, 2),
                     help="grid end as an exact pi fraction")
    gap.add_argument("--gstep", type=parse_angle_ratio, default=Fraction(1, 200),
                     help="grid step as an exact pi fraction")
    gap.add_argument("--threads", type=int, default=1)
    gap.add_argument("--seed", type=int, default=0)
    gap.add_argument("--out", required=True, help="output CSV path")
    gap.set_defaults(func=cmd_gap_scan)

    verify = sub.add_parser("verify", help="run the identity suite and report JSON")
    verify.add_argument("--g", type=parse_angle, default=math.pi / 9)
    verify.add_argument("--negative-control", action="store_true",
                        help="perturb one sub-check to demonstrate falsifiability")
    verify.add_argument("--out", default=None, help="optional JSON report path")
    verify.set_defaults(func=cmd_verify)

    pbc = sub.add_parser("pbc-mc", help="Haar Monte-Carlo convergence on the ring")
    pbc.add_argument("--na", type=int, default=2)
    pbc.add_argument("--t", type=parse_int_list, default=[1, 2, 3])
    pbc.add_argument("--k", type=parse_int_list, default=[1, 2])
    pbc.add_argument("--g", type=parse_angle, default=math.pi / 9)
    pbc.add_argument("--samples", type=int, default=100000, help="largest sample count")
    pbc.add_argument("--seed", type=int, default=0)
    pbc.add_argument("--threads", type=int, default=1)
    pbc.add_argument("--out", required=True, help="output CSV path")
    pbc.set_defaults(func=cmd_pbc_mc)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
