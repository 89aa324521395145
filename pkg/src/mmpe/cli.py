"""Command-line front end: curve sweeps, figure-data reproduction, verification.

All output is CSV (RFC-4180 quoting, '.' decimal separator, 12 significant
digits).  Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, engine, estimators, infometrics, model, verify
from .model import DEFAULT_SEED

__all__ = ["main", "PRESETS"]

PRESETS = {
    "gaussian": lambda n=1: model.ScalarGaussian(1.0) if n == 1 else model.VectorGaussian(n, 1.0),
    "bpsk": lambda n=1: model.bpsk(),
    "pam4": lambda n=1: model.pam4(),
    "asym_pair": lambda n=1: model.asym_pair(),
    "pmone_vector": lambda n=1: model.pmone_vector(n),
}

CURVE_HEADER = ["dist_id", "n", "snr", "p", "method", "value", "stderr", "seed"]
BOUNDS_HEADER = ["name", "snr", "p", "n", "bound", "direction", "truth", "margin"]

FIGURE_HEADERS = {
    "fig1a": ["p", "classical_residual"],
    "fig1b": ["p", "avg_bias"],
    "fig2": ["alpha", "q", "true_mmpe_q", "bound_via_high_estimator",
             "bound_via_low_estimator", "bound_mid_estimator", "conjecture"],
    "fig3": ["snr", "n_points", "entropy_bits", "exact_mi_bits", "shaping_loss_bits",
             "gap_original_bits", "gap_p2_bits", "gap_p4_bits", "gap_p6_bits"],
    "fig4a": ["snr", "lmmse_ceiling", "scpp_tail", "interpolated_bound", "additive_bound"],
    "fig4b": ["n", "snr", "lmmse_ceiling", "interpolated_bound", "additive_bound"],
}


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path: str | None, header: list[str], rows: list[list]) -> None:
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if path:
            out.close()


def _parse_grid(text: str) -> list[float]:
    """a:step:b ranges (inclusive ends) or comma-separated values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be a:step:b, got {text!r}")
        a, step, b = (float(v) for v in parts)
        if step <= 0 or b < a:
            raise ValueError(f"bad range {text!r}")
        count = int(round((b - a) / step))
        vals = [a + i * step for i in range(count + 1)]
        if vals[-1] > b + 1e-12:
            vals.pop()
        return vals
    return [float(v) for v in text.split(",") if v.strip()]


def _load_dist_file(path: str) -> model.InputDistribution:
    text = Path(path).read_text().strip()
    if text.startswith("{"):
        spec = json.loads(text)
    else:
        spec = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            try:
                spec[key.strip()] = json.loads(val.strip())
            except json.JSONDecodeError:
                spec[key.strip()] = val.strip()
    return model.build_distribution(spec)


def _resolve_dist(args) -> tuple[str, model.InputDistribution]:
    if args.dist_file:
        return Path(args.dist_file).stem, _load_dist_file(args.dist_file)
    preset = args.preset or "gaussian"
    if preset not in PRESETS:
        names = ", ".join(sorted(PRESETS))
        raise UsageError(f"unknown preset {preset!r}; available presets: {names}")
    return preset, PRESETS[preset](args.n)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# curve


def _cmd_curve(args) -> int:
    dist_id, dist = _resolve_dist(args)
    snrs = _parse_grid(args.snr)
    ps = _parse_grid(args.p)
    if not snrs or not ps:
        raise UsageError("snr and p grids must be nonempty")
    n = model.dimension(dist)
    rows = []
    for p in ps:
        for snr in snrs:
            est = engine.evaluate_mmpe(
                dist, snr, p, samples=args.samples if n > 1 else None, seed=args.seed
            )
            rows.append([dist_id, n, snr, p, est.method, est.value, est.stderr, args.seed])
    _write_csv(args.out, CURVE_HEADER, rows)

    if args.bounds:
        bound_rows = []
        snr0 = min(snrs)
        for p in ps:
            anchor = engine.evaluate_mmpe(dist, snr0, p, seed=args.seed).value
            beta = None
            try:
                beta = bounds.scpp_beta_from_value(anchor, snr0, p, n)
            except ValueError:
                pass
            for snr in snrs:
                reps = bounds.trivial_bounds(dist, snr, p)
                reps.append(
                    bounds.gaussian_hardest(bounds.hardest_sigma2_for(dist, p), snr, p, n)
                )
                if isinstance(dist, model.DiscreteAtoms):
                    reps.extend(
                        bounds.discrete_input_bound(
                            model.distance_stats(dist), dist.probs, snr, p, n
                        )
                    )
                if beta is not None and snr >= snr0:
                    reps.append(bounds.scpp_bound(beta, snr0, snr, p, n))
                truth = engine.evaluate_mmpe(dist, snr, p, seed=args.seed).value
                for rep in reps:
                    rep.truth = truth
                    bound_rows.append(
                        [rep.name, snr, p, n, rep.bound, rep.direction, truth, rep.margin()]
                    )
        bpath = args.bounds_out or (
            str(Path(args.out).with_suffix("")) + "_bounds.csv" if args.out else None
        )
        _write_csv(bpath, BOUNDS_HEADER, bound_rows)
    return 0


# ---------------------------------------------------------------------------
# figures


def _fig1a_rows() -> list[list]:
    dist, snr = model.bpsk(), 1.0
    rows = []
    for p in np.arange(1.05, 4.0001, 0.05):
        res = engine.diagnostics_residuals(dist, snr, float(p), g_family={"y": lambda y: y})
        rows.append([float(p), res["classical"]["y"]])
    return rows


def _fig1b_rows() -> list[list]:
    dist, snr = model.asym_pair(), 1.0
    rows = []
    for p in np.arange(1.1, 4.0001, 0.1):
        res = engine.diagnostics_residuals(dist, snr, float(p), g_family={"1": lambda y: 1.0})
        rows.append([float(p), res["bias"]])
    return rows


def _fig2_rows() -> list[list]:
    dist, snr, p, r = model.bpsk(), 1.0, 2.0, 8.0
    m_p = engine.mmpe_scalar(dist, snr, p).value
    m_r = engine.mmpe_scalar(dist, snr, r).value
    f_r = estimators.PointwiseMmpeEstimator(r)
    f_p = estimators.PointwiseMmpeEstimator(p)
    f_mid = estimators.PointwiseMmpeEstimator(0.5 * (p + r))
    cross_rp = engine.p_error_of(f_r, dist, snr, p)
    cross_pr = engine.p_error_of(f_p, dist, snr, r)
    mid_p = engine.p_error_of(f_mid, dist, snr, p)
    mid_r = engine.p_error_of(f_mid, dist, snr, r)
    rows = []
    for alpha in np.arange(0.05, 0.9501, 0.05):
        ab = 1.0 - alpha
        q = 1.0 / (alpha / p + ab / r)
        truth = engine.mmpe_scalar(dist, snr, q).value
        combine = lambda tp, tr: (tp ** (alpha / p) * tr ** (ab / r)) ** q
        rows.append([
            float(alpha), q, truth,
            combine(cross_rp, m_r), combine(m_p, cross_pr),
            combine(mid_p, mid_r), combine(m_p, m_r),
        ])
    return rows


def _fig3_rows(snr_grid=None) -> list[list]:
    rows = []
    for snr in (snr_grid if snr_grid is not None else np.arange(3.0, 25.01, 1.0)):
        snr = float(snr)
        n_pts = int(math.floor(math.sqrt(1.0 + snr)))
        if n_pts < 2:
            continue
        dist = model.pam(n_pts, unit_power=True)
        h = infometrics.atom_entropy_bits(dist)
        mi = infometrics.mutual_information_scalar(dist, snr)
        orig = infometrics.ow_gap_original(dist, snr, use_mmse=False)
        gaps = {
            p: infometrics.ow_gap_generalized(dist, snr, p).gap_bits for p in (2.0, 4.0, 6.0)
        }
        rows.append([
            snr, n_pts, h, mi, infometrics.SHAPING_LOSS_BITS,
            orig.gap_bits, gaps[2.0], gaps[4.0], gaps[6.0],
        ])
    return rows


def _fig4a_rows() -> list[list]:
    snr0, beta, n = 5.0, 0.01, 1
    rows = []
    for snr in np.arange(0.25, 5.0001, 0.25):
        snr = float(snr)
        rows.append([
            snr,
            1.0 / (1.0 + snr),
            beta / (1.0 + beta * snr),
            bounds.mn_bound_thm3(beta, snr, snr0, n).bound,
            bounds.mn_prior_bound(beta, snr, snr0, n).bound,
        ])
    return rows


def _fig4b_rows() -> list[list]:
    snr0, beta = 5.0, 0.05
    rows = []
    for n in (1, 10, 40, 160):
        for snr in np.arange(0.25, 5.0001, 0.25):
            snr = float(snr)
            rows.append([
                n, snr,
                1.0 / (1.0 + snr),
                bounds.mn_bound_thm3(beta, snr, snr0, n).bound,
                bounds.mn_prior_bound(beta, snr, snr0, n).bound,
            ])
    return rows


_FIGURES = {
    "fig1a": _fig1a_rows,
    "fig1b": _fig1b_rows,
    "fig2": _fig2_rows,
    "fig3": _fig3_rows,
    "fig4a": _fig4a_rows,
    "fig4b": _fig4b_rows,
}


def _cmd_figure(args) -> int:
    if args.id not in _FIGURES:
        raise UsageError(
            f"unknown figure {args.id!r}; available: {', '.join(sorted(_FIGURES))}"
        )
    rows = _FIGURES[args.id]()
    _write_csv(args.out, FIGURE_HEADERS[args.id], rows)
    return 0


# ---------------------------------------------------------------------------
# verify


def _cmd_verify(args) -> int:
    results = verify.run_suite(args.suite, emit=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mmpe",
        description="Minimum mean p-th error curves, paper-figure data, and verification.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    cur = sub.add_parser("curve", help="p-th error over an (snr, p) grid")
    cur.add_argument("--preset", help=f"one of: {', '.join(sorted(PRESETS))}")
    cur.add_argument("--dist-file", help="distribution spec file (JSON or key=value)")
    cur.add_argument("--snr", required=True, help="a:step:b range or comma list")
    cur.add_argument("--p", required=True, help="comma list (or a:step:b) of orders")
    cur.add_argument("--n", type=int, default=1, help="input dimension for presets")
    cur.add_argument("--seed", type=int, default=DEFAULT_SEED)
    cur.add_argument("--samples", type=int, default=engine.MC_DEFAULT_SAMPLES)
    cur.add_argument("--out", help="output CSV path (stdout if omitted)")
    cur.add_argument("--bounds", action="store_true",
                     help="also emit the applicable bound reports")
    cur.add_argument("--bounds-out", help="bound-report CSV path")
    cur.set_defaults(func=_cmd_curve)

    fig = sub.add_parser("figure", help="emit the data series behind a named figure")
    fig.add_argument("id", help=f"one of: {', '.join(sorted(_FIGURES))}")
    fig.add_argument("--out", help="output CSV path (stdout if omitted)")
    fig.set_defaults(func=_cmd_figure)

    ver = sub.add_parser("verify", help="run the numeric invariant suite")
    ver.add_argument("suite", nargs="?", default="fast", choices=["fast", "full"])
    ver.set_defaults(func=_cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
