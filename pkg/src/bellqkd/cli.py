"""Command-line front end: analyze, filter, simulate, and sweep.

Exit codes are a stable contract: 0 success, 1 invalid state, 2
non-filterable (X-pattern) normal form, 64 usage or input-parse error.
JSON floats carry 9 significant digits, CSV cells 6, so output files
diff cleanly across runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import filtering, metrics, protocol_sim, states

EXIT_OK = 0
EXIT_INVALID_STATE = 1
EXIT_XFORM = 2
EXIT_USAGE = 64

SWEEP_COLUMNS = ["alpha", "mu", "lam_sq_sum", "lam_sum", "region",
                 "filterable", "p_succ", "lam_sq_sum_after",
                 "lam_sum_after", "r_filtered"]


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; contract wants 64
        raise _CliError(EXIT_USAGE, message)


def _sig9(x: float) -> float:
    return float(f"{float(x):.9g}") + 0.0  # + 0.0 drops negative zero


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _sig9(obj)
    return obj


def _emit(doc: dict) -> None:
    print(json.dumps(_jsonify(doc), indent=2))


def _c2x2(f: np.ndarray):
    # complex entries as [re, im]
    return [[[float(f[i, j].real), float(f[i, j].imag)] for j in range(2)]
            for i in range(2)]


def _load_state(path: str) -> states.TwoQubitState:
    try:
        return states.load_state_file(path)
    except states.StateFileError as e:
        raise _CliError(EXIT_USAGE, f"malformed state file: {e}")


def _validated(path: str) -> states.TwoQubitState:
    st = _load_state(path)
    rep = states.validate(st)
    if not rep.ok:
        raise _CliError(EXIT_INVALID_STATE,
                        "invalid state: " + "; ".join(rep.failures))
    return st


def _summary_doc(ms: filtering.MetricsSummary) -> dict:
    return {
        "spectrum": list(ms.spectrum.lambdas),
        "s_max": ms.s_max,
        "q": ms.q,
        "r_min": ms.r_min,
        "distillable": ms.distillable,
        "region": ms.region.value,
    }


def _cmd_analyze(args) -> int:
    st = _validated(args.state_file)
    rep = states.validate(st)
    spec = metrics.correlation_spectrum(st)
    try:
        s = metrics.optimal_chsh_settings(spec)
        settings = {"a0": s.a0, "a1": s.a1, "b0": s.b0, "b1": s.b1}
    except ValueError:  # zero correlation block has no preferred settings
        settings = None
    q2 = metrics.qber(spec, 2)
    km = metrics.key_rate_symmetric(q2)
    ent = filtering.entanglement_report(st)
    _emit({
        "spectrum": list(spec.lambdas),
        "s_max": metrics.chsh_max(spec),
        "optimal_settings": settings,
        "q_L2": q2,
        "q_L3": metrics.qber(spec, 3),
        "r_min": km.r_min,
        "region": metrics.classify(spec).value,
        "concurrence": ent.concurrence,
        "eof": ent.eof,
        "validity": {
            "hermitian": rep.hermitian,
            "trace_dev": rep.trace_dev,
            "min_eig": rep.min_eig,
            "ok": rep.ok,
        },
    })
    return EXIT_OK


def _cmd_filter(args) -> int:
    st = _validated(args.state_file)
    try:
        out = filtering.filtered_key_rate(st)
    except filtering.TrivialNormalFormError as e:
        raise _CliError(EXIT_INVALID_STATE, str(e))
    except filtering.XFormError as e:
        _emit({
            "kind": "XForm",
            "xform_params": {"a": e.a, "b": e.b, "c": e.c, "d": e.d},
            "separable": e.separable,
            "message": str(e),
        })
        return EXIT_XFORM
    _emit({
        "kind": "Diagonal",
        "before": _summary_doc(out.before),
        "after": _summary_doc(out.after),
        "filters": {"m1": _c2x2(out.filters.m1), "n1": _c2x2(out.filters.n1)},
        "p_succ": out.p_succ,
        "r_filtered": out.r_filtered,
    })
    return EXIT_OK


def _cmd_simulate(args) -> int:
    st = _validated(args.state_file)
    try:
        cfg = protocol_sim.SimConfig(
            rounds=args.rounds, seed=args.seed,
            with_filtering=args.with_filtering,
            chsh_test_fraction=args.chsh_fraction)
    except ValueError as e:
        raise _CliError(EXIT_USAGE, str(e))
    try:
        rep = protocol_sim.run_protocol(st, cfg)
    except filtering.XFormError as e:
        raise _CliError(EXIT_XFORM, str(e))
    except filtering.TrivialNormalFormError as e:
        raise _CliError(EXIT_INVALID_STATE, str(e))
    except ValueError as e:  # zero sifted rounds
        raise _CliError(EXIT_INVALID_STATE, str(e))
    _emit({
        "rounds_total": rep.rounds_total,
        "rounds_filter_accepted": rep.rounds_filter_accepted,
        "rounds_sifted": rep.rounds_sifted,
        "key_bits": rep.key_bits,
        "q_emp": rep.q_emp,
        "s_emp": rep.s_emp,
        "accept_rate": rep.accept_rate,
        "q_analytic": rep.q_analytic,
        "s_analytic": rep.s_analytic,
        "p_succ_analytic": rep.p_succ_analytic,
    })
    return EXIT_OK


def _parse_range(text: str, lo: float, hi: float) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise _CliError(EXIT_USAGE, f"range must be start:stop:count, got {text!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
        n = int(parts[2])
    except ValueError:
        raise _CliError(EXIT_USAGE, f"range must be start:stop:count, got {text!r}")
    if n < 1 or not (lo <= a <= b <= hi):
        raise _CliError(EXIT_USAGE,
                        f"range {text!r} outside [{lo:g}, {hi:g}] or empty")
    return np.linspace(a, b, n)


def _csv_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    return f"{float(x):.6g}"


def _cmd_sweep(args) -> int:
    alphas = _parse_range(args.alpha, 0.0, 1.0)
    mus = _parse_range(args.mu, 0.0, 1.0)
    rows = []
    for al in alphas:
        for mu in mus:
            try:
                st = states.make_family(
                    states.FamilySpec(variant="gisin", alpha=float(al),
                                      mu=float(mu)))
            except states.StateFileError as e:
                raise _CliError(EXIT_USAGE, f"range outside family domain: {e}")
            spec = metrics.correlation_spectrum(st)
            lam = spec.lambdas
            row = {
                "alpha": float(al),
                "mu": float(mu),
                "lam_sq_sum": float(lam[0] ** 2 + lam[1] ** 2),
                "lam_sum": float(lam[0] + lam[1]),
                "region": metrics.classify(spec).value,
            }
            try:
                out = filtering.filtered_key_rate(st)
                la = out.after.spectrum.lambdas
                row.update(filterable=True, p_succ=out.p_succ,
                           lam_sq_sum_after=float(la[0] ** 2 + la[1] ** 2),
                           lam_sum_after=float(la[0] + la[1]),
                           r_filtered=out.r_filtered)
            except (filtering.XFormError, filtering.TrivialNormalFormError):
                row.update(filterable=False, p_succ=None,
                           lam_sq_sum_after=None, lam_sum_after=None,
                           r_filtered=0.0)
            rows.append(row)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_csv_cell(row[c]) for c in SWEEP_COLUMNS])
    return EXIT_OK


def _build_parser() -> _Parser:
    p = _Parser(prog="bellqkd",
                description="Two-qubit Bell-violation, filtering and QKD "
                            "analysis toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="metrics report for a state file")
    pa.add_argument("state_file")
    pa.set_defaults(func=_cmd_analyze)

    pf = sub.add_parser("filter", help="optimal local filtering report")
    pf.add_argument("state_file")
    pf.set_defaults(func=_cmd_filter)

    ps = sub.add_parser("simulate", help="seeded protocol Monte Carlo")
    ps.add_argument("state_file")
    ps.add_argument("--rounds", type=int, required=True)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--with-filtering", action="store_true")
    ps.add_argument("--chsh-fraction", type=float, default=0.1)
    ps.set_defaults(func=_cmd_simulate)

    pw = sub.add_parser("sweep", help="family grid sweep to CSV")
    pw.add_argument("--family", choices=["gisin"], required=True)
    pw.add_argument("--alpha", required=True, metavar="A0:A1:N")
    pw.add_argument("--mu", required=True, metavar="M0:M1:N")
    pw.add_argument("--out", required=True)
    pw.set_defaults(func=_cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _CliError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
