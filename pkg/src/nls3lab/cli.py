"""Config-driven command-line runner.

Exit status: 0 when every asserted invariant holds, 1 on an invariant failure,
2 on a configuration error, 3 on a runtime, capacity or I/O error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, RunConfig, load_config, parse_config
from .dynamics import (EquationKind, conjugation_defect, conserved_arrays, evolve, to_physical_rep)
from .errors import ConfigError, LabError
from .measure import (MeasureSpec, calibration_rate, invariance_test, ramer_survey, sample_mu,
                      smoothing_diagnostic)
from .normal_form import decompose
from .params import ModelParams
from .parallel import thread_count
from .report import SCHEMA_VERSION, csv_text, dumps, svg_plot
from .resonance import phase_bound_table, phi_expanded_array
from .spectral import (Rep, SpectralState, analytic_state, cubic_terms_direct, cubic_terms_fft, make_state,
                       random_state, read_snapshot, single_mode, snapshot_text, sobolev_norm,
                       sobolev_norm_array)

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class Outputs:
    """Files are staged in memory and written by a single writer at the end of a run."""

    def __init__(self):
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def flush(self, root: Path) -> list[str]:
        root.mkdir(parents=True, exist_ok=True)
        for name in sorted(self.files):
            path = root / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.files[name], encoding="utf-8")
        return sorted(self.files)


def model_params(cfg: RunConfig) -> ModelParams:
    return ModelParams(beta=cfg["beta"], s=cfg["s"], sigma=cfg.get("sigma"), epsilon=cfg["epsilon"])


def initial_state(cfg: RunConfig, params: ModelParams, N: int, index: int = 0) -> SpectralState:
    init = cfg.get("init", "random")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(index,)))
    if init == "random":
        return random_state(N, rng, cfg["decay"], cfg["norm"])
    if init == "analytic":
        return analytic_state(N, rng, cfg["decay"], cfg["norm"])
    if init == "mu":
        return sample_mu(MeasureSpec(params.s, N, cfg.seed, index + 1), index)
    if init == "single":
        return single_mode(N, cfg["mode"], cfg["amplitude"])
    return read_snapshot(cfg["init_file"]).replace(rep=Rep.U, time=0.0)


def _header(cfg: RunConfig, params: ModelParams | None) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "version": __version__, "command": cfg.command,
           "config": cfg.describe(), "seed": cfg.seed}
    if params is not None:
        out["params"] = params.describe()
    return out


def _csv_comments(cfg: RunConfig) -> dict:
    return {"command": cfg.command, "config": cfg.describe(), "seed": cfg.seed, "version": __version__}


# ---------------------------------------------------------------------------
# commands; each returns (results, invariants) and stages its files


def cmd_simulate(cfg: RunConfig, out: Outputs):
    params = model_params(cfg)
    kind = EquationKind(cfg["kind"])
    u0 = initial_state(cfg, params, cfg["N"])
    if cfg.get("init") == "file":
        u0 = read_snapshot(cfg["init_file"])
        if u0.rep is not Rep.U:
            raise LabError("initial-state files for simulate must hold rep 'u' data")
    N = u0.N
    start = u0.replace(rep={EquationKind.ORIGINAL: Rep.U, EquationKind.RENORMALIZED: Rep.U_GAUGED,
                            EquationKind.V_FORM: Rep.V, EquationKind.W_FORM: Rep.W}[kind], time=0.0)
    traj = evolve(kind, start, cfg["t_final"], cfg["dt"], params, cfg["snapshot_stride"])
    phys = to_physical_rep(kind, traj.coeffs, traj.times, params.beta)
    M, H = conserved_arrays(phys, params.beta)
    h0 = sobolev_norm_array(phys, 0.0)
    hs = sobolev_norm_array(phys, params.sigma)
    mass_drift = float(np.max(np.abs(M - M[0])))
    energy_drift = float(np.max(np.abs(H - H[0])) / max(abs(H[0]), 1e-300))
    rows = zip(traj.times, M, H, h0, hs)
    out.add("trajectory.csv", csv_text(["t", "mass", "hamiltonian", "norm_H0", "norm_Hsigma"], rows,
                                       _csv_comments(cfg)))
    for k, st in enumerate(traj.states):
        out.add(f"snapshots/snap_{k:05d}.txt", snapshot_text(st))
    out.add("norms.svg", svg_plot({"H^0": (traj.times, h0), "H^sigma": (traj.times, hs)},
                                  f"{kind.value}, N={N}", "t", "norm"))
    results = {"N": N, "kind": kind.value, "steps_dt": traj.dt, "snapshots": len(traj.times),
               "mass_initial": M[0], "hamiltonian_initial": H[0],
               "mass_drift": mass_drift, "hamiltonian_relative_drift": energy_drift}
    inv = {"mass_conserved": mass_drift <= cfg["mass_tol"], "hamiltonian_conserved": energy_drift <= cfg["energy_tol"]}
    return results, inv, params


def cmd_resonance_scan(cfg: RunConfig, out: Outputs):
    params = ModelParams(beta=cfg["beta"], s=cfg["s"], sigma=cfg.get("sigma"), epsilon=cfg["epsilon"])
    N, c = cfg["N"], cfg["c"]
    tab = phase_bound_table(N, params.beta, c)
    expanded = phi_expanded_array(tab["n"], tab["n1"], tab["n2"], tab["n3"], params.beta)
    scale = np.maximum(np.abs(expanded), 1.0)
    fact_err = float(np.max(np.abs(tab["phi"] - expanded) / scale)) if tab["n"].size else 0.0
    case = np.where(tab["case_i"] & tab["case_ii"], "both",
                    np.where(tab["case_i"], "i", np.where(tab["case_ii"], "ii", "none")))
    rows = zip(tab["n"], tab["n1"], tab["n2"], tab["n3"], tab["phi"], tab["lam"], tab["Lam"], case)
    out.add("resonance_scan.csv", csv_text(["n", "n1", "n2", "n3", "phi", "lambda", "Lambda", "case"], rows,
                                           _csv_comments(cfg)))
    best = float(np.min(np.maximum(tab["ratio_i"], tab["ratio_ii"]))) if tab["n"].size else float("inf")
    violations = int(np.sum(case == "none"))
    results = {"N": N, "c": c, "tuples": int(tab["n"].size), "factorization_max_rel_error": fact_err,
               "best_constant": best, "violations": violations,
               "case_counts": {k: int(np.sum(case == k)) for k in ("i", "ii", "both", "none")}}
    inv = {"factorization": fact_err <= 1e-9, "dichotomy": violations == 0}
    return results, inv, params


def cmd_normal_form(cfg: RunConfig, out: Outputs):
    params = model_params(cfg)
    N, t, dt, tol = cfg["N"], cfg["t"], cfg["dt"], cfg["tol"]
    u0 = initial_state(cfg, params, N)
    sides = ("v", "w") if cfg["side"] == "both" else (cfg["side"],)
    results, inv, rows = {"N": N, "t": t, "dt": dt}, {}, []
    for side in sides:
        kind = EquationKind.V_FORM if side == "v" else EquationKind.W_FORM
        traj, terms = decompose(kind, u0, t, dt, params)
        K = traj.coeffs[-1] - traj.coeffs[0]
        if side == "v":
            named = terms.terms()
            residuals = {"N0": terms.residual}
            split = terms.nonres_integral.coeffs + terms.resonant_integral.coeffs
        else:
            named = dict(terms.terms)
            residuals = {"N1": terms.residual_N1, "N2": terms.residual_N2}
            split = terms.nonres_integral_1.coeffs + terms.nonres_integral_2.coeffs
        consistency = float(np.sqrt(np.sum(np.abs(K - split) ** 2)))
        norms = {k: sobolev_norm(v, params.sigma) for k, v in named.items()}
        results[side] = {"term_norms": norms, "residuals": residuals, "remainder_consistency": consistency}
        rows += [(side, k, v) for k, v in sorted(norms.items())]
        for k, r in residuals.items():
            inv[f"{side}_residual_{k}"] = r <= tol
        inv[f"{side}_remainder_consistency"] = consistency <= 1e-7
    out.add("term_norms.csv", csv_text(["side", "term", "norm_Hsigma"], rows, _csv_comments(cfg)))
    return results, inv, params


def cmd_measure(cfg: RunConfig, out: Outputs):
    params = model_params(cfg)
    spec = MeasureSpec(params.s, cfg["N"], cfg.seed, cfg["count"])
    alpha = cfg["alpha"]
    results, inv, rows = {"N": spec.N, "count": spec.count, "alpha": alpha, "maps": {}}, {}, []
    for name in cfg["maps"]:
        rep = invariance_test(name, cfg["t"], spec, alpha, params.beta)
        results["maps"][name] = {"tests": rep.n_tests, "corrected_alpha": rep.corrected_alpha,
                                 "rejections": rep.rejections, "raw_rejections": rep.raw_rejections,
                                 "warnings": list(rep.warnings)}
        rows += [(name,) + r for r in rep.rows()]
        inv[f"invariance_{name}"] = rep.rejections == 0
    if cfg["calibration_runs"] > 0:
        rej, tests = calibration_rate(spec, alpha, cfg["calibration_runs"])
        rate = rej / tests
        results["calibration"] = {"runs": cfg["calibration_runs"], "rejections": rej, "tests": tests, "rate": rate}
        inv["calibration_rate"] = alpha / 2 <= rate <= 2 * alpha
    out.add("ks_tests.csv", csv_text(["map", "n", "component", "statistic", "pvalue"], rows, _csv_comments(cfg)))
    return results, inv, params


def cmd_smoothing(cfg: RunConfig, out: Outputs):
    params = model_params(cfg)
    N_list = cfg["N_list"]
    spec = MeasureSpec(params.s, N_list[0], cfg.seed, cfg["count"])
    rep = smoothing_diagnostic(cfg["j"], cfg["t"], params, N_list, spec, n_nodes=cfg["nodes"])
    names = list(rep.norms)
    out.add("smoothing.csv", csv_text(["N", "sample"] + [f"norm_{k}" for k in names] + [f"bound_{k}" for k in names],
                                      rep.rows(), _csv_comments(cfg)))
    q = {k: rep.quantile(k) for k in names}
    out.add("smoothing.svg", svg_plot({f"q95 {k}": (N_list, q[k]) for k in names},
                                      f"K_{cfg['j']} target norms, t={cfg['t']}", "N", "0.95-quantile"))
    results = {"j": cfg["j"], "targets": rep.targets, "N_list": list(N_list),
               "quantile_95": {k: q[k] for k in names},
               "ratio_quantiles": {k: {str(a): b for a, b in v.items()} for k, v in rep.ratio_quantiles().items()}}
    inv = {f"trend_{k}": rep.trend_ok(k, cfg["slack"]) for k in names}
    return results, inv, params


def cmd_ramer(cfg: RunConfig, out: Outputs):
    params = model_params(cfg)
    N_list = cfg["N_list"]
    spec = MeasureSpec(params.s, N_list[0], cfg.seed, cfg["count"])
    survey = ramer_survey(spec, cfg["t"], cfg["j"], params, N_list, cfg["fd_step"])
    rows = [(N, i, r.hs_norm, r.min_singular_value, r.richardson_defect)
            for N, reps in survey.items() for i, r in enumerate(reps)]
    out.add("ramer.csv", csv_text(["N", "sample", "hs_norm", "min_singular_value", "richardson_defect"], rows,
                                  _csv_comments(cfg)))
    mean_hs = [float(np.mean([r.hs_norm for r in survey[N]])) for N in N_list]
    min_sv = float(min(r.min_singular_value for reps in survey.values() for r in reps))
    spread = max(mean_hs) / min(mean_hs) if min(mean_hs) > 0 else float("inf")
    results = {"j": cfg["j"], "t": cfg["t"], "N_list": list(N_list), "mean_hs_norm": mean_hs,
               "hs_spread": spread, "min_singular_value": min_sv}
    inv = {"hs_bounded": spread <= 1 + cfg["slack"], "invertible": min_sv >= cfg["min_sv"]}
    return results, inv, params


def cmd_verify_all(cfg: RunConfig, out: Outputs):
    """Quick aggregate of the modules' own oracles."""
    params = model_params(cfg)
    N, count = cfg["N"], cfg["count"]
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    checks = {}
    states = [random_state(N, rng, 1.0, 1.0) for _ in range(count)]
    checks["fft_vs_direct"] = max(
        float(np.max(np.abs(cubic_terms_fft(u).coeffs - cubic_terms_direct(u, "all").coeffs))) for u in states)
    tab = phase_bound_table(N, params.beta)
    expanded = phi_expanded_array(tab["n"], tab["n1"], tab["n2"], tab["n3"], params.beta)
    checks["factorization"] = float(np.max(np.abs(tab["phi"] - expanded) / np.maximum(np.abs(expanded), 1.0)))
    U = np.stack([analytic_state(N, rng, 1.0, 1.0).coeffs for _ in range(count)])
    traj_M, traj_H = [], []
    for u in U:
        tr = evolve(EquationKind.ORIGINAL, make_state(N, u), 1.0, 1e-3, params, 100)
        M, H = conserved_arrays(tr.coeffs, params.beta)
        traj_M.append(float(np.max(np.abs(M - M[0]))))
        traj_H.append(float(np.max(np.abs(H - H[0])) / abs(H[0])))
    checks["mass_drift"] = max(traj_M)
    checks["hamiltonian_drift"] = max(traj_H)
    Ur = np.stack([random_state(N, rng, 1.5, 1.5).coeffs for _ in range(count)])
    for kind in (EquationKind.RENORMALIZED, EquationKind.V_FORM, EquationKind.W_FORM):
        checks[f"conjugation_{kind.value}"] = float(np.max(conjugation_defect(kind, Ur, 0.5, 2.5e-4, params)))
    res_v, res_w = [], []
    for u in states:
        _, tv = decompose(EquationKind.V_FORM, u, 0.1, 5e-4, params)
        _, tw = decompose(EquationKind.W_FORM, u, 0.1, 5e-4, params)
        res_v.append(tv.residual)
        res_w.append(max(tw.residual_N1, tw.residual_N2))
    checks["normal_form_v"] = max(res_v)
    checks["normal_form_w"] = max(res_w)
    limits = {"fft_vs_direct": 1e-11, "factorization": 1e-9, "mass_drift": 1e-8, "hamiltonian_drift": 1e-6,
              "conjugation_renormalized": 1e-8, "conjugation_v_form": 1e-8, "conjugation_w_form": 1e-8,
              "normal_form_v": 1e-6, "normal_form_w": 1e-6}
    rows = [(k, checks[k], limits[k], checks[k] <= limits[k]) for k in limits]
    out.add("verify_all.csv", csv_text(["check", "value", "limit", "passed"], rows, _csv_comments(cfg)))
    return {"checks": checks, "limits": limits}, {k: checks[k] <= limits[k] for k in limits}, params


COMMAND_FUNCS = {
    "simulate": cmd_simulate,
    "resonance-scan": cmd_resonance_scan,
    "normal-form": cmd_normal_form,
    "measure": cmd_measure,
    "smoothing": cmd_smoothing,
    "ramer": cmd_ramer,
    "verify-all": cmd_verify_all,
}


def _error_payload(exc: BaseException, code: int, cfg: RunConfig | None) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "version": __version__, "exit_code": code,
           "error_type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        out["problems"] = exc.problems
    if cfg is not None:
        out.update(command=cfg.command, config=cfg.describe(), seed=cfg.seed)
    return out


def run(cfg: RunConfig) -> int:
    """Execute one configured command and write its outputs; returns the exit status."""
    outputs = Outputs()
    t0 = time.perf_counter()
    try:
        results, invariants, params = COMMAND_FUNCS[cfg.command](cfg, outputs)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG, cfg)
    except (LabError, ArithmeticError, ValueError, OSError, MemoryError) as exc:
        return _fail(exc, EXIT_RUNTIME, cfg)
    passed = all(bool(v) for v in invariants.values())
    report = _header(cfg, params)
    report.update(results=results, invariants=invariants, passed=passed)
    outputs.add("report.json", dumps(report))
    run_info = {"wall_clock_seconds": round(time.perf_counter() - t0, 6), "threads": thread_count(),
                "version": __version__, "command": cfg.command, "seed": cfg.seed}
    try:
        outputs.flush(cfg.output)
        (cfg.output / "run_info.json").write_text(dumps(run_info), encoding="utf-8")
    except OSError as exc:
        return _fail(exc, EXIT_RUNTIME, None)
    return EXIT_OK if passed else EXIT_INVARIANT


def _fail(exc: BaseException, code: int, cfg: RunConfig | None) -> int:
    payload = dumps(_error_payload(exc, code, cfg))
    sys.stderr.write(payload)
    if cfg is not None:
        try:
            cfg.output.mkdir(parents=True, exist_ok=True)
            (cfg.output / "error.json").write_text(payload, encoding="utf-8")
        except OSError:
            pass
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nls3lab", description="Third-order NLS gauge, normal-form and measure lab.")
    p.add_argument("command", nargs="?", choices=COMMANDS, help="subcommand (overrides the config file)")
    p.add_argument("settings", nargs="*", metavar="key=value", help="configuration overrides")
    p.add_argument("-c", "--config", help="key = value configuration file")
    p.add_argument("-o", "--output", help="output directory (created if missing)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides, problems = {}, []
    for item in args.settings:
        if "=" not in item:
            problems.append(f"override {item!r} is not key=value")
            continue
        k, v = (x.strip() for x in item.split("=", 1))
        overrides[k] = v
    if args.command:
        overrides["command"] = args.command
    if args.output:
        overrides["output"] = args.output
    try:
        if problems:
            raise ConfigError(problems)
        cfg = load_config(args.config, overrides) if args.config else parse_config("", overrides)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG, None)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
