"""Stage-by-stage verification run with a JSON report and CSV side files."""
from __future__ import annotations

import csv
import json
import math
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

from . import __version__
from .config import RunConfig
from .coupling import certified_compensating, check_genuine_coupling, compensating_inviscid, compensating_viscous
from .decay import GaussianBump, decay_trace, pointwise_bound_check
from .dispersion import DispersionCurve, dispersion_eigenvalues, scan, verify_bound
from .eos import FluidModel, check_hypotheses, evaluate
from .errors import DissipLabError, IoError
from .matrices import SymmetricSystem, SystemMatrices, assemble, symmetrize
from .spectral import char_speeds_eigen, char_speeds_from_thermo, discriminant_forms, strict_hyperbolicity_gap

REPORT_SCHEMA = "dissiplab.report/1"
STAGES = ("hypotheses", "symmetry", "hyperbolicity", "coupling", "compensating", "dissipativity", "decay")
PSD_TOL = 1e-14
# reference windows for the fitted norm slopes; reported, not enforced (the rate is an upper bound)
SLOPE_WINDOWS = {0: (-0.35, -0.15), 1: (-0.90, -0.60)}


@dataclass
class CaseContext:
    name: str
    model: FluidModel
    cfg: RunConfig
    sm: SystemMatrices | None = None
    ss: SymmetricSystem | None = None
    K: Any = None
    curve: DispersionCurve | None = None
    trace: Any = None
    speeds: Any = None
    tables: dict[str, Callable[[Path], None]] = field(default_factory=dict)
    results: dict[str, dict[str, Any]] = field(default_factory=dict)


def _f(x: Any) -> Any:
    """JSON-safe float (non-finite values become strings)."""
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _g(x: float) -> str:
    return format(float(x), ".17g")


# ------------------------------------------------------------------------ stages


def stage_hypotheses(ctx: CaseContext) -> dict[str, Any]:
    h = ctx.cfg.hypotheses
    rep = check_hypotheses(ctx.model, (tuple(h["rho_range"]), tuple(h["theta_range"])), h["n_samples"],
                           ctx.cfg.seed)
    ev = evaluate(ctx.model, ctx.cfg.state.rho, ctx.cfg.state.theta)
    at_state = ev.p > 0 and ev.p_rho > 0 and ev.p_theta > 0 and ev.e_theta > 0 and ev.kappa > 0 and ev.nu >= 0
    out = rep.to_dict()
    out["at_state"] = bool(at_state)
    return {"status": "pass" if rep.passed and at_state else "fail", **out}


def stage_symmetry(ctx: CaseContext) -> dict[str, Any]:
    ctx.sm = assemble(ctx.cfg.state, ctx.model)
    ctx.ss = symmetrize(ctx.sm)
    ss = ctx.ss
    res = ss.symmetry_residuals()
    eig_a0 = float(np.min(np.linalg.eigvalsh(ss.A0h)))
    eig_b = float(np.min(np.linalg.eigvalsh(ss.Bh)))
    eig_l = float(np.min(np.linalg.eigvalsh(ss.L)))
    ok = eig_a0 > 0 and eig_b >= -PSD_TOL and eig_l >= -PSD_TOL
    ctx.tables["matrices"] = _matrices_writer(ctx.sm, ss)
    return {
        "status": "pass" if ok else "fail",
        "residuals": {k: _f(v) for k, v in res.items()},
        "S_diag": [_f(v) for v in np.diag(ss.S)],
        "min_eig_A0h": _f(eig_a0), "min_eig_Bh": _f(eig_b), "min_eig_L": _f(eig_l),
    }


def stage_hyperbolicity(ctx: CaseContext) -> dict[str, Any]:
    U = ctx.cfg.state
    cs = char_speeds_from_thermo(U, ctx.sm.thermo, ctx.sm.tau)
    ctx.speeds = cs
    eig = char_speeds_eigen(ctx.sm)
    diff = float(np.max(np.abs(np.array(cs.zeta) - eig)))
    d_diff, d_sum = discriminant_forms(U.rho, U.theta, ctx.sm.thermo, ctx.sm.tau)
    gap = strict_hyperbolicity_gap(cs)
    tol = ctx.cfg.tolerances["speed_agreement"]
    ok = diff <= tol and gap > 0 and cs.discriminant > 0
    ctx.tables["speeds"] = _speeds_writer(U, cs)
    return {
        "status": "pass" if ok else "fail",
        **{k: (_f(v) if not isinstance(v, list) else [_f(z) for z in v]) for k, v in cs.to_dict().items()},
        "eigen_zeta": [_f(z) for z in eig],
        "oracle_max_abs_diff": _f(diff),
        "discriminant_forms": [_f(d_diff), _f(d_sum)],
        "gap": _f(gap),
    }


def stage_coupling(ctx: CaseContext) -> dict[str, Any]:
    v = check_genuine_coupling(ctx.ss, ctx.cfg.tolerances["coupling"])
    return {"status": "pass" if v.genuinely_coupled else "fail", **v.to_dict(),
            "pencil_eigenvalues": [_f(x) for x in v.eigenvalues]}


def stage_compensating(ctx: CaseContext) -> dict[str, Any]:
    ss, thermo = ctx.ss, ctx.sm.thermo
    out: dict[str, Any] = {}
    if thermo.nu > 0:
        out["viscous_template"] = compensating_viscous(ss, thermo).to_dict()
        ctx.K = certified_compensating(ss, thermo)
    else:
        ctx.K = compensating_inviscid(ss, thermo)
    out["certified"] = ctx.K.to_dict()
    return {"status": "pass" if ctx.K.valid else "fail", **out}


def stage_dissipativity(ctx: CaseContext) -> dict[str, Any]:
    g = ctx.cfg.xi_grid
    curve = scan(ctx.ss, g["xi_min"], g["xi_max"], g["n"], g["spacing"])
    ctx.curve = curve
    ctx.tables["dispersion"] = curve.write_csv
    lam0 = dispersion_eigenvalues(ctx.ss, 0.0)
    out = {k: (_f(v) if isinstance(v, float) else v) for k, v in curve.summary().items()}
    out["xi0_eigenvalues"] = [[_f(z.real), _f(z.imag)] for z in lam0]
    if curve.dissipative and curve.k_sharp > 0:
        bc = verify_bound(curve, curve.k_sharp)
        out["bound"] = {"holds": bc.holds, "min_slack": _f(bc.min_slack), "worst_xi": _f(bc.worst_xi)}
        ok = bc.holds
    else:
        ok = False
    return {"status": "pass" if ok else "fail", **out}


def stage_decay(ctx: CaseContext) -> dict[str, Any]:
    d = ctx.cfg.decay
    data = GaussianBump(tuple(d["amplitude"]), d["width"])
    tr = decay_trace(ctx.ss, ctx.K, data, t_max=d["t_max"], xi_cut=d["xi_cut"], n_xi=d["n_xi"],
                     l_list=d["l_list"], k_sharp=ctx.curve.k_sharp, n_t=d["n_t"], dt=d["dt"],
                     t_check=d["t_check"])
    ctx.trace = tr
    ctx.tables["decay"] = tr.write_csv
    n = d["lattice_n"]
    xis = np.logspace(-2, 2, n)
    ts = np.linspace(0.0, 10.0 * d["t_check"], n)
    violations, worst = 0, 0.0
    for e in np.eye(4):
        pc = pointwise_bound_check(ctx.ss, ctx.curve.k_sharp, xis, ts, lambda x, e=e: np.tile(e, (len(x), 1)))
        violations += pc.violations
        worst = max(worst, pc.worst_ratio)
    summary = tr.summary()
    windows = {f"l{l}": list(SLOPE_WINDOWS[l]) for l in tr.l_list if l in SLOPE_WINDOWS}
    within = {f"l{l}": bool(SLOPE_WINDOWS[l][0] <= tr.fitted_slopes[l] <= SLOPE_WINDOWS[l][1])
              for l in tr.l_list if l in SLOPE_WINDOWS}
    decays = all(tr.fitted_slopes[l] < 0 for l in tr.l_list)
    ok = (tr.energy_residual <= ctx.cfg.tolerances["energy_residual"] and bool(tr.M_monotone)
          and bool(tr.envelope_ok) and violations == 0 and decays)
    return {
        "status": "pass" if ok else "fail",
        **summary,
        "slope_windows": windows,
        "slopes_within_window": within,
        "l1_norm_initial": _f(data.l1_norm),
        "pointwise": {"violations": violations, "worst_ratio": _f(worst), "lattice": [n, n],
                      "C1": _f(math.sqrt(np.linalg.cond(ctx.ss.A0h)))},
    }


STAGE_FUNCS: dict[str, Callable[[CaseContext], dict[str, Any]]] = {
    "hypotheses": stage_hypotheses,
    "symmetry": stage_symmetry,
    "hyperbolicity": stage_hyperbolicity,
    "coupling": stage_coupling,
    "compensating": stage_compensating,
    "dissipativity": stage_dissipativity,
    "decay": stage_decay,
}


# ------------------------------------------------------------------------ tables


def _matrices_writer(sm: SystemMatrices, ss: SymmetricSystem) -> Callable[[Path], None]:
    mats = (("A0", sm.A0), ("A1", sm.A1), ("B", sm.B), ("D", sm.D), ("S", ss.S),
            ("A0h", ss.A0h), ("A1h", ss.A1h), ("Bh", ss.Bh), ("L", ss.L))

    def write(path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["matrix", "row", "c0", "c1", "c2", "c3"])
            for name, M in mats:
                for i, row in enumerate(M):
                    w.writerow([name, i, *(_g(v) for v in row)])
    return write


def _speeds_writer(U, cs) -> Callable[[Path], None]:
    def write(path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rho", "u", "theta", "q", "zeta_1", "zeta_2", "zeta_3", "zeta_4",
                        "c_slow", "c_fast", "discriminant"])
            w.writerow([_g(v) for v in (U.rho, U.u, U.theta, U.q, *cs.zeta, cs.c_slow, cs.c_fast, cs.discriminant)])
    return write


# -------------------------------------------------------------------------- run


def run_case(name: str, model: FluidModel, cfg: RunConfig, stages: tuple[str, ...] = STAGES) -> CaseContext:
    ctx = CaseContext(name, model, cfg)
    failed = None
    for st in STAGES:
        if st not in stages:
            continue
        if failed is not None:
            ctx.results[st] = {"status": "blocked", "blocked_by": failed}
            continue
        try:
            res = STAGE_FUNCS[st](ctx)
        except DissipLabError as exc:
            res = {"status": "fail", "error": type(exc).__name__, "message": str(exc)}
        ctx.results[st] = res
        if res["status"] != "pass":
            failed = st
    return ctx


def stages_through(last: str) -> tuple[str, ...]:
    return STAGES[: STAGES.index(last) + 1]


def provenance(cfg: RunConfig) -> dict[str, Any]:
    return {
        "config_sha256": cfg.sha256(),
        "dissiplab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def run(cfg: RunConfig, stages: tuple[str, ...] = STAGES, output_dir: str | Path | None = None,
        write: bool = True) -> dict[str, Any]:
    """Run the enabled stages for every case and (optionally) write report.json plus CSVs."""
    cases = {name: run_case(name, model, cfg, stages) for name, model in cfg.case_models().items()}
    report: dict[str, Any] = {
        "schema": REPORT_SCHEMA,
        "config": cfg.computational_dict(),
        "stages": [s for s in STAGES if s in stages],
        "cases": {},
    }
    for name, ctx in cases.items():
        ok = all(r["status"] == "pass" for r in ctx.results.values())
        report["cases"][name] = {"overall": "pass" if ok else "fail", "stages": ctx.results}
    report["overall"] = "pass" if all(c["overall"] == "pass" for c in report["cases"].values()) else "fail"
    report["provenance"] = provenance(cfg)
    report["_contexts"] = cases
    if write:
        out = Path(output_dir if output_dir is not None else cfg.output_dir)
        report["files"] = write_outputs(report, out)
    return report


def write_outputs(report: dict[str, Any], out: Path) -> list[str]:
    try:
        out.mkdir(parents=True, exist_ok=True)
        names = []
        for name, ctx in report["_contexts"].items():
            for table, writer in sorted(ctx.tables.items()):
                fname = f"{table}_{name}.csv"
                writer(out / fname)
                names.append(fname)
        names.append("report.json")
        report["files"] = names
        (out / "report.json").write_text(report_json(report), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write outputs to {out}: {exc}") from None
    return names


def json_default(o: Any) -> Any:
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"{type(o).__name__} is not JSON serializable")


def report_json(report: dict[str, Any]) -> str:
    clean = {k: v for k, v in report.items() if not k.startswith("_")}
    return json.dumps(clean, indent=2, sort_keys=True, default=json_default) + "\n"
