"""Config-driven command line runner for the torus pipeline.

Subcommands: solve, herman, cohomology, diophantine, arithmetics,
verify.  All outputs are machine-readable JSON/CSV; for a fixed config
and seed the artifacts are byte-identical across runs (timestamps go to
the run-metadata file only).

Exit codes: 0 success, 2 config error, 3 numerical divergence,
4 property failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__, arithmetics, kolmogorov, maps, newton, serialize
from .errors import ConfigError, ResonanceError, SpectralError
from .fourier import FourierSeries, verify_hadamard
from .jets import ActionJet

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PROPERTY = 4


# -- config handling ---------------------------------------------------------

CONFIG_SCHEMA = {
    "problem": {
        "n": int,
        "N": int,
        "d": int,
        "alpha": list,
        "tau": float,
        "k_max": int,
        "c": float,
        "quadratic": list,
        "beta_offset": list,
        "perturbation": {
            "family": str,
            "epsilon": float,
            "coefficients": list,
        },
    },
    "widths": {"s": float, "sigma": float},
    "schedule": {"max_iter": int, "defect_floor": float},
    "outer": {"tol_outer": float, "R_max": float},
    "verification": {"T": float, "samples": int, "ode_tol": float},
    "arithmetics": {
        "delta": str,
        "sigma": float,
        "j_max": int,
        "criterion_c": float,
        "criterion_exponent": float,
        "ell_max": int,
    },
    "seed": int,
    "output": {"dir": str, "formats": list},
}


def _check_keys(data, schema, path=""):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a table at '{path or '<root>'}'")
    for key, val in data.items():
        here = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key '{here}'")
        spec = schema[key]
        if isinstance(spec, dict):
            _check_keys(val, spec, here)
        elif spec is float:
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"'{here}' must be a number")
        elif not isinstance(val, spec) or isinstance(val, bool) is not (
                spec is bool):
            raise ConfigError(f"'{here}' must be {spec.__name__}")


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    _check_keys(data, CONFIG_SCHEMA)
    for section in ("widths", "schedule", "outer", "verification"):
        for key, val in data.get(section, {}).items():
            if val <= 0:
                raise ConfigError(f"'{section}.{key}' must be positive")
    prob = data.get("problem", {})
    n = prob.get("n", 2)
    big_n = prob.get("N", 32)
    d = prob.get("d", 2)
    if n * (2 * big_n + 1) ** n * (d + 1) ** n > 5e7:
        raise ConfigError("problem size exceeds the resource cap")
    return data


def build_problem(cfg):
    """Hamiltonian jet and frequency data from the problem section."""
    prob = cfg.get("problem", {})
    n = prob.get("n", 2)
    big_n = prob.get("N", 32)
    d = prob.get("d", 2)
    alpha = np.asarray(prob.get("alpha", [1.0, (1.0 + np.sqrt(5.0)) / 2.0]),
                       dtype=float)
    if alpha.size != n:
        raise ConfigError("problem.alpha length must equal problem.n")
    tau = float(prob.get("tau", n))
    k_max = prob.get("k_max", 50)
    q = prob.get("quadratic")
    q = 0.5 * np.eye(n) if q is None else np.asarray(q, dtype=float)
    c = float(prob.get("c", 0.0))
    h = ActionJet.normal_form(n, big_n, d, c, alpha, q)

    pert = prob.get("perturbation")
    if pert:
        if ("family" in pert) == ("coefficients" in pert):
            raise ConfigError(
                "perturbation needs exactly one of family/coefficients")
        if "family" in pert:
            eps = float(pert.get("epsilon", 1e-3))
            if pert["family"] == "cosine_pair":
                entries = {(1,) + (0,) * (n - 1): 0.5 * eps,
                           (-1,) + (0,) * (n - 1): 0.5 * eps,
                           (1, 1) + (0,) * (n - 2): 0.5 * eps,
                           (-1, -1) + (0,) * (n - 2): 0.5 * eps}
                f = FourierSeries.from_dict(n, big_n, entries, real_flag=True)
                h = h.replace(
                    {(0,) * n: h.component((0,) * n) + f})
            else:
                raise ConfigError(
                    f"unknown perturbation family '{pert['family']}'")
        else:
            comps = {}
            for e in pert["coefficients"]:
                m = tuple(int(v) for v in e["m"])
                k = tuple(int(v) for v in e["k"])
                f = comps.setdefault(m, {})
                f[k] = complex(float(e["re"]), float(e.get("im", 0.0)))
            updates = {}
            for m, entries in comps.items():
                f = FourierSeries.from_dict(n, big_n, entries)
                updates[m] = h.component(m) + f.hermitized()
            h = h.replace(updates)
    beta0 = prob.get("beta_offset")
    if beta0 is not None:
        beta0 = np.asarray(beta0, dtype=float)
        h = h + ActionJet.linear_in_r(n, big_n, d, beta0)
    return h, alpha, tau, k_max


def make_schedule(cfg):
    widths = cfg.get("widths", {})
    sched = cfg.get("schedule", {})
    return newton.NewtonSchedule(
        s=float(widths.get("s", 0.1)),
        sigma=float(widths.get("sigma", 0.1)),
        max_iter=int(sched.get("max_iter", 12)),
        defect_floor=float(sched.get("defect_floor", 1e-11)))


# -- output helpers ----------------------------------------------------------


def atomic_write(path, text):
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_metadata(outdir, args):
    meta = {
        "version": __version__,
        "timestamp": datetime.datetime.now(
            datetime.timezone.utc).isoformat(),
        "command": args.command,
        "seed": args.seed,
        "threads": args.threads,
    }
    atomic_write(os.path.join(outdir, "run_metadata.json"), dump_json(meta))


def emit_error(stage, code, message):
    sys.stdout.write(dump_json(
        {"error": {"stage": stage, "code": code, "message": message}}))


# -- subcommands -------------------------------------------------------------


def cmd_solve(cfg, args):
    h, alpha, tau, k_max = build_problem(cfg)
    arithmetics.FrequencyVector.certify(alpha, tau, k_max)  # resonance gate
    outer = cfg.get("outer", {})
    result = kolmogorov.solve_invariant_torus(
        h, alpha, schedule=make_schedule(cfg),
        tol_outer=float(outer.get("tol_outer", 1e-10)),
        r_max=float(outer.get("R_max", 0.1)))
    ver = cfg.get("verification", {})
    report = kolmogorov.verify_invariance(
        result, h, t_span=float(ver.get("T", 10.0)),
        samples=int(ver.get("samples", 64)),
        ode_tol=float(ver.get("ode_tol", 1e-12)))

    outdir = args.out
    payload = {
        "R_star": [float(v) for v in result.r_star],
        "beta": [float(v) for v in result.beta],
        "outer_iterations": result.outer_iterations,
        "embedding": {
            "phi_inv": {"v": [serialize.series_to_dict(f)
                              for f in result.psi.v]},
            "r": [serialize.series_to_dict(f)
                  for f in result.r_embedding],
        },
        "verification": {
            "T": report.time_span,
            "samples": report.samples,
            "max_dev": report.max_deviation,
            "rms_dev": report.rms_deviation,
            "energy_drift": report.max_energy_drift,
        },
    }
    atomic_write(os.path.join(outdir, "torus_result.json"),
                 dump_json(payload))
    for i, trace in enumerate(result.traces):
        atomic_write(os.path.join(outdir, f"newton_trace_{i}.csv"),
                     trace.to_csv())
    # defect-vs-iteration plot data across all inner runs
    lines = ["run,k,defect"]
    for i, trace in enumerate(result.traces):
        for rec in trace.records:
            lines.append(f"{i},{rec.k},{rec.defect!r}")
    atomic_write(os.path.join(outdir, "defects.csv"),
                 "\n".join(lines) + "\n")
    # embedding samples for plotting
    theta_axis = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
    mesh = np.meshgrid(*([theta_axis] * h.dim), indexing="ij")
    theta = np.stack([g.ravel() for g in mesh], axis=-1)
    ang, act = result.embedding_points(theta)
    n = h.dim
    cols = [f"theta_{j+1}" for j in range(n)] + \
        [f"Theta_{j+1}" for j in range(n)] + [f"r_{j+1}" for j in range(n)]
    rows = [",".join(cols)]
    for i in range(theta.shape[0]):
        vals = list(theta[i]) + list(ang[i]) + list(act[i])
        rows.append(",".join(repr(float(v)) for v in vals))
    atomic_write(os.path.join(outdir, "embedding_samples.csv"),
                 "\n".join(rows) + "\n")
    write_metadata(outdir, args)
    return EXIT_OK


def cmd_herman(cfg, args):
    h, alpha, tau, k_max = build_problem(cfg)
    arithmetics.FrequencyVector.certify(alpha, tau, k_max)
    schedule = make_schedule(cfg)
    k0, beta0 = newton.normal_form_projection(h, alpha)
    x0 = newton.TwistedConjugacy.initial(k0, alpha, beta=beta0)
    x, trace = newton.run_newton(h, x0, schedule)
    outdir = args.out
    payload = {
        "beta": [float(v) for v in x.beta],
        "c": x.c,
        "K": serialize.jet_to_dict(x.K),
        "G": serialize.symplectomorphism_to_dict(x.G),
        "final_defect": trace.final_defect,
        "iterations": len(trace.records),
    }
    atomic_write(os.path.join(outdir, "conjugacy.json"), dump_json(payload))
    atomic_write(os.path.join(outdir, "newton_trace.csv"), trace.to_csv())
    write_metadata(outdir, args)
    return EXIT_OK


def cmd_diophantine(cfg, args):
    prob = cfg.get("problem", {})
    alpha = np.asarray(prob.get("alpha",
                                [1.0, (1.0 + np.sqrt(5.0)) / 2.0]),
                       dtype=float)
    tau = float(prob.get("tau", alpha.size))
    k_max = int(prob.get("k_max", 50))
    report = arithmetics.diophantine_constant(alpha, tau, k_max)
    payload = report.to_dict()
    payload["alpha"] = [float(v) for v in alpha]
    payload["tau"] = tau
    atomic_write(os.path.join(args.out, "diophantine.json"),
                 dump_json(payload))
    write_metadata(args.out, args)
    return EXIT_OK


def cmd_cohomology(cfg, args):
    prob = cfg.get("problem", {})
    n = prob.get("n", 2)
    big_n = prob.get("N", 32)
    alpha = np.asarray(prob.get("alpha",
                                [1.0, (1.0 + np.sqrt(5.0)) / 2.0]),
                       dtype=float)
    tau = float(prob.get("tau", n))
    k_max = int(prob.get("k_max", 50))
    widths = cfg.get("widths", {})
    s = float(widths.get("s", 0.3))
    sigma = float(widths.get("sigma", 0.2))
    freq = arithmetics.FrequencyVector.certify(alpha, tau, k_max)
    rng = np.random.default_rng(args.seed)
    rows = ["case,residual,f_norm_s,g_norm_wide,bound,ok"]
    worst = 0.0
    ok_all = True
    for case in range(20):
        g = FourierSeries.random(n, big_n, rng, scale=1.0,
                                 decay=0.3).hermitized()
        g = g - g.average()
        f = arithmetics.solve_cohomological(g, freq)
        resid = (f.lie_derivative(alpha) - g).majorant_norm(0.0)
        rel = resid / g.majorant_norm(0.0)
        worst = max(worst, rel)
        fs = f.majorant_norm(s)
        gw = g.majorant_norm(s + sigma)
        bound = arithmetics.cohomological_bound(n, tau, freq.gamma,
                                                sigma) * gw
        ok = fs <= bound
        ok_all = ok_all and ok
        rows.append(f"{case},{rel!r},{fs!r},{gw!r},{bound!r},{int(ok)}")
    atomic_write(os.path.join(args.out, "cohomology.csv"),
                 "\n".join(rows) + "\n")
    atomic_write(os.path.join(args.out, "cohomology.json"), dump_json(
        {"cases": 20, "worst_relative_residual": worst,
         "bound_satisfied": ok_all, "gamma": freq.gamma}))
    write_metadata(args.out, args)
    return EXIT_OK if ok_all else EXIT_PROPERTY


def cmd_arithmetics(cfg, args):
    arith = cfg.get("arithmetics", {})
    name = arith.get("delta", "diophantine")
    sigma = float(arith.get("sigma", 0.1))
    j_max = int(arith.get("j_max", 20))
    crit_c = float(arith.get("criterion_c", 10.0))
    crit_exp = float(arith.get("criterion_exponent", 0.5))
    ell_max = int(arith.get("ell_max", 200000))
    prob = cfg.get("problem", {})
    alpha = np.asarray(prob.get("alpha",
                                [1.0, (1.0 + np.sqrt(5.0)) / 2.0]),
                       dtype=float)
    n = alpha.size
    tau = float(prob.get("tau", n))
    if name == "one":
        delta = arithmetics.ApproximationFunction.one()
    elif name == "diophantine":
        rep = arithmetics.diophantine_constant(
            alpha, tau, int(prob.get("k_max", 50)))
        if rep.resonant:
            raise ResonanceError("alpha is resonant; no profile exists")
        delta = arithmetics.ApproximationFunction.diophantine(
            rep.gamma, tau, n)
    elif name == "exponential":
        delta = arithmetics.ApproximationFunction(
            func=lambda ell: np.exp(np.asarray(ell, dtype=float)),
            name="exp")
    else:
        raise ConfigError(f"unknown arithmetics.delta '{name}'")
    payload = {"delta": delta.name, "sigma": sigma}
    try:
        lv = arithmetics.laplace_transform(delta, sigma, ell_max)
        payload["laplace"] = {"value": lv.value,
                              "tail_bound": lv.tail_bound
                              if np.isfinite(lv.tail_bound) else None,
                              "certified": lv.certified}
    except arithmetics.DivergenceError as exc:
        payload["laplace"] = {"diverged": True, "message": str(exc)}
    crit = arithmetics.check_convergence_criterion(
        delta, crit_c, crit_exp, j_max, ell_max)
    payload["criterion"] = crit.to_dict()
    atomic_write(os.path.join(args.out, "arithmetics.json"),
                 dump_json(payload))
    write_metadata(args.out, args)
    return EXIT_OK


def _verify_suite(cfg, seed):
    """Deterministic fast property checks; returns list of (name, ok, info)."""
    rng = np.random.default_rng(seed)
    results = []
    n, big_n = 2, 16
    alpha = np.array([1.0, (1.0 + np.sqrt(5.0)) / 2.0])

    # cohomological round trip
    worst = 0.0
    for _ in range(20):
        g = FourierSeries.random(n, big_n, rng, scale=1.0,
                                 decay=0.4).hermitized()
        g = g - g.average()
        f = arithmetics.solve_cohomological(g, alpha)
        worst = max(worst, (f.lie_derivative(alpha) - g).majorant_norm(0.0)
                    / g.majorant_norm(0.0))
    results.append(("cohomology_round_trip", worst <= 1e-10, worst))

    # torus map inversion certificate
    s, sigma = 0.2, 0.1
    worst_inv = 0.0
    ok_inv = True
    for _ in range(10):
        v = []
        for _j in range(n):
            f = FourierSeries.random(n, 4, rng, scale=1.0,
                                     decay=1.5).hermitized()
            f = f - f.average()
            cert = f.majorant_norm(s + 2 * sigma)
            f = f * (0.8 * sigma / cert)
            v.append(f)
        phi = maps.TorusMap(v)
        inv = maps.invert_torus_map(phi, order=3 * 4)
        cert = maps.inversion_certificate(phi, s, sigma)
        wnorm = inv.psi.displacement_norm(s)
        ok_inv = ok_inv and cert.certified and wnorm <= cert.w_bound \
            and inv.composition_residual <= 1e-10
        worst_inv = max(worst_inv, inv.composition_residual)
    results.append(("torus_map_inversion", ok_inv, worst_inv))

    # interpolation inequality
    ok_had = True
    worst_slack = 0.0
    for _ in range(20):
        f = FourierSeries.random(n, 8, rng, scale=1.0,
                                 decay=0.7).hermitized()
        rep = verify_hadamard(f, 0.2, 0.1)
        ok_had = ok_had and rep.ok
        worst_slack = min(worst_slack, rep.slack)
    results.append(("interpolation_inequality", ok_had, worst_slack))

    # Poisson bracket antisymmetry + Jacobi identity
    def rnd_jet():
        comps = {}
        for m in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]:
            comps[m] = FourierSeries.random(n, 3, rng, scale=0.5,
                                            decay=1.0).hermitized()
        return ActionJet(n, 3, 2, comps)

    a, b, c = rnd_jet(), rnd_jet(), rnd_jet()
    anti = (a.poisson_bracket(b, order=9, degree=4)
            + b.poisson_bracket(a, order=9, degree=4)).max_abs_coeff()
    jac = (a.poisson_bracket(b.poisson_bracket(c, order=9, degree=4),
                             order=18, degree=6)
           + b.poisson_bracket(c.poisson_bracket(a, order=9, degree=4),
                               order=18, degree=6)
           + c.poisson_bracket(a.poisson_bracket(b, order=9, degree=4),
                               order=18, degree=6)).max_abs_coeff()
    results.append(("bracket_antisymmetry", anti <= 1e-12, anti))
    results.append(("bracket_jacobi", jac <= 1e-10, jac))
    return results


def cmd_verify(cfg, args):
    results = _verify_suite(cfg, args.seed)
    ok = all(r[1] for r in results)
    payload = {
        "seed": args.seed,
        "passed": ok,
        "checks": [{"name": name, "passed": bool(p), "metric": float(m)}
                   for name, p, m in results],
    }
    atomic_write(os.path.join(args.out, "verify_report.json"),
                 dump_json(payload))
    write_metadata(args.out, args)
    return EXIT_OK if ok else EXIT_PROPERTY


# -- entry point -------------------------------------------------------------


COMMANDS = {
    "solve": cmd_solve,
    "herman": cmd_herman,
    "cohomology": cmd_cohomology,
    "diophantine": cmd_diophantine,
    "arithmetics": cmd_arithmetics,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="kamtori",
        description="Invariant torus construction and verification")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None,
                        help="path to a JSON experiment config")
    parser.add_argument("--out", default="out",
                        help="output directory for artifacts")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--threads", type=int, default=1,
                        help="recorded in metadata; computation is "
                             "single-threaded per run")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config) if args.config else {}
    except ConfigError as exc:
        emit_error("config", EXIT_CONFIG, str(exc))
        return EXIT_CONFIG

    try:
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        emit_error(args.command, EXIT_CONFIG, str(exc))
        return EXIT_CONFIG
    except SpectralError as exc:
        emit_error(args.command, EXIT_NUMERICAL, str(exc))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
