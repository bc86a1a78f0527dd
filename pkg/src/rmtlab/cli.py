"""Command-line entry point: ``rmtlab <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 numerical failure (JSON detail on
stderr).  Every JSON output embeds ``version``, ``argv`` and ``seed``.
A ``--config`` JSON file supplies defaults; explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .jsonutil import sanitize
from .errors import (InvalidInputError, NoConvergenceError, PoleProximityError,
                     SecularAnomalyError, SingularCoefficientError, StabilityError,
                     StepFailureError, StructuralError)

NUMERICAL_ERRORS = (NoConvergenceError, PoleProximityError, SecularAnomalyError, StructuralError,
                    StepFailureError, SingularCoefficientError, StabilityError, OverflowError,
                    np.linalg.LinAlgError)


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    format: str = "json"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        d = json.loads(text)
        return cls(d["command"], d.get("params", {}), d.get("seed", 0), d.get("out"),
                   d.get("format", "json"))

    @classmethod
    def from_namespace(cls, ns) -> "ExperimentConfig":
        skip = {"command", "seed", "out", "format", "config", "func"}
        params = {k: v for k, v in vars(ns).items() if k not in skip}
        return cls(ns.command, params, ns.seed, ns.out, ns.format)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# subcommands; each returns (payload, kind) with kind "json" data or "csv" text


def _read_input(path):
    from .ensembles import read_matrix_csv
    with open(path) as fh:
        return read_matrix_csv(fh)


def _skew_from_args(a):
    from .ensembles import (TournamentMatrix, sample_skew_gaussian, sample_skew_pm1,
                            tournament_to_skew)
    if getattr(a, "input", None):
        obj = _read_input(a.input)
        return tournament_to_skew(obj) if isinstance(obj, TournamentMatrix) else obj
    if a.ensemble == "gaussian":
        return sample_skew_gaussian(a.n, a.seed, a.trial)
    return sample_skew_pm1(a.n, a.seed, a.trial)


def cmd_sample(a):
    from .ensembles import (sample_gue, sample_skew_gaussian, sample_skew_pm1, sample_tournament,
                            write_matrix_csv)
    if a.ensemble == "tournament":
        return write_matrix_csv(sample_tournament(a.n, a.seed, a.trial)), "csv"
    if a.ensemble == "pm1":
        return write_matrix_csv(sample_skew_pm1(a.n, a.seed, a.trial)), "csv"
    if a.ensemble == "gaussian":
        return write_matrix_csv(sample_skew_gaussian(a.n, a.seed, a.trial)), "csv"
    H = sample_gue(a.n, a.seed, a.trial)
    return {"n": a.n, "upper": [[float(z.real), float(z.imag)] for z in H.upper]}, "json"


def cmd_spectrum(a):
    from .core_linalg import eigen_skew
    W = _skew_from_args(a)
    sp = eigen_skew(W)
    res = sp.residuals(W)
    if a.format == "csv":
        rows = "".join(f"{int(j)},{float(l)!r}\n" for j, l in zip(sp.labels, sp.eigenvalues))
        return "label,eigenvalue\n" + rows, "csv"
    return {"n": W.n, "labels": sp.labels, "eigenvalues": sp.eigenvalues,
            "max_residual": float(res.max())}, "json"


def cmd_secular(a):
    from .core_linalg import eigen_skew
    from .ensembles import TournamentMatrix, sample_tournament, tournament_to_skew
    from .secular import build_secular, solve_perturbed
    D = _read_input(a.input) if a.input else sample_tournament(a.n, a.seed, a.trial)
    if not isinstance(D, TournamentMatrix):
        raise InvalidInputError("secular needs a tournament matrix")
    sp = eigen_skew(tournament_to_skew(D))
    f = build_secular(sp)
    res = solve_perturbed(f, spec=sp, A=2.0 * D.dense() + np.eye(D.n), polish=not a.no_polish)
    ev = res.eigenvalues_D()
    return {"n": D.n, "poles": sp.eigenvalues, "weights": f.weights, "roots": res.roots,
            "methods": res.methods, "residuals": res.residuals,
            "eigenvalues_D": ev, "failures": res.failures}, "json"


def cmd_interlace(a):
    from .interlacing import run_interlace_experiment
    rep = run_interlace_experiment(a.n, a.trials, a.alpha, a.gaps, a.seed, a.fixed_i,
                                   not a.no_polish, a.jobs)
    if a.format == "csv":
        return rep.to_csv(), "csv"
    return json.loads(rep.to_json(verbose=a.verbose)), "json"


def cmd_gue_interlace(a):
    from .interlacing import run_gue_variant
    rep = run_gue_variant(a.n, a.trials, a.seed, a.alpha, a.gaps, not a.no_polish, a.jobs)
    if a.format == "csv":
        return rep.to_csv(), "csv"
    return json.loads(rep.to_json(verbose=a.verbose)), "json"


def cmd_kernel(a):
    from .gaussian_model import kernel_KN, sine_limit_check
    if a.sine:
        g = np.linspace(-a.window, a.window, a.points)
        U, V = np.meshgrid(g, g, indexing="ij")
        cmp = sine_limit_check(a.N, U, V, a.sine, a.E)
        if a.format == "csv":
            rows = "".join(f"{u!r},{v!r},{k!r},{l!r}\n" for u, v, k, l in
                           zip(cmp.u.tolist(), cmp.v.tolist(), cmp.kernel.tolist(), cmp.limit.tolist()))
            return "u,v,kernel,limit\n" + rows, "csv"
        return cmp.to_dict(), "json"
    g = np.linspace(a.xmin, a.xmax, a.points)
    X, Y = np.meshgrid(g, g, indexing="ij")
    K = kernel_KN(a.N, X, Y)
    if a.format == "csv":
        rows = "".join(f"{x!r},{y!r},{k!r}\n" for x, y, k in
                       zip(X.ravel().tolist(), Y.ravel().tolist(), K.ravel().tolist()))
        return "x,y,value\n" + rows, "csv"
    return {"N": a.N, "grid": g, "values": K}, "json"


def cmd_density(a):
    from .gaussian_model import correlation_det, correlation_prefactor, joint_density_log
    out = {"N": a.N}
    if a.lambdas:
        out["log_density"] = joint_density_log(a.N, _floats(a.lambdas))
    if a.points:
        pts = _floats(a.points)
        out["points"] = pts
        out["determinant"] = correlation_det(a.N, pts, with_prefactor=False)
        out["prefactor"] = correlation_prefactor(a.N, len(pts), a.convention)
        out["correlation"] = correlation_det(a.N, pts, a.convention)
    if len(out) == 1:
        raise InvalidInputError("give --lambdas and/or --points")
    return out, "json"


def _moments(x):
    x = np.asarray(x, dtype=float)
    se = x.std(ddof=1) / np.sqrt(x.size) if x.size > 1 else float("nan")
    return {"mean": float(x.mean()), "se": float(se)}


def cmd_dbm(a):
    from .core_linalg import eigen_skew
    from .dbm import eigenvalue_sde, eigenvalue_sde_batch, matrix_flow
    from .ensembles import sample_skew_gaussian
    from .rng import as_seed
    seed = as_seed(a.seed)
    W0 = sample_skew_gaussian(a.n, seed.child(1), 0)
    lam0 = eigen_skew(W0, vectors=False).positive
    if a.paths == 1:
        path = eigenvalue_sde(lam0, a.t, a.dt, seed.child(2), a.variant, floor=a.floor)
        if a.format == "csv":
            return path.to_csv(), "csv"
        return {"times": path.times, "values": path.values}, "json"
    _, v = eigenvalue_sde_batch(lam0, a.t, a.dt, seed.child(2), a.paths, a.variant,
                                floor=a.floor)
    sde = v[-1]
    mat = []
    for p in range(a.paths):
        Wt = matrix_flow(W0, a.t, a.t, seed.child(3), p, a.variant).snapshots[-1]
        mat.append(eigen_skew(Wt, vectors=False).positive)
    mat = np.array(mat)
    out = {"n": a.n, "t": a.t, "dt": a.dt, "paths": a.paths, "variant": a.variant,
           "initial": lam0}
    for name, arr in (("sde", sde), ("matrix", mat)):
        out[name] = {"sum_sq": _moments((arr ** 2).sum(1)), "max": _moments(arr[:, -1])}
    return out, "json"


def cmd_momentflow(a):
    from .core_linalg import eigen_hermitian, eigen_skew
    from .ensembles import sample_gue, sample_skew_gaussian
    from .moment_flow import FlowState, configurations, convergence_report, moment_table, \
        state_from_spectrum
    if a.mode == "antisymmetric":
        n = 2 * (a.sites - 1) + 1
        sp = eigen_skew(sample_skew_gaussian(n, a.seed, 0))
        q = np.zeros(n)
        q[0] = 1.0
        state = state_from_spectrum(sp, q, a.particles)
    else:
        lam, U = eigen_hermitian(sample_gue(a.sites, a.seed, 0).dense())
        configs = configurations(a.sites, a.particles)
        f = moment_table(configs, U[0, :].conj(), "hermitian", a.sites)
        state = FlowState("hermitian", lam, f, a.particles, a.sites, 0.0, configs)
    rep = convergence_report(state, _floats(a.t_list), a.dt)
    if a.format == "csv":
        return rep.to_csv(), "csv"
    return {"mode": a.mode, "sites": a.sites, "particles": a.particles,
            "configurations": len(state.configs), "times": rep.times,
            "deviations": rep.deviations, "monotone": rep.monotone}, "json"


def cmd_localsc(a):
    from .analysis import local_law_scan, sample_spectra
    E = _floats(a.E)
    eta = a.eta if a.eta else a.n ** -0.5
    spectra = sample_spectra(a.n, a.trials, a.seed, jobs=a.jobs)
    devs = np.array([local_law_scan(s, E, [eta]).deviation[:, 0] for s in spectra])
    bound = a.n ** -0.4
    return {"n": a.n, "trials": a.trials, "E": E, "eta": eta, "bound": bound,
            "fraction_within": float(np.mean(devs <= bound)), "deviations": devs}, "json"


def cmd_rigidity(a):
    from .analysis import rigidity_report, sample_spectra
    rep = rigidity_report(sample_spectra(a.n, a.trials, a.seed, jobs=a.jobs), a.alpha)
    return rep.to_dict(a.exponent), "json"


def cmd_gaps(a):
    from .analysis import gap_statistics
    out = {}
    sizes = {"same": a.n, "minus1": a.n - 1}
    for tag, nb in sizes.items():
        g = gap_statistics(a.ensembles[0], a.ensembles[1], a.n, a.trials, a.index, a.observable,
                           a.seed, n_b=nb, jobs=a.jobs)
        out[tag] = g.to_dict()
    return out, "json"


def cmd_overlap(a):
    from .analysis import overlap_experiment
    return overlap_experiment(a.n, a.trials, seed=a.seed, jobs=a.jobs).to_dict(), "json"


def cmd_minor(a):
    from .analysis import minor_consistency
    return minor_consistency(_skew_from_args(a), seed=a.seed).to_dict(), "json"


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--config", default=None, help="JSON file with default flag values")
    p.add_argument("--jobs", type=int, default=None)


def _matrix_source(p):
    p.add_argument("--n", type=int, default=11)
    p.add_argument("--ensemble", choices=["pm1", "gaussian"], default="pm1")
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--input", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rmtlab", description="Random skew-matrix experiments")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        _common(p)
        p.set_defaults(func=func)
        return p

    p = add("sample", cmd_sample, "draw one matrix")
    p.add_argument("--ensemble", choices=["tournament", "pm1", "gaussian", "gue"], default="tournament")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trial", type=int, default=0)

    _matrix_source(add("spectrum", cmd_spectrum, "eigenvalues of a skew matrix"))

    p = add("secular", cmd_secular, "solve the secular equation for 2D + I")
    p.add_argument("--n", type=int, default=11)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--input", default=None)
    p.add_argument("--no-polish", action="store_true")

    for name, func in (("interlace", cmd_interlace), ("gue-interlace", cmd_gue_interlace)):
        p = add(name, func, "interlacing Monte Carlo")
        p.add_argument("--n", type=int, default=201 if name == "interlace" else 64)
        p.add_argument("--trials", type=int, default=200)
        p.add_argument("--alpha", type=float, default=0.25)
        p.add_argument("--gaps", type=int, default=5)
        p.add_argument("--no-polish", action="store_true")
        p.add_argument("--verbose", action="store_true")
        if name == "interlace":
            p.add_argument("--fixed-i", type=int, default=None)

    p = add("kernel", cmd_kernel, "kernel values or scaling-limit comparison")
    p.add_argument("--N", type=int, default=101)
    p.add_argument("--xmin", type=float, default=-3.0)
    p.add_argument("--xmax", type=float, default=3.0)
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--sine", choices=["origin", "bulk"], default=None)
    p.add_argument("--E", type=float, default=None)
    p.add_argument("--window", type=float, default=2.0)

    p = add("density", cmd_density, "joint density and correlation functions")
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--lambdas", default=None, help="comma-separated positive values")
    p.add_argument("--points", default=None, help="comma-separated points")
    p.add_argument("--convention", choices=["full", "positive"], default="full")

    p = add("dbm", cmd_dbm, "eigenvalue SDE, optionally compared with the matrix flow")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--variant", choices=["brownian", "ou"], default="brownian")
    p.add_argument("--floor", choices=["implicit", "error"], default="implicit",
                   help="what to do if a step still crosses at the smallest substep")

    p = add("momentflow", cmd_momentflow, "eigenvector moment flow relaxation")
    p.add_argument("--sites", type=int, default=3)
    p.add_argument("--particles", type=int, default=2)
    p.add_argument("--mode", choices=["hermitian", "antisymmetric"], default="antisymmetric")
    p.add_argument("--t-list", default="0,0.5,1,2")
    p.add_argument("--dt", type=float, default=None)

    p = add("localsc", cmd_localsc, "local semicircle law scan")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--E", default="-1,-0.5,0,0.5,1")
    p.add_argument("--eta", type=float, default=None)

    p = add("rigidity", cmd_rigidity, "bulk rigidity against classical locations")
    p.add_argument("--n", type=int, default=1001)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--exponent", type=float, default=0.9)

    p = add("gaps", cmd_gaps, "gap statistics in two ensembles")
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--index", type=int, default=None)
    p.add_argument("--observable", choices=["bump", "cosine"], default="bump")
    p.add_argument("--ensembles", nargs=2, default=["pm1", "gaussian"],
                   choices=["pm1", "gaussian"])

    p = add("overlap", cmd_overlap, "eigenvector overlaps against Rayleigh")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--trials", type=int, default=20)

    _matrix_source(add("minor", cmd_minor, "Cauchy interlacing and Schur complement of the (1,1) minor"))
    return ap


def _subparser(ap, name):
    return ap._subparsers._group_actions[0].choices[name]


def _apply_config(ap, argv):
    """Re-parse with defaults from ``--config``; explicit flags still win."""
    pre, rest = ap.parse_known_args(argv)
    if rest:
        sub = _subparser(ap, pre.command) if pre.command else ap
        raise UsageError(f"unrecognized arguments: {' '.join(rest)}\n{sub.format_help()}")
    if not getattr(pre, "config", None):
        return pre
    with open(pre.config) as fh:
        cfg = json.load(fh)
    params = cfg.get("params", cfg)
    extra = {k: cfg[k] for k in ("seed", "out", "format") if k in cfg}
    sub = _subparser(ap, pre.command)
    known = {a.dest for a in sub._actions}
    unknown = set(params) - known - {"command"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    sub.set_defaults(**{k: v for k, v in params.items() if k != "command"}, **extra)
    return ap.parse_args(argv)


def _emit(payload, kind, a, argv):
    if kind == "json":
        doc = {"version": __version__, "argv": list(argv), "seed": a.seed,
               "command": a.command, "result": payload}
        text = json.dumps(sanitize(doc), indent=1, allow_nan=False) + "\n"
    else:
        text = payload
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        if not argv:
            raise UsageError(ap.format_help())
        a = _apply_config(ap, argv)
        if a.command is None:
            raise UsageError(ap.format_help())
        from .parallel import resolve_jobs
        a.jobs = resolve_jobs(a.jobs)
        payload, kind = a.func(a)
    except UsageError as e:
        sys.stderr.write(str(e).rstrip() + "\n")
        return 1
    except InvalidInputError as e:
        sys.stderr.write(f"rmtlab: invalid input: {e}\n")
        return 1
    except NUMERICAL_ERRORS as e:
        detail = {"error": type(e).__name__, "message": str(e)}
        for attr in ("best_residual", "time", "required_dt", "index", "diagnostics"):
            if hasattr(e, attr):
                detail[attr] = getattr(e, attr)
        sys.stderr.write(json.dumps(sanitize(detail)) + "\n")
        return 2
    _emit(payload, kind, a, argv)
    return 0


def main():
    sys.exit(run())
