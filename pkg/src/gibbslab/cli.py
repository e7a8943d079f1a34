"""Config-driven experiment runner.

Commands:
  gibbslab verify --config FILE      invariant battery on a configured model
  gibbslab run CONFIG                one scenario file
  gibbslab suite DIR                 every *.json in DIR, sorted

One config file describes one scenario (see ScenarioConfig). Outputs are a
CSV table per scenario plus a JSON summary, both deterministic for a fixed
configuration and build: floats print with 17 significant digits and wall
times are reported on stderr only. ``GIBBSLAB_NUM_THREADS`` caps the kernel
thread count (set it before launching).
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapacityError, ConfigError, GibbsLabError
from .linalg import gibbs, hermitian_eig, op_norm, dag
from .lindblad import (Weight, alpha_quadrature, assemble,
                       transition_coefficients)
from .spinsys import (build_random_local, build_tfim_chain, single_site_jumps)

EXPERIMENTS = ("verify", "recovery", "cmi", "lr", "dirichlet", "patching", "gap")

COLUMNS = {
    "verify": ("scenario_id", "check", "value", "threshold", "passed"),
    "recovery": ("scenario_id", "t", "ell", "err_trace", "dirichlet", "bound_2_over_t"),
    "cmi": ("scenario_id", "dist_AC", "qcmi_nats", "fit_slope", "fit_r2"),
    "lr": ("scenario_id", "t", "ell", "lhs_max", "bound", "passed"),
    "dirichlet": ("scenario_id", "sample", "direct", "bilinear", "quad", "quad_err", "passed"),
    "patching": ("scenario_id", "patch_size", "ell", "t", "err_trace"),
    "gap": ("scenario_id", "gap", "margin_min", "passed"),
}


@dataclass
class ResultRecord:
    scenario_id: str
    experiment: str
    columns: dict
    passed: bool | None = None
    wall_time: float = 0.0      # reported on stderr only; outputs stay deterministic


@dataclass
class ScenarioConfig:
    scenario_id: str
    experiment: str
    model: dict
    beta: float
    sigma: float
    weight: dict
    region: tuple = ()
    times: tuple = ()
    ell: int | None = None
    backend: str = "spectral"
    patch_size: int = 2
    seed: int = 7
    output: str | None = None

    def build_hamiltonian(self):
        kind = self.model["kind"]
        n = self.model["n"]
        c = self.model.get("couplings", {})
        if kind == "tfim":
            return build_tfim_chain(n, c.get("J", 1.0), c.get("g", 1.0),
                                    periodic=self.model.get("periodic", False))
        if kind == "ising":
            return build_tfim_chain(n, c.get("J", 1.0), 0.0,
                                    periodic=self.model.get("periodic", False))
        if kind == "random":
            return build_random_local(n, c.get("k", 2), c.get("m", n),
                                      self.model.get("seed", self.seed))
        raise ConfigError(f"unknown model kind '{kind}'", keys=("model.kind",))

    def build_weight(self):
        kind = self.weight.get("kind", "metropolis")
        if kind == "metropolis":
            return Weight.metropolis(self.beta, self.sigma)
        if kind == "gaussian":
            return Weight.gaussian(self.beta, self.sigma,
                                   self.weight.get("omega_gamma"))
        raise ConfigError(f"unknown weight kind '{kind}'", keys=("weight.kind",))


def parse_config(data, scenario_id="scenario"):
    bad = []
    model = data.get("model")
    if not isinstance(model, dict) or "kind" not in model or "n" not in model:
        bad.append("model")
    experiment = data.get("experiment")
    if experiment not in EXPERIMENTS:
        bad.append("experiment")
    beta = data.get("beta")
    if not isinstance(beta, (int, float)) or beta <= 0:
        bad.append("beta")
    sigma = data.get("sigma", "1/beta")
    if sigma == "1/beta":
        sigma = 1.0 / beta if isinstance(beta, (int, float)) and beta > 0 else None
    elif not (isinstance(sigma, (int, float)) and sigma > 0):
        bad.append("sigma")
    n = model.get("n") if isinstance(model, dict) else 0
    region = tuple(data.get("region", ()))
    if any((not isinstance(s, int)) or s < 0 or s >= (n or 0) for s in region):
        bad.append("region")
    times = data.get("times", ())
    if isinstance(times, dict):
        lr = times.get("log_range")
        if not (isinstance(lr, (list, tuple)) and len(lr) == 3):
            bad.append("times")
            times = ()
        else:
            times = tuple(np.geomspace(lr[0], lr[1], int(lr[2])).tolist())
    else:
        times = tuple(float(t) for t in times)
    if experiment in ("recovery", "lr") and not times:
        bad.append("times")
    ell = data.get("ell")
    if ell is not None and (not isinstance(ell, int) or ell < 1):
        bad.append("ell")
    backend = data.get("backend", "spectral")
    if backend not in ("spectral", "ode"):
        bad.append("backend")
    if bad:
        raise ConfigError(f"invalid configuration keys: {', '.join(sorted(bad))}",
                          keys=tuple(sorted(bad)))
    return ScenarioConfig(
        scenario_id=data.get("scenario_id", scenario_id),
        experiment=experiment, model=model, beta=float(beta), sigma=float(sigma),
        weight=data.get("weight", {"kind": "metropolis"}), region=region,
        times=times, ell=ell, backend=backend,
        patch_size=int(data.get("patch_size", 2)), seed=int(data.get("seed", 7)),
        output=data.get("output"))


# -- experiments ---------------------------------------------------------------

def _rec(cfg, **cols):
    passed = cols.get("passed")
    return ResultRecord(cfg.scenario_id, cfg.experiment, cols, passed)


def _run_verify(cfg):
    from . import dirichlet as dmod
    from . import oft as omod
    H = cfg.build_hamiltonian()
    w = cfg.build_weight()
    rng = np.random.default_rng(cfg.seed)
    rows = []

    def check(name, value, threshold):
        rows.append(_rec(cfg, check=name, value=float(value),
                         threshold=float(threshold),
                         passed=bool(value <= threshold)))

    spec = hermitian_eig(H.to_dense())
    gs = gibbs(spec, cfg.beta)
    check("term_hermiticity",
          max(np.abs(t.matrix - dag(t.matrix)).max() for t in H.terms), 1e-12)
    check("term_norms", max(op_norm(t.matrix) for t in H.terms) - 1.0, 1e-12)
    check("gibbs_trace", abs(np.trace(gs.rho).real - 1.0), 1e-12)
    check("transition_table_symmetry",
          transition_coefficients(spec, w).hermitian_defect(), 1e-12)
    # alpha closed form vs quadrature oracle on a frequency sample
    from .lindblad import alpha_closed
    nus = np.concatenate([[0.0], rng.uniform(-2 * spec.op_norm, 2 * spec.op_norm, 3)])
    aerr = max(abs(float(alpha_closed(n1, n2, w)) - alpha_quadrature(w, n1, n2))
               for n1 in nus for n2 in nus[:2])
    check("alpha_closed_vs_quadrature", aerr, 1e-10)
    jumps = single_site_jumps(cfg.region or (0,))
    gen = assemble(spec, jumps, w) if H.n <= 6 else None
    if gen is not None:
        check("db_residual", gen.db_residual(), 1e-8)
        check("fixed_point_trace_norm", gen.fixed_point_defect(), 1e-8)
    # OFT reconstruction
    A = rng.normal(size=(spec.dim, spec.dim)) + 1j * rng.normal(size=(spec.dim, spec.dim))
    bd = omod.bohr_decompose(spec, A)
    p = omod.OftParams(w.sigma)
    check("oft_reconstruction",
          np.abs(omod.reconstruct(bd, p) - A).max() / np.abs(A).max(), 1e-10)
    kid = dmod.metropolis_kernel_identity(betas=(cfg.beta,), n_omega=8)
    check("metropolis_kernel_identity",
          max(kid["max_err_h"], kid["max_err_cosh"], kid["max_err_g_integral"]), 1e-8)
    return rows


def _run_recovery(cfg):
    from .recovery import (RecoveryScenario, recovery_error_curve,
                           truncated_recovery_error)
    H = cfg.build_hamiltonian()
    sc = RecoveryScenario(H, cfg.beta, cfg.sigma, cfg.region, cfg.times,
                          ell=cfg.ell, backend=cfg.backend,
                          weight_kind=cfg.weight.get("kind", "metropolis"),
                          omega_gamma=cfg.weight.get("omega_gamma"))
    rows = []
    if cfg.ell is None:
        for r in recovery_error_curve(sc, seed=cfg.seed):
            rows.append(_rec(cfg, t=r.t, ell="", err_trace=r.err,
                             dirichlet=r.dirichlet, bound_2_over_t=r.bound_2_over_t))
    else:
        for r in truncated_recovery_error(sc):
            rows.append(_rec(cfg, t=r["t"], ell=r["ell"], err_trace=r["err_trunc"],
                             dirichlet="", bound_2_over_t=2.0 / r["t"]))
    return rows


def _run_cmi(cfg):
    from .markov import cmi_decay_scan
    H = cfg.build_hamiltonian()
    res = cmi_decay_scan(H, cfg.beta, a_size=max(1, len(cfg.region) or 1))
    rows = []
    for r in res.rows:
        rows.append(_rec(cfg, dist_AC=r.dist_ac, qcmi_nats=r.qcmi,
                         fit_slope="" if res.slope is None else res.slope,
                         fit_r2="" if res.r2 is None else res.r2))
    return rows


def _run_lr(cfg):
    import math as _m
    from .bounds import lr_truncation_check
    H = cfg.build_hamiltonian()
    region = cfg.region or (0,)
    ell = cfg.ell or 3
    rows = []
    for t in cfg.times:
        rep = lr_truncation_check(H, region, ell, [t])
        bound = (len(region) * (2 * H.degree * abs(t)) ** ell
                 / _m.factorial(ell) / (1 - 2 / _m.e))
        if rep.instances == 0:          # bound vacuous (> 2), nothing to check
            rows.append(_rec(cfg, t=t, ell=ell, lhs_max="", bound=bound, passed=True))
        else:
            rows.append(_rec(cfg, t=t, ell=ell, lhs_max=bound - rep.margin_min,
                             bound=bound, passed=rep.passed))
    return rows


def _run_dirichlet(cfg):
    from . import dirichlet as dmod
    H = cfg.build_hamiltonian()
    if H.n > 3:
        raise CapacityError("dirichlet experiment limited to n <= 3")
    spec = hermitian_eig(H.to_dense())
    w = cfg.build_weight()
    jumps = single_site_jumps(cfg.region or (0,))
    gen = assemble(spec, jumps, w)
    gs = gen.gibbs
    tc = transition_coefficients(spec, w)
    jm = [j.embedded(H.n) for j in jumps]
    kern = dmod.DirichletKernels.for_model(w, spec.op_norm)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for sample in range(5):
        G = rng.normal(size=(spec.dim, spec.dim)) + 1j * rng.normal(size=(spec.dim, spec.dim))
        X = (G + dag(G)) / 2
        d = dmod.dirichlet_direct(gen, gs, X)
        b = dmod.dirichlet_bilinear(spec, gs, jm, tc, X, X).real
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            q = dmod.dirichlet_commutator_integral(spec, gs, jm, kern, X)
        ok = (abs(d - b) <= 1e-7 * max(abs(d), 1e-12)
              and abs(q.value - d) <= 1e-5 * max(abs(d), 1e-9))
        rows.append(_rec(cfg, sample=sample, direct=d, bilinear=b,
                         quad=q.value, quad_err=q.error, passed=bool(ok)))
    return rows


def _run_patching(cfg):
    from .recovery import patching_prepare
    H = cfg.build_hamiltonian()
    t = cfg.times[-1] if cfg.times else 1e3
    _, err = patching_prepare(H, cfg.beta, cfg.sigma, cfg.patch_size,
                              cfg.ell or 3, t)
    return [_rec(cfg, patch_size=cfg.patch_size, ell=cfg.ell or 3, t=t,
                 err_trace=err)]


def _run_gap(cfg):
    from .bounds import gap_decay_check, local_gap
    H = cfg.build_hamiltonian()
    spec = hermitian_eig(H.to_dense())
    w = cfg.build_weight()
    gen = assemble(spec, single_site_jumps(cfg.region or (0,)), w)
    g = local_gap(gen)
    if g is None:
        return [_rec(cfg, gap="", margin_min="", passed=True)]
    rep = gap_decay_check(gen, gen.gibbs, cfg.times or (0.1, 1.0, 10.0), 10,
                          seed=cfg.seed)
    return [_rec(cfg, gap=g, margin_min=rep.margin_min, passed=rep.passed)]


_RUNNERS = {
    "verify": _run_verify, "recovery": _run_recovery, "cmi": _run_cmi,
    "lr": _run_lr, "dirichlet": _run_dirichlet, "patching": _run_patching,
    "gap": _run_gap,
}


def run_scenario(cfg):
    t0 = time.perf_counter()
    rows = _RUNNERS[cfg.experiment](cfg)
    dt = time.perf_counter() - t0
    for r in rows:
        r.wall_time = dt / max(len(rows), 1)
    return rows


# -- output ----------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.16e}"
    return str(v)


def build_id():
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).parent)
        if out.returncode == 0:
            return f"{__version__}+{out.stdout.strip()}"
    except Exception:
        pass
    return __version__


def emit_results(records, fmt, out_prefix, seed=None):
    """Write CSV and/or JSON outputs; returns the list of paths written."""
    if not records:
        raise GibbsLabError("no records to emit")
    experiment = records[0].experiment
    cols = COLUMNS[experiment]
    paths = []
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    if fmt in ("csv", "both"):
        path = out_prefix.with_suffix(".csv")
        lines = [",".join(cols)]
        for r in records:
            vals = {"scenario_id": r.scenario_id, **r.columns}
            if "passed" in cols and "passed" not in vals:
                vals["passed"] = r.passed
            lines.append(",".join(_fmt(vals.get(c, "")) for c in cols))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    if fmt in ("json", "both"):
        path = out_prefix.with_suffix(".json")
        n_pass = sum(1 for r in records if r.passed is True)
        n_fail = sum(1 for r in records if r.passed is False)
        doc = {
            "scenario": records[0].scenario_id,
            "build_id": build_id(),
            "seed": seed,
            "records": [dict(r.columns, passed=r.passed) for r in records],
            "pass_counts": {"passed": n_pass, "failed": n_fail},
        }
        path.write_text(json.dumps(doc, indent=1, sort_keys=True,
                                   default=_fmt) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


# -- entry point ------------------------------------------------------------------

def _load_config(path, overrides):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}", keys=("<file>",))
    cfg = parse_config(data, scenario_id=Path(path).stem)
    if overrides.get("backend"):
        cfg.backend = overrides["backend"]
    if overrides.get("seed") is not None:
        cfg.seed = overrides["seed"]
    return cfg


def _execute(cfg, args):
    rows = run_scenario(cfg)
    out = args.out or cfg.output or f"results_{cfg.scenario_id}"
    paths = emit_results(rows, args.format, out, seed=cfg.seed)
    wall = sum(r.wall_time for r in rows)
    n_fail = sum(1 for r in rows if r.passed is False)
    print(f"[{cfg.scenario_id}] {cfg.experiment}: {len(rows)} records, "
          f"{n_fail} failed -> {', '.join(str(p) for p in paths)}", file=sys.stderr)
    print(f"[{cfg.scenario_id}] wall time {wall:.2f}s", file=sys.stderr)
    return n_fail == 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="gibbslab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("verify", "run", "suite"):
        p = sub.add_parser(name)
        if name == "run":
            p.add_argument("config")
        elif name == "suite":
            p.add_argument("directory")
        else:
            p.add_argument("--config", default=None,
                           help="scenario file; defaults to a built-in "
                                "2-qubit random-model battery")
        p.add_argument("--backend", choices=("spectral", "ode"))
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    args = parser.parse_args(argv)
    overrides = {"backend": args.backend, "seed": args.seed}
    try:
        if args.command == "suite":
            ok = True
            files = sorted(Path(args.directory).glob("*.json"))
            if not files:
                raise ConfigError(f"no *.json configs in {args.directory}")
            for f in files:
                cfg = _load_config(f, overrides)
                base_out = args.out
                if base_out:
                    cfg.output = str(Path(base_out) / f.stem)
                    args.out = cfg.output
                ok = _execute(cfg, args) and ok
                args.out = base_out
            return 0 if ok else 1
        if args.command == "verify" and args.config is None:
            cfg = parse_config({
                "scenario_id": "default-verify", "experiment": "verify",
                "model": {"kind": "random", "n": 2,
                          "couplings": {"k": 2, "m": 3}, "seed": 7},
                "beta": 1.0, "region": [0],
            })
            if overrides.get("seed") is not None:
                cfg.seed = overrides["seed"]
        else:
            cfg = _load_config(args.config, overrides)
        if args.command == "verify":
            cfg.experiment = "verify"
        return 0 if _execute(cfg, args) else 1
    except ConfigError as exc:
        print(f"configuration error: {exc} (keys: {', '.join(exc.keys) or '-'})",
              file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
