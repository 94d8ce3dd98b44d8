"""``matolo`` command line: regret, admissibility, optimize and kernels experiments.

Every command writes CSV files (``#`` header lines followed by a
deterministic body) and, unless ``--no-plot``, an SVG line chart. Settings
come from built-in defaults, then an INI ``--config`` file (one section per
command), then command-line flags. Exit code 0 means every check passed,
2 means a violation or solver failure.
"""

import argparse
import configparser
import csv
import hashlib
import io
import math
import os
import platform
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import learners, optimizers
from .adversaries import ADVERSARIES, make_adversary
from .exceptions import MatoloError
from .linalg import (
    cholesky,
    inv_sqrt_coupled_ns,
    inv_sqrt_psd,
    polar_augmented_ns,
    polar_exact,
    polar_ns,
)
from .potentials import (
    PotentialFamily,
    admissibility_violations,
    check_admissibility,
    wishart_inverse_check,
)

OUT_DIR_ENV = "MATOLO_OUT_DIR"
EXIT_OK = 0
EXIT_FAIL = 2

# name -> (type, default, help); type ``None`` marks optional floats
PARAMS = {
    "regret": {
        "learner": (str, "faml", "one of " + ", ".join(learners.KINDS)),
        "adversary": (str, "gaussian", "one of " + ", ".join(sorted(ADVERSARIES))),
        "m": (int, 4, "rows"),
        "n": (int, 8, "columns"),
        "T": (int, 200, "rounds"),
        "D": (float, 1.0, "operator-norm radius"),
        "G": (float, 1.0, "gradient operator-norm bound"),
        "eta": (None, None, "learning rate (default: family value)"),
        "discount": (float, 1.0, "discount factor in (0, 1]"),
        "k": (int, 256, "FTPL Monte Carlo samples"),
        "seed": (int, 0, "adversary and learner seed"),
    },
    "admissibility": {
        "family": (str, "hyperbolic", "regularized, stochastic or hyperbolic"),
        "m": (int, 3, "rows"),
        "n": (int, 5, "columns"),
        "trials": (int, 200, "random trials"),
        "seed": (int, 0, "seed"),
        "mc_samples": (int, 10_000, "stochastic family Monte Carlo samples"),
        "wishart_samples": (int, 100_000, "samples for the inverse-Wishart check"),
    },
    "optimize": {
        "optimizer": (str, "all", "muon, pion, leon or all"),
        "d": (int, 20, "matrix side"),
        "measurements": (int, 100, "number of Gaussian measurements"),
        "beta1": (float, 0.9, "gradient EMA factor"),
        "beta2": (float, 0.9, "second-moment EMA factor"),
        "steps": (int, 500, "iterations per run"),
        "seed": (int, 0, "first seed"),
        "seeds": (int, 1, "number of consecutive seeds"),
        "lrs": (str, "0.3,0.1,0.03,0.01", "comma-separated constant learning rates"),
        "k": (int, 8, "Pion Monte Carlo samples"),
        "mode": (str, "practical", "practical or theory"),
        "D": (float, 1.0, "theory-mode radius"),
        "init": (str, "random", "random or zero start"),
        "batch_size": (int, 0, "mini-batch size (0: full gradient)"),
        "jobs": (int, 1, "concurrent runs"),
    },
    "kernels": {
        "kernel": (str, "all", "polar, invsqrt, augpolar or all"),
        "sizes": (str, "2,4,8,16", "comma-separated sizes"),
        "instances": (int, 10, "random instances per size"),
        "seed": (int, 0, "seed"),
        "max_iters": (int, 100, "iteration cap"),
        "tol": (float, 1e-10, "stopping tolerance"),
        "residual_tol": (float, 1e-6, "allowed Frobenius error against the oracle"),
    },
}


def _parse_value(kind, text):
    if text is None:
        return None
    if kind is None:
        return None if text in ("", "none", "None") else float(text)
    if kind is bool:
        return text.lower() in ("1", "true", "yes", "on")
    return kind(text)


def _format_value(value):
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _read_section(cp, command, params):
    table = PARAMS[command]
    if cp.has_section(command):
        for key, raw in cp[command].items():
            if key not in table:
                raise ValueError(f"unknown key {key!r} in section [{command}]")
            params[key] = _parse_value(table[key][0], raw)


@dataclass
class ExperimentSpec:
    command: str
    params: dict
    out_dir: str = "."
    emit_plot: bool = True

    def to_ini(self):
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["run"] = {"command": self.command, "out_dir": self.out_dir, "emit_plot": str(self.emit_plot)}
        cp[self.command] = {k: _format_value(v) for k, v in self.params.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text):
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_string(text)
        command = cp["run"]["command"]
        params = {k: v[1] for k, v in PARAMS[command].items()}
        _read_section(cp, command, params)
        return cls(
            command=command,
            params=params,
            out_dir=cp["run"].get("out_dir", "."),
            emit_plot=_parse_value(bool, cp["run"].get("emit_plot", "true")),
        )

    def digest(self):
        body = "\n".join(f"{k}={_format_value(v)}" for k, v in sorted(self.params.items()))
        return hashlib.sha256(f"{self.command}\n{body}".encode()).hexdigest()[:16]

    def header_lines(self):
        lines = [
            f"matolo {__version__} {self.command}",
            f"spec_hash={self.digest()}",
            f"created={datetime.now(timezone.utc).isoformat(timespec='seconds')}",
            f"python={platform.python_version()} numpy={np.__version__}",
        ]
        lines += [f"{k}={_format_value(v)}" for k, v in self.params.items()]
        return lines


def build_spec(command, args):
    """Defaults, then the ``[command]`` section of ``--config``, then flags."""
    table = PARAMS[command]
    params = {k: v[1] for k, v in table.items()}
    out_dir = os.environ.get(OUT_DIR_ENV, ".")
    emit_plot = True
    if args.config:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        if not cp.read(args.config):
            raise FileNotFoundError(args.config)
        _read_section(cp, command, params)
        if cp.has_section("run"):
            out_dir = cp["run"].get("out_dir", out_dir)
            emit_plot = _parse_value(bool, cp["run"].get("emit_plot", "true"))
    for key in table:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if args.out_dir is not None:
        out_dir = args.out_dir
    if args.no_plot:
        emit_plot = False
    return ExperimentSpec(command, params, out_dir, emit_plot)


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def render_csv(header, columns, rows):
    """``# header`` lines, then the column row, then one line per dict row."""
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = [row[c] for c in columns]
        for v in values:
            if isinstance(v, (float, np.floating)) and math.isnan(v):
                raise ValueError(f"refusing to write NaN in column row {row}")
        writer.writerow([_cell(v) for v in values])
    return buf.getvalue()


def read_csv_body(path):
    """Rows of a CSV written by this module, header comments skipped."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def svg_line_chart(series, title="", xlabel="", ylabel="", logy=False, width=720, height=440):
    """A self-contained SVG 1.1 line chart.

    ``series`` is a list of ``(label, xs, ys)``; non-finite points are dropped.
    """
    left, right, top, bottom = 70, 170, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def ty(v):
        return math.log10(v) if logy else v

    pts = []
    for label, xs, ys in series:
        keep = [(float(x), ty(float(y))) for x, y in zip(xs, ys)
                if math.isfinite(float(y)) and (not logy or float(y) > 0)]
        pts.append((label, keep))
    allx = [p[0] for _, s in pts for p in s] or [0.0, 1.0]
    ally = [p[1] for _, s in pts for p in s] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        ylab = f"{10 ** fy:.3g}" if logy else f"{fy:.3g}"
        out.append(f'<text x="{sx(fx):.1f}" y="{top + ph + 16}" text-anchor="middle">{fx:.3g}</text>')
        out.append(f'<text x="{left - 6}" y="{sy(fy) + 4:.1f}" text-anchor="end">{ylab}</text>')
        out.append(f'<line x1="{left}" x2="{left + pw}" y1="{sy(fy):.1f}" y2="{sy(fy):.1f}" stroke="#ddd"/>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{_esc(ylabel)}</text>'
    )
    for i, (label, s) in enumerate(pts):
        color = _PALETTE[i % len(_PALETTE)]
        if s:
            path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" x2="{left + pw + 30}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 36}" y="{ly + 4}">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _fail(message):
    print(f"matolo: {message}", file=sys.stderr)
    return EXIT_FAIL


# regret --------------------------------------------------------------------

REGRET_COLUMNS = ("t", "learner", "inst_loss", "cum_loss", "nuclear_S", "regret", "bound", "feas_margin", "solver_iters")


def cmd_regret(spec):
    p = spec.params
    if p["learner"] not in learners.KINDS:
        return _fail(f"unknown learner {p['learner']!r}")
    if p["adversary"] not in ADVERSARIES:
        return _fail(f"unknown adversary {p['adversary']!r}")
    grads = make_adversary(p["adversary"], p["m"], p["n"], p["T"], p["G"], p["seed"])
    config = learners.LearnerConfig(
        kind=p["learner"], D=p["D"], G=p["G"], eta=p["eta"], discount=p["discount"],
        mc_samples=p["k"], seed=p["seed"],
    )
    state = learners.init_state(p["m"], p["n"], config)
    rows = []
    for t, G_t in enumerate(grads, start=1):
        try:
            _, state = learners.advance(config, state, G_t)
        except MatoloError as exc:
            return _fail(f"solver failure at round {t}: {exc}")
        rec = state.record
        rows.append(
            {
                "t": rec.t, "learner": p["learner"], "inst_loss": rec.inst_loss, "cum_loss": rec.cum_loss,
                "nuclear_S": rec.nuclear_S, "regret": rec.regret, "bound": rec.bound,
                "feas_margin": rec.feas_margin, "solver_iters": rec.solver_iters,
            }
        )
    stem = f"regret_{p['learner']}_{p['adversary']}_seed{p['seed']}"
    atomic_write(os.path.join(spec.out_dir, stem + ".csv"), render_csv(spec.header_lines(), REGRET_COLUMNS, rows))
    if spec.emit_plot:
        ts = [r["t"] for r in rows]
        series = [("regret", ts, [r["regret"] for r in rows])]
        if math.isfinite(rows[-1]["bound"]):
            series.append(("bound", ts, [r["bound"] for r in rows]))
        svg = svg_line_chart(series, f"{p['learner']} vs {p['adversary']}", "round", "regret")
        atomic_write(os.path.join(spec.out_dir, stem + ".svg"), svg)
    last = rows[-1]
    print(f"{p['learner']}: T={p['T']} regret={last['regret']:.6g} bound={last['bound']:.6g}")
    if any(r["feas_margin"] < 0 for r in rows):
        bad = next(r["t"] for r in rows if r["feas_margin"] < 0)
        return _fail(f"feasibility violated at round {bad}")
    if last["regret"] > last["bound"]:
        return _fail(f"regret {last['regret']:.6g} exceeds bound {last['bound']:.6g}")
    return EXIT_OK


# admissibility -------------------------------------------------------------

ADMISSIBILITY_COLUMNS = (
    "family", "m", "n", "trials", "seed", "feas_max", "dom_min", "alpha_hat", "beta_hat", "alphabeta_hat",
    "wishart_top", "wishart_stderr", "wishart_bound", "violations",
)


def cmd_admissibility(spec):
    p = spec.params
    family, m, n = p["family"], p["m"], p["n"]
    if family not in ("regularized", "stochastic", "hyperbolic"):
        return _fail(f"unknown family {family!r}")
    if family == "stochastic" and min(m, n) + 2 > max(m, n):
        return _fail(f"stochastic family requires n ≥ m+2 (got m={m}, n={n})")
    fam = PotentialFamily(family, mc_samples=p["mc_samples"])
    try:
        report = check_admissibility(fam, m, n, trials=p["trials"], seed=p["seed"])
        failed = admissibility_violations(report)
        row = report.csv_row()
        row.update(wishart_top="", wishart_stderr="", wishart_bound="")
        if family == "stochastic":
            est = wishart_inverse_check(min(m, n), max(m, n), samples=p["wishart_samples"], seed=p["seed"])
            row.update(wishart_top=est.top_eigenvalue, wishart_stderr=est.stderr, wishart_bound=est.bound)
            if not est.within_bound():
                failed.append("wishart")
    except MatoloError as exc:
        return _fail(f"evaluation failure: {exc}")
    row["violations"] = ";".join(failed)
    stem = f"admissibility_{family}_{m}x{n}_seed{p['seed']}"
    atomic_write(os.path.join(spec.out_dir, stem + ".csv"), render_csv(spec.header_lines(), ADMISSIBILITY_COLUMNS, [row]))
    print(
        f"{family} {m}x{n}: alpha_hat={row['alpha_hat']:.6g} beta_hat={row['beta_hat']:.6g} "
        f"feas_max={row['feas_max']:.6g} dom_min={row['dom_min']:.3g}"
    )
    if failed:
        return _fail("violated: " + ", ".join(failed))
    return EXIT_OK


# optimize ------------------------------------------------------------------

OPT_TRACE_COLUMNS = ("step", "optimizer", "lr_or_D", "loss", "grad_ema_nuc", "direction_opnorm", "osc_partial", "seed")
OPT_REPORT_COLUMNS = ("optimizer", "seed", "lr", "final_loss", "osc_total", "proxy_stationarity")


def _parse_list(text, kind=float):
    return [kind(x) for x in str(text).split(",") if x.strip()]


def _optimize_one(job):
    kind, lr, seed, p = job
    objective = optimizers.matrix_sensing_objective(
        p["d"], p["measurements"], seed, batch_size=p["batch_size"] or None
    )
    W0 = None if p["init"] == "zero" else optimizers.random_init(objective.shape, seed)
    config = optimizers.OptimizerConfig(
        kind=kind, beta1=p["beta1"], beta2=p["beta2"], mode=p["mode"], D=p["D"] if p["mode"] == "theory" else 1.0,
        lr=lr, k=p["k"], seed=seed, T=p["steps"],
    )
    return config, optimizers.run_optimizer(objective, config, W0)


def cmd_optimize(spec):
    p = spec.params
    kinds = optimizers.OPTIMIZERS if p["optimizer"] == "all" else (p["optimizer"],)
    for kind in kinds:
        if kind not in optimizers.OPTIMIZERS:
            return _fail(f"unknown optimizer {kind!r}")
    if p["init"] not in ("random", "zero"):
        return _fail("init must be random or zero")
    lrs = _parse_list(p["lrs"]) if p["mode"] == "practical" else [p["D"]]
    seeds = range(p["seed"], p["seed"] + p["seeds"])
    jobs = [(kind, lr, seed, p) for kind in kinds for lr in lrs for seed in seeds]
    try:
        if p["jobs"] > 1:
            with ThreadPoolExecutor(max_workers=p["jobs"]) as pool:
                results = list(pool.map(_optimize_one, jobs))
        else:
            results = [_optimize_one(j) for j in jobs]
    except MatoloError as exc:
        return _fail(f"kernel failure: {exc}")
    header = spec.header_lines()
    report = []
    for config, res in results:
        tag = f"{config.kind}_lr{config.lr_or_D}_seed{config.seed}"
        rows = [r.as_dict() for r in res.trace]
        atomic_write(os.path.join(spec.out_dir, f"optimize_{tag}.csv"), render_csv(header, OPT_TRACE_COLUMNS, rows))
        report.append(res.report_row(config))
    atomic_write(os.path.join(spec.out_dir, "optimize_report.csv"), render_csv(header, OPT_REPORT_COLUMNS, report))
    if spec.emit_plot:
        first = seeds[0]
        series = [
            (f"{c.kind} lr={c.lr_or_D}", [r.step for r in res.trace], [r.loss for r in res.trace])
            for c, res in results if c.seed == first
        ]
        svg = svg_line_chart(series, f"matrix sensing, seed {first}", "step", "loss", logy=True)
        atomic_write(os.path.join(spec.out_dir, "optimize_paths.svg"), svg)
    for kind in kinds:
        osc = [r["osc_total"] for r in report if r["optimizer"] == kind]
        fin = [r["final_loss"] for r in report if r["optimizer"] == kind]
        print(f"{kind}: median osc_total={np.median(osc):.6g} median final_loss={np.median(fin):.6g}")
    return EXIT_OK


# kernels -------------------------------------------------------------------

KERNEL_COLUMNS = ("kernel", "m", "n", "instance", "iterations", "residual", "flops_estimate", "flops_closed_form", "converged")


def _kernel_rows(kernel, sizes, instances, seed, max_iters, tol):
    rng = np.random.default_rng(seed)
    rows = []
    if kernel == "polar":
        for m in sizes:
            for n in sizes:
                for i in range(instances):
                    A = rng.standard_normal((m, n))
                    X, rep = polar_ns(A, max_iters=max_iters, tol=tol)
                    res = float(np.linalg.norm(X - polar_exact(A)))
                    rows.append((m, n, i, rep, res, 4 * rep.iterations * min(m, n) ** 2 * max(m, n)))
    elif kernel == "invsqrt":
        for m in sizes:
            for i in range(instances):
                C = rng.standard_normal((m, m))
                A = C @ C.T / m + 0.1 * np.eye(m)
                Z, rep = inv_sqrt_coupled_ns(A, max_iters=max_iters, tol=tol)
                res = float(np.linalg.norm(Z - inv_sqrt_psd(A)))
                rows.append((m, m, i, rep, res, 6 * rep.iterations * m**3))
        A = np.diag([4.0, 9.0])
        Z, rep = inv_sqrt_coupled_ns(A, max_iters=max_iters, tol=tol)
        rows.append((2, 2, "diag(4,9)", rep, float(np.linalg.norm(Z - np.diag([0.5, 1 / 3]))), 6 * rep.iterations * 8))
    elif kernel == "augpolar":
        for m in sizes:
            for n in sizes:
                for i in range(instances):
                    S = rng.standard_normal((m, n))
                    C = rng.standard_normal((m, m))
                    LLT = C @ C.T / m + 0.1 * np.eye(m)
                    X, rep = polar_augmented_ns(S, LLT, max_iters=max_iters, tol=tol)
                    ref = polar_exact(np.hstack([S, cholesky(LLT)]))[:, :n]
                    res = float(np.linalg.norm(X - ref))
                    k = rep.iterations
                    rows.append((m, n, i, rep, res, 4 * m * m * n + k * (2 * m * m * n + 4 * m**3)))
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    return [
        {
            "kernel": kernel, "m": m, "n": n, "instance": i, "iterations": rep.iterations, "residual": res,
            "flops_estimate": rep.flops_estimate, "flops_closed_form": closed, "converged": rep.converged,
        }
        for m, n, i, rep, res, closed in rows
    ]


def cmd_kernels(spec):
    p = spec.params
    names = ("polar", "invsqrt", "augpolar") if p["kernel"] == "all" else (p["kernel"],)
    sizes = _parse_list(p["sizes"], int)
    rows = []
    try:
        for name in names:
            rows += _kernel_rows(name, sizes, p["instances"], p["seed"], p["max_iters"], p["tol"])
    except ValueError as exc:
        return _fail(str(exc))
    except MatoloError as exc:
        return _fail(f"kernel failure: {exc}")
    atomic_write(os.path.join(spec.out_dir, "kernels.csv"), render_csv(spec.header_lines(), KERNEL_COLUMNS, rows))
    if spec.emit_plot:
        series = []
        for name in names:
            sub = [r for r in rows if r["kernel"] == name and isinstance(r["instance"], int)]
            series.append((name, list(range(len(sub))), [max(r["residual"], 1e-17) for r in sub]))
        atomic_write(
            os.path.join(spec.out_dir, "kernels.svg"),
            svg_line_chart(series, "kernel residuals vs oracle", "instance", "residual", logy=True),
        )
    worst = max(r["residual"] for r in rows)
    print(f"kernels: {len(rows)} rows, worst residual {worst:.3g}")
    if worst > p["residual_tol"]:
        return _fail(f"residual {worst:.3g} above {p['residual_tol']:.3g}")
    return EXIT_OK


COMMANDS = {
    "regret": cmd_regret,
    "admissibility": cmd_admissibility,
    "optimize": cmd_optimize,
    "kernels": cmd_kernels,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="matolo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"matolo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, table in PARAMS.items():
        sp = sub.add_parser(name, help=f"{name} experiment")
        sp.add_argument("--config", help="INI file; section [run] and [%s]" % name)
        sp.add_argument("--out-dir", dest="out_dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")
        sp.add_argument("--no-plot", dest="no_plot", action="store_true", help="skip the SVG output")
        sp.add_argument("--dump-config", dest="dump_config", action="store_true",
                        help="print the effective spec as INI and exit")
        for key, (kind, default, text) in table.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, type=kind or float, default=None,
                            help=f"{text} (default {_format_value(default)})")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = build_spec(args.command, args)
    except (ValueError, FileNotFoundError) as exc:
        return _fail(str(exc))
    if args.dump_config:
        sys.stdout.write(spec.to_ini())
        return EXIT_OK
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        return COMMANDS[args.command](spec)


if __name__ == "__main__":
    sys.exit(main())
