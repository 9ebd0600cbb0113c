"""Command-line front end: ``degest <command> [options]``.

Every option may also come from a flat ``key=value`` config file given
with ``--config``; command-line flags take precedence.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .estimators import ESTIMATOR_NAMES, PriorSupportError, make_estimator
from .graph import (
    EdgeListError,
    Graph,
    PowerLawError,
    design_power_law,
    from_edges,
    generate_er,
    load_edge_list,
    write_edge_list,
)
from .priors import PoissonPrior, PowerLawPrior, PriorSpecError, parse_prior
from .risk import (
    check_prop1,
    check_prop2_class,
    check_prop3_conditions,
    eb_approximation_check,
    exact_poisson_dominance_interval,
    exact_univariate_risk,
    monte_carlo_l2_risk,
    perturb_prior,
    poisson_bayes_dominance_interval,
)
from .sampling import derive_seed, induced_subgraph_sample, load_sample, write_sample

DEFAULT_SEED = 12345

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Option plumbing
# ---------------------------------------------------------------------------

def read_config(path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    out = {}
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{i}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


class Options:
    """Flag values overlaid on config values overlaid on defaults."""

    def __init__(self, args: argparse.Namespace, config: dict[str, str]):
        self._args = vars(args)
        self._config = config

    def get(self, key, default=None, cast=str):
        value = self._args.get(key)
        if value is not None:
            return value
        if key in self._config:
            raw = self._config[key]
            try:
                return cast(raw)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        return default

    def require(self, key, cast=str):
        value = self.get(key, cast=cast)
        if value is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
        return value


def _flag(text) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _probability(name, value, allow_zero=False):
    lo_ok = value >= 0 if allow_zero else value > 0
    if not (lo_ok and value <= 1):
        raise ConfigError(f"{name} must lie in {'[0' if allow_zero else '(0'}, 1], got {value}")
    return value


@contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None
    with fh:
        yield fh


def _info(opts, message):
    # keep stdout clean when it carries the payload
    stream = sys.stderr if opts.get("output") in (None, "-") else sys.stdout
    print(message, file=stream)


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\r\n")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


# ---------------------------------------------------------------------------
# Shared builders
# ---------------------------------------------------------------------------

def _load_graph(path) -> Graph:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"graph file not found: {path}")
    with path.open("rb") as fh:
        return load_edge_list(fh)


def _build_graph(opts, seed) -> tuple[Graph, dict]:
    path = opts.get("graph")
    if path:
        g = _load_graph(path)
        return g, {"graph_id": Path(path).name, "model": "edgelist", "N": g.num_nodes}
    model = opts.get("model", "er")
    N = opts.require("N", int)
    if model == "er":
        pe = _probability("pe", opts.require("pe", float), allow_zero=True)
        g = generate_er(N, pe, seed)
        return g, {"graph_id": f"er_{N}_{pe:g}_{seed}", "model": "er", "N": N, "p_e_or_s": pe}
    if model == "powerlaw":
        s = opts.require("s", float)
        m = opts.require("m", float)
        if not 0 < s < 1 or m <= 1:
            raise ConfigError("powerlaw needs 0 < s < 1 and m > 1")
        design = design_power_law(N, m, s, seed)
        return design.graph, {"graph_id": f"sf_{N}_{s:g}_{m:g}_{seed}", "model": "powerlaw",
                              "N": N, "p_e_or_s": s, "m": m,
                              "d_min": design.d_min, "d_max": design.d_max}
    raise ConfigError(f"unknown model {model!r}; choose er, powerlaw or edgelist")


def _priors(opts, base_dir):
    raw = opts.get("prior")
    if not raw:
        return []
    specs = raw if isinstance(raw, list) else [raw]
    out = []
    for chunk in specs:
        for spec in chunk.split(";"):
            if spec.strip():
                try:
                    out.append(parse_prior(spec, base_dir))
                except PriorSpecError as exc:
                    raise ConfigError(str(exc)) from None
    return out


def _estimators(opts, base_dir, cap=False):
    names = [n.strip() for n in opts.get("estimators", "mme,urm,mrm").split(",") if n.strip()]
    priors = _priors(opts, base_dir)
    ests = []
    for name in names:
        if name not in ESTIMATOR_NAMES:
            raise ConfigError(f"unknown estimator {name!r}; choose from {', '.join(ESTIMATOR_NAMES)}")
        if name == "bayes":
            if not priors:
                raise ConfigError("estimator 'bayes' needs --prior")
            ests.extend(make_estimator("bayes", pr, cap=cap) for pr in priors)
        else:
            ests.append(make_estimator(name))
    if not ests:
        raise ConfigError("no estimators selected")
    tags = [e.tag for e in ests]
    if len(set(tags)) != len(tags):
        raise ConfigError(f"duplicate estimator columns: {tags}")
    return ests


def _base_dir(opts):
    cfg = opts.get("config")
    return Path(cfg).parent if cfg else Path.cwd()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_generate(opts) -> int:
    seed = opts.get("seed", DEFAULT_SEED, int)
    g, meta = _build_graph(opts, seed)
    notes = [f"{k}={v}" for k, v in meta.items() if k not in ("graph_id",)]
    with _sink(opts.get("output")) as fh:
        write_edge_list(g, fh, comments=[f"seed={seed}", *notes])
    _info(opts, f"N={g.num_nodes} edges={g.num_edges} sparsity={g.sparsity:.6g}")
    return EXIT_OK


def cmd_sample(opts) -> int:
    seed = opts.get("seed", DEFAULT_SEED, int)
    p = _probability("p", opts.require("p", float), allow_zero=True)
    g, _ = _build_graph(opts, seed)
    s = induced_subgraph_sample(g, p, derive_seed(seed, 1))
    with _sink(opts.get("output")) as fh:
        write_sample(s, fh)
    _info(opts, f"sampled n={s.n} of N={g.num_nodes}, edges={s.subgraph.num_edges}")
    return EXIT_OK


def cmd_estimate(opts) -> int:
    seed = opts.get("seed", DEFAULT_SEED, int)
    base = _base_dir(opts)
    cap = opts.get("cap", False, _flag)
    ests = _estimators(opts, base, cap=cap)
    sample_path = opts.get("sample")
    parent = None
    if sample_path:
        path = Path(sample_path)
        if not path.exists():
            raise ConfigError(f"sample file not found: {path}")
        with path.open("rb") as fh:
            s = load_sample(fh)
        if opts.get("graph"):
            parent = _load_graph(opts.get("graph"))
    else:
        p = _probability("p", opts.require("p", float))
        parent, _ = _build_graph(opts, seed)
        s = induced_subgraph_sample(parent, p, derive_seed(seed, 1))
    columns = {e.tag: e(s) for e in ests}
    with _sink(opts.get("output")) as fh:
        w = _csv_writer(fh)
        head = ["sampled_index", "parent_id", "d_star"]
        if parent is not None:
            head.append("true_degree")
        w.writerow(head + list(columns))
        truth = parent.degrees[s.parent_ids] if parent is not None else None
        for i in range(s.n):
            row = [i, int(s.parent_ids[i]), int(s.d_star[i])]
            if truth is not None:
                row.append(int(truth[i]))
            w.writerow(row + [_fmt(col[i]) for col in columns.values()])
    _info(opts, f"estimated {s.n} sampled nodes with {', '.join(columns)}")
    return EXIT_OK


def cmd_risk(opts) -> int:
    seed = opts.get("seed", DEFAULT_SEED, int)
    p = _probability("p", opts.require("p", float))
    reps = opts.get("replicates", 50, int)
    if reps < 1:
        raise ConfigError("replicates must be >= 1")
    ests = _estimators(opts, _base_dir(opts), cap=opts.get("cap", False, _flag))
    g, meta = _build_graph(opts, seed)
    report = monte_carlo_l2_risk(g, p, ests, reps, derive_seed(seed, 2),
                                 threads=opts.get("threads", 1, int), metadata=meta)
    with _sink(opts.get("output")) as fh:
        report.to_csv(fh)
    summary = ", ".join(f"{k}={v:.2f}" for k, v in report.means().items())
    _info(opts, f"mean l2 distance over {reps} replicates: {summary}")
    if report.empty_replicates:
        _info(opts, f"warning: {report.empty_replicates} empty samples counted as distance 0")
    return EXIT_OK


ER_GRID = [(pe, p) for p in (0.1, 0.2) for pe in (0.1, 0.2, 0.3, 0.4)]
SF_GRID = [(s, m) for m in (2.0, 2.5, 3.0) for s in (0.002, 0.01, 0.05)]


def reproduce_table(table: str, N: int = 1000, replicates: int = 50,
                    seed: int = DEFAULT_SEED, threads: int = 1, cells=None):
    """Run the simulation grid; returns a list of ``(cell_meta, {tag: mean})``.

    Each cell gets one parent graph and ``replicates`` induced samples.
    """
    rows = []
    grid = ER_GRID if table == "er" else SF_GRID if table == "sf" else None
    if grid is None:
        raise ConfigError(f"unknown table {table!r}; choose er or sf")
    for idx, cell in enumerate(grid):
        if cells is not None and idx not in cells:
            continue
        graph_seed = derive_seed(seed, idx, 0)
        if table == "er":
            pe, p = cell
            g = generate_er(N, pe, graph_seed)
            lam = (N - 1) * pe
            ests = [make_estimator("mme"), make_estimator("urm"), make_estimator("mrm"),
                    make_estimator("bayes", PoissonPrior(lam), tag="pois_lambda", cap=True),
                    make_estimator("eb_poisson", tag="pois_lambda_hat"),
                    make_estimator("bayes", PowerLawPrior(2.0, 1, N - 1), tag="poly", cap=True)]
            meta = {"graph_id": f"er_cell{idx}", "model": "er", "N": N, "p_e_or_s": pe,
                    "m": "", "p": p}
        else:
            s, m = cell
            p = 0.1
            design = design_power_law(N, m, s, graph_seed)
            g = design.graph
            ests = [make_estimator("mme"), make_estimator("urm"), make_estimator("mrm"),
                    make_estimator("bayes", PowerLawPrior(m, design.d_min, design.d_max),
                                   tag="true_prior", cap=True),
                    make_estimator("bayes", PowerLawPrior(2.0, design.d_min, design.d_max),
                                   tag="quad_prior", cap=True)]
            meta = {"graph_id": f"sf_cell{idx}", "model": "powerlaw", "N": N, "p_e_or_s": s,
                    "m": m, "p": p, "d_min": design.d_min, "d_max": design.d_max}
        report = monte_carlo_l2_risk(g, p, ests, replicates, derive_seed(seed, idx, 1),
                                     threads=threads, metadata=meta)
        meta["realized_sparsity"] = g.sparsity
        rows.append((idx, meta, report.means()))
    return rows


def cmd_reproduce(opts) -> int:
    table = opts.require("table")
    N = opts.get("N", 1000, int)
    reps = opts.get("replicates", 50, int)
    seed = opts.get("seed", DEFAULT_SEED, int)
    threads = opts.get("threads", 1, int)
    if reps < 1 or N < 2:
        raise ConfigError("need replicates >= 1 and N >= 2")
    rows = reproduce_table(table, N, reps, seed, threads)
    with _sink(opts.get("output")) as fh:
        w = _csv_writer(fh)
        w.writerow(["table", "cell", "model", "N", "p_e_or_s", "m", "p", "estimator",
                    "mean_l2", "is_min"])
        for idx, meta, means in rows:
            best = min(means.values())
            for tag, value in means.items():
                w.writerow([table, idx, meta["model"], meta["N"], _fmt(meta["p_e_or_s"]),
                            _fmt(meta["m"]), _fmt(meta["p"]), tag, _fmt(value),
                            _fmt(value == best)])
    for idx, meta, means in rows:
        best = min(means, key=means.get)
        cells = "  ".join(f"{k}={v:8.2f}{'*' if k == best else ' '}" for k, v in means.items())
        _info(opts, f"cell {idx} ({meta['p_e_or_s']:g}, m={meta['m']}, p={meta['p']:g}): {cells}")
    return EXIT_OK


def _parse_int_list(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def cmd_check_props(opts) -> int:
    which = _parse_int_list(opts.get("props", "1,2,3,4,5"))
    seed = opts.get("seed", DEFAULT_SEED, int)
    rows = []
    lines = []

    def add(prop, case, quantity, value, holds=""):
        rows.append([prop, case, quantity, _fmt(value), _fmt(holds) if holds != "" else ""])

    if 1 in which:
        violations = checked = 0
        for p in np.round(np.arange(0.05, 0.951, 0.05), 2):
            for d0 in range(1, 101):
                res = check_prop1(d0, float(p))
                if not res.condition_holds:
                    continue
                checked += 1
                if not res.urm_better:
                    violations += 1
                    add(1, f"d0={d0} p={p:g}", "risk_urm-risk_mme", res.risk_urm - res.risk_mme, False)
        add(1, "sweep", "checked", checked)
        add(1, "sweep", "violations", violations, violations == 0)
        lines.append(f"prop1: {checked} (d0, p) pairs checked, {violations} violations")

    if 2 in which:
        if opts.get("graph") or opts.get("N"):
            g, _ = _build_graph(opts, seed)
            p = _probability("p", opts.get("p", 0.1, float))
        else:
            g, p = from_edges(3, [(0, 1), (0, 2), (1, 2)]), 1.0
        s = induced_subgraph_sample(g, p, derive_seed(seed, 3))
        probe = check_prop2_class(s, 0.0, parent=g)
        alpha0 = opts.get("alpha0", None, float)
        alpha0 = probe.max_feasible_alpha0 if alpha0 is None else alpha0
        res = check_prop2_class(s, alpha0, parent=g)
        case = f"n={s.n} alpha0={alpha0:.6g}"
        add(2, case, "max_feasible_alpha0", res.max_feasible_alpha0)
        add(2, case, "in_G1", res.in_G1, res.in_G1)
        add(2, case, "lhs", res.lhs)
        add(2, case, "rhs_true", res.rhs_true)
        add(2, case, "rhs_sampled", res.rhs_sampled)
        add(2, case, "in_G2", res.in_G2, res.in_G2)
        lines.append(f"prop2: n={s.n}, max_feasible_alpha0={res.max_feasible_alpha0:.6g}, "
                     f"in_G1={res.in_G1}, in_G2={res.in_G2} (lhs={res.lhs:.6g}, rhs={res.rhs:.6g})")

    if 3 in which:
        if opts.get("graph") or opts.get("N"):
            g, _ = _build_graph(opts, seed)
        else:
            g = generate_er(1000, 0.1, derive_seed(seed, 4))
        p = _probability("p", opts.get("p", 0.1, float))
        priors = _priors(opts, _base_dir(opts))
        prior = priors[0] if priors else PoissonPrior(g.degrees.mean())
        node = opts.get("node", 0, int)
        if not 0 <= node < g.num_nodes:
            raise ConfigError(f"node {node} out of range")
        reps = opts.get("replicates", 200, int)
        res = check_prop3_conditions(prior, g, node, p, reps, derive_seed(seed, 5))
        case = f"node={node} d0={res.d0} prior={prior.label} p={p:g}"
        add(3, case, "expected_tail_sq_mc", res.expected_tail_sq_mc)
        add(3, case, "expected_tail_sq_exact", res.expected_tail_sq_exact)
        add(3, case, "cond6_rhs", res.cond6_rhs)
        add(3, case, "cond6", "n/a" if res.cond6 is None else res.cond6,
            "" if res.cond6 is None else res.cond6)
        add(3, case, "cond7_fraction", res.cond7_fraction)
        add(3, case, "cond7_capped_fraction", res.cond7_capped_fraction)
        add(3, case, "cond7", res.cond7, res.cond7)
        lines.append(f"prop3: {case}: cond6={'n/a' if res.cond6 is None else res.cond6} "
                     f"(E tail sq {res.expected_tail_sq_mc:.3g} vs {res.cond6_rhs:.3g}), "
                     f"cond7={res.cond7} ({res.cond7_fraction:.3f} of replicates)")

    if 4 in which:
        lam = opts.get("lambda_", None, float)
        lam = 5.0 if lam is None else lam
        p = _probability("p", opts.get("p", 0.3, float))
        prior = PoissonPrior(lam)
        failures = total = 0
        for eps in (1e-3, 1e-4):
            for mode in ("uniform", "adversarial"):
                pert = perturb_prior(prior, eps, mode)
                for k in range(11):
                    res = eb_approximation_check(prior, pert, eps, k, p)
                    total += 1
                    failures += not res.all_hold
                    case = f"eps={eps:g} {mode} d*={k}"
                    add(4, case, "zeroth_diff", res.zeroth_diff, res.zeroth_holds)
                    add(4, case, "zeroth_bound", res.zeroth_bound)
                    add(4, case, "first_diff", res.first_diff, res.first_holds)
                    add(4, case, "first_bound", res.first_bound)
                    add(4, case, "relative_change", res.relative_change, res.ratio_bound_holds)
                    add(4, case, "relative_bound", res.relative_bound)
        lines.append(f"prop4: Poisson({lam:g}) p={p:g}: {total - failures}/{total} cases satisfy all three bounds")

    if 5 in which:
        lam = opts.get("lambda_", None, float)
        lam = 100.0 if lam is None else lam
        p = _probability("p", opts.get("p", 0.1, float))
        lo, hi = poisson_bayes_dominance_interval(lam, p)
        add(5, f"lambda={lam:g} p={p:g}", "interval_lower", lo)
        add(5, f"lambda={lam:g} p={p:g}", "interval_upper", hi)
        bad = []
        for d0 in range(max(0, math.ceil(lo)), math.floor(hi) + 1):
            rb = exact_univariate_risk("bayes_poisson", d0, p, lam)
            rm = exact_univariate_risk("mme", d0, p)
            add(5, f"lambda={lam:g} p={p:g} d0={d0}", "risk_bayes-risk_mme", rb - rm, rb < rm)
            if not rb < rm:
                bad.append(d0)
        if p < 1:
            elo, ehi = exact_poisson_dominance_interval(lam, p)
            add(5, f"lambda={lam:g} p={p:g}", "exact_lower", elo)
            add(5, f"lambda={lam:g} p={p:g}", "exact_upper", ehi)
        lines.append(f"prop5: lambda={lam:g} p={p:g}: interval [{lo:.2f}, {hi:.2f}], "
                     f"Bayes risk not below MME at d0={bad or 'none'}")

    with _sink(opts.get("output")) as fh:
        w = _csv_writer(fh)
        w.writerow(["prop", "case", "quantity", "value", "holds"])
        w.writerows(rows)
    for line in lines:
        _info(opts, line)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "sample": cmd_sample,
    "estimate": cmd_estimate,
    "risk": cmd_risk,
    "reproduce": cmd_reproduce,
    "check-props": cmd_check_props,
}


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors, so they exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--config")
    common.add_argument("--output", "-o")
    common.add_argument("--replicates", type=int)
    common.add_argument("--threads", type=int)

    graph = argparse.ArgumentParser(add_help=False)
    graph.add_argument("--graph", help="edge-list file")
    graph.add_argument("--model", choices=["er", "powerlaw"])
    graph.add_argument("--N", "-N", type=int)
    graph.add_argument("--pe", type=float, help="ER edge probability")
    graph.add_argument("--s", type=float, help="power-law target sparsity")
    graph.add_argument("--m", type=float, help="power-law exponent")

    est = argparse.ArgumentParser(add_help=False)
    est.add_argument("--p", type=float, help="sampling probability")
    est.add_argument("--estimators", help=f"comma list from {','.join(ESTIMATOR_NAMES)}")
    est.add_argument("--prior", action="append",
                     help="prior spec, e.g. 'kind=poisson lambda=99.9' (repeatable)")
    est.add_argument("--cap", action="store_const", const=True,
                     help="cap Bayes sums at N-1")

    parser = _Parser(prog="degest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("generate", parents=[common, graph], help="generate a random graph")
    sp = sub.add_parser("sample", parents=[common, graph], help="draw an induced subgraph sample")
    sp.add_argument("--p", type=float)
    ep = sub.add_parser("estimate", parents=[common, graph, est], help="estimate sampled degrees")
    ep.add_argument("--sample", help="sample file written by 'degest sample'")
    sub.add_parser("risk", parents=[common, graph, est], help="Monte Carlo l2 risk")
    rp = sub.add_parser("reproduce", parents=[common], help="rerun a simulation table")
    rp.add_argument("--table", choices=["er", "sf"])
    rp.add_argument("--N", "-N", type=int)
    cp = sub.add_parser("check-props", parents=[common, graph], help="run the dominance checkers")
    cp.add_argument("--props", help="comma list of 1..5")
    cp.add_argument("--p", type=float)
    cp.add_argument("--lambda", dest="lambda_", type=float)
    cp.add_argument("--alpha0", type=float)
    cp.add_argument("--node", type=int)
    cp.add_argument("--prior", action="append")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = read_config(args.config) if args.config else {}
        if "lambda" in config:
            config.setdefault("lambda_", config["lambda"])
        opts = Options(args, config)
        return COMMANDS[args.command](opts)
    except (ConfigError, PriorSpecError, EdgeListError, FileNotFoundError, ValueError) as exc:
        print(f"degest: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PriorSupportError, PowerLawError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"degest: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
