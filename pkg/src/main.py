import csv
import functools
import io
import os
import sys
import time

import numpy as np
from tqdm import tqdm

from src.core.graph import LossyGraph, LossyLaplacianView
from src.core.lp import eliminate_fixed
from src.data.formats import read_gain_dimacs, read_lp_json, read_op_stream
from src.data.generators import balanced_orientation, random_regular_expander
from src.hh.general import GeneralLossyHh
from src.hh.parameters import HhParameters
from src.ipm.solvers import (maxflow_lp, mincost_lp, solve_generalized_maxflow, solve_generalized_mincost,
                             solve_two_sparse_lp)
from src.ipm.trace import IpmTrace
from src.oracles.heavy import exact_heavy_set
from src.oracles.lp import check_lp, lp_reference, lp_vertex_enumerate
from src.spectral.certificates import conductance_exact, sandwich_check, uniformity_ratio
from src.spectral.eigs import dense_eigs
from src.spectral.power import least_eigvec
from src.utils.common_utils import GlobalNames, Timer, dump_json, set_seed, should_trigger_by_steps
from src.utils.configs import load_configs, pretty_configs
from src.utils.exceptions import ContractViolation, ConvergenceError, InfeasibleError, ParseError
from src.utils.logging import *

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INFEASIBLE = 2
EXIT_CONTRACT = 3

DEFAULT_DELTA = 1e-5


# ================================================================================== #
# Shared plumbing

def _prepare(FLAGS, command):
    """Log file, merged configs and the seeded generator of one command run."""
    log_path = getattr(FLAGS, "log_path", None)
    if log_path:
        write_log_to_file(os.path.join(log_path, "%s-%s.log" % (command, time.strftime("%Y%m%d-%H%M%S"))))

    configs = load_configs(getattr(FLAGS, "config_path", None))
    if configs["hh_configs"]["debug_checks"]:
        set_verbosity("DEBUG")
    INFO(pretty_configs(configs))

    GlobalNames.SEED = FLAGS.seed
    set_seed(FLAGS.seed)

    return configs, np.random.default_rng(FLAGS.seed)


def _emit(FLAGS, payload):
    text = dump_json(payload)
    json_out = getattr(FLAGS, "json_out", None)
    if json_out:
        out_dir = os.path.dirname(json_out)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        with open(json_out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _trace(FLAGS, command):
    if not getattr(FLAGS, "trace", False):
        return None
    log_path = getattr(FLAGS, "log_path", None)
    return IpmTrace(log_dir=os.path.join(log_path, command) if log_path else None, tag=command)


def _delta(FLAGS, file_delta=None):
    if getattr(FLAGS, "delta", None) is not None:
        return float(FLAGS.delta)
    return DEFAULT_DELTA if file_delta is None else float(file_delta)


def command(name):
    """Turn the library exceptions of a command into exit codes and an error JSON."""

    def decorator(func):
        @functools.wraps(func)
        def wrapper(FLAGS):
            try:
                return func(FLAGS)
            except InfeasibleError as e:
                ERROR("{0}: {1}".format(name, e))
                _emit(FLAGS, {"command": name, "status": "infeasible", "error": str(e), "report": e.report})
                return EXIT_INFEASIBLE
            except ConvergenceError as e:
                ERROR("{0}: {1}".format(name, e))
                _emit(FLAGS, {"command": name, "status": "no_convergence", "error": str(e),
                              "trajectory": e.trajectory})
                return EXIT_CONTRACT
            except ParseError as e:
                ERROR("{0}: {1}".format(name, e))
                _emit(FLAGS, {"command": name, "status": "parse_error", "error": str(e),
                              "path": e.path, "lineno": e.lineno})
                return EXIT_CONTRACT
            except ContractViolation as e:
                ERROR("{0}: {1}".format(name, e))
                _emit(FLAGS, {"command": name, "status": "contract_violation", "error": str(e)})
                return EXIT_CONTRACT

        return wrapper

    return decorator


def _oracle_section(report, delta):
    out = report.as_dict()
    out["oracle_gap_within_delta"] = bool(report.details["oracle_gap"] <= delta)
    return out


# ================================================================================== #
# LP and flow solvers

@command("solve-lp")
def solve_lp(FLAGS):
    """
    FLAGS:
        input: LP JSON file
        delta: float, default from the file or 1e-5
        seed, config_path, log_path, trace, json_out, check_oracle
    """
    configs, rng = _prepare(FLAGS, "solve-lp")
    timer = Timer()

    data = read_lp_json(FLAGS.input)
    delta = _delta(FLAGS, data.delta)
    inst, fixed, offset = eliminate_fixed(data.rows, data.b.shape[0], data.b, data.c, data.lower, data.upper)
    INFO("solve-lp: {0} variables ({1} fixed), {2} constraints, delta={3}".format(
        inst.m + fixed.n_fixed, fixed.n_fixed, inst.n, delta))

    trace = _trace(FLAGS, "solve-lp")
    timer.tic()
    sol = solve_two_sparse_lp(inst, delta, configs=configs, rng=rng, trace=trace)
    INFO("Done. Elapsed time {0}".format(timer.toc()))
    if trace is not None:
        trace.close()

    out = sol.as_dict(with_trace=FLAGS.trace)
    out.update(command="solve-lp", status="ok", delta=delta, x=fixed.expand(sol.x), objective=sol.objective + offset)

    code = EXIT_OK
    if FLAGS.check_oracle:
        report = check_lp(inst, sol.x, delta, budget=configs["bench_configs"]["enumeration_budget"])
        out["oracle"] = _oracle_section(report, delta)
        code = EXIT_OK if report.passed else EXIT_CHECK_FAILED

    _emit(FLAGS, out)
    return code


def _network(FLAGS, kind):
    net = read_gain_dimacs(FLAGS.input)
    if net.kind != kind:
        raise ContractViolation("Invalid problem kind '{0}' provided; '{1}' expected.".format(net.kind, kind))
    return net


@command("solve-mincost")
def solve_mincost(FLAGS):
    """
    FLAGS:
        input: GainDimacs file with a ``p gmcf`` header
        delta, seed, config_path, log_path, trace, json_out, check_oracle
    """
    configs, rng = _prepare(FLAGS, "solve-mincost")
    net = _network(FLAGS, "gmcf")
    delta = _delta(FLAGS)

    trace = _trace(FLAGS, "solve-mincost")
    sol = solve_generalized_mincost(net.n_vertices, net.tails, net.heads, net.gains, net.cost, net.capacity,
                                    net.demand, delta=delta, configs=configs, rng=rng, trace=trace)
    if trace is not None:
        trace.close()

    out = sol.as_dict(with_trace=FLAGS.trace)
    out.update(command="solve-mincost", status="ok", delta=delta)

    code = EXIT_OK
    if FLAGS.check_oracle:
        inst, _ = mincost_lp(net.n_vertices, net.tails, net.heads, net.gains, net.cost, net.capacity, net.demand)
        report = check_lp(inst, sol.lp.x, delta, budget=configs["bench_configs"]["enumeration_budget"])
        out["oracle"] = _oracle_section(report, delta)
        code = EXIT_OK if report.passed else EXIT_CHECK_FAILED

    _emit(FLAGS, out)
    return code


@command("solve-maxflow")
def solve_maxflow(FLAGS):
    """
    FLAGS:
        input: GainDimacs file with a ``p gmax`` header
        delta, seed, config_path, log_path, trace, json_out, check_oracle
    """
    configs, rng = _prepare(FLAGS, "solve-maxflow")
    net = _network(FLAGS, "gmax")
    delta = _delta(FLAGS)

    trace = _trace(FLAGS, "solve-maxflow")
    sol = solve_generalized_maxflow(net.n_vertices, net.tails, net.heads, net.gains, net.capacity,
                                    net.source, net.sink, delta=delta, configs=configs, rng=rng, trace=trace)
    if trace is not None:
        trace.close()

    out = sol.as_dict(with_trace=FLAGS.trace)
    out.update(command="solve-maxflow", status="ok", delta=delta)

    code = EXIT_OK
    if FLAGS.check_oracle:
        inst, _, _ = maxflow_lp(net.n_vertices, net.tails, net.heads, net.gains, net.capacity, net.source, net.sink)
        report = check_lp(inst, sol.lp.x, delta, budget=configs["bench_configs"]["enumeration_budget"])
        out["oracle"] = _oracle_section(report, delta)
        # the LP minimises the negated inflow at the sink
        out["oracle"]["reference_value"] = -report.reference
        code = EXIT_OK if report.passed else EXIT_CHECK_FAILED

    _emit(FLAGS, out)
    return code


# ================================================================================== #
# Reference runs

@command("oracle")
def oracle(FLAGS):
    """
    FLAGS:
        input: LP JSON (``.json``) or GainDimacs file
        seed, config_path, log_path, json_out
    """
    configs, _ = _prepare(FLAGS, "oracle")
    budget = configs["bench_configs"]["enumeration_budget"]

    sign = 1.0
    if FLAGS.input.endswith(".json"):
        data = read_lp_json(FLAGS.input)
        inst, fixed, offset = eliminate_fixed(data.rows, data.b.shape[0], data.b, data.c, data.lower, data.upper)
        kind = "lp"
    else:
        net = read_gain_dimacs(FLAGS.input)
        kind = net.kind
        offset = 0.0
        if kind == "gmax":
            inst, fixed, _ = maxflow_lp(net.n_vertices, net.tails, net.heads, net.gains, net.capacity,
                                        net.source, net.sink)
            sign = -1.0
        else:
            inst, fixed = mincost_lp(net.n_vertices, net.tails, net.heads, net.gains, net.cost, net.capacity,
                                     net.demand)

    ref = lp_vertex_enumerate(inst, budget=budget)
    if not ref.feasible:
        raise InfeasibleError("The reference finds no feasible point.", report={"method": ref.method})
    cross = lp_reference(inst)

    out = {
        "command": "oracle",
        "status": "ok",
        "kind": kind,
        "method": ref.method,
        "n_patterns": ref.n_patterns,
        "value": sign * ref.value + offset,
        "x": fixed.expand(ref.x),
        "highs_value": sign * cross.value + offset if cross.feasible else None,
    }
    out["agree"] = bool(cross.feasible and abs(cross.value - ref.value) <= 1e-6 * (1.0 + abs(ref.value)))
    _emit(FLAGS, out)
    return EXIT_OK if out["agree"] else EXIT_CHECK_FAILED


# ================================================================================== #
# Heavy-hitter benchmark

class _MirrorEdges(object):
    """Plain record of the live edges, kept next to the structure for the exact scan."""

    def __init__(self, n_vertices):
        self.n_vertices = n_vertices
        self.edges = {}

    def dense(self):
        ids = np.array(sorted(self.edges), dtype=np.int64)
        a = np.zeros((ids.shape[0], self.n_vertices))
        g = np.zeros(ids.shape[0])
        for k, e in enumerate(ids):
            tail, head, eta, weight = self.edges[e]
            a[k, head] += 1.0
            a[k, tail] -= eta
            g[k] = weight
        return ids, a, g


@command("hh-bench")
def hh_bench(FLAGS):
    """
    FLAGS:
        input: operation stream (``p hh n`` header, I/D/S/T/Q/P lines)
        seed, config_path, log_path, json_out
    """
    configs, rng = _prepare(FLAGS, "hh-bench")
    bench_configs = configs["bench_configs"]

    stream = read_op_stream(FLAGS.input)
    inserts = [op for op in stream.ops if op.code == "I"]
    params = HhParameters.from_configs(max(len(inserts), 2), configs["hh_configs"], configs["spectral_configs"])
    g_ref = min((op.args[3] for op in inserts), default=1.0)

    state = GeneralLossyHh(stream.n_vertices, params=params, g_ref=g_ref, rng=rng)
    mirror = _MirrorEdges(stream.n_vertices)

    results = []
    mismatches = 0
    invariant_failures = []
    counts = {code: 0 for code in "IDSTQP"}

    progress = tqdm(total=len(stream.ops), desc=' - (hh-bench) ', unit="ops", file=sys.stderr)
    for step, op in enumerate(stream.ops, 1):
        counts[op.code] += 1

        if op.code == "I":
            tail, head, eta, g = op.args
            e = state.insert(tail, head, eta, g)
            mirror.edges[e] = (tail, head, eta, g)
        elif op.code == "D":
            state.delete(op.args[0])
            del mirror.edges[op.args[0]]
        elif op.code == "S":
            e, g = op.args
            state.scale(e, g)
            tail, head, eta, _ = mirror.edges[e]
            mirror.edges[e] = (tail, head, eta, g)
        elif op.code == "T":
            state.scale_tau(*op.args)
        elif op.code == "Q":
            eps, h = op.args
            answer = state.query_heavy(h, eps)
            ids, a, g = mirror.dense()
            exact = ids[exact_heavy_set(a, h, eps, g=g)] if ids.size else np.zeros(0, dtype=np.int64)
            missing = np.setdiff1d(exact, answer)
            extra = np.setdiff1d(answer, exact)
            if missing.size or extra.size:
                mismatches += 1
                WARN("hh-bench: line {0} misses {1} and over-reports {2} edges".format(
                    op.lineno, missing.size, extra.size))
            results.append({"line": op.lineno, "op": "Q", "heavy": answer, "missing": missing, "extra": extra})
        else:
            c0, c1, c2, c3, h = op.args
            r = state.sample(h, c0 * bench_configs["C0"], c1, c2, c3)
            results.append({"line": op.lineno, "op": "P", "edges": r.edges, "values": r.values,
                            "n_draws": r.n_draws})

        if should_trigger_by_steps(step, bench_configs["check_every"]) or step == len(stream.ops):
            failed = sorted(k for k, ok in state.check_invariants().items() if not ok)
            if failed:
                invariant_failures.append({"line": op.lineno, "failed": failed})
                WARN("hh-bench: invariants {0} fail after line {1}".format(failed, op.lineno))

        progress.update(1)
    progress.close()

    INFO("hh-bench: {0} ops, {1} queries, {2} mismatches".format(len(stream.ops), counts["Q"], mismatches))

    out = {
        "command": "hh-bench",
        "status": "ok",
        "n_vertices": stream.n_vertices,
        "op_counts": counts,
        "mismatches": mismatches,
        "invariant_failures": invariant_failures,
        "parameters": {"phi": params.phi, "beta": params.beta, "eps_ad": params.eps_ad},
        "counters": state.counter_summary(),
        "results": results,
    }
    _emit(FLAGS, out)
    return EXIT_OK if mismatches == 0 and not invariant_failures else EXIT_CHECK_FAILED


# ================================================================================== #
# Spectral report

_REPORT_COLUMNS = ("graph", "n", "m", "beta", "phi", "lambda1", "lambda2", "uniformity_ratio",
                   "rayleigh", "c_lo", "c_hi", "bound_lo", "bound_hi", "certified")


def _report_graphs(FLAGS, rng):
    if FLAGS.input:
        for path in FLAGS.input:
            net = read_gain_dimacs(path)
            graph, _ = LossyGraph.from_gains(net.n_vertices, net.tails, net.heads, net.gains)
            yield os.path.basename(path), graph
        return

    betas = [float(b) for b in FLAGS.betas.split(",")]
    for k in range(FLAGS.n_graphs):
        base = random_regular_expander(FLAGS.n, FLAGS.degree, rng)
        for beta in betas:
            yield "expander{0}-beta{1:g}".format(k, beta), balanced_orientation(base, beta, rng)


def spectral_row(name, graph, params, rng):
    """One CSV row: balance, conductance, the bottom of the spectrum and the sandwich constants."""
    view = LossyLaplacianView(graph)
    d = view.d
    eps_ad = params.eps_ad

    values = dense_eigs(view.normalized(d=d, eps_ad=eps_ad)).values
    least = least_eigvec(view, d, eps_ad, seed=rng, restarts=params.power_restarts, dense_limit=params.dense_limit)
    c2 = max(1.0, least.rayleigh / values[0]) if values[0] > 0 else 1.0
    cert = sandwich_check(view, d, least.v, least.rayleigh, eps_ad, 1.0, c2, name=name)

    return {
        "graph": name,
        "n": graph.n_vertices,
        "m": graph.n_edges,
        "beta": graph.balance(),
        "phi": conductance_exact(graph, seed=rng),
        "lambda1": float(values[0]),
        "lambda2": float(values[1]) if values.shape[0] > 1 else float(values[0]),
        "uniformity_ratio": uniformity_ratio(view),
        "rayleigh": least.rayleigh,
        "c_lo": cert.c_lo,
        "c_hi": cert.c_hi,
        "bound_lo": cert.bound_lo,
        "bound_hi": cert.bound_hi,
        "certified": cert.certified,
    }


def _csv_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "{0:.12g}".format(value)
    return str(value)


@command("spectral-report")
def spectral_report(FLAGS):
    """
    FLAGS:
        input: GainDimacs files (optional); random balanced expanders otherwise
        n, degree, n_graphs, betas: generator settings
        csv_out: path of the CSV (stdout by default)
        seed, config_path, log_path, json_out
    """
    configs, rng = _prepare(FLAGS, "spectral-report")

    rows = []
    graphs = list(_report_graphs(FLAGS, rng))
    for name, graph in tqdm(graphs, desc=' - (spectral) ', unit="graphs", file=sys.stderr):
        params = HhParameters.from_configs(max(graph.n_edges, 2), configs["hh_configs"], configs["spectral_configs"])
        rows.append(spectral_row(name, graph, params, rng))

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_REPORT_COLUMNS)
    for row in rows:
        writer.writerow([_csv_value(row[k]) for k in _REPORT_COLUMNS])

    if FLAGS.csv_out:
        with open(FLAGS.csv_out, "w") as f:
            f.write(buffer.getvalue())
    else:
        sys.stdout.write(buffer.getvalue())

    if getattr(FLAGS, "json_out", None):
        _emit(FLAGS, {"command": "spectral-report", "status": "ok", "rows": rows})

    INFO("spectral-report: {0} graphs, {1} certified".format(len(rows), sum(r["certified"] for r in rows)))
    return EXIT_OK
