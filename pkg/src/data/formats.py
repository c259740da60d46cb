import json
import os
from typing import NamedTuple, Union

import numpy as np

from src.utils.exceptions import ParseError

__all__ = [
    'GainNetwork',
    'LpData',
    'StreamOp',
    'OpStream',
    'LineFormat',
    'GainDimacsFormat',
    'OpStreamFormat',
    'read_gain_dimacs',
    'write_gain_dimacs',
    'read_lp_json',
    'write_lp_json',
    'read_op_stream',
    'read_vector'
]

FORMAT_VERSION = "v1"


class GainNetwork(object):
    """A generalized flow network as read from a GainDimacs file (0-based vertices, gamma form)."""

    def __init__(self, kind, n_vertices, tails, heads, capacity, cost, gains, demand=None, source=None, sink=None):
        self.kind = kind
        self.n_vertices = n_vertices
        self.tails = np.asarray(tails, dtype=np.int64)
        self.heads = np.asarray(heads, dtype=np.int64)
        self.capacity = np.asarray(capacity, dtype=np.float64)
        self.cost = np.asarray(cost, dtype=np.float64)
        self.gains = np.asarray(gains, dtype=np.float64)
        self.demand = np.zeros(n_vertices) if demand is None else np.asarray(demand, dtype=np.float64)
        self.source = source
        self.sink = sink

    @property
    def n_edges(self):
        return self.tails.shape[0]


class LpData(NamedTuple):
    rows: list
    b: np.ndarray
    c: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    delta: Union[float, None]


class StreamOp(NamedTuple):
    code: str  # I, D, S, T, Q or P
    args: tuple
    lineno: int


class OpStream(NamedTuple):
    n_vertices: int
    ops: list


class LineFormat(object):
    """
    Reads a line-oriented text format. Subclasses override ``_apply`` which turns
    the tokens of one line into state; comment and blank lines never reach it.
    """

    comment = "c"

    def __init__(self, path):
        self.path = path
        self.header = None

    def _fail(self, lineno, message):
        raise ParseError(message, path=self.path, lineno=lineno)

    def _apply(self, lineno, tokens):
        raise NotImplementedError

    def _finish(self, lineno):
        raise NotImplementedError

    def _number(self, lineno, token, kind=float):
        try:
            return kind(token)
        except ValueError:
            self._fail(lineno, "Invalid number '{}' provided.".format(token))

    def read(self, lines=None):
        if lines is None:
            with open(self.path) as f:
                lines = f.read().splitlines()

        lineno = 0
        for lineno, line in enumerate(lines, start=1):
            tokens = line.split()
            if not tokens or tokens[0] == self.comment:
                continue
            self._apply(lineno, tokens)

        return self._finish(lineno)


class GainDimacsFormat(LineFormat):
    """``p gmcf n m`` / ``p gmax n m`` header, ``n`` node lines and ``a tail head cap cost gain`` arcs."""

    def __init__(self, path):
        super(GainDimacsFormat, self).__init__(path)
        self.arcs = []
        self.demand = None
        self.terminals = {}

    def _apply(self, lineno, tokens):
        code = tokens[0]

        if code == "p":
            if self.header is not None:
                self._fail(lineno, "Duplicate problem line.")
            if len(tokens) != 4 or tokens[1] not in ("gmcf", "gmax"):
                self._fail(lineno, "Problem line must read 'p gmcf|gmax n m'.")
            n, m = self._number(lineno, tokens[2], int), self._number(lineno, tokens[3], int)
            if n <= 0 or m < 0:
                self._fail(lineno, "Invalid sizes n={0}, m={1}.".format(n, m))
            self.header = (tokens[1], n, m)
            self.demand = np.zeros(n)
            return

        if self.header is None:
            self._fail(lineno, "Line before the problem line.")
        kind, n, _ = self.header

        if code == "n":
            if len(tokens) != 3:
                self._fail(lineno, "Node line must read 'n <id> <value>'.")
            v = self._vertex(lineno, tokens[1], n)
            if kind == "gmax":
                if tokens[2] not in ("s", "t"):
                    self._fail(lineno, "Node role must be 's' or 't', got '{}'.".format(tokens[2]))
                if tokens[2] in self.terminals:
                    self._fail(lineno, "Second '{}' node.".format(tokens[2]))
                self.terminals[tokens[2]] = v
            else:
                self.demand[v] = self._number(lineno, tokens[2])
        elif code == "a":
            if len(tokens) != 6:
                self._fail(lineno, "Arc line must read 'a <tail> <head> <capacity> <cost> <gain>'.")
            a, b = self._vertex(lineno, tokens[1], n), self._vertex(lineno, tokens[2], n)
            cap, cost, gain = (self._number(lineno, t) for t in tokens[3:6])
            if cap <= 0:
                self._fail(lineno, "Capacity must be positive, got {0}.".format(cap))
            if gain <= 0:
                self._fail(lineno, "Gain must be positive, got {0}.".format(gain))
            self.arcs.append((a, b, cap, cost, gain))
        else:
            self._fail(lineno, "Unknown line type '{}'.".format(code))

    def _vertex(self, lineno, token, n):
        v = self._number(lineno, token, int)
        if not 1 <= v <= n:
            self._fail(lineno, "Vertex id {0} outside of [1, {1}].".format(v, n))
        return v - 1

    def _finish(self, lineno):
        if self.header is None:
            self._fail(lineno, "Missing problem line.")
        kind, n, m = self.header
        if len(self.arcs) != m:
            self._fail(lineno, "Header announces {0} arcs, found {1}.".format(m, len(self.arcs)))
        if kind == "gmax" and set(self.terminals) != {"s", "t"}:
            self._fail(lineno, "A gmax file needs one 's' and one 't' node.")

        arcs = np.array(self.arcs, dtype=np.float64).reshape(m, 5)
        return GainNetwork(kind, n, arcs[:, 0].astype(np.int64), arcs[:, 1].astype(np.int64),
                           arcs[:, 2], arcs[:, 3], arcs[:, 4],
                           demand=self.demand if kind == "gmcf" else None,
                           source=self.terminals.get("s"), sink=self.terminals.get("t"))


def read_gain_dimacs(path):
    return GainDimacsFormat(path).read()


def write_gain_dimacs(net, path):
    lines = ["c {0}".format(FORMAT_VERSION), "p {0} {1} {2}".format(net.kind, net.n_vertices, net.n_edges)]
    if net.kind == "gmax":
        lines.append("n {0} s".format(net.source + 1))
        lines.append("n {0} t".format(net.sink + 1))
    else:
        lines.extend("n {0} {1!r}".format(v + 1, float(d)) for v, d in enumerate(net.demand) if d != 0)
    for e in range(net.n_edges):
        lines.append("a {0} {1} {2!r} {3!r} {4!r}".format(net.tails[e] + 1, net.heads[e] + 1, float(net.capacity[e]),
                                                          float(net.cost[e]), float(net.gains[e])))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_lp_json(path):
    """LP JSON with ``rows`` of ``[col, val]`` pairs (0-based columns), ``b``, ``c``, ``l``, ``u`` and ``delta``."""
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError("Invalid JSON: {0}".format(e.msg), path=path, lineno=e.lineno)

    for key in ("rows", "b", "c", "l", "u"):
        if key not in data:
            raise ParseError("Missing field '{}'.".format(key), path=path, lineno=1)
    version = data.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ParseError("Unsupported version '{}'.".format(version), path=path, lineno=1)

    rows = []
    for i, row in enumerate(data["rows"]):
        try:
            pairs = [(int(j), float(v)) for j, v in row]
        except (TypeError, ValueError):
            raise ParseError("Row {0} must be a list of [col, val] pairs.".format(i), path=path, lineno=1)
        if len(pairs) > 2:
            raise ParseError("Row {0} has {1} entries; at most 2 are allowed.".format(i, len(pairs)),
                             path=path, lineno=1)
        rows.append(pairs)

    try:
        vectors = [np.asarray(data[k], dtype=np.float64).reshape(-1) for k in ("b", "c", "l", "u")]
    except (TypeError, ValueError):
        raise ParseError("Fields b, c, l and u must be lists of numbers.", path=path, lineno=1)

    b, c, lower, upper = vectors
    if not (c.shape[0] == lower.shape[0] == upper.shape[0] == len(rows)):
        raise ParseError("c, l and u need one entry per row ({0}).".format(len(rows)), path=path, lineno=1)
    if rows and max((j for row in rows for j, _ in row), default=-1) >= b.shape[0]:
        raise ParseError("A row refers to a column beyond len(b) = {0}.".format(b.shape[0]), path=path, lineno=1)

    delta = data.get("delta")
    return LpData(rows, b, c, lower, upper, None if delta is None else float(delta))


def write_lp_json(path, rows, b, c, lower, upper, delta=None):
    data = {"version": FORMAT_VERSION,
            "rows": [[[int(j), float(v)] for j, v in row] for row in rows],
            "b": [float(v) for v in b], "c": [float(v) for v in c],
            "l": [float(v) for v in lower], "u": [float(v) for v in upper]}
    if delta is not None:
        data["delta"] = float(delta)
    with open(path, "w") as f:
        json.dump(data, f, sort_keys=True)
        f.write("\n")


def read_vector(path):
    """Whitespace separated floats."""
    try:
        return np.loadtxt(path, dtype=np.float64, ndmin=1).reshape(-1)
    except (OSError, ValueError) as e:
        raise ParseError("Cannot read vector: {0}".format(e), path=path, lineno=None)


class OpStreamFormat(LineFormat):
    """Heavy-hitter operation streams: ``p hh n`` then ``I/D/S/T/Q/P`` lines.

    Query vectors are read from files named relative to the stream file.
    """

    comment = "#"
    _ARITY = {"I": 4, "D": 1, "S": 2, "T": 2, "Q": 2, "P": 5}

    def __init__(self, path):
        super(OpStreamFormat, self).__init__(path)
        self.ops = []
        self.n_edges = 0
        self._vectors = {}

    def _vector(self, lineno, name):
        full = os.path.join(os.path.dirname(self.path), name)
        if full not in self._vectors:
            if not os.path.exists(full):
                self._fail(lineno, "Query vector file '{}' not found.".format(name))
            self._vectors[full] = read_vector(full)
        h = self._vectors[full]
        if h.shape[0] != self.header:
            self._fail(lineno, "Query vector has {0} entries, {1} expected.".format(h.shape[0], self.header))
        return h

    def _apply(self, lineno, tokens):
        code = tokens[0]
        if code == "p":
            if len(tokens) != 3 or tokens[1] != "hh":
                self._fail(lineno, "Header must read 'p hh <n>'.")
            self.header = self._number(lineno, tokens[2], int)
            return
        if self.header is None:
            self._fail(lineno, "Operation before the 'p hh <n>' header.")
        if code not in self._ARITY:
            self._fail(lineno, "Unknown operation '{}'.".format(code))
        if len(tokens) - 1 != self._ARITY[code]:
            self._fail(lineno, "Operation '{0}' takes {1} arguments.".format(code, self._ARITY[code]))

        args = tokens[1:]
        if code == "I":
            i, j = self._number(lineno, args[0], int), self._number(lineno, args[1], int)
            if not (0 <= i < self.header and 0 <= j < self.header) or i == j:
                self._fail(lineno, "Invalid edge ({0}, {1}).".format(i, j))
            op = (i, j, self._number(lineno, args[2]), self._number(lineno, args[3]))
            self.n_edges += 1
        elif code == "D":
            op = (self._edge(lineno, args[0]),)
        elif code in ("S", "T"):
            op = (self._edge(lineno, args[0]), self._number(lineno, args[1]))
        elif code == "Q":
            op = (self._number(lineno, args[0]), self._vector(lineno, args[1]))
        else:
            op = tuple(self._number(lineno, a) for a in args[:4]) + (self._vector(lineno, args[4]),)
        self.ops.append(StreamOp(code, op, lineno))

    def _edge(self, lineno, token):
        e = self._number(lineno, token, int)
        if not 0 <= e < self.n_edges:
            self._fail(lineno, "Edge id {0} was never inserted.".format(e))
        return e

    def _finish(self, lineno):
        if self.header is None:
            self._fail(lineno, "Missing 'p hh <n>' header.")
        return OpStream(self.header, self.ops)


def read_op_stream(path):
    return OpStreamFormat(path).read()

