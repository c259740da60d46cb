import json
import os

import numpy as np
import pytest

from src.data import (random_feasible_lp, random_lossy_network, random_regular_expander, read_gain_dimacs,
                      read_lp_json, read_op_stream, write_gain_dimacs, write_lp_json)
from src.utils.exceptions import ContractViolation, ParseError


def _write(tmp_path, name, text):
    path = os.path.join(str(tmp_path), name)
    with open(path, "w") as f:
        f.write(text)
    return path


def test_read_mincost_sample(samples_dir):
    net = read_gain_dimacs(os.path.join(samples_dir, "mincost_single.gmcf"))
    assert net.kind == "gmcf" and net.n_vertices == 2 and net.n_edges == 1
    assert list(net.tails) == [0] and list(net.heads) == [1]
    assert np.allclose(net.demand, [-2.0, 1.0])
    assert net.capacity[0] == 2.0 and net.cost[0] == 1.0 and net.gains[0] == 0.5


def test_read_maxflow_sample(samples_dir):
    net = read_gain_dimacs(os.path.join(samples_dir, "maxflow_two_hop.gmax"))
    assert net.kind == "gmax"
    assert (net.source, net.sink) == (0, 2)
    assert np.allclose(net.demand, 0.0)


@pytest.mark.parametrize("text, lineno", [
    ("p gmcf 2 1\na 1 3 1 0 1\n", 2),
    ("a 1 2 1 0 1\n", 1),
    ("p gmcf 2 2\na 1 2 1 0 1\n", 2),
    ("p gmax 2 1\nn 1 s\na 1 2 1 0 1\n", 3),
    ("p gmcf 2 1\na 1 2 1 0 -1\n", 2),
    ("p gmcf 2 1\nn 1 x\na 1 2 1 0 1\n", 2),
    ("p flow 2 1\n", 1),
    ("p gmcf 2 1\nz\n", 2),
])
def test_gain_dimacs_errors_name_the_line(tmp_path, text, lineno):
    path = _write(tmp_path, "bad.gmcf", text)
    with pytest.raises(ParseError) as info:
        read_gain_dimacs(path)
    assert info.value.lineno == lineno
    assert "{0}:{1}:".format(path, lineno) in str(info.value)


def test_gain_dimacs_write_read(tmp_path, rng):
    net = random_lossy_network(5, 8, rng)
    path = os.path.join(str(tmp_path), "net.gmcf")
    write_gain_dimacs(net, path)
    back = read_gain_dimacs(path)
    assert np.array_equal(back.tails, net.tails) and np.array_equal(back.heads, net.heads)
    assert np.allclose(back.gains, net.gains) and np.allclose(back.demand, net.demand)


def test_read_lp_sample(samples_dir):
    data = read_lp_json(os.path.join(samples_dir, "lp_20x8.json"))
    assert len(data.rows) == 20
    assert data.b.shape == (8,)
    assert data.delta == pytest.approx(1e-5)
    assert all(len(row) <= 2 for row in data.rows)


def test_lp_json_errors(tmp_path):
    base = {"rows": [[[0, 1.0]]], "b": [1.0], "c": [1.0], "l": [0.0], "u": [1.0]}

    for broken in ({k: v for k, v in base.items() if k != "c"},
                   dict(base, rows=[[[0, 1.0], [1, 1.0], [2, 1.0]]]),
                   dict(base, rows=[[[3, 1.0]]]),
                   dict(base, u=[1.0, 2.0]),
                   dict(base, version="v9")):
        path = _write(tmp_path, "bad.json", json.dumps(broken))
        with pytest.raises(ParseError):
            read_lp_json(path)

    with pytest.raises(ParseError):
        read_lp_json(_write(tmp_path, "broken.json", "{\"rows\": ["))


def test_lp_json_write_read(tmp_path):
    path = os.path.join(str(tmp_path), "lp.json")
    write_lp_json(path, [[(0, 1.0)], [(0, 1.0), (1, -2.0)]], [1.0, 0.0], [1.0, 2.0], [0.0, 0.0], [1.0, 1.0], delta=1e-4)
    data = read_lp_json(path)
    assert data.rows == [[(0, 1.0)], [(0, 1.0), (1, -2.0)]]
    assert data.delta == 1e-4


def test_read_op_stream_sample(samples_dir):
    stream = read_op_stream(os.path.join(samples_dir, "stream.hh"))
    assert stream.n_vertices == 6
    codes = [op.code for op in stream.ops]
    assert codes.count("I") == 8 and codes.count("Q") == 5 and codes.count("P") == 1
    query = stream.ops[7]
    assert query.code == "Q" and query.args[0] == 0.5
    assert np.allclose(query.args[1], [1.0, 0.0, -1.0, 0.5, 2.0, 0.0])


@pytest.mark.parametrize("text", [
    "I 0 1 1 1\n",
    "p hh 3\nI 0 0 1 1\n",
    "p hh 3\nD 0\n",
    "p hh 3\nI 0 1 1 1\nQ 1.0 missing.txt\n",
    "p hh 3\nX 1\n",
    "p hh 3\nI 0 1 1\n",
])
def test_op_stream_errors(tmp_path, text):
    with pytest.raises(ParseError):
        read_op_stream(_write(tmp_path, "bad.hh", text))


def test_generators(rng):
    g = random_regular_expander(10, 3, rng)
    assert g.n_edges == 15 and g.is_connected()
    assert np.all(g.degrees() == 3)
    with pytest.raises(ContractViolation):
        random_regular_expander(5, 3, rng)

    data = random_feasible_lp(12, 4, rng)
    assert len(data.rows) == 12 and data.b.shape == (4,)
    assert np.all(data.lower < data.upper)

    net = random_lossy_network(6, 10, rng)
    assert net.n_edges == 10
    assert np.all((net.gains >= 0.5) & (net.gains <= 1.0))
    assert net.demand.shape == (6,) and abs(net.demand.sum()) > 0

    gmax = random_lossy_network(4, 5, rng, kind="gmax")
    assert (gmax.source, gmax.sink) == (0, 3)
