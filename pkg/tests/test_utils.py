import json
import logging
import os

import numpy as np
import pytest

from src.utils.common_utils import (Collections, as_generator, dump_json, should_trigger_by_steps,
                                    spawn_generators)
from src.utils.configs import add_default_configs, default_configs, load_configs, pretty_configs
from src.utils.exceptions import ContractViolation, ParseError
from src.utils.logging import GlobalLogger, set_verbosity


def test_load_configs_merges_defaults(tmp_path):
    path = os.path.join(str(tmp_path), "run.yaml")
    with open(path, "w") as f:
        f.write("hh_configs:\n  phi: 0.1\n  debug_checks: true\n")

    configs = load_configs(path)
    assert configs["hh_configs"]["phi"] == 0.1
    assert configs["hh_configs"]["debug_checks"] is True
    assert configs["hh_configs"]["vertex_constant"] == 6.0
    assert configs["ipm_configs"]["C"] == 100.0
    assert load_configs()["bench_configs"]["enumeration_budget"] == 1 << 22


def test_default_configs_rejects_unknown_section():
    with pytest.raises(ValueError):
        default_configs({"model_configs": {}})


def test_add_default_configs_keeps_user_values():
    merged = add_default_configs({"a": {"x": 2}}, {"a": {"x": 1, "y": 3}, "b": 4})
    assert merged == {"a": {"x": 2, "y": 3}, "b": 4}
    assert pretty_configs({"a": {"x": 2}}) == "a:\n  x: 2"


def test_dump_json_is_canonical():
    text = dump_json({"b": np.float64(1.5), "a": np.arange(3), "c": np.bool_(True)})
    assert json.loads(text) == {"a": [0, 1, 2], "b": 1.5, "c": True}
    assert text.index('"a"') < text.index('"b"')
    assert text == dump_json({"c": True, "a": [0, 1, 2], "b": 1.5})


def test_generators_are_deterministic():
    a = [g.random() for g in spawn_generators(7, 3)]
    b = [g.random() for g in spawn_generators(7, 3)]
    assert a == b and len(set(a)) == 3
    rng = np.random.default_rng(1)
    assert as_generator(rng) is rng


def test_should_trigger_by_steps():
    assert should_trigger_by_steps(10, 5)
    assert not should_trigger_by_steps(11, 5)
    assert not should_trigger_by_steps(10, 0)
    assert should_trigger_by_steps(11, 5, debug=True)


def test_collections():
    c = Collections()
    c.add_to_collection("mu", 1.0)
    c.add_to_collection("mu", 0.5)
    assert c.get_collection("mu") == [1.0, 0.5]
    assert c.get_collection("missing") == []
    assert c.keys() == ["mu"]


def test_set_verbosity():
    logger = logging.getLogger("lossyflow")
    with GlobalLogger.verbosity("WARNING"):
        assert not logger.isEnabledFor(logging.INFO)
        set_verbosity("DEBUG")
        assert logger.isEnabledFor(logging.DEBUG)
    assert logger.level == logging.INFO


def test_parse_error_is_a_contract_violation():
    e = ParseError("bad header", path="x.gmcf", lineno=3)
    assert isinstance(e, ContractViolation) and isinstance(e, ValueError)
    assert str(e).startswith("x.gmcf:3:")
