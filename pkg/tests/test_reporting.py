import json

import numpy as np
import pytest

from fqpatterns.reporting import config_hash, csv_text, json_text, jsonable, parse_config


def test_parse_config_literals_and_comments():
    text = """
    # experiment
    p = 3
    family = ["y", "y^2"]
    q_list = [9, 27, 81]   # increasing
    ensemble = sign
    threads = 4
    """
    cfg = parse_config(text)
    assert cfg == {"p": 3, "family": ["y", "y^2"], "q_list": [9, 27, 81], "ensemble": "sign", "threads": 4}


@pytest.mark.parametrize("bad", ["p 3", "bad key = 1"])
def test_parse_config_rejects_malformed_lines(bad):
    with pytest.raises(ValueError):
        parse_config(bad)


def test_config_hash_ignores_execution_only_keys():
    a = {"p": 3, "q": 27, "seed": 1, "threads": 1, "out": "a"}
    b = {"p": 3, "q": 27, "seed": 1, "threads": 8, "out": "b", "budget": 5.0}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({**a, "seed": 2})


def test_jsonable_rounds_and_casts():
    out = jsonable({"a": np.float64(1 / 3), "b": np.int64(4), "c": np.bool_(True), "d": (1.0, 2j), "e": float("nan")})
    assert out == {"a": 0.333333333333, "b": 4, "c": True, "d": [1.0, [0.0, 2.0]], "e": "nan"}
    json.dumps(out)


def test_stamped_outputs():
    cfg = {"p": 2, "q": 16, "threads": 3}
    doc = json.loads(json_text({"x": 1}, cfg))
    assert doc["tool"] == "fqpatterns" and doc["config_hash"] == config_hash(cfg)
    assert "threads" not in doc["config"]
    head, cols, row = csv_text(["a", "b"], [[1, 0.5]], cfg).splitlines()
    assert head.startswith("# fqpatterns ") and head.endswith(config_hash(cfg))
    assert cols == "a,b" and row == "1,0.5"
