import json
import math

import numpy as np
from pytest import mark, raises

from config import DEFAULT_SETTINGS
from utils import (complex_vector_from_json, dumps_json, format_number, load_config, pair_to_complex, parse_vector,
                   read_json_input, save_config)


def test_format_number_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17, math.pi):
        assert float(format_number(x)) == x


def test_format_number_special_values():
    assert format_number(float('nan')) == "NaN"
    assert format_number(float('inf')) == "Infinity"
    assert format_number(-float('inf')) == "-Infinity"


def test_dumps_json_nested():
    text = dumps_json({'a': [1, 0.1, None, True], 'b': np.array([1.5, 2.0]), 'c': 1 + 2j, 'd': np.float64(0.25)})
    assert json.loads(text) == {'a': [1, 0.1, None, True], 'b': [1.5, 2.0], 'c': [1.0, 2.0], 'd': 0.25}


def test_dumps_json_precision():
    assert json.loads(dumps_json([1 / 3]))[0] == 1 / 3


def test_dumps_json_rejects_objects():
    with raises(TypeError):
        dumps_json({'x': object()})


@mark.parametrize("value expected".split(), [
    ([1, 2], 1 + 2j),
    (3, 3 + 0j),
    ("1+2j", 1 + 2j),
    ("0.5 - 1j", 0.5 - 1j),
])
def test_pair_to_complex(value, expected):
    assert pair_to_complex(value) == expected


def test_pair_to_complex_bad_pair():
    with raises(ValueError):
        pair_to_complex([1, 2, 3])


def test_complex_vector_from_json():
    assert complex_vector_from_json([[0, 1], 2]) == [1j, 2]


def test_parse_vector():
    assert parse_vector("1,1,1") == [1.0, 1.0, 1.0]
    assert parse_vector("0.5, -2") == [0.5, -2.0]
    with raises(ValueError):
        parse_vector("1,a")


def test_read_json_input_inline_and_file(tmp_path):
    assert read_json_input('{"x": 1}') == {'x': 1}
    assert read_json_input(' [1, 2]') == [1, 2]
    path = tmp_path / "in.json"
    path.write_text('{"y": [0.5]}')
    assert read_json_input(str(path)) == {'y': [0.5]}
    with raises(ValueError):
        read_json_input(None)


def test_load_config_defaults():
    assert load_config() == DEFAULT_SETTINGS


def test_load_config_file_overrides(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"tol": 1e-12, "seed": 4}')
    config = load_config(str(path))
    assert config['tol'] == 1e-12 and config['seed'] == 4
    assert config['kind'] == DEFAULT_SETTINGS['kind']


def test_load_config_bad_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{not json')
    assert load_config(str(path)) == DEFAULT_SETTINGS


def test_save_config_round_trip(tmp_path):
    path = tmp_path / "config.json"
    config = dict(DEFAULT_SETTINGS, seed=9)
    assert save_config(config, str(path))
    assert load_config(str(path))['seed'] == 9


def test_config_through_database(tmp_path):
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    config = dict(DEFAULT_SETTINGS, tol=1e-11)
    assert save_config(config, str(tmp_path / "config.json"), url)
    assert load_config(None, url)['tol'] == 1e-11


def test_dumps_json_non_finite_is_null():
    text = dumps_json({'h': [float('nan'), np.float64('inf')], 'x': -float('inf')})
    assert json.loads(text) == {'h': [None, None], 'x': None}
    assert 'NaN' not in text and 'Infinity' not in text
