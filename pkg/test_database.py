from pytest import fixture, raises

from database import (get_configuration, get_engine, get_instances, get_runs, save_configuration, save_instance,
                      save_run)
from restriction import generate_instance, instance_to_json


@fixture
def url(tmp_path):
    return f"sqlite:///{tmp_path / 'runs.db'}"


def test_engine_needs_url():
    with raises(ValueError):
        get_engine(None)


def test_engine_is_cached(url):
    assert get_engine(url) is get_engine(url)


def test_runs(url):
    save_run({'command': 'theta-eval', 'seed': 0, 'tol': 1e-10, 'exit_code': 0, 'summary': {'value': [1.0, 0.0]}},
             url)
    save_run({'command': 'toda-run', 'seed': 1, 'tol': 1e-10, 'exit_code': 1, 'summary': {}}, url)
    runs = get_runs(url)
    assert [r.command for r in runs] == ['toda-run', 'theta-eval']
    assert runs[1].summary_json == '{"value": [1.0, 0.0]}'
    assert [r.exit_code for r in get_runs(url, command='toda-run')] == [1]
    assert len(get_runs(url, limit=1)) == 1


def test_instances(url):
    obj = instance_to_json(generate_instance(1, kind='prym', g=1, seed=2))
    record = save_instance(obj, url)
    assert record.n == 2 and record.g_tilde == 3
    assert get_instances(url) == [obj]
    assert get_instances(url, kind='generic') == []


def test_configuration(url):
    assert get_configuration("default", url) is None
    save_configuration({'tol': 1e-9}, "default", url)
    save_configuration({'tol': 1e-11}, "default", url)
    assert get_configuration("default", url) == {'tol': 1e-11}
