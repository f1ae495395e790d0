import json

import pytest

from congest_ftp.graph_core import parse_edge_list
from congest_ftp.harness import (
    CSV_COLUMNS,
    AlgorithmOptions,
    ExperimentSpec,
    GraphSpec,
    choose_sources,
    generate,
    records_csv,
    records_json,
    run_experiment,
)


@pytest.mark.parametrize(
    "spec,n,m",
    [
        (GraphSpec("path", 6), 6, 5),
        (GraphSpec("cycle", 6), 6, 6),
        (GraphSpec("grid", rows=3, cols=4), 12, 17),
        (GraphSpec("lollipop", 10, cycle_length=4), 10, 10),
    ],
)
def test_deterministic_families(spec, n, m):
    g = generate(spec, 0)
    assert (g.n, g.m) == (n, m)
    assert g.is_connected()


@pytest.mark.parametrize(
    "spec",
    [
        GraphSpec("erdos_renyi", 40, p=0.1),
        GraphSpec("erdos_renyi", 40, avg_degree=4),
        GraphSpec("erdos_renyi", 40, p=0.03, connect="largest"),
        GraphSpec("random_geometric", 40, r=0.3),
    ],
)
def test_random_families_are_connected_and_seeded(spec):
    a, b = generate(spec, 7), generate(spec, 7)
    assert a == b and a.is_connected()


def test_bad_generator_arguments():
    with pytest.raises(ValueError):
        generate(GraphSpec("erdos_renyi", 10), 0)
    with pytest.raises(ValueError):
        generate(GraphSpec("nope", 10), 0)


def test_choose_sources():
    g = generate(GraphSpec("path", 10), 0)
    s = choose_sources(g, 3, 1)
    assert s == choose_sources(g, 3, 1) and len(set(s)) == 3
    with pytest.raises(ValueError):
        choose_sources(g, 11, 0)


def test_experiment_records_are_reproducible():
    spec = ExperimentSpec(GraphSpec("erdos_renyi", p=0.3), [14], [1, 2], [0], ["ftmbfs", "canonical"], verify=True)
    a = list(run_experiment(spec))
    b = list(run_experiment(spec))
    assert records_json(a) == records_json(b)
    assert len(a) == 4 and all(r.verify_pass for r in a)
    rows = records_csv(a).splitlines()
    assert rows[0].split(",") == list(CSV_COLUMNS)
    doc = json.loads(records_json(a))
    assert "wall_time" not in doc[0]


def test_spec_from_dict():
    spec = ExperimentSpec.from_dict(
        {"generator": {"kind": "cycle"}, "sizes": [8], "seeds": [1, 2], "algorithms": ["centralized"],
         "options": {"sample_prob": 0.0}}
    )
    assert spec.generator.kind == "cycle" and spec.options.sample_prob == 0.0
    assert len(list(spec.cells())) == 2
