from __future__ import annotations

import pytest

from knotineq.graph import load_graph
from knotineq.ingest import ColumnMapping, SupplementTable, build_database, parse_knotinfo_csv
from knotineq.model import Registry, data_path
from knotineq.propagate import propagate

FIXTURE_CSV = data_path("fixtures/knotinfo_le9.csv")
FIXTURE_SUPPLEMENT = data_path("fixtures/supplement_le9.csv")
FIXTURE_DIFF = data_path("fixtures/diff_le9_golden.csv")


@pytest.fixture(scope="session")
def registry():
    return Registry.load()


@pytest.fixture(scope="session")
def graph():
    return load_graph()


@pytest.fixture(scope="session")
def mapping(registry):
    return ColumnMapping.load(registry=registry)


@pytest.fixture(scope="session")
def fixture_db(registry, mapping):
    """The <=9-crossing fixture after ingest, before propagation."""
    raw = parse_knotinfo_csv(FIXTURE_CSV.read_text(encoding="utf-8"), mapping)
    return build_database(raw, [SupplementTable.load(FIXTURE_SUPPLEMENT)], registry)


@pytest.fixture(scope="session")
def fixture_new(fixture_db, graph):
    return propagate(fixture_db, graph)


@pytest.fixture(scope="session")
def full_knotinfo(registry, mapping):
    """KnotInfo through 13 crossings, ingested without supplements (slow, cached)."""
    pytest.importorskip("database_knotinfo")
    from knotineq.knotinfo import knotinfo_csv

    raw = parse_knotinfo_csv(knotinfo_csv(13), mapping)
    return build_database(raw, [], registry)


@pytest.fixture(scope="session")
def full_new(full_knotinfo, graph):
    return propagate(full_knotinfo, graph)
