import pytest

from kgnlq.db import GraphDatabase
from kgnlq.entity_index import build_index
from kgnlq.ingest import build_database, parse_edges, parse_nodes, schema_catalog
from kgnlq.qgen import default_template_table, generate_dataset
from kgnlq.sqlgen.backends import FaultyBackend, OracleBackend
from kgnlq.sqlgen.pipeline import PipelineDeps

# The 6-node toy graph used across the suite:
#   drugs aspirin(1), ibuprofen(2); proteins PTGS2(3), PTGS1(4);
#   diseases headache(5), fever(6)
#   drug_protein 1->3, 2->3, 2->4; indication 1->5, 2->6; disease_protein 5->3

FIXTURE_NODES_TSV = """\
node_index\tnode_type\tnode_name\tnode_source\tnode_source_id
1\tdrug\taspirin\tdrugbank\tDB00945
2\tdrug\tibuprofen\tdrugbank\tDB01050
3\tgene/protein\tPTGS2\tncbi\t5743
4\tgene/protein\tPTGS1\tncbi\t5742
5\tdisease\theadache\tmondo\tMONDO:0005274
6\tdisease\tfever\tmondo\tMONDO:0005550
"""

FIXTURE_EDGES_TSV = """\
relation\tdisplay_relation\tx_index\ty_index
drug_protein\tdrug protein\t1\t3
drug_protein\tdrug protein\t2\t3
drug_protein\tdrug protein\t2\t4
indication\tindication\t1\t5
indication\tindication\t2\t6
disease_protein\tdisease protein\t5\t3
"""


@pytest.fixture(scope="session")
def fixture_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("kg_files")
    nodes = root / "nodes.tsv"
    edges = root / "edges.tsv"
    nodes.write_text(FIXTURE_NODES_TSV, encoding="utf-8")
    edges.write_text(FIXTURE_EDGES_TSV, encoding="utf-8")
    return nodes, edges


@pytest.fixture(scope="session")
def fixture_db(fixture_files, tmp_path_factory) -> GraphDatabase:
    nodes_path, edges_path = fixture_files
    db_path = tmp_path_factory.mktemp("kg_db") / "fixture.db"
    nodes = parse_nodes(nodes_path).nodes
    edges = parse_edges(edges_path).edges
    build_database(nodes, edges, db_path)
    return GraphDatabase(db_path)


@pytest.fixture(scope="session")
def fixture_catalog(fixture_db):
    return schema_catalog(fixture_db)


@pytest.fixture(scope="session")
def fixture_index(fixture_db):
    return build_index(fixture_db)


@pytest.fixture(scope="session")
def fixture_templates(fixture_catalog):
    return default_template_table(fixture_catalog)


@pytest.fixture(scope="session")
def oracle_backend(fixture_templates):
    return OracleBackend(fixture_templates)


@pytest.fixture
def faulty_backend(oracle_backend):
    return FaultyBackend(oracle_backend, fault="column")


@pytest.fixture(scope="session")
def fixture_dataset(fixture_db, fixture_catalog, fixture_templates):
    return generate_dataset(
        fixture_db, fixture_catalog, fixture_templates, n_single=4, n_two=2, seed=1
    )


@pytest.fixture
def fixture_deps(fixture_db, fixture_catalog, fixture_index, oracle_backend):
    return PipelineDeps(
        db=fixture_db,
        catalog=fixture_catalog,
        index=fixture_index,
        backend=oracle_backend,
    )
