from dataclasses import dataclass

from kgnlq.config import PipelineConfig
from kgnlq.ner import substitute_placeholders, tag
from kgnlq.sqlgen.prompts import assemble_prompt, select_demonstrations


@dataclass
class PoolItem:
    id: str
    templated_question: str
    question: str = ""
    gold_sql: str = "SELECT node_name FROM nodes"


def make_tq(question, fixture_index):
    return substitute_placeholders(question, tag(question, fixture_index))


class TestSelectDemonstrations:
    def test_identical_question_first_with_sim_one(self, fixture_index):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        pool = [
            PoolItem("b", "Which drugs treat [DISEASE_0]?"),
            PoolItem("a", "Which proteins does [DRUG_0] target?"),
        ]
        chosen = select_demonstrations(tq, pool, k=2)
        assert chosen[0].id == "a"

    def test_k_zero(self, fixture_index):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        assert select_demonstrations(tq, [PoolItem("a", "x")], k=0) == []

    def test_empty_pool(self, fixture_index):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        assert select_demonstrations(tq, [], k=3) == []

    def test_hand_computed_jaccard_order(self, fixture_index):
        # query tokens: {which, proteins, does, drug_0, target}
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        pool = [
            # identical token set -> 5/5 = 1.0
            PoolItem("p1", "Which proteins does [DRUG_0] target?"),
            # shares {which, does, drug_0} -> 3/7
            PoolItem("p2", "Which diseases does [DRUG_0] treat?"),
            # shares nothing -> 0/8
            PoolItem("p3", "List all stored facts"),
        ]
        chosen = select_demonstrations(tq, list(reversed(pool)), k=3)
        assert [c.id for c in chosen] == ["p1", "p2", "p3"]

    def test_ties_broken_by_id(self, fixture_index):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        pool = [
            PoolItem("z", "totally unrelated words here"),
            PoolItem("a", "altogether different unrelated words"),
        ]
        chosen = select_demonstrations(tq, pool, k=2)
        assert [c.id for c in chosen] == ["a", "z"]


class TestAssemblePrompt:
    def test_schema_linking_filters_relations(self, fixture_index, fixture_catalog):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        prompt = assemble_prompt(tq, fixture_catalog, [], PipelineConfig())
        assert "drug_protein" in prompt.schema_excerpt
        assert "indication" in prompt.schema_excerpt
        assert "disease_protein" not in prompt.schema_excerpt

    def test_no_placeholders_keeps_full_relation_list(self, fixture_catalog):
        from kgnlq.ner import TemplatedQuestion

        tq = TemplatedQuestion("Which proteins exist?", "Which proteins exist?", {})
        prompt = assemble_prompt(tq, fixture_catalog, [], PipelineConfig())
        for rel in ("drug_protein", "indication", "disease_protein"):
            assert rel in prompt.schema_excerpt

    def test_both_tables_always_present(self, fixture_index, fixture_catalog):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        prompt = assemble_prompt(tq, fixture_catalog, [], PipelineConfig())
        assert "nodes(node_index, node_type, node_name," in prompt.schema_excerpt
        assert "edges(relation, display_relation, x_index, y_index)" in prompt.schema_excerpt

    def test_demos_in_rank_order(self, fixture_index, fixture_catalog):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        demos = [
            PoolItem("a", "q1", question="Which proteins does ibuprofen target?"),
            PoolItem("b", "q2", question="Which drugs treat fever?"),
        ]
        prompt = assemble_prompt(tq, fixture_catalog, demos, PipelineConfig())
        assert prompt.demonstrations == [
            ("Which proteins does ibuprofen target?", demos[0].gold_sql),
            ("Which drugs treat fever?", demos[1].gold_sql),
        ]
        messages = prompt.messages()
        roles = [m["role"] for m in messages]
        assert roles == ["system", "user", "assistant", "user", "assistant", "user"]

    def test_placeholder_legend_in_user_text(self, fixture_index, fixture_catalog):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        prompt = assemble_prompt(tq, fixture_catalog, [], PipelineConfig())
        assert "[DRUG_0] = 'aspirin' (type: drug)" in prompt.user_text

    def test_feature_flags_gate_prompt_sections(self, fixture_index, fixture_catalog):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        full = assemble_prompt(tq, fixture_catalog, [], PipelineConfig())
        bare = assemble_prompt(
            tq,
            fixture_catalog,
            [],
            PipelineConfig(decomposition=False, chain_of_thought=False),
        )
        assert "decompose" in full.system_text
        assert "step by step" in full.system_text
        assert "decompose" not in bare.system_text
        assert "step by step" not in bare.system_text

    def test_correction_turns_rendered(self, fixture_index, fixture_catalog):
        tq = make_tq("Which proteins does aspirin target?", fixture_index)
        prompt = assemble_prompt(
            tq, fixture_catalog, [], PipelineConfig(),
            corrections=[("SELECT bad FROM nodes", "unknown column bad")],
        )
        rendered = prompt.rendered()
        assert "SELECT bad FROM nodes" in rendered
        assert "unknown column bad" in rendered
