import random

import pytest

from kgnlq.db import GraphDatabase
from kgnlq.entity_index import build_index
from kgnlq.ingest import KGNode, build_database
from kgnlq.ner import (
    TaggingError,
    oracle_tag,
    placeholder_type,
    substitute_placeholders,
    tag,
)


class TestTag:
    def test_single_mention(self, fixture_index):
        mentions = tag("Which proteins does aspirin target?", fixture_index)
        assert len(mentions) == 1
        m = mentions[0]
        assert m.surface == "aspirin"
        assert m.resolved.node_index == 1
        assert m.resolved.node_type == "drug"

    def test_two_mentions(self, fixture_index):
        mentions = tag("Which drugs treat headache and fever?", fixture_index)
        assert [(m.surface, m.resolved.node_index) for m in mentions] == [
            ("headache", 5), ("fever", 6),
        ]

    def test_no_mentions(self, fixture_index):
        assert tag("Which proteins exist?", fixture_index) == []

    def test_mentions_sorted_and_nonoverlapping(self, fixture_index):
        mentions = tag("aspirin, ibuprofen and PTGS1", fixture_index)
        assert [m.surface for m in mentions] == ["aspirin", "ibuprofen", "PTGS1"]
        for a, b in zip(mentions, mentions[1:]):
            assert a.end <= b.start

    def test_surface_is_question_slice(self, fixture_index):
        question = "Does Aspirin. help?"
        mentions = tag(question, fixture_index)
        assert mentions[0].surface == question[mentions[0].start : mentions[0].end] == "Aspirin"

    def test_greedy_longest_match_wins(self, tmp_path):
        nodes = [
            KGNode(1, "gene/protein", "PTGS2"),
            KGNode(2, "gene/protein", "PTGS2 complex"),
        ]
        db_path = tmp_path / "kg.db"
        build_database(nodes, [], db_path)
        index = build_index(GraphDatabase(db_path))
        mentions = tag("Tell me about the PTGS2 complex today", index)
        assert [m.surface for m in mentions] == ["PTGS2 complex"]
        assert mentions[0].resolved.node_index == 2

    def test_strict_threshold_rejects_typos(self, fixture_index):
        # tagging is stricter than linking: one-char typos stay untagged
        assert tag("Which proteins does asprin target?", fixture_index) == []


class TestOracleTag:
    def test_matches_gazetteer_mention(self, fixture_index):
        question = "Which proteins does aspirin target?"
        gold = oracle_tag(question, [("aspirin", 1)], fixture_index)
        gazetteer = tag(question, fixture_index)
        assert gold[0].start == gazetteer[0].start
        assert gold[0].end == gazetteer[0].end
        assert gold[0].resolved.score == 1.0

    def test_absent_surface_is_error(self, fixture_index):
        with pytest.raises(TaggingError, match="acetaminophen"):
            oracle_tag("Which proteins does aspirin target?", [("acetaminophen", 1)], fixture_index)

    def test_empty_gold_list(self, fixture_index):
        assert oracle_tag("anything", [], fixture_index) == []

    def test_uses_canonical_name_not_surface(self, fixture_index):
        # a mangled surface still binds to the node's real name
        mentions = oracle_tag("Which proteins does asprin target?", [("asprin", 1)], fixture_index)
        assert mentions[0].resolved.canonical_name == "aspirin"
        assert mentions[0].surface == "asprin"


class TestSubstitutePlaceholders:
    def test_basic_substitution(self, fixture_index):
        question = "Which proteins does aspirin target?"
        tq = substitute_placeholders(question, tag(question, fixture_index))
        assert tq.templated == "Which proteins does [DRUG_0] target?"
        assert list(tq.bindings) == ["[DRUG_0]"]
        assert tq.bindings["[DRUG_0]"].candidate.canonical_name == "aspirin"

    def test_per_type_counters_in_text_order(self, fixture_index):
        question = "Compare aspirin with ibuprofen for headache"
        tq = substitute_placeholders(question, tag(question, fixture_index))
        assert tq.templated == "Compare [DRUG_0] with [DRUG_1] for [DISEASE_0]"

    def test_round_trip(self, fixture_index):
        question = "Which drugs treat headache and fever?"
        tq = substitute_placeholders(question, tag(question, fixture_index))
        assert tq.restore() == question

    def test_type_uppercasing(self):
        assert placeholder_type("gene/protein") == "GENE_PROTEIN"
        assert placeholder_type("drug") == "DRUG"

    def test_unresolved_mention_is_error(self, fixture_index):
        from kgnlq.ner import EntityMention

        with pytest.raises(TaggingError, match="unresolved"):
            substitute_placeholders("hi there", [EntityMention(0, 2, "hi", None)])

    def test_no_mentions_passthrough(self):
        tq = substitute_placeholders("Which proteins exist?", [])
        assert tq.templated == tq.original == "Which proteins exist?"
        assert tq.bindings == {}


class TestRoundTripProperty:
    def test_random_filler_round_trips(self, fixture_index):
        rng = random.Random(7)
        names = ["aspirin", "ibuprofen", "PTGS2", "PTGS1", "headache", "fever"]
        fillers = ["tell", "me", "about", "versus", "whether", "relates", "to", "and"]
        for _ in range(50):
            words = [rng.choice(fillers) for _ in range(rng.randrange(2, 8))]
            for name in rng.sample(names, rng.randrange(1, 4)):
                words.insert(rng.randrange(len(words) + 1), name)
            question = " ".join(words)
            tq = substitute_placeholders(question, tag(question, fixture_index))
            assert tq.restore() == question

    def test_oracle_and_gazetteer_agree_on_clean_input(self, fixture_index):
        question = "Which proteins does aspirin target?"
        via_tag = substitute_placeholders(question, tag(question, fixture_index))
        via_oracle = substitute_placeholders(
            question, oracle_tag(question, [("aspirin", 1)], fixture_index)
        )
        assert via_tag.templated == via_oracle.templated
