import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgnlq.config import PipelineConfig
from kgnlq.evalqa import (
    CANONICAL_SETTINGS,
    DatasetCorruptionError,
    EvalSetting,
    ablation_matrix,
    evaluate,
    exact_match,
    f1,
    normalize_answer,
    preflight_dataset,
)
from kgnlq.qgen import Dataset
from kgnlq.sqlgen.backends import FaultyBackend
from kgnlq.sqlgen.pipeline import PipelineDeps


class TestNormalizeAnswer:
    def test_trim_and_casefold(self):
        assert normalize_answer("PTGS2 ") == "ptgs2"

    def test_case_variants_equal(self):
        assert normalize_answer("Headache") == normalize_answer("headache")

    def test_empty(self):
        assert normalize_answer("") == ""

    def test_internal_whitespace_collapsed(self):
        assert normalize_answer("a   b") == "a b"


class TestExactMatch:
    def test_normalized_equality(self):
        assert exact_match({"PTGS2"}, {"ptgs2"}) == 1

    def test_subset_is_not_match(self):
        assert exact_match({"a", "b"}, {"a"}) == 0

    def test_both_empty(self):
        assert exact_match(set(), set()) == 1


class TestF1:
    def test_half_overlap(self):
        assert f1({"a", "b"}, {"a", "c"}) == pytest.approx(0.5)

    def test_precision_one_recall_third(self):
        assert f1({"a"}, {"a", "b", "c"}) == pytest.approx(0.5)

    def test_one_empty(self):
        assert f1(set(), {"a"}) == 0.0
        assert f1({"a"}, set()) == 0.0

    def test_both_empty(self):
        assert f1(set(), set()) == 1.0

    def test_disjoint(self):
        assert f1({"a"}, {"b"}) == 0.0

    def test_symmetric(self):
        assert f1({"a", "b"}, {"b", "c", "d"}) == f1({"b", "c", "d"}, {"a", "b"})


_answer_sets = st.sets(st.text(min_size=1, max_size=4), max_size=6)


@settings(max_examples=200, deadline=None)
@given(pred=_answer_sets, gold=_answer_sets)
def test_em_le_f1_property(pred, gold):
    em = exact_match(pred, gold)
    score = f1(pred, gold)
    assert 0 <= em <= 1
    assert 0.0 <= score <= 1.0
    assert em <= score + 1e-12


class TestEvaluate:
    def test_oracle_ceiling(self, fixture_dataset, fixture_deps):
        config = PipelineConfig(ner_mode="oracle")
        report = evaluate(fixture_dataset, config, fixture_deps)
        overall = report.group()
        assert overall.em == 1.0
        assert overall.f1 == 1.0

    def test_always_wrong_backend_scores_zero(self, fixture_dataset, fixture_deps):
        class NoBackend:
            name = "no"

            def generate(self, prompt):
                return "no"

        deps = PipelineDeps(
            db=fixture_deps.db,
            catalog=fixture_deps.catalog,
            index=fixture_deps.index,
            backend=NoBackend(),
        )
        report = evaluate(fixture_dataset, PipelineConfig(), deps)
        assert report.group().em == 0.0
        assert report.group().f1 == 0.0

    def test_group_means_recombine(self, fixture_dataset, fixture_deps):
        report = evaluate(fixture_dataset, PipelineConfig(), fixture_deps)
        one, two, overall = report.group(1), report.group(2), report.group()
        assert overall.n == one.n + two.n
        assert overall.em == pytest.approx((one.em * one.n + two.em * two.n) / overall.n)
        assert overall.f1 == pytest.approx((one.f1 * one.n + two.f1 * two.n) / overall.n)

    def test_corrupted_dataset_aborts(self, fixture_dataset, fixture_deps):
        broken = Dataset.from_jsonl(fixture_dataset.to_jsonl())
        broken.examples[0].gold_answers = {"wrong-answer"}
        with pytest.raises(DatasetCorruptionError):
            preflight_dataset(broken, fixture_deps, PipelineConfig())

    def test_backend_failures_counted(self, fixture_dataset, fixture_deps):
        from kgnlq.sqlgen.backends import BackendError

        class Flaky:
            name = "flaky"

            def generate(self, prompt):
                raise BackendError("down")

        deps = PipelineDeps(
            db=fixture_deps.db,
            catalog=fixture_deps.catalog,
            index=fixture_deps.index,
            backend=Flaky(),
        )
        report = evaluate(fixture_dataset, PipelineConfig(), deps)
        assert report.backend_failures == len(fixture_dataset.examples)
        assert report.group().em == 0.0


class TestAblationMatrix:
    def make_deps(self, fixture_deps, backend):
        return PipelineDeps(
            db=fixture_deps.db,
            catalog=fixture_deps.catalog,
            index=fixture_deps.index,
            backend=backend,
            demo_pool=fixture_deps.demo_pool,
        )

    def test_faulty_backend_sc_rows_strictly_lower(
        self, fixture_dataset, fixture_deps, oracle_backend
    ):
        deps = self.make_deps(fixture_deps, FaultyBackend(oracle_backend, fault="column"))
        result = ablation_matrix(fixture_dataset, list(CANONICAL_SETTINGS), deps)
        by_label = {r.setting: r for r in result.reports}
        assert by_label["-SC"].group().em < by_label["Full"].group().em
        assert by_label["Full"].group().em == 1.0
        assert by_label["-SC"].group().em == 0.0

    def test_oracle_full_equals_no_sc(self, fixture_dataset, fixture_deps):
        result = ablation_matrix(fixture_dataset, list(CANONICAL_SETTINGS), fixture_deps)
        table = result.table()
        rows = {row["label"]: row["cells"] for row in table["rows"]}
        assert rows["Full"] == rows["-SC"]
        assert rows["-NER"] == rows["-NER-SC"]

    def test_single_setting_single_row(self, fixture_dataset, fixture_deps):
        result = ablation_matrix(
            fixture_dataset, [EvalSetting("Full", "gazetteer", True)], fixture_deps
        )
        assert len(result.table()["rows"]) == 1

    def test_empty_settings_rejected(self, fixture_dataset, fixture_deps):
        with pytest.raises(ValueError):
            ablation_matrix(fixture_dataset, [], fixture_deps)

    def test_two_hop_degraded_backend(self, fixture_dataset, fixture_deps, oracle_backend):
        deps = self.make_deps(
            fixture_deps,
            FaultyBackend(oracle_backend, fault="column", only_hops=2, repairable=False),
        )
        report = evaluate(fixture_dataset, PipelineConfig(), deps)
        assert report.group(2).em < report.group(1).em
        assert report.group(1).em == 1.0

    def test_rendered_table_shape(self, fixture_dataset, fixture_deps):
        result = ablation_matrix(fixture_dataset, list(CANONICAL_SETTINGS), fixture_deps)
        text = result.render_text()
        lines = text.splitlines()
        assert len(lines) == 2 + 4  # header, rule, four rows
        for label in ("Full", "-NER", "-SC", "-NER-SC"):
            assert any(line.startswith(label) for line in lines)


def test_em_le_f1_random_pairs():
    rng = random.Random(123)
    alphabet = ["a", "b", "c", "d", "e", "f"]
    for _ in range(1000):
        pred = {rng.choice(alphabet) for _ in range(rng.randrange(0, 5))}
        gold = {rng.choice(alphabet) for _ in range(rng.randrange(0, 5))}
        assert exact_match(pred, gold) <= f1(pred, gold)
