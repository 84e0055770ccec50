import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from libinquire.arena.simulator import DialogueTrace, TraceRound
from libinquire.dataset import Utterance, Appraisal, CaseRecord
from libinquire.evaluate import coverage_score, mr_score, evaluate_run, metrics_table, \
    write_report, read_report, write_learning_curve
from libinquire.exceptions import DataError
from libinquire.rewards import RewardBreakdown
from libinquire.utils.similarities import tf_cosine

SIM = {("t1", "s1"): 1.0, ("t1", "s2"): 0.3, ("t2", "s1"): 0.2, ("t2", "s2"): 0.8}


def table_sim(a, b):
    return SIM[(a, b)]


def test_coverage_hand_fixture():
    raw, normalized = coverage_score(["t1", "t2"], ["s1", "s2"], sim=table_sim)
    assert raw == pytest.approx(1.8, abs=1e-9)
    assert normalized == pytest.approx(0.9, abs=1e-9)


def test_coverage_identical_and_disjoint():
    topics = ["search warrant", "standing", "remedy"]
    raw, normalized = coverage_score(topics, topics)
    assert raw == pytest.approx(3.0)
    assert normalized == pytest.approx(1.0)
    assert coverage_score(["alpha beta"], ["gamma delta"]) == (0.0, 0.0)
    with pytest.raises(ValueError):
        coverage_score([], ["x"])


words = st.sampled_from(["warrant", "standing", "remedy", "statute", "agency", "text"])
topic = st.lists(words, min_size=1, max_size=3).map(" ".join)


@settings(max_examples=50, deadline=None)
@given(st.lists(topic, min_size=1, max_size=4), st.lists(topic, min_size=1, max_size=4),
       topic)
def test_original_mode_coverage_is_monotone(original, simulated, extra):
    before, _ = coverage_score(original, simulated, mode="original")
    after, _ = coverage_score(original, simulated + [extra], mode="original")
    assert after >= before - 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(topic, min_size=1, max_size=4), st.lists(topic, min_size=1, max_size=4),
       topic)
def test_simulated_mode_coverage_is_monotone(original, simulated, extra):
    before, _ = coverage_score(original, simulated)
    after, _ = coverage_score(original, simulated + [extra])
    assert after >= before - 1e-12


def test_mr_examples():
    q = "does the statute preempt the rule"
    assert mr_score([q], q) == pytest.approx(0.7, abs=1e-9)
    assert mr_score([q, q], q) == pytest.approx((0.7 + 0.4) / 2.0, abs=1e-9)
    utterances = ["does the statute apply", "what about the rule"]
    assert mr_score(utterances, q, gamma=1.0) == pytest.approx(
        np.mean([tf_cosine(u, q) for u in utterances]))
    with pytest.raises(ValueError):
        mr_score([], q)


def _trace(case_id, texts, reward=1.0, tags=("standing",)):
    rounds = [TraceRound(Utterance("justice", t), Utterance("attorney", "answer " + t),
                         (0, 1, 2), Appraisal.from_index(0),
                         RewardBreakdown(reward, 0.0, 0.0, reward), "topic", tuple(tags))
              for t in texts]
    return DialogueTrace(case_id, rounds, truncated=True)


def _case(case_id, topics=("standing", "remedy")):
    return CaseRecord(case_id, "bg", "is there standing", ("there is standing",), topics)


def test_evaluate_run_means_and_determinism(tmp_path):
    traces = [_trace("a", ["is there standing"], reward=1.0),
              _trace("b", ["what remedy", "what remedy"], reward=3.0)]
    cases = [_case("a"), _case("b")]
    report = evaluate_run(traces, cases, config_hash="abc", seed=7)
    assert report == evaluate_run(traces, cases, config_hash="abc", seed=7)
    per_case = report["cases"]
    assert report["aggregate"]["mr"] == pytest.approx(np.mean([c["mr"] for c in per_case]))
    assert report["aggregate"]["total_reward"] == pytest.approx(2.0)
    assert report["aggregate"]["offline_r_hat"] is None
    assert (report["config_hash"], report["seed"]) == ("abc", 7)

    path = str(tmp_path / "report.json")
    write_report(path, report)
    assert read_report(path) == report
    first = open(path, "rb").read()
    write_report(path, evaluate_run(traces, cases, config_hash="abc", seed=7))
    assert open(path, "rb").read() == first


def test_empty_trace_gives_null_metrics():
    report = evaluate_run([DialogueTrace("a", truncated=True)], [_case("a")])
    row = report["cases"][0]
    assert row["coverage_raw"] is None and row["mr"] is None
    assert report["aggregate"]["mr"] is None


def test_sweep_aggregates_prefixes():
    traces = [_trace("a", ["one", "two", "three", "four"])]
    report = evaluate_run(traces, [_case("a")], sweep_caps=[2, 4])
    assert set(report["sweep"]) == {"2", "4"}
    assert report["sweep"]["4"]["mr"] == pytest.approx(report["aggregate"]["mr"])


def test_misaligned_inputs():
    with pytest.raises(DataError):
        metrics_table([_trace("a", ["x"])], [])
    with pytest.raises(DataError):
        metrics_table([_trace("a", ["x"])], [_case("b")])


def test_learning_curve_csv(tmp_path):
    path = str(tmp_path / "curve.csv")
    frame = write_learning_curve([{"total": 1.0, "epoch": 1}, {"total": 0.5, "epoch": 2}], path)
    assert list(frame.columns)[0] == "epoch"
    assert open(path).readline().strip() == "epoch,total"
