import logging
import math
import pandas as pd
from .metrics import coverage_score, mr_score
from ..arena.simulator import truncate_trace
from ..exceptions import DataError
from ..utils.serialization import SCHEMA_VERSION, export_json, load_json
from ..utils.similarities import tf_cosine

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["coverage_raw", "coverage_normalized", "mr", "relevance", "novelty",
                  "succinctness", "total_reward"]


def _clean(value):
    """JSON-safe scalar: numpy scalars unboxed, NaN as null."""
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def case_metrics(trace, case, sim=tf_cosine, gamma=0.7, coverage_mode="simulated",
                 topic_source="tags"):
    row = {"case_id": case.case_id, "n_rounds": len(trace), "truncated": trace.truncated,
           "aborted": trace.aborted}
    if len(trace) == 0 or not case.topics:
        row["coverage_raw"] = row["coverage_normalized"] = float("nan")
    else:
        row["coverage_raw"], row["coverage_normalized"] = coverage_score(
            case.topics, trace.topics(topic_source), sim, coverage_mode)
    row["mr"] = mr_score(trace.justice_utterances(), case.argued_question, gamma, sim) \
        if len(trace) else float("nan")
    mean = trace.mean_breakdown()
    row.update(relevance=mean.relevance, novelty=mean.novelty,
               succinctness=mean.succinctness, total_reward=mean.total)
    if len(trace) == 0:
        for k in ("relevance", "novelty", "succinctness", "total_reward"):
            row[k] = float("nan")
    return row


def metrics_table(traces, cases, sim=tf_cosine, gamma=0.7, coverage_mode="simulated",
                  topic_source="tags"):
    traces, cases = list(traces), list(cases)
    if len(traces) != len(cases):
        raise DataError("got {} traces for {} cases".format(len(traces), len(cases)))
    for trace, case in zip(traces, cases):
        if trace.case_id != case.case_id:
            raise DataError("trace for case {!r} is aligned with case {!r}".format(
                trace.case_id, case.case_id))
    rows = [case_metrics(t, c, sim, gamma, coverage_mode, topic_source)
            for t, c in zip(traces, cases)]
    return pd.DataFrame(rows, columns=["case_id", "n_rounds", "truncated", "aborted"] +
                        METRIC_COLUMNS)


def _aggregate(table):
    agg = {"n_cases": int(len(table)),
           "n_aborted": int(table["aborted"].sum()) if len(table) else 0}
    for col in METRIC_COLUMNS:
        agg[col] = _clean(float(table[col].mean())) if len(table) else None
    return agg


def evaluate_run(traces, cases, sim=tf_cosine, gamma=0.7, coverage_mode="simulated",
                 r_hat=None, config_hash=None, seed=None, sweep_caps=None, topic_source="tags"):
    """
    Metrics report for a set of simulated dialogues.

    Per-case coverage, MR score and mean reward components, their arithmetic
    means over cases (cases without a defined value are skipped), the offline
    r_hat when given, and optionally the same aggregates for trace prefixes
    truncated at each cap in ``sweep_caps``.
    """
    traces, cases = list(traces), list(cases)
    table = metrics_table(traces, cases, sim, gamma, coverage_mode, topic_source)
    aggregate = _aggregate(table)
    aggregate["offline_r_hat"] = None if r_hat is None else float(r_hat)
    report = {"schema_version": SCHEMA_VERSION,
              "config_hash": config_hash,
              "seed": seed,
              "metrics": {"mr_gamma": gamma, "coverage_mode": coverage_mode,
                          "topic_source": topic_source},
              "cases": [{k: _clean(v) for k, v in row.items()}
                        for row in table.to_dict(orient="records")],
              "aggregate": aggregate}
    if sweep_caps:
        report["sweep"] = sweep(traces, cases, sweep_caps, sim, gamma, coverage_mode,
                                 topic_source)
    return report


def sweep(traces, cases, caps, sim=tf_cosine, gamma=0.7, coverage_mode="simulated",
          topic_source="tags"):
    out = {}
    for cap in sorted(set(int(c) for c in caps)):
        if cap < 1:
            raise ValueError("sweep caps must be positive, got {}".format(cap))
        table = metrics_table([truncate_trace(t, cap) for t in traces], cases, sim, gamma,
                              coverage_mode, topic_source)
        out[str(cap)] = _aggregate(table)
    return out


def write_report(path, report):
    export_json(path, report)
    logger.info("wrote report for %d cases to %s", len(report["cases"]), path)


def read_report(path):
    report = load_json(path)
    if report.get("schema_version") != SCHEMA_VERSION:
        raise DataError("report {} has schema {}, expected {}".format(
            path, report.get("schema_version"), SCHEMA_VERSION))
    return report


def write_learning_curve(history, path):
    """One row per epoch: loss terms, r_hat and hier residual."""
    frame = pd.DataFrame(list(history))
    if "epoch" in frame.columns:
        frame = frame[["epoch"] + [c for c in frame.columns if c != "epoch"]]
    frame.to_csv(path, index=False, float_format="%.8g")
    return frame
