from .metrics import coverage_score, mr_score
from .evaluate import evaluate_run, case_metrics, metrics_table, sweep, write_report, \
    read_report, write_learning_curve
