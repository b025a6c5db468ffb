from reflines.corpus import Label
from reflines.evaluation import line_metrics
from reflines.reporting import plot_confusion, plot_folds, plot_label_scores, plot_training
from reflines.training import TrainReport

PNG = b"\x89PNG"


def test_figures_written(tmp_path):
    report = TrainReport(iterations=3, initial_objective=-10.0, final_objective=-2.0,
                         objective_trace=[-6.0, -3.0, -2.0], grad_norm_trace=[4.0, 1.0, 0.0], converged=True)
    m = line_metrics([Label.B_REF, Label.O, Label.I_REF], [Label.B_REF, Label.O, Label.O])
    paths = [
        plot_training(report, tmp_path / "t.png"),
        plot_label_scores(m, tmp_path / "s.png"),
        plot_confusion(m, tmp_path / "c.png"),
        plot_folds([m, m + m], tmp_path / "f.png"),
    ]
    for p in paths:
        with open(p, "rb") as fh:
            assert fh.read(4) == PNG
