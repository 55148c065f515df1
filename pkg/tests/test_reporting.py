import json

import numpy as np

from flowmap.fields import DomainBounds
from flowmap.reporting import save_comparison, save_eval_report, save_ftle, save_history


def test_save_history_writes_csv_and_figure(tmp_path):
    history = [
        {"epoch": i, "train_loss": 1.0 / (i + 1), "val_loss": 1.2 / (i + 1), "lr": 5e-4}
        for i in range(5)
    ]
    paths = save_history(history, tmp_path / "run")
    assert [p.name for p in paths] == ["run.history.csv", "run.history.png"]
    lines = (tmp_path / "run.history.csv").read_text().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss,lr"
    assert len(lines) == 6
    assert (tmp_path / "run.history.png").stat().st_size > 0


def test_save_eval_report(tmp_path):
    result = {"l1": {"max": 1.0, "mean": 0.5, "median": 0.4, "count": 3, "excluded_invalid": 0}}
    per_seed = {"dl_l1": np.array([0.1, 0.5, 1.0])}
    paths = save_eval_report(result, tmp_path / "eval", per_seed)
    report = json.loads((tmp_path / "eval.json").read_text())
    assert report["l1"]["median"] == 0.4
    csv_text = (tmp_path / "eval.errors.csv").read_text()
    assert csv_text.startswith("seed_index,dl_l1")
    assert (tmp_path / "eval.errors.png").exists()
    assert len(paths) == 3


def test_save_comparison_schema(tmp_path):
    report = {
        "seed_counts": [10, 20],
        "dl": {
            "load_s": 0.01,
            "storage_bytes": 1000,
            "query_s": {10: 0.1, 20: 0.2},
            "errors": {"l1": {"median": 0.1}},
        },
        "bc": {
            "load_s": 0.02,
            "storage_bytes": 5000,
            "triangulate_s": 0.5,
            "query_s": {10: 0.3, 20: 0.6},
            "errors": {"l1": {"median": 0.2}},
        },
        "meta": {"threads": 1},
    }
    paths = save_comparison(report, tmp_path / "cmp")
    names = sorted(p.name for p in paths)
    assert names == ["comparison.json", "query_times.csv", "query_times.png", "storage.png"]
    rows = (tmp_path / "cmp" / "query_times.csv").read_text().splitlines()
    assert rows[0] == "seed_count,dl_query_s,bc_query_s"
    assert rows[1] == "10,0.1,0.3"


def test_save_ftle_2d(tmp_path):
    grid = np.linspace(0, 1, 12).reshape(4, 3)  # (nx, ny)
    bounds = DomainBounds(np.array([0.0, 0.0]), np.array([2.0, 1.0]))
    paths = save_ftle(grid, bounds, tmp_path / "ftle")
    assert [p.name for p in paths] == ["ftle.csv", "ftle.png"]
    back = np.loadtxt(tmp_path / "ftle.csv", delimiter=",")
    assert back.shape == (3, 4)  # transposed for row=y plotting convention
    assert np.allclose(back.T, grid)
