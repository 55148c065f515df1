"""Report output: JSON, CSV, and matplotlib figures rendered to files."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_csv(path, rows, fieldnames) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def save_history(history, out_prefix: Path) -> list:
    """Training history -> CSV plus a loss/lr figure; returns written paths."""
    out_prefix = Path(out_prefix)
    csv_path = out_prefix.with_suffix(".history.csv")
    write_csv(csv_path, history, ["epoch", "train_loss", "val_loss", "lr"])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    epochs = [h["epoch"] for h in history]
    ax1.semilogy(epochs, [h["train_loss"] for h in history], label="train")
    ax1.semilogy(epochs, [h["val_loss"] for h in history], label="validation")
    ax1.set_ylabel("normalized L1 loss")
    ax1.legend()
    ax2.semilogy(epochs, [h["lr"] for h in history])
    ax2.set_ylabel("learning rate")
    ax2.set_xlabel("epoch")
    fig.tight_layout()
    png_path = out_prefix.with_suffix(".history.png")
    fig.savefig(png_path, dpi=130)
    plt.close(fig)
    return [csv_path, png_path]


def save_eval_report(result_dict: dict, out_prefix: Path, per_seed: dict | None = None) -> list:
    """Evaluation errors -> JSON (+ per-seed CSV and histogram figure)."""
    out_prefix = Path(out_prefix)
    paths = [out_prefix.with_suffix(".json")]
    write_json(paths[0], result_dict)
    if per_seed:
        csv_path = out_prefix.with_suffix(".errors.csv")
        names = sorted(per_seed)
        rows = [
            {**{"seed_index": i}, **{n: per_seed[n][i] for n in names}}
            for i in range(len(next(iter(per_seed.values()))))
        ]
        write_csv(csv_path, rows, ["seed_index"] + names)
        fig, ax = plt.subplots(figsize=(6, 4))
        for name in names:
            ax.hist(per_seed[name], bins=40, alpha=0.6, label=name)
        ax.set_xlabel("per-seed error (domain units)")
        ax.set_ylabel("seeds")
        ax.legend()
        fig.tight_layout()
        png = out_prefix.with_suffix(".errors.png")
        fig.savefig(png, dpi=130)
        plt.close(fig)
        paths += [csv_path, png]
    return paths


def save_comparison(report: dict, out_dir: Path) -> list:
    """Comparison report -> JSON + CSV + query-time / storage figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "comparison.json"]
    write_json(paths[0], report)

    counts = report["seed_counts"]
    rows = []
    for count in counts:
        rows.append(
            {
                "seed_count": count,
                "dl_query_s": report["dl"]["query_s"][count],
                "bc_query_s": report["bc"]["query_s"][count],
            }
        )
    csv_path = out_dir / "query_times.csv"
    write_csv(csv_path, rows, ["seed_count", "dl_query_s", "bc_query_s"])
    paths.append(csv_path)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(counts, [report["dl"]["query_s"][c] for c in counts], "o-", label="DL inference")
    ax.plot(counts, [report["bc"]["query_s"][c] for c in counts], "s-", label="BC interpolation")
    ax.set_xlabel("query seeds")
    ax.set_ylabel("seconds")
    ax.legend()
    fig.tight_layout()
    png = out_dir / "query_times.png"
    fig.savefig(png, dpi=130)
    plt.close(fig)
    paths.append(png)

    fig, ax = plt.subplots(figsize=(5, 4))
    labels = ["DL model", "BC flow maps"]
    sizes = [report["dl"]["storage_bytes"], report["bc"]["storage_bytes"]]
    ax.bar(labels, np.asarray(sizes) / 1e6)
    ax.set_ylabel("storage (MB)")
    fig.tight_layout()
    png = out_dir / "storage.png"
    fig.savefig(png, dpi=130)
    plt.close(fig)
    paths.append(png)
    return paths


def save_ftle(grid: np.ndarray, bounds, out_prefix: Path) -> list:
    """FTLE scalar grid -> NPY-compatible CSV plus a heat-map rendering."""
    out_prefix = Path(out_prefix)
    paths = []
    if grid.ndim == 2:
        csv_path = out_prefix.with_suffix(".csv")
        np.savetxt(csv_path, grid.T, delimiter=",")
        paths.append(csv_path)
        fig, ax = plt.subplots(figsize=(7, 4))
        im = ax.imshow(
            grid.T,
            origin="lower",
            extent=[bounds.min[0], bounds.max[0], bounds.min[1], bounds.max[1]],
            aspect="auto",
            cmap="inferno",
        )
        fig.colorbar(im, ax=ax, label="FTLE")
        fig.tight_layout()
        png = out_prefix.with_suffix(".png")
        fig.savefig(png, dpi=130)
        plt.close(fig)
        paths.append(png)
    else:
        # 3D: persist the volume as flattened CSV and render the mid-slice
        csv_path = out_prefix.with_suffix(".csv")
        np.savetxt(csv_path, grid.reshape(grid.shape[0], -1), delimiter=",")
        paths.append(csv_path)
        mid = grid[:, :, grid.shape[2] // 2]
        fig, ax = plt.subplots(figsize=(6, 5))
        im = ax.imshow(mid.T, origin="lower", cmap="inferno")
        fig.colorbar(im, ax=ax, label="FTLE (mid-z slice)")
        fig.tight_layout()
        png = out_prefix.with_suffix(".png")
        fig.savefig(png, dpi=130)
        plt.close(fig)
        paths.append(png)
    return paths
