import csv
import io
import json

import pytest

from semproj.cli import main
from semproj.embeddings import load_cache, save_cache


@pytest.fixture
def world_files(tmp_path, world):
    store_path = tmp_path / "store.bin"
    save_cache(world.store, store_path)
    data = {
        "categories": world.dataset.categories,
        "features": {n: {"strong": list(p.strong_words), "weak": list(p.weak_words)}
                     for n, p in world.dataset.features.items()},
        "pairs": [{"category": c, "feature": f} for c, f in world.dataset.pairs],
    }
    ds_path = tmp_path / "ds.json"
    ds_path.write_text(json.dumps(data))
    ratings = tmp_path / "ratings"
    ratings.mkdir()
    world.write_ratings_dir(ratings)
    return {"store": str(store_path), "ds": str(ds_path), "ratings": ratings, "tmp": tmp_path}


def base(f):
    return ["--embeddings", f["store"], "--dataset", f["ds"], "--permutations", "1000"]


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_cache_command(tmp_path, toy_store):
    src = tmp_path / "v.txt"
    src.write_text("".join(f"{t} " + " ".join(map(str, row)) + "\n"
                           for t, row in zip(toy_store.vocab, toy_store.matrix)))
    assert main(["cache", str(src), str(tmp_path / "v.bin")]) == 0
    assert load_cache(tmp_path / "v.bin") == toy_store


def test_missing_embeddings_is_error(capsys, world_files):
    assert main(["project", "--dataset", world_files["ds"], "--category", "cat0", "--feature", "feat0"]) == 1
    assert "--embeddings" in capsys.readouterr().err


def test_missing_file_is_error(capsys):
    assert main(["cache", "/nonexistent/v.txt", "/tmp/x.bin"]) == 1


def test_project_to_stdout(capsys, world_files):
    assert main(["project", *base(world_files), "--category", "cat0", "--feature", "feat1"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 30 and set(rows[0]) == {"item", "raw", "z", "method", "provenance"}


def test_diag(capsys, world_files):
    assert main(["diag", *base(world_files)]) == 0
    out = capsys.readouterr()
    stats = json.loads(out.err)
    assert stats["within"] > stats["cross"]
    assert len(read_csv(out.out)) == 3


def test_eval(capsys, world_files):
    path = world_files["ratings"] / "cat0__feat0.csv"
    assert main(["eval", *base(world_files), "--category", "cat0", "--feature", "feat0",
                 "--ratings", str(path)]) == 0
    (row,) = read_csv(capsys.readouterr().out)
    assert float(row["r"]) > 0.8 and row["significant"] == "True"


def test_eval_mismatched_ratings(capsys, world_files):
    path = world_files["ratings"] / "cat0__feat0.csv"
    assert main(["eval", *base(world_files), "--category", "cat1", "--feature", "feat0",
                 "--ratings", str(path)]) == 1


def test_sweep_and_viz(capsys, world_files):
    path = world_files["ratings"] / "cat1__feat1.csv"
    assert main(["sweep", *base(world_files), "--category", "cat1", "--feature", "feat1",
                 "--ratings", str(path), "--max-remove", "5"]) == 0
    assert len(read_csv(capsys.readouterr().out)) == 6
    assert main(["viz", *base(world_files), "--category", "cat1", "--feature", "feat1", "--k", "3"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 32 and "pc3" in rows[0]


def test_controls(capsys, world_files):
    assert main(["controls", *base(world_files), "--ratings-dir", str(world_files["ratings"])]) == 0
    text = capsys.readouterr().out
    assert "single_end_strong" in text and "cohen_d" in text


def test_select_pairs(tmp_path, capsys):
    norming = tmp_path / "n.csv"
    norming.write_text("category,feature,mean_rating\na,x,1\na,y,2\na,z,3\nb,x,4\n")
    assert main(["select-pairs", "--norming", str(norming), "--exclude", "a:z"]) == 0
    out = capsys.readouterr()
    assert read_csv(out.out) == [{"category": "b", "feature": "x", "route": "norming", "mean_rating": "4.0"}]
    assert json.loads(out.err)["threshold"] == 4.0
    assert main(["select-pairs", "--norming", str(norming), "--exclude", "az"]) == 1


def test_run_writes_outputs(world_files):
    out = world_files["tmp"] / "out"
    assert main(["run", *base(world_files), "--ratings-dir", str(world_files["ratings"]),
                 "--out-dir", str(out), "--svg"]) == 0
    for name in ("experiments.csv", "summary.json", "scatter.csv", "histogram.csv",
                 "controls.csv", "scheme_comparison.csv", "sweep.csv", "sweep_summary.csv"):
        assert (out / name).exists(), name
    assert len(list((out / "svg").glob("*.svg"))) == 6


def test_run_needs_out_dir(world_files):
    assert main(["run", *base(world_files), "--ratings-dir", str(world_files["ratings"])]) == 1


def test_run_missing_ratings(world_files, tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    args = ["run", *base(world_files), "--ratings-dir", str(empty), "--out-dir", str(tmp_path / "o")]
    assert main(args) == 1
    assert not (tmp_path / "o").exists()
    assert main(args + ["--keep-going"]) == 1
    with open(tmp_path / "o" / "failures.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 6
