import pytest

from exitgnn.cli import main
from exitgnn.dataset_io import save_dataset

from conftest import random_graph


@pytest.fixture
def toy_dataset(tmp_path):
    g = random_graph(30, 0.2, d=5, c=3, seed=0)
    d = tmp_path / "toy"
    save_dataset(g, d, name="toy")
    return d


def _dir_bytes(d):
    return {p.relative_to(d): p.read_bytes() for p in sorted(d.rglob("*"))
            if p.is_file()}


class TestTrainCommand:
    def test_writes_table_and_checkpoints(self, toy_dataset, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["train", "--dataset", str(toy_dataset), "--paradigm", "st",
                     "--layers", "2", "--hidden", "6", "--epochs", "5",
                     "--patience", "3", "--dropout", "0.2", "--seeds", "2",
                     "--out", str(out)])
        assert code == 0
        assert (out / "layer_accuracy.csv").exists()
        assert (out / "seed_0" / "checkpoint.bin").exists()
        assert (out / "seed_1" / "metrics.csv").exists()
        table = (out / "layer_accuracy.csv").read_text().splitlines()
        assert len(table) == 1 + 3  # header + layers 0..2

    def test_layers_zero_gives_single_row(self, toy_dataset, tmp_path):
        out = tmp_path / "run0"
        code = main(["train", "--dataset", str(toy_dataset), "--layers", "0",
                     "--hidden", "6", "--epochs", "3", "--seeds", "1",
                     "--out", str(out)])
        assert code == 0
        table = (out / "layer_accuracy.csv").read_text().splitlines()
        assert len(table) == 2

    def test_missing_dataset_is_data_error(self, tmp_path):
        code = main(["train", "--dataset", str(tmp_path / "absent"),
                     "--out", str(tmp_path / "x")])
        assert code == 2

    def test_bad_flag_is_usage_error(self, toy_dataset):
        assert main(["train", "--dataset", str(toy_dataset),
                     "--paradigm", "nope"]) == 1

    def test_bad_dropout_is_usage_error(self, toy_dataset, tmp_path):
        assert main(["train", "--dataset", str(toy_dataset),
                     "--dropout", "1.0", "--out", str(tmp_path / "x")]) == 1

    def test_byte_identical_reruns(self, toy_dataset, tmp_path):
        args = ["train", "--dataset", str(toy_dataset), "--paradigm", "alm",
                "--layers", "1", "--hidden", "6", "--epochs", "4",
                "--dropout", "0.3", "--seeds", "1"]
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert _dir_bytes(out1) == _dir_bytes(out2)

    def test_gin_flavor_end_to_end(self, toy_dataset, tmp_path):
        run = tmp_path / "gin"
        code = main(["train", "--dataset", str(toy_dataset), "--flavor",
                     "gin", "--paradigm", "st", "--layers", "2", "--hidden",
                     "6", "--epochs", "4", "--dropout", "0.2", "--seeds", "1",
                     "--out", str(run)])
        assert code == 0
        code = main(["policy", "--dataset", str(toy_dataset), "--run-dir",
                     str(run), "--metric", "degree", "--clusters", "2",
                     "--out", str(tmp_path / "ginpol")])
        assert code == 0

    def test_config_file_with_flag_override(self, toy_dataset, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("paradigm=st\nepochs=3\nhidden=6\nlayers=1\ndropout=0.2\n")
        out = tmp_path / "cfgrun"
        code = main(["train", "--dataset", str(toy_dataset), "--config",
                     str(cfg), "--epochs", "2", "--seeds", "1",
                     "--out", str(out)])
        assert code == 0
        metrics = (out / "seed_0" / "metrics.csv").read_text().splitlines()
        epochs = {int(line.split(",")[1]) for line in metrics[1:]}
        assert max(epochs) == 2  # flag beat the config file


class TestPolicyCommand:
    def test_report_shape(self, toy_dataset, tmp_path, capsys):
        run = tmp_path / "run"
        main(["train", "--dataset", str(toy_dataset), "--layers", "2",
              "--hidden", "6", "--epochs", "4", "--dropout", "0.2",
              "--seeds", "2", "--out", str(run)])
        out = tmp_path / "pol"
        code = main(["policy", "--dataset", str(toy_dataset), "--run-dir",
                     str(run), "--metric", "all", "--clusters", "2",
                     "--out", str(out)])
        assert code == 0
        lines = (out / "policy_report.csv").read_text().splitlines()
        assert len(lines) == 1 + 4 + 1  # header, four metrics, oracle
        assert lines[-1].startswith("oracle,")
        assert (run / "seed_0" / "policy_kcore.txt").exists()
        assert (run / "seed_1" / "trace_degree.csv").exists()

    def test_cluster_tuning_list(self, toy_dataset, tmp_path):
        run = tmp_path / "run"
        main(["train", "--dataset", str(toy_dataset), "--layers", "1",
              "--hidden", "6", "--epochs", "3", "--seeds", "1",
              "--out", str(run)])
        out = tmp_path / "pol"
        code = main(["policy", "--dataset", str(toy_dataset), "--run-dir",
                     str(run), "--metric", "degree", "--clusters", "2,3",
                     "--out", str(out)])
        assert code == 0
        seeds_csv = (out / "policy_seeds.csv").read_text().splitlines()
        chosen = int(seeds_csv[1].split(",")[2])
        assert chosen in (2, 3)

    def test_missing_run_dir(self, toy_dataset, tmp_path):
        assert main(["policy", "--dataset", str(toy_dataset), "--run-dir",
                     str(tmp_path / "nothing"), "--out",
                     str(tmp_path / "p")]) == 2


class TestCentralityCommand:
    def test_pagerank_csv_sums_to_one(self, toy_dataset, tmp_path):
        out = tmp_path / "pr.csv"
        code = main(["centrality", "--dataset", str(toy_dataset), "--metric",
                     "pagerank", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "node_id,value"
        total = sum(float(line.split(",")[1]) for line in lines[1:])
        assert abs(total - 1.0) < 1e-9
        assert len(lines) == 31

    def test_stdout_default(self, toy_dataset, capsys):
        assert main(["centrality", "--dataset", str(toy_dataset),
                     "--metric", "degree"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("node_id,value")


class TestSynthCommand:
    def test_planted_deterministic_manifests(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["synth", "--planted", "--n", "120", "--seed", "1"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert (a / "manifest.txt").read_bytes() == (b / "manifest.txt").read_bytes()

    def test_core_split_from_source(self, toy_dataset, tmp_path):
        out = tmp_path / "synth"
        code = main(["synth", "--source", str(toy_dataset), "--n", "8",
                     "--seed", "2", "--out", str(out)])
        assert code == 0
        assert (out / "regions.bin").exists()

    def test_odd_n_rejected(self, tmp_path):
        assert main(["synth", "--planted", "--n", "7",
                     "--out", str(tmp_path / "x")]) == 1


class TestSweepCommand:
    def test_csv_rows(self, tmp_path):
        d = tmp_path / "synthds"
        main(["synth", "--planted", "--n", "100", "--seed", "3",
              "--out", str(d)])
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--dataset", str(d), "--max-depth", "2",
                     "--hidden", "6", "--epochs", "3", "--patience", "2",
                     "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "depth,region,split,accuracy"
        assert len(lines) == 1 + 3 * 2

    def test_dataset_without_regions(self, toy_dataset, tmp_path):
        assert main(["sweep", "--dataset", str(toy_dataset),
                     "--out", str(tmp_path / "s.csv")]) == 2
