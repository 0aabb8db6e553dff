"""End-to-end CLI coverage: the six verbs and the exit-code contract."""

import json

import numpy as np
import pytest
from PIL import Image

from featfuse import (
    encode_table,
    load_metadata_csv,
    load_model,
    make_directional_dataset,
    read_features,
    save_labels_csv,
    write_corpus,
    write_features,
)
from featfuse.cli import ENCODED_EXTRACTOR_NAME, main
from featfuse.featureio import FeatureMatrix


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    ds = make_directional_dataset(n=120, d_img=8, k=4, seed=0, extractor_name="netA")
    return write_corpus(root, ds)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEncode:
    def test_writes_a_readable_feature_file(self, corpus, tmp_path, capsys):
        out = tmp_path / "meta.bin"
        code, stdout, _ = run(
            capsys, "encode", "--metadata", str(corpus["metadata"]),
            "--output", str(out),
        )
        assert code == 0
        assert "encoded 120 rows" in stdout
        m = read_features(out)
        assert m.extractor_name == ENCODED_EXTRACTOR_NAME
        assert m.n_samples == 120

    def test_matches_the_library_encoder(self, corpus, tmp_path, capsys):
        out = tmp_path / "meta.bin"
        run(
            capsys, "encode", "--metadata", str(corpus["metadata"]),
            "--fields", "marker,grade", "--output", str(out),
        )
        ids, table = load_metadata_csv(corpus["metadata"])
        expected = encode_table(table.select(("marker", "grade"))).values
        m = read_features(out)
        assert m.sample_ids == ids
        np.testing.assert_array_equal(m.data, expected.astype(np.float32))

    def test_unknown_field_exits_3(self, corpus, tmp_path, capsys):
        code, _, stderr = run(
            capsys, "encode", "--metadata", str(corpus["metadata"]),
            "--fields", "nope", "--output", str(tmp_path / "x.bin"),
        )
        assert code == 3
        assert "nope" in stderr

    def test_blank_field_list_exits_2(self, corpus, tmp_path, capsys):
        code, _, stderr = run(
            capsys, "encode", "--metadata", str(corpus["metadata"]),
            "--fields", " , ", "--output", str(tmp_path / "x.bin"),
        )
        assert code == 2
        assert "error:" in stderr

    def test_missing_metadata_file_exits_3(self, tmp_path, capsys):
        code, _, _ = run(
            capsys, "encode", "--metadata", str(tmp_path / "ghost.csv"),
            "--output", str(tmp_path / "x.bin"),
        )
        assert code == 3


class TestAugment:
    def test_stages_png_copies(self, tmp_path, capsys):
        src = tmp_path / "src"
        src.mkdir()
        rng = np.random.default_rng(0)
        for name in ("a.png", "b.png"):
            Image.fromarray(
                rng.integers(0, 256, size=(12, 14, 3), dtype=np.uint8).astype(np.uint8)
            ).save(src / name)
        dst = tmp_path / "dst"
        code, stdout, _ = run(
            capsys, "augment", "--input", str(src), "--output", str(dst),
            "--seed", "7",
        )
        assert code == 0
        assert "augmented 2 images" in stdout
        assert (dst / "a.png").exists()
        assert (dst / "b.png").exists()
        params = (dst / "augmentation_params.csv").read_text()
        assert params.startswith("# seed=7")

    def test_missing_input_dir_exits_3(self, tmp_path, capsys):
        code, _, _ = run(
            capsys, "augment", "--input", str(tmp_path / "ghost"),
            "--output", str(tmp_path / "dst"),
        )
        assert code == 3


class TestTrainAndEvaluate:
    def test_image_only_cycle(self, corpus, tmp_path, capsys):
        model = tmp_path / "model.bin"
        code, stdout, _ = run(
            capsys, "train", "--features", str(corpus["features"]),
            "--labels", str(corpus["labels"]),
            "--max-epochs", "60", "--output", str(model),
        )
        assert code == 0
        assert "trained on 120 samples, d=8, k=4" in stdout
        clf = load_model(model)
        assert clf.container_extras_["modality"] == "image_only"

        report = tmp_path / "report.csv"
        code, stdout, _ = run(
            capsys, "evaluate", "--model", str(model),
            "--features", str(corpus["features"]),
            "--labels", str(corpus["labels"]), "--output", str(report),
        )
        assert code == 0
        assert "macro:" in stdout
        body = [
            l for l in report.read_text().splitlines()
            if l and not l.startswith("#")
        ]
        assert body[0].startswith("class,tp,fp,tn,fn,")
        assert body[-1].startswith("macro,")
        assert len(body) == 1 + 4 + 1

    def test_fused_cycle_pins_the_encoding_widths(self, corpus, tmp_path, capsys):
        model = tmp_path / "fused.bin"
        code, _, _ = run(
            capsys, "train", "--features", str(corpus["features"]),
            "--labels", str(corpus["labels"]),
            "--metadata", str(corpus["metadata"]),
            "--fields", "marker,grade,site",
            "--max-epochs", "80", "--output", str(model),
        )
        assert code == 0
        clf = load_model(model)
        extras = clf.container_extras_
        assert extras["modality"] == "fused"
        assert extras["metadata_fields"] == ["marker", "grade", "site"]
        assert all(w >= 1 for w in extras["metadata_widths"])

        report = tmp_path / "fused_report.csv"
        code, _, _ = run(
            capsys, "evaluate", "--model", str(model),
            "--features", str(corpus["features"]),
            "--labels", str(corpus["labels"]),
            "--metadata", str(corpus["metadata"]), "--output", str(report),
        )
        assert code == 0
        assert report.exists()

    def test_fused_model_demands_metadata_at_evaluate(self, corpus, tmp_path, capsys):
        model = tmp_path / "fused.bin"
        run(
            capsys, "train", "--features", str(corpus["features"]),
            "--labels", str(corpus["labels"]),
            "--metadata", str(corpus["metadata"]), "--fields", "marker",
            "--max-epochs", "10", "--output", str(model),
        )
        code, _, stderr = run(
            capsys, "evaluate", "--model", str(model),
            "--features", str(corpus["features"]),
            "--labels", str(corpus["labels"]),
            "--output", str(tmp_path / "r.csv"),
        )
        assert code == 2
        assert "metadata" in stderr

    def test_metadata_without_fields_exits_2(self, corpus, tmp_path, capsys):
        code, _, stderr = run(
            capsys, "train", "--features", str(corpus["features"]),
            "--labels", str(corpus["labels"]),
            "--metadata", str(corpus["metadata"]),
            "--output", str(tmp_path / "m.bin"),
        )
        assert code == 2
        assert "--fields" in stderr

    def test_label_mismatch_exits_3(self, corpus, tmp_path, capsys):
        bad = tmp_path / "labels.csv"
        lines = corpus["labels"].read_text().splitlines()
        bad.write_text("\n".join(lines[:-1]) + "\n")
        code, _, stderr = run(
            capsys, "train", "--features", str(corpus["features"]),
            "--labels", str(bad), "--output", str(tmp_path / "m.bin"),
        )
        assert code == 3
        assert "has no row" in stderr

    def test_divergent_training_exits_4(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        n = 40
        ids = tuple(f"s{i:03d}" for i in range(n))
        write_features(
            FeatureMatrix(
                data=rng.normal(scale=1e6, size=(n, 4)).astype(np.float32),
                sample_ids=ids,
            ),
            tmp_path / "big.bin",
        )
        save_labels_csv(
            tmp_path / "labels.csv", ids,
            tuple("ab"[i % 2] for i in range(n)),
        )
        code, _, stderr = run(
            capsys, "train", "--features", str(tmp_path / "big.bin"),
            "--labels", str(tmp_path / "labels.csv"),
            "--constant-rate", "--no-standardize",
            "--learning-rate", "1e300",
            "--output", str(tmp_path / "m.bin"),
        )
        assert code == 4
        assert "diverged" in stderr or "error:" in stderr

    def test_corrupt_model_file_exits_3(self, corpus, tmp_path, capsys):
        bad = tmp_path / "model.bin"
        bad.write_bytes(b"not a model at all")
        code, _, _ = run(
            capsys, "evaluate", "--model", str(bad),
            "--features", str(corpus["features"]),
            "--labels", str(corpus["labels"]),
            "--output", str(tmp_path / "r.csv"),
        )
        assert code == 3


class TestRunAndReport:
    def write_config(self, corpus, tmp_path):
        cfg = tmp_path / "experiment.yaml"
        cfg.write_text(
            "feature_files:\n"
            f"  netA: {corpus['features']}\n"
            f"labels_csv: {corpus['labels']}\n"
            f"metadata_csv: {corpus['metadata']}\n"
            "metadata_fields: [marker, grade, site]\n"
            f"output_dir: {tmp_path / 'out'}\n"
            "train: {max_epochs: 40}\n"
        )
        return cfg

    def test_run_emits_the_report_set(self, corpus, tmp_path, capsys):
        cfg = self.write_config(corpus, tmp_path)
        code, stdout, _ = run(capsys, "run", "--config", str(cfg))
        assert code == 0
        assert "ran 2 cells" in stdout
        out = tmp_path / "out"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["record_count"] == 2
        assert (out / "records.json").exists()
        assert (out / "resolved_config.yaml").exists()

    def test_output_override_and_config_without_output_dir(
        self, corpus, tmp_path, capsys
    ):
        cfg = tmp_path / "no_out.yaml"
        cfg.write_text(
            "feature_files:\n"
            f"  netA: {corpus['features']}\n"
            f"labels_csv: {corpus['labels']}\n"
            "variants: {fused: false}\n"
            "train: {max_epochs: 20}\n"
        )
        code, _, stderr = run(capsys, "run", "--config", str(cfg))
        assert code == 2
        assert "output_dir" in stderr
        code, _, _ = run(
            capsys, "run", "--config", str(cfg),
            "--output", str(tmp_path / "cli_out"),
        )
        assert code == 0
        assert (tmp_path / "cli_out" / "manifest.json").exists()

    def test_report_re_emits_deterministic_files_byte_identically(
        self, corpus, tmp_path, capsys
    ):
        cfg = self.write_config(corpus, tmp_path)
        assert run(capsys, "run", "--config", str(cfg))[0] == 0
        out = tmp_path / "out"
        redo = tmp_path / "redo"
        code, stdout, _ = run(
            capsys, "report", "--records", str(out / "records.json"),
            "--output", str(redo),
        )
        assert code == 0
        assert "re-emitted" in stdout
        manifest = json.loads((out / "manifest.json").read_text())
        for name in manifest["deterministic_files"]:
            assert (out / name).read_bytes() == (redo / name).read_bytes(), name

    def test_missing_config_exits_2(self, tmp_path, capsys):
        code, _, _ = run(capsys, "run", "--config", str(tmp_path / "ghost.yaml"))
        assert code == 2

    def test_missing_records_exits_3(self, tmp_path, capsys):
        code, _, _ = run(
            capsys, "report", "--records", str(tmp_path / "ghost.json"),
            "--output", str(tmp_path / "o"),
        )
        assert code == 3


class TestParser:
    def test_unknown_verb_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
