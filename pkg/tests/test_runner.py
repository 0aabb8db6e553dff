"""Experiment orchestration: config parsing, the run grid, and report files."""

import json

import numpy as np
import pytest
import yaml

from featfuse import (
    ConfigError,
    DataError,
    ExperimentConfig,
    StructuralError,
    TrainConfig,
    emit_reports,
    load_config,
    load_records,
    make_directional_dataset,
    read_features,
    run_experiment,
    write_corpus,
    write_features,
)
from featfuse.featureio import FeatureMatrix
from featfuse.runner import _report_to_dict, save_records


def build_corpus(root, n=120, d=8, k=4, streams=("netA", "netB"), augmented=False):
    """Feature files for several extractors over one synthetic dataset."""
    root.mkdir(parents=True, exist_ok=True)
    paths = {}
    for j, name in enumerate(streams):
        ds = make_directional_dataset(
            n=n, d_img=d, k=k, seed=0, feature_stream=j, extractor_name=name
        )
        written = write_corpus(root, ds)
        paths[name] = written["features"]
        if augmented:
            aug = make_directional_dataset(
                n=n, d_img=d, k=k, seed=0, feature_stream=10 + j, extractor_name=name
            )
            aug_path = root / f"features_{name}_augmented.bin"
            write_features(aug.features, aug_path)
            paths[f"{name}:augmented"] = aug_path
    return paths, written["labels"], written["metadata"]


def make_config(root, out, fast=True, **overrides):
    paths, labels, metadata = build_corpus(root)
    kwargs = dict(
        feature_files={"netA": paths["netA"], "netB": paths["netB"]},
        labels_csv=labels,
        metadata_csv=metadata,
        metadata_fields=("marker", "grade", "site"),
        output_dir=out,
        train=TrainConfig(max_epochs=40) if fast else TrainConfig(),
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


class TestConfigValidation:
    def base(self, tmp_path):
        return dict(
            feature_files={"net": tmp_path / "f.bin"},
            labels_csv=tmp_path / "labels.csv",
            metadata_csv=tmp_path / "meta.csv",
            metadata_fields=("a",),
            output_dir=tmp_path / "out",
        )

    def test_needs_at_least_one_feature_file(self, tmp_path):
        kw = self.base(tmp_path)
        kw["feature_files"] = {}
        with pytest.raises(ConfigError, match="at least one feature file"):
            ExperimentConfig(**kw)

    def test_fused_needs_metadata_csv(self, tmp_path):
        kw = self.base(tmp_path)
        kw["metadata_csv"] = None
        with pytest.raises(ConfigError, match="metadata_csv"):
            ExperimentConfig(**kw)

    def test_fused_needs_fields(self, tmp_path):
        kw = self.base(tmp_path)
        kw["metadata_fields"] = ()
        with pytest.raises(ConfigError, match="empty metadata_fields"):
            ExperimentConfig(**kw)

    def test_image_only_without_metadata_is_fine(self, tmp_path):
        kw = self.base(tmp_path)
        kw.update(metadata_csv=None, metadata_fields=(), fused=False)
        cfg = ExperimentConfig(**kw)
        assert cfg.modalities == ("image_only",)

    def test_some_variant_must_be_enabled(self, tmp_path):
        kw = self.base(tmp_path)
        kw.update(image_only=False, fused=False)
        with pytest.raises(ConfigError, match="no variants"):
            ExperimentConfig(**kw)

    def test_augmented_needs_matching_files(self, tmp_path):
        kw = self.base(tmp_path)
        kw["include_augmented"] = True
        with pytest.raises(ConfigError, match="no augmented features for"):
            ExperimentConfig(**kw)

    def test_augmented_extras_rejected(self, tmp_path):
        kw = self.base(tmp_path)
        kw.update(
            include_augmented=True,
            augmented_feature_files={
                "net": tmp_path / "a.bin",
                "ghost": tmp_path / "g.bin",
            },
        )
        with pytest.raises(ConfigError, match="unknown extractors"):
            ExperimentConfig(**kw)

    def test_fraction_and_seed_and_workers_ranges(self, tmp_path):
        for field, value in (
            ("train_fraction", 0.0),
            ("train_fraction", 1.0),
            ("split_seed", -1),
            ("workers", 0),
        ):
            kw = self.base(tmp_path)
            kw[field] = value
            with pytest.raises(ConfigError):
                ExperimentConfig(**kw)

    def test_processings_follow_the_flag(self, tmp_path):
        kw = self.base(tmp_path)
        assert ExperimentConfig(**kw).processings == ("unprocessed",)
        kw.update(
            include_augmented=True,
            augmented_feature_files={"net": tmp_path / "a.bin"},
        )
        assert ExperimentConfig(**kw).processings == ("unprocessed", "augmented")


class TestFingerprint:
    def test_stable_across_calls(self, tmp_path):
        kw = TestConfigValidation().base(tmp_path)
        assert ExperimentConfig(**kw).fingerprint() == ExperimentConfig(**kw).fingerprint()

    def test_ignores_output_dir_and_workers(self, tmp_path):
        kw = TestConfigValidation().base(tmp_path)
        a = ExperimentConfig(**kw)
        kw.update(output_dir=tmp_path / "elsewhere", workers=8)
        b = ExperimentConfig(**kw)
        assert a.fingerprint() == b.fingerprint()
        assert "output_dir" not in a.semantic_dict()
        assert "workers" not in a.semantic_dict()

    def test_sensitive_to_the_split(self, tmp_path):
        kw = TestConfigValidation().base(tmp_path)
        a = ExperimentConfig(**kw)
        kw["split_seed"] = 1
        assert a.fingerprint() != ExperimentConfig(**kw).fingerprint()

    def test_sixteen_hex_digits(self, tmp_path):
        fp = ExperimentConfig(**TestConfigValidation().base(tmp_path)).fingerprint()
        assert len(fp) == 16
        int(fp, 16)


class TestLoadConfig:
    def write(self, tmp_path, text):
        p = tmp_path / "experiment.yaml"
        p.write_text(text)
        return p

    def minimal(self, tmp_path):
        return self.write(
            tmp_path,
            "feature_files:\n  net: features.bin\n"
            "labels_csv: labels.csv\n"
            "metadata_csv: meta.csv\n"
            "metadata_fields: [age, sex]\n"
            "output_dir: out\n",
        )

    def test_defaults(self, tmp_path):
        cfg = load_config(self.minimal(tmp_path))
        assert cfg.image_only and cfg.fused and not cfg.include_augmented
        assert cfg.split_seed == 0
        assert cfg.train_fraction == 0.7
        assert cfg.train.max_epochs == 2000
        assert cfg.train.learning_rate == 0.1
        assert cfg.standardize is True
        assert cfg.workers == 1

    def test_relative_paths_resolve_against_the_config_file(self, tmp_path):
        cfg = load_config(self.minimal(tmp_path))
        assert cfg.feature_files["net"] == tmp_path / "features.bin"
        assert cfg.labels_csv == tmp_path / "labels.csv"
        assert cfg.output_dir == tmp_path / "out"

    def test_absolute_paths_kept(self, tmp_path):
        p = self.write(
            tmp_path,
            f"feature_files:\n  net: {tmp_path}/abs.bin\n"
            f"labels_csv: labels.csv\noutput_dir: out\n"
            "variants: {fused: false}\n",
        )
        cfg = load_config(p)
        assert cfg.feature_files["net"] == tmp_path / "abs.bin"

    def test_overrides_beat_file_values(self, tmp_path):
        cfg = load_config(
            self.minimal(tmp_path),
            output_dir=tmp_path / "cli_out",
            split_seed=5,
            train_seed=9,
            workers=3,
        )
        assert cfg.output_dir == tmp_path / "cli_out"
        assert cfg.split_seed == 5
        assert cfg.train.seed == 9
        assert cfg.workers == 3

    def test_train_section_parsed(self, tmp_path):
        p = self.write(
            tmp_path,
            "feature_files: {net: f.bin}\nlabels_csv: l.csv\noutput_dir: out\n"
            "variants: {fused: false}\n"
            "train: {learning_rate: 0.5, max_epochs: 7, standardize: false}\n",
        )
        cfg = load_config(p)
        assert cfg.train.learning_rate == 0.5
        assert cfg.train.max_epochs == 7
        assert cfg.standardize is False

    @pytest.mark.parametrize(
        "text,match",
        [
            ("labels_csv: l.csv\noutput_dir: out\n", "feature_files"),
            ("feature_files: {n: f.bin}\noutput_dir: o\nvariants: {fused: false}\n", "labels_csv"),
            (
                "feature_files: {n: f.bin}\nlabels_csv: l.csv\nvariants: {fused: false}\n",
                "output_dir",
            ),
            (
                "feature_files: {n: f.bin}\nlabels_csv: l.csv\noutput_dir: o\nbogus: 1\n",
                "unknown config keys",
            ),
            (
                "feature_files: {n: f.bin}\nlabels_csv: l.csv\noutput_dir: o\n"
                "variants: {fused: false}\ntrain: {epochs: 3}\n",
                "unknown train keys",
            ),
            (
                "feature_files: {n: f.bin}\nlabels_csv: l.csv\noutput_dir: o\n"
                "variants: {fused: false}\nsplit: {ratio: 0.5}\n",
                "unknown split keys",
            ),
            (
                "feature_files: {n: f.bin}\nlabels_csv: l.csv\noutput_dir: o\n"
                "variants: {fused: false}\nmetadata_fields: 3\n",
                "metadata_fields",
            ),
            ("- just\n- a list\n", "mapping"),
        ],
    )
    def test_malformed_configs(self, tmp_path, text, match):
        with pytest.raises(ConfigError, match=match):
            load_config(self.write(tmp_path, text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.yaml")

    def test_invalid_yaml(self, tmp_path):
        with pytest.raises(ConfigError, match="invalid YAML"):
            load_config(self.write(tmp_path, "feature_files: {net: [unclosed\n"))


class TestRunExperiment:
    def test_grid_structure(self, tmp_path):
        cfg = make_config(tmp_path / "data", tmp_path / "out")
        result = run_experiment(cfg)
        assert len(result.records) == 4  # 2 extractors x 2 modalities
        variants = {(r.extractor, r.modality, r.processing) for r in result.records}
        assert variants == {
            ("netA", "image_only", "unprocessed"),
            ("netA", "fused", "unprocessed"),
            ("netB", "image_only", "unprocessed"),
            ("netB", "fused", "unprocessed"),
        }
        assert set(result.deltas) == {("netA", "unprocessed"), ("netB", "unprocessed")}
        assert result.n_train == 84
        assert result.n_test == 36
        assert result.class_names == tuple(f"class_{c}" for c in range(4))

    def test_every_cell_shares_one_split(self, tmp_path):
        result = run_experiment(make_config(tmp_path / "data", tmp_path / "out"))
        prints = {r.report.split_fingerprint for r in result.records}
        assert prints == {result.split_fingerprint}

    def test_fused_dimensions_recorded(self, tmp_path):
        result = run_experiment(make_config(tmp_path / "data", tmp_path / "out"))
        for r in result.records:
            assert r.d_image == 8
            if r.modality == "image_only":
                assert r.d_metadata == 0
            else:
                assert r.d_metadata > 0

    def test_metadata_direction_shows_up_in_deltas(self, tmp_path):
        result = run_experiment(make_config(tmp_path / "data", tmp_path / "out"))
        for delta in result.deltas.values():
            assert delta.macro_deltas["f_measure"] > 0.05

    def test_feature_row_order_does_not_matter(self, tmp_path):
        """Rows are realigned to the labels file before splitting."""
        data = tmp_path / "data"
        cfg = make_config(data, tmp_path / "out1")
        baseline = run_experiment(cfg)

        shuffled_path = data / "features_netA_shuffled.bin"
        m = read_features(cfg.feature_files["netA"])
        rng = np.random.default_rng(99)
        perm = rng.permutation(m.n_samples)
        write_features(
            FeatureMatrix(
                data=m.data[perm],
                sample_ids=tuple(m.sample_ids[i] for i in perm),
                extractor_name=m.extractor_name,
            ),
            shuffled_path,
        )
        cfg2 = make_config(
            data,
            tmp_path / "out2",
            feature_files={"netA": shuffled_path, "netB": cfg.feature_files["netB"]},
        )
        shuffled = run_experiment(cfg2)
        assert shuffled.split_fingerprint == baseline.split_fingerprint
        for a, b in zip(baseline.records, shuffled.records):
            assert _report_to_dict(a.report) == _report_to_dict(b.report)

    def test_image_only_run_has_no_deltas(self, tmp_path):
        cfg = make_config(
            tmp_path / "data", tmp_path / "out",
            fused=False, metadata_csv=None, metadata_fields=(),
        )
        result = run_experiment(cfg)
        assert len(result.records) == 2
        assert result.deltas == {}

    def test_augmented_grid_doubles(self, tmp_path):
        data = tmp_path / "data"
        paths, labels, metadata = build_corpus(data, augmented=True)
        cfg = ExperimentConfig(
            feature_files={"netA": paths["netA"], "netB": paths["netB"]},
            augmented_feature_files={
                "netA": paths["netA:augmented"],
                "netB": paths["netB:augmented"],
            },
            labels_csv=labels,
            metadata_csv=metadata,
            metadata_fields=("marker", "grade"),
            include_augmented=True,
            output_dir=tmp_path / "out",
            train=TrainConfig(max_epochs=30),
        )
        result = run_experiment(cfg)
        assert len(result.records) == 8
        assert set(result.deltas) == {
            (e, p) for e in ("netA", "netB") for p in ("unprocessed", "augmented")
        }

    def test_worker_count_does_not_change_results(self, tmp_path):
        data = tmp_path / "data"
        serial = run_experiment(make_config(data, tmp_path / "o1", workers=1))
        threaded = run_experiment(make_config(data, tmp_path / "o2", workers=4))
        for a, b in zip(serial.records, threaded.records):
            assert (a.extractor, a.modality) == (b.extractor, b.modality)
            assert _report_to_dict(a.report) == _report_to_dict(b.report)

    def test_missing_sample_in_features_names_the_cell(self, tmp_path):
        data = tmp_path / "data"
        cfg = make_config(data, tmp_path / "out")
        m = read_features(cfg.feature_files["netA"])
        write_features(
            FeatureMatrix(
                data=m.data[:-1],
                sample_ids=m.sample_ids[:-1],
                extractor_name=m.extractor_name,
            ),
            cfg.feature_files["netA"],
        )
        with pytest.raises(DataError, match="netA/unprocessed"):
            run_experiment(cfg)

    def test_duplicate_label_ids_rejected(self, tmp_path):
        data = tmp_path / "data"
        cfg = make_config(data, tmp_path / "out")
        lines = cfg.labels_csv.read_text().splitlines()
        lines.append(lines[1])
        cfg.labels_csv.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataError, match="duplicate"):
            run_experiment(cfg)

    def test_unknown_metadata_field_rejected(self, tmp_path):
        cfg = make_config(
            tmp_path / "data", tmp_path / "out",
            metadata_fields=("marker", "ghost_field"),
        )
        with pytest.raises(DataError, match="ghost_field"):
            run_experiment(cfg)

    def test_extraction_manifest_feeds_the_record(self, tmp_path):
        data = tmp_path / "data"
        cfg = make_config(data, tmp_path / "out")
        sidecar = data / (cfg.feature_files["netA"].name + ".manifest.json")
        sidecar.write_text(json.dumps({"seconds": 12.5, "network": "netA"}))
        result = run_experiment(cfg)
        by_extractor = {r.extractor: r for r in result.records if r.modality == "image_only"}
        assert by_extractor["netA"].extraction_seconds == 12.5
        assert by_extractor["netB"].extraction_seconds is None

    def test_malformed_extraction_manifest_rejected(self, tmp_path):
        data = tmp_path / "data"
        cfg = make_config(data, tmp_path / "out")
        sidecar = data / (cfg.feature_files["netA"].name + ".manifest.json")
        sidecar.write_text("{not json")
        with pytest.raises(StructuralError, match="manifest"):
            run_experiment(cfg)

    def test_negative_manifest_seconds_rejected(self, tmp_path):
        data = tmp_path / "data"
        cfg = make_config(data, tmp_path / "out")
        sidecar = data / (cfg.feature_files["netA"].name + ".manifest.json")
        sidecar.write_text(json.dumps({"seconds": -3}))
        with pytest.raises(StructuralError, match="seconds"):
            run_experiment(cfg)


class TestEmission:
    def result(self, tmp_path, out="out"):
        return run_experiment(make_config(tmp_path / "data", tmp_path / out))

    def test_file_inventory(self, tmp_path):
        result = self.result(tmp_path)
        out = tmp_path / "reports"
        written = emit_reports(result, out)
        names = {p.name for p in written}
        assert names == {
            "resolved_config.yaml",
            "report_netA_image_only_unprocessed.csv",
            "report_netA_fused_unprocessed.csv",
            "report_netB_image_only_unprocessed.csv",
            "report_netB_fused_unprocessed.csv",
            "deltas_bars.csv",
            "auroc_deltas_boxplot.csv",
            "auroc_delta_summary.csv",
            "runtimes.csv",
            "records.json",
            "manifest.json",
        }
        assert all(p.exists() for p in written)

    def test_manifest_separates_file_groups(self, tmp_path):
        result = self.result(tmp_path)
        out = tmp_path / "reports"
        emit_reports(result, out, execution={"workers": 1})
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config_fingerprint"] == result.config_fingerprint
        assert manifest["split_fingerprint"] == result.split_fingerprint
        assert manifest["record_count"] == 4
        assert manifest["delta_count"] == 2
        assert manifest["timing_files"] == ["runtimes.csv", "records.json", "manifest.json"]
        assert "resolved_config.yaml" in manifest["deterministic_files"]
        assert "runtimes.csv" not in manifest["deterministic_files"]
        assert manifest["execution"] == {"workers": 1}

    def test_report_csv_shape(self, tmp_path):
        result = self.result(tmp_path)
        out = tmp_path / "reports"
        emit_reports(result, out)
        text = (out / "report_netA_fused_unprocessed.csv").read_text()
        lines = text.splitlines()
        headers = [l for l in lines if l.startswith("#")]
        body = [l for l in lines if not l.startswith("#")]
        assert any(l.startswith("# config=") for l in headers)
        assert any(l.startswith("# split=") for l in headers)
        assert any(l.startswith("# modality=fused") for l in headers)
        assert body[0].startswith("class,tp,fp,tn,fn,accuracy")
        assert len(body) == 1 + 4 + 1  # header, one row per class, macro
        assert body[-1].startswith("macro,")

    def test_bar_and_boxplot_row_counts(self, tmp_path):
        result = self.result(tmp_path)
        out = tmp_path / "reports"
        emit_reports(result, out)
        bars = [
            l for l in (out / "deltas_bars.csv").read_text().splitlines()
            if l and not l.startswith("#")
        ]
        assert len(bars) == 1 + 2 * 10  # header + extractors x (9 measures + auroc)
        box = [
            l for l in (out / "auroc_deltas_boxplot.csv").read_text().splitlines()
            if l and not l.startswith("#")
        ]
        assert len(box) == 1 + 2 * 4  # header + extractors x classes
        summary = [
            l for l in (out / "auroc_delta_summary.csv").read_text().splitlines()
            if l and not l.startswith("#")
        ]
        assert len(summary) == 1 + 2

    def test_runtime_table_reports_widths(self, tmp_path):
        result = self.result(tmp_path)
        out = tmp_path / "reports"
        emit_reports(result, out)
        lines = [
            l for l in (out / "runtimes.csv").read_text().splitlines()
            if l and not l.startswith("#")
        ]
        header = lines[0].split(",")
        assert header[:3] == ["network", "d_image", "d_fused"]
        rows = {l.split(",")[0]: l.split(",") for l in lines[1:]}
        assert set(rows) == {"netA", "netB"}
        d_meta = next(r.d_metadata for r in result.records if r.modality == "fused")
        assert rows["netA"][1] == "8"
        assert rows["netA"][2] == str(8 + d_meta)

    def test_deterministic_files_are_byte_identical_across_runs(self, tmp_path):
        a = self.result(tmp_path, out="o1")
        b = run_experiment(make_config(tmp_path / "data", tmp_path / "o2"))
        out_a, out_b = tmp_path / "ra", tmp_path / "rb"
        emit_reports(a, out_a)
        emit_reports(b, out_b)
        manifest = json.loads((out_a / "manifest.json").read_text())
        assert manifest["deterministic_files"]
        for name in manifest["deterministic_files"]:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name

    def test_records_round_trip_re_emits_identical_reports(self, tmp_path):
        result = self.result(tmp_path)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        emit_reports(result, out1)
        rebuilt = load_records(out1 / "records.json")
        emit_reports(rebuilt, out2)
        manifest = json.loads((out1 / "manifest.json").read_text())
        for name in manifest["deterministic_files"]:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_rebuilt_deltas_match_originals(self, tmp_path):
        result = self.result(tmp_path)
        out = tmp_path / "r"
        emit_reports(result, out)
        rebuilt = load_records(out / "records.json")
        for key, delta in result.deltas.items():
            other = rebuilt.deltas[key]
            assert delta.macro_deltas == other.macro_deltas
            assert delta.auroc_deltas == other.auroc_deltas

    def test_slug_sanitizes_filenames(self, tmp_path):
        data = tmp_path / "data"
        cfg = make_config(data, tmp_path / "out")
        weird = {"net/one two": cfg.feature_files["netA"]}
        cfg2 = make_config(data, tmp_path / "out", feature_files=weird)
        result = run_experiment(cfg2)
        written = emit_reports(result, tmp_path / "reports")
        names = {p.name for p in written}
        assert "report_net-one-two_image_only_unprocessed.csv" in names

    def test_empty_result_rejected(self, tmp_path):
        result = self.result(tmp_path)
        from dataclasses import replace

        with pytest.raises(DataError):
            emit_reports(replace(result, records=()), tmp_path / "x")


class TestRecordsFile:
    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_records(tmp_path / "nope.json")

    def test_garbage_json(self, tmp_path):
        p = tmp_path / "records.json"
        p.write_text("{broken")
        with pytest.raises(StructuralError, match="invalid JSON"):
            load_records(p)

    def test_wrong_format_marker(self, tmp_path):
        p = tmp_path / "records.json"
        p.write_text(json.dumps({"format": 99}))
        with pytest.raises(StructuralError, match="format"):
            load_records(p)

    def test_save_load_preserves_result_fields(self, tmp_path):
        result = run_experiment(make_config(tmp_path / "data", tmp_path / "out"))
        p = tmp_path / "records.json"
        save_records(result, p)
        back = load_records(p)
        assert back.config_fingerprint == result.config_fingerprint
        assert back.split_fingerprint == result.split_fingerprint
        assert back.class_names == result.class_names
        assert back.n_train == result.n_train
        assert back.n_test == result.n_test
        assert len(back.records) == len(result.records)
        for a, b in zip(result.records, back.records):
            assert _report_to_dict(a.report) == _report_to_dict(b.report)
            assert a.train_seconds == b.train_seconds
