"""Extractor end-to-end tests using the deterministic hash backend."""

import json
import shutil
import struct
import subprocess

import numpy as np
import pytest
from PIL import Image

from clipxpert_extractor import ExtractJob, ExtractorError, extract
from clipxpert_extractor.cli import main
from clipxpert_extractor.extract import discover_images

CLASSES = ["cat", "airplane", "train"]


def read_emb1(path):
    blob = path.read_bytes()
    assert blob[:4] == b"EMB1"
    rows, dim = struct.unpack("<II", blob[4:12])
    assert len(blob) == 12 + 4 * rows * dim
    return np.frombuffer(blob[12:], dtype="<f4").reshape(rows, dim)


def make_image(path, color, size=(24, 24)):
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", size, color).save(path)


@pytest.fixture()
def image_root(tmp_path):
    root = tmp_path / "images"
    make_image(root / "cat" / "a.png", (200, 30, 30))
    make_image(root / "cat" / "b.png", (190, 40, 35))
    make_image(root / "airplane" / "a.png", (30, 30, 200))
    make_image(root / "train" / "a.png", (30, 200, 30))
    make_image(root / "dog" / "a.png", (120, 90, 40))  # not in the catalog
    return root


@pytest.fixture()
def class_json(tmp_path):
    path = tmp_path / "classes.json"
    path.write_text(json.dumps(CLASSES))
    return path


def hash_job(image_root, class_json, out, **kwargs):
    defaults = dict(backend="hash", hash_dim=32, batch_size=2)
    defaults.update(kwargs)
    return ExtractJob(image_root=str(image_root), class_json=str(class_json),
                      output_dir=str(out), **defaults)


class TestDiscovery:
    def test_sorted_with_class_dirs(self, image_root):
        entries = discover_images(image_root)
        assert [e[0].replace("\\", "/") for e in entries] == [
            "airplane/a.png", "cat/a.png", "cat/b.png", "dog/a.png",
            "train/a.png"]
        assert [e[1] for e in entries] == ["airplane", "cat", "cat", "dog",
                                           "train"]

    def test_missing_root(self, tmp_path):
        with pytest.raises(ExtractorError):
            discover_images(tmp_path / "absent")


class TestExtract:
    def test_outputs_match_formats(self, image_root, class_json, tmp_path):
        out = tmp_path / "out"
        manifest = extract(hash_job(image_root, class_json, out))

        embeddings = read_emb1(out / "embeddings.emb1")
        anchors = read_emb1(out / "anchors.emb1")
        assert embeddings.shape == (5, 32)
        assert anchors.shape == (3, 32)
        for matrix in (embeddings, anchors):
            norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
            np.testing.assert_allclose(norms, 1.0, atol=1e-5)

        labels = json.loads((out / "labels.json").read_text())
        assert labels["C"] == 3
        # airplane=1, cat=0, cat=0, dog=unknown(3), train=2
        assert labels["labels"] == [1, 0, 0, 3, 2]

        assert manifest["n_images"] == 5
        assert manifest["labels_written"] is True
        assert manifest["classes"] == CLASSES

    def test_anchor_rows_follow_catalog_order(self, image_root, class_json,
                                              tmp_path):
        out1 = tmp_path / "o1"
        extract(hash_job(image_root, class_json, out1))
        reordered = tmp_path / "classes_reordered.json"
        reordered.write_text(json.dumps([CLASSES[1], CLASSES[0], CLASSES[2]]))
        out2 = tmp_path / "o2"
        extract(hash_job(image_root, reordered, out2))
        a1 = read_emb1(out1 / "anchors.emb1")
        a2 = read_emb1(out2 / "anchors.emb1")
        np.testing.assert_array_equal(a1[0], a2[1])
        np.testing.assert_array_equal(a1[1], a2[0])
        np.testing.assert_array_equal(a1[2], a2[2])

    def test_reextraction_is_consistent(self, image_root, class_json, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        extract(hash_job(image_root, class_json, out1))
        extract(hash_job(image_root, class_json, out2))
        e1 = read_emb1(out1 / "embeddings.emb1").astype(np.float64)
        e2 = read_emb1(out2 / "embeddings.emb1").astype(np.float64)
        cosines = np.einsum("ij,ij->i", e1, e2) / (
            np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1))
        assert np.all(cosines >= 0.999)

    def test_batch_size_does_not_change_rows(self, image_root, class_json,
                                             tmp_path):
        out1, out2 = tmp_path / "b1", tmp_path / "b2"
        extract(hash_job(image_root, class_json, out1, batch_size=1))
        extract(hash_job(image_root, class_json, out2, batch_size=64))
        np.testing.assert_array_equal(read_emb1(out1 / "embeddings.emb1"),
                                      read_emb1(out2 / "embeddings.emb1"))

    def test_decode_failures_skipped_and_logged(self, image_root, class_json,
                                                tmp_path):
        bad = image_root / "cat" / "broken.png"
        bad.write_bytes(b"not an image at all")
        out = tmp_path / "out"
        manifest = extract(hash_job(image_root, class_json, out))
        assert manifest["n_images"] == 5
        assert len(manifest["skipped"]) == 1
        assert manifest["skipped"][0]["path"].endswith("broken.png")
        assert isinstance(manifest["skipped"][0]["index"], int)
        labels = json.loads((out / "labels.json").read_text())
        assert len(labels["labels"]) == 5

    def test_no_images_is_an_error(self, tmp_path, class_json):
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(ExtractorError):
            extract(hash_job(empty, class_json, tmp_path / "out"))

    def test_all_images_broken_is_an_error(self, tmp_path, class_json):
        root = tmp_path / "imgs"
        (root / "cat").mkdir(parents=True)
        (root / "cat" / "x.png").write_bytes(b"junk")
        with pytest.raises(ExtractorError):
            extract(hash_job(root, class_json, tmp_path / "out"))

    def test_flat_folder_writes_no_labels(self, tmp_path, class_json):
        root = tmp_path / "flat"
        make_image(root / "one.png", (10, 10, 10))
        make_image(root / "two.png", (240, 240, 240))
        out = tmp_path / "out"
        manifest = extract(hash_job(root, class_json, out))
        assert manifest["labels_written"] is False
        assert not (out / "labels.json").exists()

    def test_bad_catalog_rejected(self, image_root, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(["only-one"]))
        with pytest.raises(ExtractorError):
            extract(hash_job(image_root, path, tmp_path / "out"))

    def test_unknown_backend_rejected(self, image_root, class_json, tmp_path):
        with pytest.raises(ExtractorError):
            extract(ExtractJob(image_root=str(image_root),
                               class_json=str(class_json),
                               output_dir=str(tmp_path / "out"),
                               backend="nope"))


class TestCli:
    def test_happy_path(self, image_root, class_json, tmp_path, capsys):
        code = main(["--images", str(image_root), "--classes", str(class_json),
                     "--out", str(tmp_path / "out"), "--backend", "hash",
                     "--hash-dim", "16"])
        assert code == 0
        assert "encoded 5 images" in capsys.readouterr().out
        assert (tmp_path / "out" / "embeddings.emb1").exists()

    def test_error_exit_code(self, tmp_path, class_json, capsys):
        code = main(["--images", str(tmp_path / "absent"),
                     "--classes", str(class_json),
                     "--out", str(tmp_path / "out"), "--backend", "hash"])
        assert code == 2
        assert "error:" in capsys.readouterr().err


@pytest.mark.skipif(shutil.which("clipxpert") is None,
                    reason="clipxpert CLI not installed")
class TestPipelineInterop:
    def test_pipeline_consumes_extractor_output(self, image_root, class_json,
                                                tmp_path):
        out = tmp_path / "emb"
        extract(hash_job(image_root, class_json, out))
        run_dir = tmp_path / "run"
        result = subprocess.run(
            ["clipxpert", "predict",
             "--embeddings", str(out / "embeddings.emb1"),
             "--anchors", str(out / "anchors.emb1"),
             "--labels", str(out / "labels.json"),
             "--out", str(run_dir)],
            capture_output=True, text=True)
        assert result.returncode == 0, result.stderr
        preds = json.loads((run_dir / "predictions.json").read_text())
        assert len(preds) == 5
