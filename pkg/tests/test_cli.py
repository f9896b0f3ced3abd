import json
import math

import numpy as np
import pytest

from crossseg.cli import main
from crossseg.dataset_io import (DatasetManifest, ManifestItem,
                                 parse_annotation, read_mask, save_annotation,
                                 save_manifest, write_mask)
from crossseg.pseudo_mask import MaskGrid


def cross_doc(image_ref, width, height, ox, oy, arms, angle_deg=0.0,
              category=1, extra_entries=()):
    a1 = math.radians(angle_deg + 90.0)
    a2 = math.radians(angle_deg)
    oa, ob, oc, od = arms
    entries = [{
        "category": category,
        "cross": {
            "seg_ab": [[ox + oa * math.cos(a1), oy + oa * math.sin(a1)],
                       [ox - ob * math.cos(a1), oy - ob * math.sin(a1)]],
            "seg_cd": [[ox - oc * math.cos(a2), oy - oc * math.sin(a2)],
                       [ox + od * math.cos(a2), oy + od * math.sin(a2)]],
        },
    }]
    entries.extend(extra_entries)
    return {"schema_version": 1, "image_ref": image_ref,
            "width": width, "height": height, "entries": entries}


def write_corpus(ann_dir, n=4, size=48):
    ann_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    for k in range(n):
        arms = rng.uniform(4, 10, size=4)
        doc = cross_doc(f"img_{k}.png", size, size,
                        ox=size / 2 + rng.uniform(-4, 4),
                        oy=size / 2 + rng.uniform(-4, 4),
                        arms=tuple(arms), angle_deg=rng.uniform(0, 180))
        save_annotation(parse_annotation(doc), ann_dir / f"img_{k}.json")


class TestGenmask:
    def test_empty_dir(self, tmp_path, capsys):
        (tmp_path / "empty").mkdir()
        code = main(["genmask", "--annotations", str(tmp_path / "empty"),
                     "--out", str(tmp_path / "out")])
        assert code == 2
        assert "no annotations found" in capsys.readouterr().err

    def test_binary_masks_with_inf_sigma(self, tmp_path):
        write_corpus(tmp_path / "ann")
        code = main(["genmask", "--annotations", str(tmp_path / "ann"),
                     "--out", str(tmp_path / "out"), "--sigma-ratio", "inf"])
        assert code == 0
        masks = sorted((tmp_path / "out").glob("*_cat1.png"))
        assert len(masks) == 4
        for m in masks:
            vals = set(np.unique(read_mask(m).weights))
            assert vals.issubset({0.0, 1.0})
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["images"] == 4
        assert summary["per_category"]["1"]["count"] == 4

    def test_shrink_area_ratio(self, tmp_path):
        write_corpus(tmp_path / "ann", n=8, size=96)
        # regenerate with bigger arms for area stability
        for k, p in enumerate(sorted((tmp_path / "ann").glob("*.json"))):
            rng = np.random.default_rng(k)
            doc = cross_doc(f"img_{k}.png", 96, 96, 48, 48,
                            tuple(rng.uniform(14, 20, size=4)),
                            angle_deg=rng.uniform(0, 180))
            save_annotation(parse_annotation(doc), p)
        main(["genmask", "--annotations", str(tmp_path / "ann"),
              "--out", str(tmp_path / "base")])
        main(["genmask", "--annotations", str(tmp_path / "ann"),
              "--out", str(tmp_path / "shrunk"), "--shrink", "0.3"])
        base = json.loads((tmp_path / "base" / "summary.json").read_text())
        shrunk = json.loads((tmp_path / "shrunk" / "summary.json").read_text())
        ratio = (shrunk["per_category"]["1"]["mean_area_px"]
                 / base["per_category"]["1"]["mean_area_px"])
        assert ratio == pytest.approx(0.49, abs=0.03)

    def test_invalid_annotation_exits_2(self, tmp_path, capsys):
        ann = tmp_path / "ann"
        write_corpus(ann, n=1)
        (ann / "broken.json").write_text(json.dumps({
            "schema_version": 1, "image_ref": "x.png", "width": 10,
            "height": 10,
            "entries": [{"category": 1, "cross": {
                "seg_ab": [[1, 5], [9, 5]], "seg_cd": [[1, 6], [9, 6]]}}]}))
        code = main(["genmask", "--annotations", str(ann),
                     "--out", str(tmp_path / "out")])
        assert code == 2
        assert "broken.json" in capsys.readouterr().err

    def test_combine_writes_label_map(self, tmp_path):
        ann = tmp_path / "ann"
        ann.mkdir()
        second = {"category": 2, "cross": {
            "seg_ab": [[30.0, 18.0], [30.0, 42.0]],
            "seg_cd": [[18.0, 30.0], [42.0, 30.0]]}}
        doc = cross_doc("img.png", 64, 64, 30, 30, (5, 5, 5, 5),
                        extra_entries=[second])
        doc["entries"][0]["cross"] = {
            "seg_ab": [[12.0, 6.0], [12.0, 20.0]],
            "seg_cd": [[6.0, 12.0], [20.0, 12.0]]}
        save_annotation(parse_annotation(doc), ann / "img.json")
        code = main(["genmask", "--annotations", str(ann),
                     "--out", str(tmp_path / "out"), "--combine"])
        assert code == 0
        from crossseg.dataset_io import read_label_map
        labels = read_label_map(tmp_path / "out" / "img_labels.png")
        assert set(np.unique(labels.labels)) == {0, 1, 2}

    def test_idempotent_outputs(self, tmp_path):
        write_corpus(tmp_path / "ann", n=2)
        for out in ("o1", "o2"):
            main(["genmask", "--annotations", str(tmp_path / "ann"),
                  "--out", str(tmp_path / out), "--combine"])
        files1 = sorted((tmp_path / "o1").iterdir())
        files2 = sorted((tmp_path / "o2").iterdir())
        assert [f.name for f in files1] == [f.name for f in files2]
        for f1, f2 in zip(files1, files2):
            assert f1.read_bytes() == f2.read_bytes()

    def test_jobs_parallel_matches_serial(self, tmp_path):
        write_corpus(tmp_path / "ann", n=4)
        main(["genmask", "--annotations", str(tmp_path / "ann"),
              "--out", str(tmp_path / "serial")])
        main(["genmask", "--annotations", str(tmp_path / "ann"),
              "--out", str(tmp_path / "parallel"), "--jobs", "3"])
        for f1 in sorted((tmp_path / "serial").iterdir()):
            f2 = tmp_path / "parallel" / f1.name
            assert f1.read_bytes() == f2.read_bytes()


class TestCalibrate:
    def write_masks_from_sizes(self, masks_dir, sizes, shape=(40, 50), cat=1):
        masks_dir.mkdir(parents=True, exist_ok=True)
        total = shape[0] * shape[1]
        for k, s in enumerate(sizes):
            m = np.zeros(shape)
            m.flat[:round(s * total)] = 1.0
            write_mask(MaskGrid.from_array(m),
                       masks_dir / f"img_{k:03d}_cat{cat}.png")

    def test_nine_size_corpus(self, tmp_path):
        self.write_masks_from_sizes(tmp_path / "masks",
                                    [0.1 * k for k in range(1, 10)])
        out = tmp_path / "thr.json"
        assert main(["calibrate", "--masks", str(tmp_path / "masks"),
                     "--out", str(out)]) == 0
        thr = json.loads(out.read_text())
        assert thr["1"]["thr1"] == pytest.approx(0.3)
        assert thr["1"]["thr2"] == pytest.approx(0.6)

    def test_polyp_threshold_parity(self, tmp_path):
        # tertile boundaries engineered to land on the published pair
        sizes = [0.05, 0.078, 0.1, 0.177, 0.2, 0.3]
        self.write_masks_from_sizes(tmp_path / "masks", sizes, shape=(40, 50))
        out = tmp_path / "thr.json"
        assert main(["calibrate", "--masks", str(tmp_path / "masks"),
                     "--out", str(out)]) == 0
        thr = json.loads(out.read_text())
        assert thr["1"]["thr1"] == 0.078
        assert thr["1"]["thr2"] == 0.177

    def test_uniform_sizes_insufficient(self, tmp_path, capsys):
        self.write_masks_from_sizes(tmp_path / "masks", [0.2] * 6)
        code = main(["calibrate", "--masks", str(tmp_path / "masks"),
                     "--out", str(tmp_path / "thr.json")])
        assert code == 2

    def test_no_masks(self, tmp_path):
        (tmp_path / "masks").mkdir()
        assert main(["calibrate", "--masks", str(tmp_path / "masks"),
                     "--out", str(tmp_path / "thr.json")]) == 2


class TestEvaluate:
    def test_perfect_predictions(self, tmp_path):
        rng = np.random.default_rng(5)
        (tmp_path / "pred").mkdir()
        (tmp_path / "gt").mkdir()
        for k in range(3):
            mask = MaskGrid.from_array((rng.random((16, 16)) > 0.5).astype(float))
            write_mask(mask, tmp_path / "pred" / f"m{k}.png")
            write_mask(mask, tmp_path / "gt" / f"m{k}.png")
        report_path = tmp_path / "report.json"
        assert main(["evaluate", "--pred", str(tmp_path / "pred"),
                     "--gt", str(tmp_path / "gt"),
                     "--report", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert report["mdice"] == 1.0
        assert report["count"] == 3

    def test_missing_gt_file(self, tmp_path):
        (tmp_path / "pred").mkdir()
        (tmp_path / "gt").mkdir()
        write_mask(MaskGrid.from_array(np.ones((4, 4))),
                   tmp_path / "pred" / "a.png")
        assert main(["evaluate", "--pred", str(tmp_path / "pred"),
                     "--gt", str(tmp_path / "gt"),
                     "--report", str(tmp_path / "r.json")]) == 2


class TestSimulateShrink:
    def test_area_table(self, tmp_path):
        ann = tmp_path / "ann"
        ann.mkdir()
        rng = np.random.default_rng(7)
        for k in range(6):
            doc = cross_doc(f"img_{k}.png", 128, 128,
                            64 + rng.uniform(-4, 4), 64 + rng.uniform(-4, 4),
                            tuple(rng.uniform(16, 24, size=4)),
                            angle_deg=rng.uniform(0, 180))
            save_annotation(parse_annotation(doc), ann / f"img_{k}.json")
        report_path = tmp_path / "shrink.json"
        assert main(["simulate-shrink", "--annotations", str(ann),
                     "--rates", "0.1,0.3,0.5",
                     "--report", str(report_path)]) == 0
        rows = json.loads(report_path.read_text())["rates"]
        expected = {0.1: 0.81, 0.3: 0.49, 0.5: 0.25}
        for row in rows:
            assert row["mean_area_ratio"] == pytest.approx(
                expected[row["rate"]], abs=0.03)

    def test_bad_rate(self, tmp_path):
        ann = tmp_path / "ann"
        write_corpus(ann, n=1)
        assert main(["simulate-shrink", "--annotations", str(ann),
                     "--rates", "1.5",
                     "--report", str(tmp_path / "r.json")]) == 2


class TestStats:
    def test_stats_report(self, tmp_path):
        ann_doc = cross_doc("img_0.png", 32, 32, 16, 16, (6, 6, 6, 6))
        ann_doc["background"] = {"seg": [[1.0, 1.0], [30.0, 1.0]]}
        save_annotation(parse_annotation(ann_doc), tmp_path / "ann_0.json")
        gt = np.zeros((32, 32))
        gt[8:24, 8:24] = 1.0
        write_mask(MaskGrid.from_array(gt), tmp_path / "gt_0.png")
        manifest = DatasetManifest(items=(
            ManifestItem("img_0.png", "ann_0.json", "gt_0.png"),))
        save_manifest(manifest, tmp_path / "manifest.json")
        report_path = tmp_path / "stats.json"
        assert main(["stats", "--manifest", str(tmp_path / "manifest.json"),
                     "--report", str(report_path), "--gt"]) == 0
        report = json.loads(report_path.read_text())
        assert report["denominator"] == "gt"
        assert report["per_image"][0]["coverage"] <= 1.0


class TestTrainToy:
    def test_deterministic_runs(self, tmp_path):
        config = {
            "seed": 0, "image_size": 24, "train_count": 6, "test_count": 2,
            "area_range": [0.05, 0.4], "noise": 0.05,
            "stage1": {"lr": 0.5, "momentum": 0.9, "epochs": 20},
            "stage2": {"lr": 0.5, "momentum": 0.9, "epochs": 20},
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config))
        for out in ("run1", "run2"):
            assert main(["train-toy", "--config", str(cfg_path),
                         "--out", str(tmp_path / out)]) == 0
        for name in ("checkpoint.json", "thresholds.json", "report.json"):
            assert ((tmp_path / "run1" / name).read_bytes()
                    == (tmp_path / "run2" / name).read_bytes())

    def test_bad_config(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert main(["train-toy", "--config", str(bad),
                     "--out", str(tmp_path / "out")]) == 2
