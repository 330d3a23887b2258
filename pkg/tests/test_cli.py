import json

import numpy as np
import pytest
from PIL import Image

from fisheyeaug.cli import main, preview_tile_specs
from fisheyeaug.dataset import scan_dataset, generate_testset, load_label_encoding, encode_labels

from conftest import synth_image, synth_label


def tree_bytes(root):
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_gen_testset_end_to_end(cityscapes_tree, tmp_path):
    root = cityscapes_tree(n_pairs=2)
    out = tmp_path / "testsets"
    rc = main(["gen-testset", "--root", str(root), "--split", "val",
               "--f", "200,300", "--out", str(out)])
    assert rc == 0
    assert (out / "f200").is_dir() and (out / "f300").is_dir()
    assert len(list((out / "f200").rglob("*_leftImg8bit.png"))) == 2


def test_gen_testset_missing_root_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["gen-testset", "--root", str(tmp_path / "nope"), "--out", str(tmp_path / "o")])
    assert exc.value.code == 2


def test_gen_testset_requires_out(cityscapes_tree):
    root = cityscapes_tree(n_pairs=1)
    with pytest.raises(SystemExit) as exc:
        main(["gen-testset", "--root", str(root)])
    assert exc.value.code == 2


def test_augment_deterministic_and_worker_independent(cityscapes_tree, tmp_path):
    root = cityscapes_tree(n_pairs=2, split="train", size=(256, 128))
    runs = {}
    for name, workers in (("a", "1"), ("b", "1"), ("c", "3")):
        out = tmp_path / name
        rc = main(["augment", "--root", str(root), "--split", "train",
                   "--preset", "seven_dof", "--seed", "7", "--count", "4",
                   "--out", str(out), "--workers", workers])
        assert rc == 0
        runs[name] = tree_bytes(out)
    assert runs["a"] == runs["b"]
    assert runs["a"] == runs["c"]
    assert sum(1 for k in runs["a"] if k.endswith("_image.png")) == 4


def test_augment_sidecars_record_provenance(cityscapes_tree, tmp_path):
    root = cityscapes_tree(n_pairs=1, split="train", size=(256, 128))
    out = tmp_path / "sixdof"
    rc = main(["augment", "--root", str(root), "--split", "train",
               "--preset", "six_dof", "--seed", "3", "--count", "3",
               "--out", str(out)])
    assert rc == 0
    for i in range(3):
        sidecar = json.loads((out / f"sample_{i:05d}_params.json").read_text())
        assert sidecar["warp"]["f_fish"] == 300.0  # six_dof keeps f fixed
        assert sidecar["index"] == i
        assert sidecar["seed"] == 3
        assert sidecar["generator"] == "pcg64"
        assert {"rot_x", "rot_y", "rot_z", "t_x", "t_y", "t_z"} <= set(sidecar["warp"])


def test_augment_unknown_preset_usage_error(cityscapes_tree, tmp_path, capsys):
    root = cityscapes_tree(n_pairs=1, split="train")
    with pytest.raises(SystemExit) as exc:
        main(["augment", "--root", str(root), "--preset", "mega_dof",
              "--out", str(tmp_path / "x")])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    for name in ("base", "seven_dof", "six_dof", "rand_ft"):
        assert name in err


def test_augment_accepts_policy_file(cityscapes_tree, tmp_path):
    from fisheyeaug.policy import preset, save_policy

    root = cityscapes_tree(n_pairs=1, split="train", size=(256, 128))
    pfile = tmp_path / "p.policy"
    save_policy(preset("rand_f"), 11, pfile)
    out = tmp_path / "via_file"
    rc = main(["augment", "--root", str(root), "--split", "train",
               "--policy", str(pfile), "--count", "1", "--out", str(out)])
    assert rc == 0
    sidecar = json.loads((out / "sample_00000_params.json").read_text())
    assert sidecar["seed"] == 11  # taken from the policy file


def test_preview_grid_inventory(tmp_path):
    img_path = tmp_path / "in.png"
    Image.fromarray(synth_image(256, 128, seed=1)).save(img_path)
    out = tmp_path / "grid.png"
    rc = main(["preview", "--image", str(img_path), "--out", str(out),
               "--tile-size", "64"])
    assert rc == 0
    pose, focal = preview_tile_specs(256, 128)
    assert len(pose) == 12
    assert len(focal) == 4
    with Image.open(out) as grid:
        # 16 tiles in 4 columns: 4 rows of (tile + caption strip).
        assert grid.size == (4 * 64, 4 * (64 + 18))


def test_preview_focal_sweep_values():
    _, focal = preview_tile_specs(2048, 1024)
    assert [t[1].fisheye.f_fish for t in focal] == [200.0, 250.0, 300.0, 350.0]
    # the f=300 tile is the zero-perturbation (pure zoom) tile
    assert focal[2][1].pose.is_identity


def test_eval_cli(cityscapes_tree, tmp_path, capsys):
    root = cityscapes_tree(n_pairs=2)
    manifest = scan_dataset(root, "val")
    gt_root = tmp_path / "gt"
    for f in (200, 300):
        generate_testset(manifest, float(f), gt_root / f"f{f}")
    rc = main(["eval", "--pred", str(gt_root), "--gt", str(gt_root),
               "--f", "200,300"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "1.0000" in out
    report = json.loads((gt_root / "eval_report.json").read_text())
    assert [r["miou"] for r in report] == [1.0, 1.0]


def test_eval_missing_focal_fails(cityscapes_tree, tmp_path, capsys):
    root = cityscapes_tree(n_pairs=1)
    manifest = scan_dataset(root, "val")
    gt_root = tmp_path / "gt"
    generate_testset(manifest, 200.0, gt_root / "f200")
    rc = main(["eval", "--pred", str(gt_root), "--gt", str(gt_root),
               "--f", "200,350"])
    assert rc == 1
    assert "f=350" in capsys.readouterr().err


def test_inspect_reports_theta_max(capsys):
    assert main(["inspect", "--f", "200"]) == 0
    out = capsys.readouterr().out
    assert "2.2627" in out
    assert main(["inspect", "--f", "400"]) == 0
    assert "1.1314" in capsys.readouterr().out


def test_inspect_dump_table_round_trips(tmp_path):
    from fisheyeaug.remap import load_table

    path = tmp_path / "t.frmp"
    rc = main(["inspect", "--f", "300", "--out-size", "64",
               "--src-cols", "512", "--src-rows", "256",
               "--dump-table", str(path)])
    assert rc == 0
    table = load_table(path)
    assert (table.out_width, table.out_height) == (64, 64)
    assert (table.src_cols, table.src_rows) == (512, 256)


def test_inspect_malformed_policy_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.policy"
    bad.write_text("[policy]\nf_min 200\n")
    rc = main(["inspect", "--policy", str(bad)])
    assert rc == 1
    assert "line" in capsys.readouterr().err


def test_label_grid_output(cityscapes_tree, tmp_path):
    img_path = tmp_path / "in.png"
    lbl_path = tmp_path / "lbl.png"
    Image.fromarray(synth_image(256, 128, seed=1)).save(img_path)
    lbl = encode_labels(synth_label(256, 128, seed=1, block=32), load_label_encoding())
    Image.fromarray(lbl).save(lbl_path)
    out = tmp_path / "grid.png"
    rc = main(["preview", "--image", str(img_path), "--label", str(lbl_path),
               "--out", str(out), "--tile-size", "48"])
    assert rc == 0
    assert (tmp_path / "grid_labels.png").is_file()
