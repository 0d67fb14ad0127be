"""CLI surface tests: subcommands, exit codes, determinism, round trips."""

import json

import pytest

from powmod1 import cli
from powmod1.analysis import middle_third_leaves
from powmod1.construct import certificate_from_text


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_usage_error_exit_3(capsys):
    assert cli.main(["bogus"]) == 3
    capsys.readouterr()
    assert cli.main(["construct", "--lambda", "3"]) == 3
    capsys.readouterr()
    assert cli.main(["verify", "--family", "nsq"]) == 3


def test_densify_stdout_and_summary(capsys):
    code, out, err = run(capsys, "densify", "--family", "geo:2", "--count", "6",
                         "--epsilon", "0.5")
    assert code == 0
    assert out.splitlines()[0] == "2\t0"
    summary = json.loads(err.strip().splitlines()[-1])
    assert summary["ratio_bound_certified"] and summary["origin_roundtrip_exact"]
    assert summary["inserted"] > 0


def test_construct_verify_roundtrip(tmp_path, capsys):
    cert_path = tmp_path / "alpha.cert"
    code, _, err = run(capsys, "construct", "--lambda", "3", "--delta", "1",
                       "--eta", "0.5", "--family", "nsq", "--target", "const:0",
                       "--epsilon", "4", "--depth", "9", "--seed", "7",
                       "--branch", "random", "--out", str(cert_path))
    assert code == 0
    info = json.loads(err.strip().splitlines()[-1])
    assert info["start_level"] == 2 and info["depth"] == 9
    cert = certificate_from_text(cert_path.read_text())
    assert cert.meta["seed"] == "7"

    code, out, err = run(capsys, "verify", "--certificate", str(cert_path))
    assert code == 0
    assert out.startswith("index,q,")
    summary = json.loads(err.strip().splitlines()[-1])
    assert summary["all_passed"] is True


def test_verify_alpha_two_linear_all_pass(capsys):
    code, out, err = run(capsys, "verify", "--alpha", "2.0", "--family", "lin",
                         "--target", "const:0", "--to", "10")
    assert code == 0
    summary = json.loads(err.strip().splitlines()[-1])
    assert summary["all_passed"] is True
    assert out.count("\n") == 11  # header + rows 1..10


def test_verify_failure_exit_1(tmp_path, capsys):
    cert_path = tmp_path / "alpha.cert"
    run(capsys, "construct", "--lambda", "3", "--delta", "1", "--eta", "0.5",
        "--epsilon", "4", "--depth", "8", "--out", str(cert_path))
    doc = json.loads(cert_path.read_text())
    # shift the enclosure by twice its width
    from gmpy2 import mpq

    lo, hi = mpq(doc["alpha"]["lo"]), mpq(doc["alpha"]["hi"])
    shift = 2 * (hi - lo)
    doc["alpha"]["lo"], doc["alpha"]["hi"] = str(lo + shift), str(hi + shift)
    cert_path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "verify", "--certificate", str(cert_path))
    assert code == 1
    summary = json.loads(err.strip().splitlines()[-1])
    assert summary["failed_indices"]


def test_construct_deterministic_outputs(tmp_path, capsys):
    paths = [tmp_path / "a.cert", tmp_path / "b.cert"]
    for p in paths:
        code, _, _ = run(capsys, "construct", "--lambda", "2", "--delta", "1",
                         "--eta", "0.5", "--epsilon", "4", "--depth", "8",
                         "--seed", "11", "--branch", "random", "--out", str(p))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_config_file_defaults_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text("lambda = 3\ndelta = 1\neta = 0.5\nepsilon = 4\ndepth = 8\n"
                   "family = nsq\n")
    out1 = tmp_path / "c1.cert"
    code, _, _ = run(capsys, "construct", "--config", str(cfg), "--out", str(out1))
    assert code == 0
    out2 = tmp_path / "c2.cert"
    code, _, err = run(capsys, "construct", "--config", str(cfg), "--depth", "9",
                       "--out", str(out2))
    assert code == 0
    assert json.loads(err.strip().splitlines()[-1])["depth"] == 9
    cfg.write_text("bogus_key = 1\n")
    assert cli.main(["construct", "--config", str(cfg)]) == 3
    capsys.readouterr()


def test_dimension_on_synthetic_middle_third_export(tmp_path, capsys):
    tree = tmp_path / "cantor.tree"
    lines = []
    for depth in range(1, 15):
        for i, (lo, hi) in enumerate(middle_third_leaves(depth)):
            lines.append(f"{depth} {i} {float(lo):.17f} {float(hi):.17f}")
    tree.write_text("\n".join(lines) + "\n")
    code, out, err = run(capsys, "dimension", "--tree", str(tree))
    assert code == 0
    summary = json.loads(err.strip().splitlines()[-1])
    assert abs(summary["limit_estimate"] - 0.6309) < 2e-3
    assert out.startswith("level,")


def test_dimension_with_closed_forms(tmp_path, capsys):
    cert = tmp_path / "t.cert"
    tree = tmp_path / "t.tree"
    run(capsys, "construct", "--lambda", "3", "--delta", "0.1", "--eta", "0.5",
        "--epsilon", "4", "--depth", "6", "--out", str(cert),
        "--tree-out", str(tree))
    code, _, err = run(capsys, "dimension", "--tree", str(tree), "--lambda", "3",
                       "--delta", "0.1", "--eta", "0.5", "--epsilon", "0.05")
    assert code == 0
    summary = json.loads(err.strip().splitlines()[-1])
    assert "closed_form_bound" in summary and "limit_bound" in summary
    assert summary["closed_form_bound"] < summary["limit_bound"]


def test_dimension_insufficient_exit_2(tmp_path, capsys):
    tree = tmp_path / "tiny.tree"
    tree.write_text("1 0 0.0 0.3\n1 1 0.6 1.0\n")
    code, _, err = run(capsys, "dimension", "--tree", str(tree))
    assert code == 2
    assert "InsufficientDepth" in err


def test_discrepancy_points_file(tmp_path, capsys):
    pts = tmp_path / "pts.txt"
    n = 32
    pts.write_text("\n".join(str((2 * i - 1) / (2 * n)) for i in range(1, n + 1)))
    code, out, _ = run(capsys, "discrepancy", "--points", str(pts))
    assert code == 0
    data = json.loads(out)
    assert data["points"] == n
    assert abs(data["star_discrepancy"] - 1 / (2 * n)) < 1e-12


def test_discrepancy_constant_target_clusters(tmp_path, capsys):
    cert = tmp_path / "c.cert"
    run(capsys, "construct", "--lambda", "3", "--delta", "1", "--eta", "0.5",
        "--epsilon", "4", "--target", "const:0.3", "--depth", "9",
        "--out", str(cert))
    code, out, _ = run(capsys, "discrepancy", "--certificate", str(cert))
    assert code == 0
    data = json.loads(out)
    assert data["star_discrepancy"] > 0.2


def test_construct_infeasible_exit_2(capsys):
    # eta too demanding for this prefix: no valid start level
    code, _, err = run(capsys, "construct", "--lambda", "2", "--delta", "0.5",
                       "--eta", "0.9", "--epsilon", "4", "--depth", "8")
    assert code == 2
    assert "NoValidStart" in err
