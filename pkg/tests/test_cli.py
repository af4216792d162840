import json

import numpy as np

from blockacc import CodecSpec, EnsembleSpec, build_code, encode_frame
from blockacc.cli import main, parse_and_dispatch


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    def test_usage_error_unknown_flag(self, capsys):
        assert main(["gvb", "--rate", "1/2", "--bogus"]) == 2

    def test_usage_error_missing_subcommand(self, capsys):
        assert main([]) == 2

    def test_usage_error_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_computation_error(self, capsys):
        code, _, err = run(capsys, "gvb", "--rate", "3/2")
        assert code == 1 and "error" in err

    def test_bad_token(self, capsys):
        code, _, err = run(capsys, "code-we", "--outer", "golay:23")
        assert code == 1 and "golay" in err

    def test_success(self, capsys):
        assert run(capsys, "gvb", "--rate", "1/2")[0] == 0


class TestGvb:
    def test_paper_value(self, capsys):
        code, out, _ = run(capsys, "gvb", "--rate", "26/31")
        assert code == 0
        assert abs(float(out.strip()) - 0.0236) < 5e-4


class TestCodeWe:
    def test_hamming_counts(self, capsys):
        code, out, _ = run(capsys, "code-we", "--outer", "hamming:3")
        assert code == 0
        rows = [line for line in out.splitlines() if line and not line.startswith("#")]
        assert rows[0] == "h,A_h"
        counts = [int(r.split(",")[1]) for r in rows[1:]]
        assert counts == [1, 0, 0, 7, 7, 0, 0, 1]

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "code-we", "--outer", "rep:3", "--format", "json")
        payload = json.loads(out)
        assert payload["meta"]["command"] == "code-we"
        assert [r["A_h"] for r in payload["rows"]] == [1, 0, 0, 1]


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path, capsys):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["ensemble-we", "--outer", "hamming:3", "--L", "3", "--stages", "2",
                "--max-weight", "12"]
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_metadata_roundtrip(self, tmp_path, capsys):
        out1 = tmp_path / "a.csv"
        argv = ["dmin-bound", "--outer", "hamming:3", "--stages", "2",
                "--N-list", "70,140", "--out", str(out1)]
        assert main(argv) == 0
        header = [l for l in out1.read_text().splitlines() if l.startswith("# config:")][0]
        config = json.loads(header.removeprefix("# config:"))
        rebuilt = ["dmin-bound", "--outer", config["outer"], "--stages", str(config["stages"]),
                   "--N-list", config["N_list"], "--prob-target", str(config["prob_target"]),
                   "--out", str(tmp_path / "b.csv"), "--format", config["format"]]
        assert main(rebuilt) == 0
        assert out1.read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestEncode:
    def test_matches_library(self, capsys):
        code, out, _ = run(capsys, "encode", "--outer", "rep:2", "--L", "2",
                           "--stages", "2", "--seed", "7", "--message", "10")
        assert code == 0
        ens = EnsembleSpec(build_code("repetition", n=2), 2, 2)
        codec = CodecSpec.from_seed(ens, 7)
        want = encode_frame(codec, np.array([1, 0], dtype=np.uint8))
        assert out.strip() == "".join(str(b) for b in want)

    def test_hex_message(self, capsys):
        _, out_hex, _ = run(capsys, "encode", "--outer", "hamming:3", "--L", "1",
                            "--stages", "1", "--message", "0xA")
        _, out_bits, _ = run(capsys, "encode", "--outer", "hamming:3", "--L", "1",
                             "--stages", "1", "--message", "1010")
        assert out_hex == out_bits

    def test_dump_perm(self, tmp_path, capsys):
        perm_path = tmp_path / "perms.json"
        code, _, _ = run(capsys, "encode", "--outer", "rep:2", "--L", "3",
                         "--stages", "2", "--seed", "1", "--message", "101",
                         "--dump-perm", str(perm_path))
        assert code == 0
        perms = json.loads(perm_path.read_text())
        assert sorted(perms["pi1"]) == list(range(6))
        assert sorted(perms["pi2"]) == list(range(6))

    def test_wrong_length(self, capsys):
        code, _, err = run(capsys, "encode", "--outer", "rep:2", "--L", "2",
                           "--stages", "2", "--message", "1")
        assert code == 1


class TestBerCli:
    def test_uncoded_csv(self, capsys):
        code, out, _ = run(capsys, "ber", "--outer", "rep:2", "--uncoded",
                           "--ebn0", "0", "--min-frame-errors", "5",
                           "--max-frames", "20", "--seed", "3")
        assert code == 0
        lines = [l for l in out.splitlines() if not l.startswith("#")]
        assert lines[0] == "ebn0_db,frames,bit_errors,frame_errors,ber,fer,iter_mean"
        assert len(lines) == 2

    def test_coded_smoke(self, capsys):
        code, out, _ = run(capsys, "ber", "--outer", "hamming:3", "--L", "2",
                           "--stages", "2", "--ebn0", "8", "--min-frame-errors", "2",
                           "--max-frames", "10", "--seed", "3")
        assert code == 0


class TestEmitTable:
    def test_empty_rows_header_only(self, tmp_path):
        from blockacc.cli import emit_table

        path = tmp_path / "empty.csv"
        emit_table([], {"version": "x", "config": {"a": 1}}, "csv", str(path))
        lines = path.read_text().splitlines()
        assert all(line.startswith("#") for line in lines) and len(lines) == 2


class TestAsymptoticCli:
    def test_table_row_example(self, capsys):
        # the flagship analysis row: JSON with delta_min ~ 0.0140
        code, out, _ = run(capsys, "delta-min", "--outer", "hamming:5", "--stages", "2")
        assert code == 0
        row = json.loads(out)["rows"][0]
        assert abs(float(row["delta_min"]) - 0.0140) < 5e-4
        assert abs(float(row["delta_gv"]) - 0.0236) < 5e-4

    def test_delta_min_json(self, capsys):
        code, out, _ = run(capsys, "delta-min", "--outer", "rep:3", "--stages", "2",
                           "--resolution", "1e-3")
        assert code == 0
        payload = json.loads(out)
        row = payload["rows"][0]
        assert 0.0 < float(row["delta_min"]) < float(row["delta_gv"])

    def test_spectral_shape_csv(self, capsys):
        code, out, _ = run(capsys, "spectral-shape", "--outer", "rep:3", "--stages", "2",
                           "--deltas", "0,0.5", "--grid-points", "101")
        assert code == 0
        lines = [l for l in out.splitlines() if not l.startswith("#")]
        assert lines[0] == "delta,r_nats,beta0,beta1"
        r_half = float(lines[2].split(",")[1])
        assert abs(r_half - (1 / 3) * np.log(2)) < 1e-4

    def test_capacity_json(self, capsys):
        code, out, _ = run(capsys, "capacity", "--rate", "1/2")
        payload = json.loads(out)
        assert abs(float(payload["rows"][0]["ebn0_db"]) - 0.187) < 0.02


class TestOutdirEnv:
    def test_relative_out_joins_env_dir(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("BLOCKACC_OUTDIR", str(tmp_path))
        assert main(["gvb", "--rate", "1/2", "--out", "gv.json", "--format", "json"]) == 0
        assert (tmp_path / "gv.json").exists()

    def test_parse_and_dispatch_alias(self, capsys):
        assert parse_and_dispatch(["gvb", "--rate", "1/2"]) == 0
