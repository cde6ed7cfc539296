import json
from pathlib import Path

import pytest

from visrank import build_cooccurrence
from visrank.cli import main
from visrank.formats import load_contexts, load_cooccurrence, load_embeddings, load_hypotheses

from synthetic import write_dataset

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    return write_dataset(tmp_path_factory.mktemp("data"), seed=3)


@pytest.fixture(scope="module")
def models(data, tmp_path_factory):
    root = tmp_path_factory.mktemp("models")
    out = {"ulm": str(root / "ulm.tsv"), "tdp": str(root / "tdp.txt"),
           "pairs": str(root / "pairs.tsv"), "twe": str(root / "twe.vec")}
    assert main(["build-ulm", "--counts", data["counts"], "--out", out["ulm"]]) == 0
    assert main(["build-tdp", "--hyps", data["train_hyps"], "--ctx", data["train_ctx"],
                 "--pairs-out", out["pairs"], "--out", out["tdp"]]) == 0
    assert main(["train-twe", "--pairs", out["pairs"], "--dim", "16", "--epochs", "10",
                 "--seed", "7", "--out", out["twe"]]) == 0
    return out


def model_flags(data, models):
    return ["--ulm", models["ulm"], "--swe", data["general"], "--twe", models["twe"],
            "--tdp", models["tdp"]]


def read_jsonl(path):
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines()]


class TestExitCodes:
    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "pipeline" in capsys.readouterr().out

    def test_unknown_flag_is_usage_error(self, capsys):
        assert main(["rerank", "--bogus"]) == 2
        assert "Usage:" in capsys.readouterr().err

    def test_missing_required_flag(self):
        assert main(["build-ulm", "--out", "x"]) == 2

    def test_missing_file_names_path(self, tmp_path, capsys):
        missing = tmp_path / "nope.tsv"
        assert main(["build-ulm", "--counts", str(missing), "--out", str(tmp_path / "u")]) == 1
        assert str(missing) in capsys.readouterr().err

    def test_invalid_input_is_validation_error(self, tmp_path, capsys):
        bad = tmp_path / "counts.tsv"
        bad.write_text("pay\tmany\n", encoding="utf-8")
        assert main(["build-ulm", "--counts", str(bad), "--out", str(tmp_path / "u")]) == 1
        assert "line 1" in capsys.readouterr().err

    def test_scheme_needing_absent_model(self, data, models, tmp_path, capsys):
        code = main(["rerank", "--hyps", data["test_hyps"], "--ctx", data["test_ctx"],
                     "--ulm", models["ulm"], "--scheme", "TDP+TWE", "--out", str(tmp_path / "r")])
        assert code == 1
        assert "twe" in capsys.readouterr().err


class TestBuilders:
    def test_build_ulm_merges_corpora(self, tmp_path):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        a.write_text("pay\t3\nthe\t10\n", encoding="utf-8")
        b.write_text("pay\t2\nexit\t1\n", encoding="utf-8")
        out = tmp_path / "ulm.tsv"
        assert main(["build-ulm", "--counts", str(a), "--counts", str(b), "--out", str(out)]) == 0
        assert out.read_text(encoding="utf-8") == "the\t10\npay\t5\nexit\t1\n"
        meta = json.loads((tmp_path / "ulm.tsv.meta.json").read_text())
        assert meta["params"]["total_tokens"] == 16

    def test_build_tdp_matches_library(self, data, models):
        hyps = load_hypotheses(open(data["train_hyps"], "rb"))
        ctxs = load_contexts(open(data["train_ctx"], "rb"))
        expected = build_cooccurrence((r.gold, ctxs.get(r.image_id)) for r in hyps)
        assert load_cooccurrence(open(models["tdp"], "rb")) == expected
        pairs = Path(models["pairs"]).read_text(encoding="utf-8").splitlines()
        assert len(pairs) == sum(expected.ctx_counts.values())

    def test_train_twe_is_deterministic(self, data, models, tmp_path):
        runs = []
        for name in ("a.vec", "b.vec"):
            out = tmp_path / name
            assert main(["train-twe", "--pairs", models["pairs"], "--dim", "24", "--epochs", "3",
                         "--init", data["general"], "--seed", "7", "--out", str(out)]) == 0
            runs.append(out.read_bytes())
        assert runs[0] == runs[1]
        space = load_embeddings(open(tmp_path / "a.vec", "rb"))
        assert space.dimension == 24
        meta = json.loads((tmp_path / "a.vec.meta.json").read_text())
        assert meta["params"]["seed"] == 7

    def test_train_twe_from_hypotheses(self, data, models, tmp_path):
        via_pairs, via_hyps = tmp_path / "p.vec", tmp_path / "h.vec"
        common = ["--dim", "8", "--epochs", "2", "--seed", "1"]
        assert main(["train-twe", "--pairs", models["pairs"], *common, "--out", str(via_pairs)]) == 0
        assert main(["train-twe", "--hyps", data["train_hyps"], "--ctx", data["train_ctx"], *common,
                     "--out", str(via_hyps)]) == 0
        assert via_pairs.read_bytes() == via_hyps.read_bytes()

    def test_train_twe_needs_data(self, tmp_path):
        assert main(["train-twe", "--out", str(tmp_path / "x.vec")]) == 2


class TestRerankAndEvaluate:
    def test_one_output_per_input_line(self, data, models, tmp_path):
        out = tmp_path / "ranked.jsonl"
        assert main(["rerank", "--hyps", data["test_hyps"], "--ctx", data["test_ctx"],
                     *model_flags(data, models), "--scheme", "TDP+TWE", "--out", str(out)]) == 0
        inputs = read_jsonl(data["test_hyps"])
        outputs = read_jsonl(out)
        assert [o["image_id"] for o in outputs] == [i["image_id"] for i in inputs]
        assert all(len(o["ranked"]) == len(i["hypotheses"]) for o, i in zip(outputs, inputs))

    def test_stdout_and_k_truncation(self, data, models, capsys):
        assert main(["rerank", "--hyps", data["test_hyps"], "--ctx", data["test_ctx"],
                     "--ulm", models["ulm"], "--scheme", "ulm", "--k", "3"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == len(read_jsonl(data["test_hyps"]))
        assert all(len(json.loads(line)["ranked"]) == 3 for line in lines)

    def test_evaluate_matches_independent_count(self, data, models, tmp_path):
        ranked = tmp_path / "swe.jsonl"
        assert main(["rerank", "--hyps", data["test_hyps"], "--ctx", data["test_ctx"],
                     *model_flags(data, models), "--scheme", "SWE", "--k", "9", "--out", str(ranked)]) == 0
        prefix = tmp_path / "rep"
        assert main(["evaluate", "--hyps", data["test_hyps"], "--ranked", str(ranked),
                     "--dict", data["dict"], "--k", "9", "--out", str(prefix)]) == 0

        # independent recount straight from the files
        gold = {r["image_id"]: r["gold"].casefold() for r in read_jsonl(data["test_hyps"])}
        lexicon = {w.casefold() for w in Path(data["dict"]).read_text().split()}
        full = dic = lst = n_dict = n_list = 0
        for o in read_jsonl(ranked):
            g = gold[o["image_id"]]
            words = [r["word"].casefold() for r in o["ranked"]]
            ok = words[0] == g
            full += ok
            if g in lexicon:
                n_dict += 1
                dic += ok
            if g in words:
                n_list += 1
                lst += ok
        expected = {"full": 100 * full / len(gold), "dict": 100 * dic / n_dict, "list": 100 * lst / n_list}

        tsv = dict(line.rsplit("\t", 1) for line in Path(f"{prefix}.tsv").read_text().splitlines())
        for metric, value in expected.items():
            assert float(tsv[f"SWE\t{metric}@k=9"]) == pytest.approx(value, abs=1e-12)
        assert Path(f"{prefix}.txt").read_text().startswith("# word matching: case-insensitive")
        assert Path(f"{prefix}.png").read_bytes()[:8] == PNG_MAGIC

    def test_evaluate_rejects_wrong_k(self, data, models, tmp_path, capsys):
        ranked = tmp_path / "bl.jsonl"
        assert main(["rerank", "--hyps", data["test_hyps"], "--ctx", data["test_ctx"],
                     "--scheme", "BL", "--out", str(ranked)]) == 0
        assert main(["evaluate", "--hyps", data["test_hyps"], "--ranked", str(ranked), "--k", "5"]) == 1
        assert "k=5" in capsys.readouterr().err


def test_pipeline_equals_manual_stages(data, models, tmp_path):
    out = tmp_path / "run"
    flags = ["--hyps", data["test_hyps"], "--ctx", data["test_ctx"], *model_flags(data, models)]
    assert main(["pipeline", *flags, "--dict", data["dict"], "--out", str(out)]) == 0

    manual = tmp_path / "manual"
    manual.mkdir()
    schemes = ["BL", "ULM", "SWE", "SWE+TDP", "TDP+TWE", "SWE+TDP+TWE"]
    expected_tsv = []
    for k in (5, 9):
        ranked = []
        for s in schemes:
            path = manual / f"{s}.k{k}.jsonl"
            assert main(["rerank", *flags, "--scheme", s, "--k", str(k), "--out", str(path)]) == 0
            assert path.read_bytes() == (out / f"ranked.{s}.k{k}.jsonl").read_bytes()
            ranked += ["--ranked", str(path)]
        prefix = manual / f"rep{k}"
        assert main(["evaluate", "--hyps", data["test_hyps"], *ranked, "--dict", data["dict"],
                     "--k", str(k), "--out", str(prefix), "--no-figure"]) == 0
        expected_tsv.append(Path(f"{prefix}.tsv").read_text())
    assert (out / "report.tsv").read_text() == "".join(expected_tsv)

    table = (out / "report.txt").read_text()
    assert "k=5" in table and "k=9" in table and "Baseline" in table
    assert (out / "report.png").read_bytes()[:8] == PNG_MAGIC
    meta = json.loads((out / "report.txt.meta.json").read_text())
    assert meta["params"]["ks"] == [5, 9]

    # idempotent
    again = tmp_path / "again"
    assert main(["pipeline", *flags, "--dict", data["dict"], "--out", str(again), "--no-figure"]) == 0
    for f in out.glob("ranked.*.jsonl"):
        assert f.read_bytes() == (again / f.name).read_bytes()
    assert (again / "report.txt").read_bytes() == (out / "report.txt").read_bytes()
    assert not (again / "report.png").exists()


def test_evaluate_labels_pipeline_files_by_scheme(data, models, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["pipeline", "--hyps", data["test_hyps"], "--ctx", data["test_ctx"],
                 *model_flags(data, models), "--scheme", "BL", "--scheme", "SWE+TDP", "--k", "9",
                 "--out", str(out), "--no-figure"]) == 0
    capsys.readouterr()
    assert main(["evaluate", "--hyps", data["test_hyps"], "--k", "9",
                 "--ranked", str(out / "ranked.BL.k9.jsonl"),
                 "--ranked", str(out / "ranked.SWE+TDP.k9.jsonl")]) == 0
    rows = [line.split("|")[0].strip() for line in capsys.readouterr().out.splitlines()]
    assert "Baseline" in rows and "SWE+TDP" in rows
