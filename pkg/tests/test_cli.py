"""CLI behavior: outputs, formats, exit codes, reproducibility."""

import json

import numpy as np
import pytest

from storybuild import equal_corpus, interaction_story, minimal_story
from storyeval.cli import run
from storyeval.dataset import save_story
from storyeval.metrics import rouge_w, user_score
from storyeval.textproc import TokenizerMode, default_stopwords, tokenize


@pytest.fixture()
def corpus_dir(tmp_path):
    for story in equal_corpus(10):
        save_story(story, tmp_path)
    return tmp_path


def invoke(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestMetricCommand:
    def test_identical_files_score_one(self, tmp_path, capsys):
        text = "The hero walks into the quiet town."
        generated = tmp_path / "g.txt"
        published = tmp_path / "p.txt"
        generated.write_text(text, encoding="utf-8")
        published.write_text(text, encoding="utf-8")
        code, out, _ = invoke(capsys, "metric", "--generated", str(generated), "--published", str(published))
        assert code == 0
        assert "f1=1.000000" in out

    def test_six_decimal_places_match_library(self, tmp_path, capsys):
        generated = tmp_path / "g.txt"
        published = tmp_path / "p.txt"
        generated.write_text("the cat sat on the mat", encoding="utf-8")
        published.write_text("the dog sat on a mat", encoding="utf-8")
        code, out, _ = invoke(capsys, "metric", "--generated", str(generated), "--published", str(published))
        assert code == 0
        assert "user precision=0.500000 recall=0.500000 f1=0.500000" in out

    def test_records_format_matches_library_exactly(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.jsonl"
        rows = [
            {"id": "p1", "generated": "a quick brown fox", "published": "a slow brown fox"},
            {"id": "p2", "generated": "night falls fast", "published": "night falls"},
        ]
        pairs.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        code, out, _ = invoke(capsys, "metric", "--pairs", str(pairs), "--format", "records")
        assert code == 0
        stopwords = default_stopwords()
        for line, source in zip(out.strip().splitlines(), rows):
            record = json.loads(line)
            x = tokenize(source["generated"], TokenizerMode.METRIC)
            y = tokenize(source["published"], TokenizerMode.METRIC)
            expected = user_score(x, y, stopwords)
            assert record["scores"]["user"]["precision"] == expected.precision
            assert record["scores"]["rouge_w"]["f1"] == rouge_w(x, y, alpha=1.2).f1
            assert record["spans"] == [
                {"start_x": s.start_x, "start_y": s.start_y, "length": s.length, "counted": s.counted}
                for s in expected.spans
            ]

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        code, _, err = invoke(
            capsys, "metric", "--generated", str(tmp_path / "no.txt"), "--published", str(tmp_path / "no.txt")
        )
        assert code == 2
        assert "error" in err


class TestPackCommand:
    def test_example_policy_allocation(self, capsys):
        code, out, _ = invoke(
            capsys, "pack", "--policy", "example", "--lengths", "a=8,b=8", "--budget", "10"
        )
        assert code == 0
        assert out.strip() == "a=6 b=4"

    def test_policy_file_path(self, tmp_path, capsys):
        policy = tmp_path / "two.pol"
        policy.write_text(
            "budget 1024\nsegment a head\nsegment b head\n"
            "constraint a_min: a ge 6 @ 3\nconstraint b_min: b ge 6 @ 1\n",
            encoding="utf-8",
        )
        code, out, _ = invoke(
            capsys, "pack", "--policy", str(policy), "--lengths", "a=8,b=8", "--budget", "10"
        )
        assert code == 0
        assert out.strip() == "a=6 b=4"

    def test_records_format(self, capsys):
        code, out, _ = invoke(
            capsys, "pack", "--policy", "example", "--lengths", "a=8,b=8", "--budget", "10",
            "--format", "records",
        )
        assert code == 0
        assert json.loads(out) == {"allocation": {"a": 6, "b": 4}}

    def test_unknown_segment_is_data_error(self, capsys):
        code, _, err = invoke(capsys, "pack", "--policy", "example", "--lengths", "zz=3")
        assert code == 2


class TestStatsCommand:
    def test_table_and_histogram_records(self, corpus_dir, capsys):
        code, out, _ = invoke(capsys, "stats", "--corpus", str(corpus_dir))
        assert code == 0
        assert "stories 10" in out
        assert "tokens_per_entry" in out
        histogram_lines = [line for line in out.splitlines() if line.startswith("{")]
        assert histogram_lines
        parsed = json.loads(histogram_lines[0])
        assert set(parsed) == {"feature", "bin_width", "bins"}

    def test_records_format(self, corpus_dir, capsys):
        code, out, _ = invoke(capsys, "stats", "--corpus", str(corpus_dir), "--format", "records")
        assert code == 0
        payload = json.loads(out)
        assert payload["stories"] == 10
        assert payload["features"]["entries_per_scene"]["mean"] == 1.0


class TestSplitCommand:
    def test_eight_one_one(self, corpus_dir, capsys):
        code, out, _ = invoke(capsys, "split", "--corpus", str(corpus_dir), "--ratios", "8:1:1")
        assert code == 0
        payload = json.loads(out)
        counts = {"train": 0, "valid": 0, "test": 0}
        for split in payload["assignments"].values():
            counts[split] += 1
        assert counts == {"train": 8, "valid": 1, "test": 1}

    def test_reproducible_output(self, corpus_dir, capsys):
        code_a, out_a, _ = invoke(capsys, "split", "--corpus", str(corpus_dir), "--seed", "3")
        code_b, out_b, _ = invoke(capsys, "split", "--corpus", str(corpus_dir), "--seed", "3")
        assert code_a == code_b == 0
        assert out_a == out_b

    def test_output_file(self, corpus_dir, tmp_path, capsys):
        target = tmp_path / "splits.json"
        code, out, _ = invoke(
            capsys, "split", "--corpus", str(corpus_dir), "--output", str(target)
        )
        assert code == 0
        assert json.loads(target.read_text(encoding="utf-8"))["assignments"]


class TestTopicsCommands:
    @pytest.fixture()
    def lexicon_file(self, tmp_path):
        rng = np.random.default_rng(1)
        lines = []
        for c, base in enumerate(("sword", "ship", "oath")):
            center = np.zeros(4)
            center[c] = 1.0
            for i in range(12):
                vec = center + 0.05 * rng.normal(size=4)
                lines.append(f"{base}{i} " + " ".join(f"{v:.5f}" for v in vec))
        path = tmp_path / "lexicon.txt"
        path.write_text("\n".join(lines), encoding="utf-8")
        return path

    @pytest.fixture()
    def topic_corpus(self, tmp_path):
        from storybuild import entry, story_doc
        from storyeval.dataset import load_story

        rng = np.random.default_rng(2)
        scenes = []
        for s in range(6):
            base = ("sword", "ship", "oath")[s % 3]
            text = " ".join(f"{base}{int(rng.integers(0, 12))}" for _ in range(6))
            scenes.append({"id": f"sc{s}", "intro": "", "entries": [entry(f"e{s}", 0, text)]})
        save_story(load_story(story_doc("topic-story", scenes=scenes)), tmp_path)
        return tmp_path

    def test_train_transitions_neighbors(self, topic_corpus, lexicon_file, tmp_path, capsys):
        model_file = tmp_path / "model.txt"
        code, out, _ = invoke(
            capsys, "topics", "train",
            "--corpus", str(topic_corpus), "--lexicon", str(lexicon_file),
            "--out", str(model_file), "--topics", "3", "--epochs", "5",
        )
        assert code == 0
        assert out.startswith("epoch 0 loss ")
        assert model_file.exists()

        code, out, _ = invoke(
            capsys, "topics", "neighbors",
            "--model", str(model_file), "--lexicon", str(lexicon_file), "--row", "0", "-k", "3",
        )
        assert code == 0
        assert len(out.strip().splitlines()) == 3

        code, out, _ = invoke(
            capsys, "topics", "transitions",
            "--corpus", str(topic_corpus), "--lexicon", str(lexicon_file), "--model", str(model_file),
        )
        assert code == 0
        for line in out.strip().splitlines():
            record = json.loads(line)
            assert set(record) == {"from", "to", "probability"}


class TestExitCodes:
    def test_usage_error(self, capsys):
        assert invoke(capsys, "unknown-command")[0] == 1

    def test_missing_required_flag(self, capsys):
        assert invoke(capsys, "pack", "--lengths", "a=1")[0] == 1

    def test_data_error(self, tmp_path, capsys):
        bad = tmp_path / "stories"
        bad.mkdir()
        (bad / "broken.story").write_text("{not json", encoding="utf-8")
        assert invoke(capsys, "stats", "--corpus", str(tmp_path))[0] == 2
