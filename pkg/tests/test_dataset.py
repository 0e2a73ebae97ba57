"""Schema validation, statistics, splits, and bundle assembly tests."""

import json
import math
import random

import pytest

from storybuild import (
    entry,
    equal_corpus,
    interaction_story,
    lognormal_corpus,
    minimal_story,
    sized_story,
    story_doc,
    words,
)
from storyeval.dataset import (
    DanglingReference,
    EmptyCorpus,
    IndexOutOfRange,
    NarratorTarget,
    SchemaViolation,
    TooFewStories,
    build_generation_example,
    compute_stats,
    load_corpus,
    load_story,
    save_story,
    split_corpus,
    story_to_dict,
    story_token_count,
)
from storyeval.packing import TrimSide
from storyeval.textproc import TokenizerMode, tokenize


class TestLoadStory:
    def test_minimal_story(self):
        story = minimal_story()
        assert story.id == "story-1"
        assert len(story.scenes) == 1 and len(story.scenes[0].entries) == 1
        assert story.cards == ()

    def test_two_scene_fixture_preserves_order(self):
        story = interaction_story()
        assert [s.id for s in story.scenes] == ["sc1", "sc2"]
        assert [e.id for e in story.scenes[0].entries] == ["e1", "e2", "e3"]
        assert story.scenes[0].entries[0].is_narrator

    def test_dangling_card_reference(self):
        doc = story_doc(
            scenes=[{"id": "sc1", "intro": "", "entries": [entry("e1", 0, "x", cards_played=["nope"])]}]
        )
        with pytest.raises(DanglingReference):
            load_story(doc)

    def test_dangling_character_reference(self):
        doc = story_doc(
            scenes=[{"id": "sc1", "intro": "", "entries": [entry("e1", 0, "x", character_id="ghost")]}]
        )
        with pytest.raises(DanglingReference):
            load_story(doc)

    def test_ordinals_must_be_contiguous(self):
        doc = story_doc(scenes=[{"id": "sc1", "intro": "", "entries": [entry("e1", 1, "x")]}])
        with pytest.raises(SchemaViolation) as err:
            load_story(doc)
        assert "ordinal" in str(err.value)

    def test_non_wild_card_needs_title(self):
        doc = story_doc(
            cards=[{"id": "k1", "kind": "goal", "is_wild": False, "title": "", "description": "d"}]
        )
        with pytest.raises(SchemaViolation):
            load_story(doc)

    def test_wild_card_may_lack_title(self):
        doc = story_doc(
            cards=[{"id": "k1", "kind": "goal", "is_wild": True, "title": "", "description": "d"}]
        )
        assert load_story(doc).cards[0].is_wild

    def test_schema_violation_carries_field_path(self):
        doc = story_doc()
        del doc["completed"]
        with pytest.raises(SchemaViolation) as err:
            load_story(doc)
        assert err.value.path == "$.completed"

    def test_round_trip(self):
        story = interaction_story()
        assert load_story(story_to_dict(story)) == story

    def test_corpus_directory_round_trip(self, tmp_path):
        stories = [minimal_story(), interaction_story()]
        for story in stories:
            save_story(story, tmp_path)
        loaded = load_corpus(tmp_path)
        assert sorted(s.id for s in loaded) == sorted(s.id for s in stories)


class TestComputeStats:
    def test_entries_per_scene_hand_case(self):
        scenes = [
            {"id": "a", "intro": "", "entries": [entry(f"a{i}", i, "t") for i in range(3)]},
            {"id": "b", "intro": "", "entries": [entry(f"b{i}", i, "t") for i in range(5)]},
        ]
        stats = compute_stats([load_story(story_doc(scenes=scenes))])
        feature = stats.features["entries_per_scene"]
        assert feature.mean == 4.0
        assert feature.std_dev == 1.0
        assert feature.total == 8

    def test_empty_entry_counts_zero_tokens(self):
        stats = compute_stats([sized_story("s", 0)])
        assert stats.features["tokens_per_entry"].total == 0

    def test_played_cards_by_kind(self):
        cards = [
            {"id": "k1", "kind": "strength", "is_wild": False, "title": "t", "description": "d"},
            {"id": "k2", "kind": "strength", "is_wild": False, "title": "t2", "description": "d2"},
        ]
        scenes = [
            {
                "id": "sc1",
                "intro": "",
                "entries": [
                    entry("e1", 0, "x", cards_played=["k1", "k2"]),
                    entry("e2", 1, "y"),
                ],
            }
        ]
        stats = compute_stats([load_story(story_doc(scenes=scenes, cards=cards))])
        assert stats.features["played_strength_cards_per_entry"].mean == 1.0
        assert stats.features["played_goal_cards_per_entry"].total == 0
        assert stats.features["played_cards_per_entry"].total == 2

    def test_token_counts_use_stats_mode(self):
        story = sized_story("s", 7)
        stats = compute_stats([story])
        assert stats.features["tokens_per_entry"].total == 7
        assert story_token_count(story) == 7

    def test_histograms_sum_to_sample_count(self):
        stats = compute_stats([interaction_story(), minimal_story()])
        for name, histogram in stats.histograms.items():
            assert sum(histogram.counts) == stats.features[name].count

    def test_order_invariance(self):
        corpus = [interaction_story(), minimal_story(), sized_story("s", 9)]
        forward = compute_stats(corpus)
        backward = compute_stats(list(reversed(corpus)))
        assert forward.features == backward.features
        assert forward.unique_tokens == backward.unique_tokens

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            compute_stats([])


class TestSplitCorpus:
    def test_ten_equal_stories(self):
        assignment = split_corpus(equal_corpus(10), seed=0)
        counts = {name: 0 for name in ("train", "valid", "test")}
        for split in assignment.assignments.values():
            counts[split] += 1
        assert counts == {"train": 8, "valid": 1, "test": 1}

    def test_three_stories_one_per_split(self):
        assignment = split_corpus(equal_corpus(3), seed=5)
        assert sorted(assignment.assignments.values()) == ["test", "train", "valid"]

    def test_partition_property(self):
        corpus = lognormal_corpus(40, seed=9)
        assignment = split_corpus(corpus, seed=1)
        assert set(assignment.assignments) == {s.id for s in corpus}

    def test_lognormal_token_balance(self):
        corpus = lognormal_corpus(100, seed=42)
        assignment = split_corpus(corpus, seed=0)
        targets = {"train": 0.8, "valid": 0.1, "test": 0.1}
        for name, target in targets.items():
            assert abs(assignment.token_fractions[name] - target) <= 0.01
        counts = {name: 0 for name in targets}
        for split in assignment.assignments.values():
            counts[split] += 1
        assert counts == {"train": 80, "valid": 10, "test": 10}

    def test_same_seed_is_deterministic(self):
        corpus = lognormal_corpus(30, seed=3)
        a = split_corpus(corpus, seed=7)
        b = split_corpus(corpus, seed=7)
        assert a == b

    def test_too_few_stories(self):
        with pytest.raises(TooFewStories):
            split_corpus(equal_corpus(2))


class TestBuildGenerationExample:
    def test_story_start_collapses_history_segments(self):
        story = minimal_story()
        example = build_generation_example(story, 0, 0)
        by_name = {spec.name: (spec, tokens) for spec, tokens in example.bundle}
        assert by_name["previous_entry"][0].available == 0
        assert by_name["character_last_entry"][0].available == 0
        assert by_name["intro"][0].available > 0

    def test_same_character_preceding_drops_last_entry_segment(self):
        scenes = [
            {
                "id": "sc1",
                "intro": "intro text",
                "entries": [
                    entry("e1", 0, "first words", character_id="c1"),
                    entry("e2", 1, "second words", character_id="c1"),
                ],
            }
        ]
        story = load_story(story_doc(scenes=scenes))
        example = build_generation_example(story, 0, 1)
        names = [spec.name for spec, _ in example.bundle]
        assert "previous_entry" in names
        assert "character_last_entry" not in names

    def test_different_author_includes_characters_last_entry(self):
        story = interaction_story()
        # target e4 (scene 1, entry 0, Vala); preceding is e3 by Rook
        example = build_generation_example(story, 1, 0)
        by_name = {spec.name: (spec, tokens) for spec, tokens in example.bundle}
        preceding_text = " ".join(by_name["previous_entry"][1])
        assert "plank" in preceding_text  # Rook's e3
        own_text = " ".join(by_name["character_last_entry"][1])
        assert "ropes" in own_text  # Vala's e2
        assert example.target_character_id == "c1"
        assert example.target_text.startswith("Vala crosses")

    def test_bundle_order_and_ids(self):
        story = interaction_story()
        example = build_generation_example(story, 1, 0)
        names = [spec.name for spec, _ in example.bundle]
        assert names == [
            "intro",
            "challenge_title",
            "challenge_description",
            "card_0_title",
            "card_0_description",
            "card_1_title",
            "card_1_description",
            "character_name",
            "character_description",
            "previous_entry",
            "character_last_entry",
        ]
        by_name = {spec.name: spec for spec, _ in example.bundle}
        assert by_name["challenge_title"].segment_ids == ("challenge-card", "title")
        assert by_name["card_0_title"].segment_ids == ("strength-card", "title")
        assert by_name["card_1_title"].segment_ids == ("item-card", "wild-card", "title")
        assert by_name["previous_entry"].trim is TrimSide.TAIL
        assert [spec.declared_index for spec, _ in example.bundle] == list(range(len(names)))

    def test_available_matches_stats_tokens(self):
        story = interaction_story()
        example = build_generation_example(story, 1, 0)
        intro_spec, intro_tokens = example.bundle[0]
        assert intro_spec.available == len(intro_tokens)
        assert intro_tokens == tokenize(story.scenes[1].intro, TokenizerMode.STATS).tokens

    def test_narrator_target_rejected(self):
        story = interaction_story()
        with pytest.raises(NarratorTarget):
            build_generation_example(story, 0, 0)

    def test_index_out_of_range(self):
        story = minimal_story()
        with pytest.raises(IndexOutOfRange):
            build_generation_example(story, 5, 0)
        with pytest.raises(IndexOutOfRange):
            build_generation_example(story, 0, 9)
