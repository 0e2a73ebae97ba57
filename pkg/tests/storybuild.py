"""Story fixture builders shared across test modules."""

from __future__ import annotations

import random

from storyeval.dataset import Story, load_story


def words(n: int, prefix: str = "w") -> str:
    """Text with exactly n STATS tokens."""
    return " ".join(f"{prefix}{i}" for i in range(n))


def entry(
    entry_id: str,
    ordinal: int,
    text: str,
    character_id: str | None = "c1",
    cards_played: list[str] | None = None,
    challenge_id: str | None = None,
) -> dict:
    doc = {
        "id": entry_id,
        "author_role": "narrator" if character_id is None else "character",
        "text": text,
        "cards_played": cards_played or [],
        "challenge_id": challenge_id,
        "ordinal": ordinal,
    }
    if character_id is not None:
        doc["character_id"] = character_id
    return doc


def story_doc(
    story_id: str = "story-1",
    scenes: list[dict] | None = None,
    cards: list[dict] | None = None,
    characters: list[dict] | None = None,
    world: str | None = None,
    completed: bool = True,
) -> dict:
    return {
        "id": story_id,
        "world": world,
        "completed": completed,
        "characters": characters
        if characters is not None
        else [{"id": "c1", "name": "Vala", "description": "A wandering scholar.", "player_id": "p1"}],
        "cards": cards or [],
        "scenes": scenes
        if scenes is not None
        else [{"id": "sc1", "intro": "It begins.", "entries": [entry("e1", 0, "Vala steps forward.")]}],
    }


def minimal_story() -> Story:
    return load_story(story_doc())


def interaction_story() -> Story:
    """Two characters, a challenge, played cards: exercises bundle assembly."""
    cards = [
        {
            "id": "k-challenge",
            "kind": "challenge",
            "is_wild": False,
            "title": "Cross the ravine",
            "description": "A rope bridge sways over the gap.",
        },
        {
            "id": "k-strength",
            "kind": "strength",
            "is_wild": False,
            "title": "Steady hands",
            "description": "Years of climbing pay off.",
        },
        {
            "id": "k-wild",
            "kind": "item",
            "is_wild": True,
            "title": "Lucky coin",
            "description": "It always lands on edge.",
        },
    ]
    characters = [
        {"id": "c1", "name": "Vala", "description": "A wandering scholar of old maps.", "player_id": "p1"},
        {"id": "c2", "name": "Rook", "description": "A retired soldier with a limp.", "player_id": "p2"},
    ]
    scenes = [
        {
            "id": "sc1",
            "intro": "The party reaches the ravine at dusk.",
            "entries": [
                entry("e1", 0, "The narrator sets the scene near the ravine.", character_id=None),
                entry("e2", 1, "Vala studies the fraying ropes carefully.", character_id="c1"),
                entry("e3", 2, "Rook tests the first plank with his boot.", character_id="c2"),
            ],
        },
        {
            "id": "sc2",
            "intro": "Night falls on the crossing.",
            "entries": [
                entry(
                    "e4",
                    0,
                    "Vala crosses while counting every step aloud.",
                    character_id="c1",
                    cards_played=["k-strength", "k-wild"],
                    challenge_id="k-challenge",
                ),
                entry("e5", 1, "Rook follows, muttering about heights.", character_id="c2"),
            ],
        },
    ]
    return load_story(story_doc("story-x", scenes=scenes, cards=cards, characters=characters, world="Trailmark"))


def sized_story(story_id: str, n_tokens: int) -> Story:
    """One-scene story whose single entry has exactly n_tokens STATS tokens."""
    scenes = [
        {"id": "sc1", "intro": "", "entries": [entry("e1", 0, words(n_tokens))]}
    ]
    return load_story(story_doc(story_id, scenes=scenes))


def equal_corpus(n: int, tokens_per_story: int = 50) -> list[Story]:
    return [sized_story(f"story-{i:03d}", tokens_per_story) for i in range(n)]


def lognormal_corpus(n: int = 100, seed: int = 42, sigma: float = 1.0) -> list[Story]:
    rng = random.Random(seed)
    return [
        sized_story(f"story-{i:03d}", max(1, round(rng.lognormvariate(4.0, sigma))))
        for i in range(n)
    ]
