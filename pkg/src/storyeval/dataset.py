"""Story corpus schema, validation, statistics, splits, and context bundles.

A story is a tree: scenes contain ordered entries; entries are written by a
character or the narrator, may play cards, and may address a challenge card.
Token counts everywhere use STATS tokenization.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from math import sqrt
from pathlib import Path
from typing import Mapping, Sequence

from .packing import SegmentSpec, TrimSide
from .textproc import TokenizerMode, tokenize


class DatasetError(Exception):
    pass


class SchemaViolation(DatasetError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class DanglingReference(DatasetError):
    def __init__(self, path: str, ref: str):
        super().__init__(f"{path}: reference to unknown id {ref!r}")
        self.path = path
        self.ref = ref


class EmptyCorpus(DatasetError):
    pass


class TooFewStories(DatasetError):
    pass


class IndexOutOfRange(DatasetError):
    pass


class NarratorTarget(DatasetError):
    """Narrator entries are valid corpus content but invalid generation targets."""


class CardKind(Enum):
    STRENGTH = "strength"
    WEAKNESS = "weakness"
    ITEM = "item"
    GOAL = "goal"
    LOCATION = "location"
    CHALLENGE = "challenge"


@dataclass(frozen=True)
class Card:
    id: str
    kind: CardKind
    is_wild: bool
    title: str
    description: str


@dataclass(frozen=True)
class Character:
    id: str
    name: str
    description: str
    player_id: str


@dataclass(frozen=True)
class Entry:
    id: str
    character_id: str | None  # None means the narrator wrote it
    text: str
    cards_played: tuple[str, ...]
    challenge_id: str | None
    ordinal: int

    @property
    def is_narrator(self) -> bool:
        return self.character_id is None


@dataclass(frozen=True)
class Scene:
    id: str
    intro: str
    entries: tuple[Entry, ...]


@dataclass(frozen=True)
class Story:
    id: str
    world: str | None
    completed: bool
    characters: tuple[Character, ...]
    cards: tuple[Card, ...]
    scenes: tuple[Scene, ...]

    def card(self, card_id: str) -> Card:
        return {c.id: c for c in self.cards}[card_id]

    def character(self, character_id: str) -> Character:
        return {c.id: c for c in self.characters}[character_id]


# ---------------------------------------------------------------------------
# Loading and validation
# ---------------------------------------------------------------------------


def _require(doc: Mapping, key: str, kind, path: str, optional: bool = False):
    if key not in doc:
        if optional:
            return None
        raise SchemaViolation(f"{path}.{key}", "missing field")
    value = doc[key]
    if value is None and optional:
        return None
    if kind is bool and not isinstance(value, bool):
        raise SchemaViolation(f"{path}.{key}", f"expected bool, got {type(value).__name__}")
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise SchemaViolation(f"{path}.{key}", f"expected int, got {type(value).__name__}")
    if kind is str and not isinstance(value, str):
        raise SchemaViolation(f"{path}.{key}", f"expected str, got {type(value).__name__}")
    if kind is list and not isinstance(value, list):
        raise SchemaViolation(f"{path}.{key}", f"expected list, got {type(value).__name__}")
    if kind is dict and not isinstance(value, dict):
        raise SchemaViolation(f"{path}.{key}", f"expected object, got {type(value).__name__}")
    return value


def load_story(document: Mapping) -> Story:
    """Validate a story document; rejects schema violations and dangling ids."""
    if not isinstance(document, Mapping):
        raise SchemaViolation("$", "story document must be an object")
    path = "$"
    story_id = _require(document, "id", str, path)
    if not story_id:
        raise SchemaViolation("$.id", "story id must be nonempty")
    world = _require(document, "world", str, path, optional=True)
    completed = _require(document, "completed", bool, path)

    characters = []
    seen_char_ids = set()
    for i, raw in enumerate(_require(document, "characters", list, path)):
        cpath = f"$.characters[{i}]"
        if not isinstance(raw, dict):
            raise SchemaViolation(cpath, "expected object")
        cid = _require(raw, "id", str, cpath)
        if cid in seen_char_ids:
            raise SchemaViolation(cpath + ".id", f"duplicate character id {cid!r}")
        seen_char_ids.add(cid)
        characters.append(
            Character(
                id=cid,
                name=_require(raw, "name", str, cpath),
                description=_require(raw, "description", str, cpath),
                player_id=_require(raw, "player_id", str, cpath),
            )
        )

    cards = []
    seen_card_ids = set()
    for i, raw in enumerate(_require(document, "cards", list, path)):
        cpath = f"$.cards[{i}]"
        if not isinstance(raw, dict):
            raise SchemaViolation(cpath, "expected object")
        kind_text = _require(raw, "kind", str, cpath)
        try:
            kind = CardKind(kind_text)
        except ValueError:
            raise SchemaViolation(cpath + ".kind", f"unknown card kind {kind_text!r}") from None
        cid = _require(raw, "id", str, cpath)
        if cid in seen_card_ids:
            raise SchemaViolation(cpath + ".id", f"duplicate card id {cid!r}")
        seen_card_ids.add(cid)
        is_wild = _require(raw, "is_wild", bool, cpath)
        title = _require(raw, "title", str, cpath)
        if not title and not is_wild:
            raise SchemaViolation(cpath + ".title", "non-wild cards need a title")
        cards.append(
            Card(
                id=cid,
                kind=kind,
                is_wild=is_wild,
                title=title,
                description=_require(raw, "description", str, cpath),
            )
        )

    scenes = []
    for i, raw in enumerate(_require(document, "scenes", list, path)):
        spath = f"$.scenes[{i}]"
        if not isinstance(raw, dict):
            raise SchemaViolation(spath, "expected object")
        sid = _require(raw, "id", str, spath)
        if not sid:
            raise SchemaViolation(spath + ".id", "scene id must be nonempty")
        entries = []
        for j, entry_raw in enumerate(_require(raw, "entries", list, spath)):
            epath = f"{spath}.entries[{j}]"
            if not isinstance(entry_raw, dict):
                raise SchemaViolation(epath, "expected object")
            role = _require(entry_raw, "author_role", str, epath)
            if role == "narrator":
                character_id = None
            elif role == "character":
                character_id = _require(entry_raw, "character_id", str, epath)
                if character_id not in seen_char_ids:
                    raise DanglingReference(epath + ".character_id", character_id)
            else:
                raise SchemaViolation(epath + ".author_role", f"unknown role {role!r}")
            ordinal = _require(entry_raw, "ordinal", int, epath)
            if ordinal != j:
                raise SchemaViolation(epath + ".ordinal", f"expected {j}, got {ordinal}")
            played = []
            for k, ref in enumerate(_require(entry_raw, "cards_played", list, epath)):
                if not isinstance(ref, str):
                    raise SchemaViolation(f"{epath}.cards_played[{k}]", "expected card id string")
                if ref not in seen_card_ids:
                    raise DanglingReference(f"{epath}.cards_played[{k}]", ref)
                played.append(ref)
            challenge_id = _require(entry_raw, "challenge_id", str, epath, optional=True)
            if challenge_id is not None and challenge_id not in seen_card_ids:
                raise DanglingReference(epath + ".challenge_id", challenge_id)
            entries.append(
                Entry(
                    id=_require(entry_raw, "id", str, epath),
                    character_id=character_id,
                    text=_require(entry_raw, "text", str, epath),
                    cards_played=tuple(played),
                    challenge_id=challenge_id,
                    ordinal=ordinal,
                )
            )
        scenes.append(Scene(id=sid, intro=_require(raw, "intro", str, spath), entries=tuple(entries)))

    return Story(
        id=story_id,
        world=world,
        completed=completed,
        characters=tuple(characters),
        cards=tuple(cards),
        scenes=tuple(scenes),
    )


def story_to_dict(story: Story) -> dict:
    """Canonical document form; round-trips through load_story."""
    return {
        "id": story.id,
        "world": story.world,
        "completed": story.completed,
        "characters": [
            {"id": c.id, "name": c.name, "description": c.description, "player_id": c.player_id}
            for c in story.characters
        ],
        "cards": [
            {
                "id": c.id,
                "kind": c.kind.value,
                "is_wild": c.is_wild,
                "title": c.title,
                "description": c.description,
            }
            for c in story.cards
        ],
        "scenes": [
            {
                "id": s.id,
                "intro": s.intro,
                "entries": [
                    {
                        "id": e.id,
                        "author_role": "narrator" if e.is_narrator else "character",
                        **({} if e.is_narrator else {"character_id": e.character_id}),
                        "text": e.text,
                        "cards_played": list(e.cards_played),
                        "challenge_id": e.challenge_id,
                        "ordinal": e.ordinal,
                    }
                    for e in s.entries
                ],
            }
            for s in story.scenes
        ],
    }


def load_corpus(root) -> list[Story]:
    """Load every ``stories/<id>.story`` document under ``root`` (sorted by filename)."""
    root = Path(root)
    story_dir = root / "stories" if (root / "stories").is_dir() else root
    stories = []
    for path in sorted(story_dir.glob("*.story")):
        with open(path, encoding="utf-8") as handle:
            stories.append(load_story(json.load(handle)))
    return stories


def save_story(story: Story, root) -> Path:
    story_dir = Path(root) / "stories"
    story_dir.mkdir(parents=True, exist_ok=True)
    path = story_dir / f"{story.id}.story"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(story_to_dict(story), handle, ensure_ascii=False, indent=2)
        handle.write("\n")
    return path


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def stats_token_count(text: str) -> int:
    return len(tokenize(text, TokenizerMode.STATS))


def story_token_count(story: Story) -> int:
    """Tokens across the story's entry texts (the mass the splits balance)."""
    return sum(stats_token_count(e.text) for s in story.scenes for e in s.entries)


@dataclass(frozen=True)
class FeatureStats:
    total: float
    mean: float
    std_dev: float
    count: int


@dataclass(frozen=True)
class Histogram:
    feature: str
    bin_width: int
    counts: tuple[int, ...]


@dataclass(frozen=True)
class DatasetStats:
    stories: int
    completed_stories: int
    features: dict[str, FeatureStats]
    unique_tokens: int
    histograms: dict[str, Histogram]


_DEFAULT_BIN_WIDTHS = {
    "scenes_per_story": 5,
    "entries_per_scene": 10,
    "cards_created_per_story": 10,
    "tokens_per_entry": 100,
    "tokens_per_character_description": 100,
}


def _feature_stats(values: Sequence[float]) -> FeatureStats:
    ordered = sorted(values)  # fixed summation order: story permutation cannot move a ulp
    n = len(ordered)
    total = sum(ordered)
    mean = total / n if n else 0.0
    variance = sum((v - mean) ** 2 for v in ordered) / n if n else 0.0
    return FeatureStats(total=total, mean=mean, std_dev=sqrt(variance), count=n)


def _histogram(feature: str, values: Sequence[float], bin_width: int) -> Histogram:
    if not values:
        return Histogram(feature, bin_width, ())
    counts = [0] * (int(max(values)) // bin_width + 1)
    for v in values:
        counts[int(v) // bin_width] += 1
    return Histogram(feature, bin_width, tuple(counts))


def compute_stats(corpus: Sequence[Story], bin_widths: Mapping[str, int] | None = None) -> DatasetStats:
    """Deterministic corpus statistics (population std dev, STATS token counts)."""
    if not corpus:
        raise EmptyCorpus("cannot compute statistics over an empty corpus")
    widths = dict(_DEFAULT_BIN_WIDTHS)
    if bin_widths:
        widths.update(bin_widths)

    values: dict[str, list[float]] = {
        "scenes_per_story": [],
        "entries_per_scene": [],
        "cards_created_per_story": [],
        "played_cards_per_entry": [],
        "tokens_per_entry": [],
        "tokens_per_character_description": [],
    }
    for kind in CardKind:
        values[f"played_{kind.value}_cards_per_entry"] = []
        values[f"tokens_per_{kind.value}_card"] = []

    unique: set[str] = set()

    def see(text: str) -> int:
        tokens = tokenize(text, TokenizerMode.STATS)
        unique.update(tokens.tokens)
        return len(tokens)

    for story in corpus:
        values["scenes_per_story"].append(len(story.scenes))
        values["cards_created_per_story"].append(len(story.cards))
        card_kinds = {c.id: c.kind for c in story.cards}
        for card in story.cards:
            values[f"tokens_per_{card.kind.value}_card"].append(
                see(card.title) + see(card.description)
            )
        for character in story.characters:
            values["tokens_per_character_description"].append(see(character.description))
        for scene in story.scenes:
            see(scene.intro)
            values["entries_per_scene"].append(len(scene.entries))
            for entry in scene.entries:
                values["tokens_per_entry"].append(see(entry.text))
                values["played_cards_per_entry"].append(len(entry.cards_played))
                by_kind = {kind: 0 for kind in CardKind}
                for ref in entry.cards_played:
                    by_kind[card_kinds[ref]] += 1
                for kind, count in by_kind.items():
                    values[f"played_{kind.value}_cards_per_entry"].append(count)

    features = {name: _feature_stats(vals) for name, vals in values.items()}
    histograms = {
        name: _histogram(name, vals, widths.get(name, 1)) for name, vals in values.items()
    }
    return DatasetStats(
        stories=len(corpus),
        completed_stories=sum(1 for s in corpus if s.completed),
        features=features,
        unique_tokens=len(unique),
        histograms=histograms,
    )


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------

SPLITS = ("train", "valid", "test")


@dataclass(frozen=True)
class SplitAssignment:
    assignments: dict[str, str]  # story id -> split name
    story_fractions: dict[str, float]
    token_fractions: dict[str, float]


def _quotas(n_stories: int, ratios: Sequence[float]) -> dict[str, int]:
    total = sum(ratios)
    exact = [n_stories * r / total for r in ratios]
    floors = [int(e) for e in exact]
    remainder = n_stories - sum(floors)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - floors[i]), i))
    for i in order[:remainder]:
        floors[i] += 1
    quotas = dict(zip(SPLITS, floors))
    # every split must land at least one story; steal from the largest
    for name in SPLITS:
        while quotas[name] == 0:
            donor = max(SPLITS, key=lambda s: quotas[s])
            quotas[donor] -= 1
            quotas[name] += 1
    return quotas


def split_corpus(
    corpus: Sequence[Story], ratios: Sequence[float] = (8, 1, 1), seed: int = 0
) -> SplitAssignment:
    """Greedy balanced split over story counts and token counts jointly.

    Story-count quotas come from largest-remainder apportionment with a
    one-story floor per split (hence the >= 3 stories precondition). Stories
    are then placed largest-first into the split with the greatest remaining
    token deficit per open slot. The seed only shuffles ties, so counts and
    ratios are stable across seeds.
    """
    if len(ratios) != len(SPLITS):
        raise ValueError("ratios must have three components")
    if len(corpus) < len(SPLITS):
        raise TooFewStories(f"need at least {len(SPLITS)} stories, got {len(corpus)}")
    rng = random.Random(seed)
    total_ratio = sum(ratios)
    quotas = _quotas(len(corpus), ratios)

    tokens = {story.id: story_token_count(story) for story in corpus}
    total_tokens = sum(tokens.values()) or 1
    token_targets = {
        name: total_tokens * r / total_ratio for name, r in zip(SPLITS, ratios)
    }

    assigned_tokens = {name: 0 for name in SPLITS}
    assigned_count = {name: 0 for name in SPLITS}
    assignments: dict[str, str] = {}

    for story in sorted(corpus, key=lambda s: (-tokens[s.id], s.id)):
        open_splits = [name for name in SPLITS if assigned_count[name] < quotas[name]]

        def deficit(name: str) -> tuple[float, float]:
            # token deficit per open story slot: every split must still take
            # exactly its quota of stories, so the biggest remaining stories
            # belong where the per-slot need is highest; absolute deficit
            # breaks ties toward the split that can absorb outliers
            remaining = token_targets[name] - assigned_tokens[name]
            return remaining / (quotas[name] - assigned_count[name]), remaining

        best = max(deficit(name) for name in open_splits)
        candidates = [name for name in open_splits if deficit(name) == best]
        choice = candidates[0] if len(candidates) == 1 else rng.choice(candidates)
        assignments[story.id] = choice
        assigned_tokens[choice] += tokens[story.id]
        assigned_count[choice] += 1

    return SplitAssignment(
        assignments=assignments,
        story_fractions={name: assigned_count[name] / len(corpus) for name in SPLITS},
        token_fractions={name: assigned_tokens[name] / total_tokens for name in SPLITS},
    )


# ---------------------------------------------------------------------------
# Generation bundles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenerationExample:
    bundle: tuple[tuple[SegmentSpec, tuple[str, ...]], ...]
    target_text: str
    target_character_id: str


def _entries_before(story: Story, scene_index: int, entry_index: int):
    """All (scene_index, entry) pairs strictly before the target, story order."""
    out = []
    for si, scene in enumerate(story.scenes[: scene_index + 1]):
        limit = entry_index if si == scene_index else len(scene.entries)
        for entry in scene.entries[:limit]:
            out.append((si, entry))
    return out


def build_generation_example(story: Story, scene_index: int, entry_index: int) -> GenerationExample:
    """Assemble the context bundle conditioning generation of one entry.

    Order: scene intro, challenge card, played cards, character biography, the
    immediately preceding entry, and (only when that preceding entry was
    written by someone else, or does not exist) the target character's most
    recent prior entry. Missing sources become zero-length segments so the
    solver collapses them.
    """
    if not 0 <= scene_index < len(story.scenes):
        raise IndexOutOfRange(f"scene {scene_index} outside story {story.id}")
    scene = story.scenes[scene_index]
    if not 0 <= entry_index < len(scene.entries):
        raise IndexOutOfRange(f"entry {entry_index} outside scene {scene.id}")
    target = scene.entries[entry_index]
    if target.is_narrator:
        raise NarratorTarget("generation targets must be character entries")

    cards = {c.id: c for c in story.cards}
    segments: list[tuple[str, tuple, str, TrimSide]] = []

    segments.append(("intro", ("intro",), scene.intro, TrimSide.HEAD))

    challenge = cards.get(target.challenge_id) if target.challenge_id else None
    challenge_ids = (f"{challenge.kind.value}-card",) if challenge else ("challenge-card",)
    segments.append(
        ("challenge_title", challenge_ids + ("title",), challenge.title if challenge else "", TrimSide.HEAD)
    )
    segments.append(
        (
            "challenge_description",
            challenge_ids + ("description",),
            challenge.description if challenge else "",
            TrimSide.HEAD,
        )
    )

    for k, ref in enumerate(target.cards_played):
        card = cards[ref]
        base = (f"{card.kind.value}-card",) + (("wild-card",) if card.is_wild else ())
        segments.append((f"card_{k}_title", base + ("title",), card.title, TrimSide.HEAD))
        segments.append(
            (f"card_{k}_description", base + ("description",), card.description, TrimSide.HEAD)
        )

    character = story.character(target.character_id)
    segments.append(("character_name", ("character", "title"), character.name, TrimSide.HEAD))
    segments.append(
        ("character_description", ("character", "description"), character.description, TrimSide.HEAD)
    )

    before = _entries_before(story, scene_index, entry_index)
    preceding = before[-1][1] if before else None
    segments.append(
        ("previous_entry", ("previous-entry",), preceding.text if preceding else "", TrimSide.TAIL)
    )

    if preceding is None or preceding.character_id != target.character_id:
        last_own = next(
            (e.text for _, e in reversed(before) if e.character_id == target.character_id),
            "",
        )
        segments.append(("character_last_entry", ("last-entry",), last_own, TrimSide.TAIL))

    bundle = []
    for declared_index, (name, ids, text, trim) in enumerate(segments):
        tokens = tokenize(text, TokenizerMode.STATS).tokens
        spec = SegmentSpec(
            name=name,
            segment_ids=ids,
            available=len(tokens),
            trim=trim,
            declared_index=declared_index,
        )
        bundle.append((spec, tokens))

    return GenerationExample(
        bundle=tuple(bundle),
        target_text=target.text,
        target_character_id=target.character_id,
    )
