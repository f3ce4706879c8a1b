"""Deterministic synthetic fixtures: a mini knowledge base spanning two
topic domains (reptiles vs programming, plus a small general pool),
generated ingestion corpora with hyperlinks, labeled quality phrases,
chat-style gold sets, and an out-of-vocabulary benchmark corpus.

Everything is produced from a seed; the same seed reproduces identical
files byte for byte.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# --------------------------------------------------------------------------
# Vocabulary. Filler words never collide with anchor phrases: anchors are
# the only strings that carry links, so gold sets stay exact.
# --------------------------------------------------------------------------

REPTILE_VOCAB = [
    "reptile", "snake", "constrictor", "scales", "venom", "habitat", "jungle",
    "prey", "eggs", "tropical", "slither", "bite", "hunt", "basking", "swamp",
    "forest", "river", "zoo", "wildlife", "species", "burrow", "camouflage",
    "predator", "hatchling", "marsh",
]

PROG_VOCAB = [
    "code", "software", "developer", "function", "variable", "server",
    "library", "framework", "script", "release", "deploy", "build", "testing",
    "program", "bug", "merge", "branch", "commit", "keyboard", "laptop",
    "terminal", "editor", "refactor", "module", "runtime",
]

GENERAL_VOCAB = [
    "city", "visit", "weekend", "morning", "coffee", "lunch", "travel",
    "trip", "amazing", "great", "nice", "week", "meeting", "schedule",
    "project", "status", "update", "roadmap", "launch", "plan", "review",
    "notes", "office", "downtown", "park", "museum", "tomorrow", "monday",
]

# Noise words present in the ingestion crawl corpus (therefore known).
CRAWL_SLANG = [
    "lol", "btw", "omg", "fyi", "asap", "ping", "slides", "deck", "invite",
    "recap", "kudos", "yay", "oops", "fwiw", "imo", "lgtm", "wfh", "brb",
    "standup", "sync",
]

# Benchmark-only noise: absent from every ingestion corpus, so these
# tokens are guaranteed misses for the phrase table and trie.
BENCH_OOV = [
    "kael", "mira", "tobin", "suri", "renn", "zade", "pax", "juno", "orla",
    "finch", "veylith", "quorrin", "szbt", "marnok", "xylophant", "grubble",
    "t17z", "qqv", "blorp", "snerf", "wixle", "framble", "zonkt", "prilt",
    "chuzz", "dravix", "omber", "yilt", "kresp", "vund",
]


@dataclass(frozen=True)
class FixtureEntity:
    slug: str
    topic: str
    anchors: tuple[str, ...]
    page_views: int = 0


ENTITIES: tuple[FixtureEntity, ...] = (
    # Reptile domain.
    FixtureEntity("Python_(genus)", "reptile", ("python",), 900),
    FixtureEntity("Boa_constrictor", "reptile", ("boa constrictor", "boa"), 700),
    FixtureEntity("Komodo_dragon", "reptile", ("komodo dragon",), 650),
    FixtureEntity("King_cobra", "reptile", ("king cobra",), 600),
    FixtureEntity("Green_anaconda", "reptile", ("anaconda", "green anaconda"), 580),
    FixtureEntity("Gecko", "reptile", ("gecko",), 420),
    FixtureEntity("Iguana", "reptile", ("iguana",), 410),
    FixtureEntity("Chameleon", "reptile", ("chameleon",), 400),
    FixtureEntity("Sea_turtle", "reptile", ("sea turtle",), 520),
    FixtureEntity("Rattlesnake", "reptile", ("rattlesnake",), 510),
    FixtureEntity("Gila_monster", "reptile", ("gila monster",), 300),
    FixtureEntity("Monitor_lizard", "reptile", ("monitor lizard",), 310),
    FixtureEntity("Crocodile", "reptile", ("crocodile",), 800),
    FixtureEntity("Alligator", "reptile", ("alligator",), 640),
    FixtureEntity("Herpetology", "reptile", ("herpetology",), 200),
    FixtureEntity("Terrarium", "reptile", ("terrarium",), 210),
    # Programming domain.
    FixtureEntity("Python_(programming_language)", "programming", ("python",), 980),
    FixtureEntity("Machine_learning", "programming", ("machine learning",), 950),
    FixtureEntity("Java_(programming_language)", "programming", ("java",), 870),
    FixtureEntity("Compiler", "programming", ("compiler",), 480),
    FixtureEntity("Algorithm", "programming", ("algorithm",), 760),
    FixtureEntity("Data_structure", "programming", ("data structure",), 530),
    FixtureEntity("Neural_network", "programming", ("neural network",), 720),
    FixtureEntity("Software_engineering", "programming", ("software engineering",), 450),
    FixtureEntity("Debugging", "programming", ("debugging",), 380),
    FixtureEntity("Git", "programming", ("git",), 690),
    FixtureEntity("Linux", "programming", ("linux",), 820),
    FixtureEntity("Database", "programming", ("database",), 610),
    FixtureEntity("JavaScript", "programming", ("javascript",), 840),
    FixtureEntity("Operating_system", "programming", ("operating system",), 560),
    FixtureEntity("Source_code", "programming", ("source code",), 350),
    FixtureEntity("Version_control", "programming", ("version control",), 330),
    FixtureEntity("Unit_testing", "programming", ("unit testing",), 290),
    FixtureEntity("Deep_learning", "programming", ("deep learning",), 710),
    FixtureEntity("Artificial_intelligence", "programming", ("artificial intelligence",), 930),
    FixtureEntity("Programming_language", "programming", ("programming language",), 540),
    # General pool.
    FixtureEntity("Manhattan", "general", ("manhattan",), 890),
    FixtureEntity("New_York_City", "general", ("new york", "nyc"), 990),
    FixtureEntity("Museum_of_Modern_Art", "general", ("moma", "museum of modern art"), 620),
    FixtureEntity("Team", "general", ("team",), 430),
    FixtureEntity("Neptune", "general", ("neptune",), 500),
    FixtureEntity("Apollo_program", "general", ("apollo",), 660),
    FixtureEntity("Planet", "general", ("planet",), 470),
    FixtureEntity("Calendar", "general", ("calendar",), 260),
)

TOPIC_VOCAB = {
    "reptile": REPTILE_VOCAB,
    "programming": PROG_VOCAB,
    "general": GENERAL_VOCAB,
}

_BY_TOPIC: dict[str, list[FixtureEntity]] = {}
for _entity in ENTITIES:
    _BY_TOPIC.setdefault(_entity.topic, []).append(_entity)

_ALL_ANCHORS = {a for e in ENTITIES for a in e.anchors}
_ALL_FILLERS = {w for vocab in TOPIC_VOCAB.values() for w in vocab}
assert not (_ALL_ANCHORS & _ALL_FILLERS), "anchor strings must not be filler words"


QUALITY_PHRASES: tuple[tuple[str, int], ...] = tuple(
    [(a, 1) for a in sorted(_ALL_ANCHORS) if " " in a]
    + [
        ("of the", 0),
        ("is a", 0),
        ("in the", 0),
        ("on the", 0),
        ("at the", 0),
        ("and the", 0),
        ("with the", 0),
        ("near the", 0),
        ("it is", 0),
        ("for the", 0),
        ("the python", 0),
        ("a boa", 0),
        ("the museum", 0),
        ("next week", 0),
        ("learning team", 0),
        ("great machine", 0),
        ("status update", 0),
        ("update for", 0),
        ("project status", 0),
        ("the team", 0),
    ]
)


class _TextBuilder:
    """Accumulates words into text while recording exact link offsets."""

    def __init__(self) -> None:
        self._parts: list[str] = []
        self._length = 0
        self.links: list[dict] = []

    def word(self, token: str) -> None:
        if self._parts:
            self._parts.append(" ")
            self._length += 1
        self._parts.append(token)
        self._length += len(token)

    def words(self, tokens: Sequence[str]) -> None:
        for token in tokens:
            self.word(token)

    def mention(self, anchor: str, target: Optional[str]) -> None:
        if self._parts:
            self._parts.append(" ")
            self._length += 1
        start = self._length
        self._parts.append(anchor)
        self._length += len(anchor)
        if target is not None:
            self.links.append(
                {"anchor": anchor, "target": target, "start": start, "end": start + len(anchor)}
            )

    def sentence_end(self) -> None:
        self._parts.append(".")
        self._length += 1

    def text(self) -> str:
        return "".join(self._parts)


def _pick(rng: np.random.Generator, pool: Sequence, count: int) -> list:
    idx = rng.choice(len(pool), size=count, replace=True)
    return [pool[int(i)] for i in idx]


def _sample_distinct(rng: np.random.Generator, pool: Sequence, count: int) -> list:
    count = min(count, len(pool))
    idx = rng.choice(len(pool), size=count, replace=False)
    return [pool[int(i)] for i in idx]


def make_wiki_pages(rng: np.random.Generator) -> list[dict]:
    """One page per entity, mentioning same-topic peers with links."""
    pages = []
    for entity in ENTITIES:
        vocab = TOPIC_VOCAB[entity.topic]
        peers = [e for e in _BY_TOPIC[entity.topic] if e.slug != entity.slug]
        builder = _TextBuilder()
        # Unlinked self mention in the intro, Wikipedia style.
        builder.word("the")
        builder.mention(entity.anchors[0], None)
        builder.words(["is", "a"])
        builder.words(_pick(rng, vocab, 2))
        builder.words(["known", "for"])
        builder.words(_pick(rng, vocab, 2))
        builder.sentence_end()
        mention_count = int(rng.integers(4, 7))
        mentioned = _sample_distinct(rng, peers, mention_count)
        for peer in mentioned:
            anchor = peer.anchors[int(rng.integers(len(peer.anchors)))]
            opener = ["it", "often"] if rng.random() < 0.5 else ["the", "species", "of"]
            if entity.topic != "reptile":
                opener = ["it", "works", "with"] if rng.random() < 0.5 else ["many", "use"]
            builder.words(opener)
            builder.words(_pick(rng, vocab, 2))
            builder.word("near" if entity.topic == "reptile" else "like")
            builder.word("the")
            builder.mention(anchor, peer.slug)
            builder.words(["and", "the"])
            builder.words(_pick(rng, vocab, 2))
            builder.sentence_end()
        builder.words(["most"] + _pick(rng, vocab, 3))
        builder.words(["are", "seen", "in", "the"])
        builder.words(_pick(rng, vocab, 1))
        builder.sentence_end()
        pages.append(
            {
                "id": entity.slug,
                "title": entity.slug.replace("_", " "),
                "text": builder.text(),
                "links": builder.links,
                "corpus": "wiki",
                "page_views": entity.page_views,
                "redirect_views": entity.page_views // 10,
            }
        )
    return pages


def make_crawl_pages(rng: np.random.Generator, count: int = 48) -> list[dict]:
    """Noisy chat-like pages: some links, known slang, and unlinked
    mentions of the project code-name surfaces (neptune, apollo)."""
    pages = []
    linkable = [e for e in ENTITIES if e.topic != "general"]
    for i in range(count):
        builder = _TextBuilder()
        kind = i % 4
        if kind == 0:
            # Project chatter with unlinked code names.
            code = "neptune" if rng.random() < 0.6 else "apollo"
            builder.words(_pick(rng, CRAWL_SLANG, 2))
            builder.words(["project"])
            builder.mention(code, None)
            builder.words(_pick(rng, GENERAL_VOCAB, 3))
            builder.sentence_end()
            builder.words(_pick(rng, CRAWL_SLANG, 1))
            builder.words(["the", "project"])
            builder.mention(code, None)
            builder.words(["plan", "needs"])
            builder.words(_pick(rng, GENERAL_VOCAB, 2))
            builder.sentence_end()
        else:
            topic = "reptile" if kind == 1 else "programming"
            vocab = TOPIC_VOCAB[topic]
            pool = [e for e in linkable if e.topic == topic]
            builder.words(_pick(rng, CRAWL_SLANG, 1))
            for peer in _sample_distinct(rng, pool, int(rng.integers(2, 4))):
                anchor = peer.anchors[int(rng.integers(len(peer.anchors)))]
                builder.words(_pick(rng, vocab, 2))
                builder.word("the")
                builder.mention(anchor, peer.slug)
                builder.words(_pick(rng, vocab, 1))
                builder.sentence_end()
        pages.append(
            {
                "id": f"crawl{i:03d}",
                "title": "",
                "text": builder.text(),
                "links": builder.links,
                "corpus": "crawl",
            }
        )
    return pages


def make_wikilinks_pages(rng: np.random.Generator, count: int = 20) -> list[dict]:
    pages = []
    for i in range(count):
        builder = _TextBuilder()
        for peer in _sample_distinct(rng, ENTITIES, int(rng.integers(3, 6))):
            anchor = peer.anchors[int(rng.integers(len(peer.anchors)))]
            builder.words(["see", "the"])
            builder.mention(anchor, peer.slug)
            builder.words(["page", "for"])
            builder.words(_pick(rng, TOPIC_VOCAB[peer.topic], 1))
            builder.sentence_end()
        pages.append(
            {
                "id": f"wl{i:03d}",
                "title": "",
                "text": builder.text(),
                "links": builder.links,
                "corpus": "wikilinks",
            }
        )
    return pages


# --------------------------------------------------------------------------
# Gold chat data
# --------------------------------------------------------------------------


def _chat_doc(
    doc_id: str,
    rng: np.random.Generator,
    mentions: Sequence[tuple[str, Optional[str]]],
    vocab: Sequence[str],
    closing: Sequence[str] = (),
) -> dict:
    """A chat passage weaving mention surfaces between filler words.
    ``mentions`` pairs a surface with its entity (None marks the
    no-KB-entry class)."""
    builder = _TextBuilder()
    gold = []
    builder.words(_pick(rng, vocab, int(rng.integers(1, 3))))
    for surface, entity in mentions:
        if entity is None:
            builder.word("project")
        else:
            builder.word("the" if rng.random() < 0.4 else "a")
        start_marker = builder.text()
        builder.mention(surface, None)
        start = len(start_marker) + 1
        gold.append(
            {
                "surface": surface,
                "start": start,
                "end": start + len(surface),
                "entity": entity,
            }
        )
        builder.words(_pick(rng, vocab, int(rng.integers(2, 4))))
    builder.words(list(closing) or _pick(rng, vocab, 1))
    return {"id": doc_id, "text": builder.text(), "links": gold}


def make_gold_train(rng: np.random.Generator) -> list[dict]:
    """Training gold: unambiguous mentions, balanced ambiguous python
    mentions in both topic contexts, and none-labeled project names."""
    docs = []
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"train{counter:03d}"

    linkable = [e for e in ENTITIES if e.topic != "general"]
    for _ in range(26):
        topic = "reptile" if rng.random() < 0.5 else "programming"
        pool = [e for e in linkable if e.topic == topic and "python" not in e.anchors[0]]
        picks = _sample_distinct(rng, pool, int(rng.integers(2, 4)))
        mentions = [
            (p.anchors[int(rng.integers(len(p.anchors)))], p.slug) for p in picks
        ]
        docs.append(_chat_doc(next_id(), rng, mentions, TOPIC_VOCAB[topic]))

    # Ambiguous "python" with disambiguating same-topic companions.
    for topic, slug in (
        ("reptile", "Python_(genus)"),
        ("programming", "Python_(programming_language)"),
    ):
        companions = [
            e for e in linkable if e.topic == topic and "python" not in e.anchors[0]
        ]
        for _ in range(7):
            partner = companions[int(rng.integers(len(companions)))]
            mentions = [("python", slug), (partner.anchors[0], partner.slug)]
            if rng.random() < 0.5:
                mentions.reverse()
            docs.append(_chat_doc(next_id(), rng, mentions, TOPIC_VOCAB[topic]))

    # General-pool mentions so moma, manhattan, team stay in training.
    general = [e for e in _BY_TOPIC["general"] if e.slug not in ("Neptune", "Apollo_program")]
    for _ in range(8):
        picks = _sample_distinct(rng, general, int(rng.integers(2, 4)))
        mentions = [
            (p.anchors[int(rng.integers(len(p.anchors)))], p.slug) for p in picks
        ]
        docs.append(_chat_doc(next_id(), rng, mentions, GENERAL_VOCAB))

    # Linked planet-context uses of neptune and apollo.
    for _ in range(3):
        docs.append(
            _chat_doc(
                next_id(), rng,
                [("neptune", "Neptune"), ("planet", "Planet")],
                GENERAL_VOCAB,
            )
        )
        docs.append(
            _chat_doc(
                next_id(), rng,
                [("apollo", "Apollo_program"), ("calendar", "Calendar")],
                GENERAL_VOCAB,
            )
        )

    # None-labeled project code names in workplace chatter.
    for _ in range(8):
        code = "neptune" if rng.random() < 0.5 else "apollo"
        mentions: list[tuple[str, Optional[str]]] = [(code, None)]
        if rng.random() < 0.6:
            extra = general[int(rng.integers(len(general)))]
            mentions.append((extra.anchors[0], extra.slug))
        docs.append(
            _chat_doc(next_id(), rng, mentions, GENERAL_VOCAB, closing=("by", "friday"))
        )
    return docs


def make_gold_eval(rng: np.random.Generator) -> list[dict]:
    """Held-out evaluation set, including the named special cases."""
    docs = []
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"eval{counter:03d}"

    linkable = [e for e in ENTITIES if e.topic != "general"]
    for _ in range(11):
        topic = "reptile" if rng.random() < 0.5 else "programming"
        pool = [e for e in linkable if e.topic == topic and "python" not in e.anchors[0]]
        picks = _sample_distinct(rng, pool, int(rng.integers(2, 4)))
        mentions = [
            (p.anchors[int(rng.integers(len(p.anchors)))], p.slug) for p in picks
        ]
        docs.append(_chat_doc(next_id(), rng, mentions, TOPIC_VOCAB[topic]))

    general = [e for e in _BY_TOPIC["general"] if e.slug not in ("Neptune", "Apollo_program")]
    for _ in range(3):
        picks = _sample_distinct(rng, general, 2)
        mentions = [(p.anchors[0], p.slug) for p in picks]
        docs.append(_chat_doc(next_id(), rng, mentions, GENERAL_VOCAB))

    docs.append(
        _fixed_doc(
            "eval_python_reptile",
            "saw a python slither past the boa constrictor near the "
            "reptile habitat while the constrictor was basking in the swamp",
            [
                ("python", "Python_(genus)"),
                ("boa constrictor", "Boa_constrictor"),
            ],
        )
    )
    docs.append(
        _fixed_doc(
            "eval_python_prog",
            "the python script kept crashing so we spent the morning "
            "debugging the machine learning module on the server",
            [
                ("python", "Python_(programming_language)"),
                ("debugging", "Debugging"),
                ("machine learning", "Machine_learning"),
            ],
        )
    )
    docs.append(
        _fixed_doc(
            "eval_moma",
            "i will be visiting manhattan next week and moma is amazing "
            "plus i can introduce you to a great machine learning team",
            [
                ("manhattan", "Manhattan"),
                ("moma", "Museum_of_Modern_Art"),
                ("machine learning", "Machine_learning"),
                ("team", "Team"),
            ],
        )
    )
    docs.append(
        _fixed_doc(
            "eval_neptune",
            "status update for project neptune the launch review moved "
            "to monday so update the calendar invite",
            [
                ("neptune", None),
                ("calendar", "Calendar"),
            ],
        )
    )
    return docs


def _fixed_doc(
    doc_id: str, text: str, links: Sequence[tuple[str, Optional[str]]]
) -> dict:
    records = []
    for surface, entity in links:
        start = text.index(surface)
        records.append(
            {"surface": surface, "start": start, "end": start + len(surface), "entity": entity}
        )
    return {"id": doc_id, "text": text, "links": records}


def make_bench_corpus(rng: np.random.Generator, count: int = 240) -> list[dict]:
    """Chat documents dense with tokens the store has never seen, so the
    prefix trie has misses to reject."""
    docs = []
    linkable = list(ENTITIES)
    for i in range(count):
        builder = _TextBuilder()
        pieces = int(rng.integers(3, 6))
        for _ in range(pieces):
            builder.words(_pick(rng, BENCH_OOV, 2))
            if rng.random() < 0.7:
                peer = linkable[int(rng.integers(len(linkable)))]
                builder.word("the")
                builder.mention(peer.anchors[0], None)
            builder.words(_pick(rng, GENERAL_VOCAB, 1))
            builder.words(_pick(rng, BENCH_OOV, 1))
        builder.sentence_end()
        docs.append({"id": f"bench{i:04d}", "text": builder.text()})
    return docs


# --------------------------------------------------------------------------
# Writers
# --------------------------------------------------------------------------


def _write_jsonl(path: str, records: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True))
            fh.write("\n")


def write_fixtures(out_dir: str, seed: int = 7) -> dict[str, str]:
    """Generate every fixture file into a directory; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = {
        "wiki": os.path.join(out_dir, "corpus_wiki.jsonl"),
        "crawl": os.path.join(out_dir, "corpus_crawl.jsonl"),
        "wikilinks": os.path.join(out_dir, "corpus_wikilinks.jsonl"),
        "phrases": os.path.join(out_dir, "phrases.tsv"),
        "gold_train": os.path.join(out_dir, "gold_train.jsonl"),
        "gold_eval": os.path.join(out_dir, "gold_eval.jsonl"),
        "bench": os.path.join(out_dir, "bench.jsonl"),
    }
    _write_jsonl(paths["wiki"], make_wiki_pages(rng))
    _write_jsonl(paths["crawl"], make_crawl_pages(rng))
    _write_jsonl(paths["wikilinks"], make_wikilinks_pages(rng))
    with open(paths["phrases"], "w", encoding="utf-8") as fh:
        for phrase, label in QUALITY_PHRASES:
            fh.write(f"{phrase}\t{label}\n")
    _write_jsonl(paths["gold_train"], make_gold_train(rng))
    _write_jsonl(paths["gold_eval"], make_gold_eval(rng))
    _write_jsonl(paths["bench"], make_bench_corpus(rng))
    return paths


# --------------------------------------------------------------------------
# Small synthetic generators used by embedding and clustering tests
# --------------------------------------------------------------------------

TOPIC_A_WORDS = [
    "fang", "scale", "cobra", "viper", "marsh", "lagoon", "molt", "clutch",
    "basilisk", "skink", "adder", "taipan", "mamba", "krait", "slough",
]

TOPIC_B_WORDS = [
    "loop", "stack", "queue", "parser", "lexer", "kernel", "thread", "mutex",
    "socket", "pointer", "macro", "opcode", "daemon", "shell", "regex",
]


def make_two_topic_corpus(
    seed: int,
    sentences_per_topic: int = 110,
    entities_per_topic: int = 2,
) -> tuple[list[list[str]], list[str], list[str], list[str], list[str]]:
    """Sentences drawn from two disjoint vocabularies, with entity tokens
    inserted into sentences of their own topic."""
    rng = np.random.default_rng(seed)
    entities_a = [f"uri:wiki/TopicA_{i}" for i in range(entities_per_topic)]
    entities_b = [f"uri:wiki/TopicB_{i}" for i in range(entities_per_topic)]
    sentences: list[list[str]] = []
    for topic, vocab, entities in (
        ("a", TOPIC_A_WORDS, entities_a),
        ("b", TOPIC_B_WORDS, entities_b),
    ):
        for i in range(sentences_per_topic):
            length = int(rng.integers(7, 12))
            sentence = [vocab[int(j)] for j in rng.choice(len(vocab), size=length)]
            if rng.random() < 0.5:
                entity = entities[int(rng.integers(len(entities)))]
                position = int(rng.integers(1, len(sentence)))
                sentence.insert(position, entity)
            sentences.append(sentence)
    order = rng.permutation(len(sentences))
    sentences = [sentences[int(i)] for i in order]
    return sentences, TOPIC_A_WORDS, TOPIC_B_WORDS, entities_a, entities_b


def make_two_cluster_context(
    seed: int,
    dim: int = 16,
    forms_per_cluster: int = 5,
    noise: float = 0.25,
) -> tuple[list[tuple[str, float, float, np.ndarray]], np.ndarray, list[int]]:
    """Form rows drawn around two well-separated directions plus an
    entity vector aligned with the first; labels give the generating
    cluster of each row."""
    rng = np.random.default_rng(seed)
    axis_a = rng.normal(size=dim)
    axis_a /= np.linalg.norm(axis_a)
    # Orthogonalize the second axis so the clusters are far apart.
    raw_b = rng.normal(size=dim)
    axis_b = raw_b - np.dot(raw_b, axis_a) * axis_a
    axis_b /= np.linalg.norm(axis_b)
    rows: list[tuple[str, float, float, np.ndarray]] = []
    labels: list[int] = []
    for label, axis in ((0, axis_a), (1, axis_b)):
        for i in range(forms_per_cluster):
            vec = axis + noise * rng.normal(size=dim)
            rows.append((f"form{label}_{i}", 1.0, 1.0, vec.astype(np.float64)))
            labels.append(label)
    entity = axis_a + 0.1 * rng.normal(size=dim)
    return rows, entity.astype(np.float64), labels
