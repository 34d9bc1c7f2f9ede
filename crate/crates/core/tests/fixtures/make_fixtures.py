#!/usr/bin/env python3
"""Builds the restructuring and segmentation fixtures.

Independent of the Rust code: sentences are listed by hand, byte ranges are
found with bytes.find, and labels follow the smallest-begin rule. The one
tie in article 102 cannot be resolved here (it depends on the seeded RNG);
TIE_CHOICE pins the value observed for SEED and must be one of the tied
techniques.
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))
SEED = 13
TIE_CHOICE = os.environ.get("TIE_CHOICE", "Slogans")

ARTICLES = {
    "101": (
        "Crisis at the Border: Leaders Sound the Alarm\n"
        "Officials warned on Monday that the situation is out of control. "
        "The so-called experts have failed us again! Nobody knows what will happen next.\n"
        "Mr. Smith said the plan was “a total disaster.” Critics disagreed.\n",
        [
            "Crisis at the Border: Leaders Sound the Alarm",
            "Officials warned on Monday that the situation is out of control.",
            "The so-called experts have failed us again!",
            "Nobody knows what will happen next.",
            "Mr. Smith said the plan was “a total disaster.”",
            "Critics disagreed.",
        ],
    ),
    "102": (
        "We Will Never Surrender\n"
        "Stand up for your country now. They lie to you every day.\n",
        [
            "We Will Never Surrender",
            "Stand up for your country now.",
            "They lie to you every day.",
        ],
    ),
    "103": (
        "Weather Report\n"
        "Rain is expected today, e.g. in the north. The U.S. agency said so. wait what? "
        "It will be sunny tomorrow.\n",
        [
            "Weather Report",
            "Rain is expected today, e.g. in the north.",
            "The U.S. agency said so. wait what?",
            "It will be sunny tomorrow.",
        ],
    ),
}

# (article, technique, substring, occurrence start hint, end substring or None)
SPANS = [
    ("101", "Appeal_to_fear-prejudice", "the situation is out of control", "Nobody knows"),
    ("101", "Loaded_Language", "so-called experts", None),
    ("101", "Name_Calling,Labeling", "a total disaster", None),
    ("102", "Slogans", "We Will Never Surrender", None),
    ("102", "Slogans", "Stand up for your country", None),
    ("102", "Flag-Waving", "Stand up for your country now.", None),
    ("102", "Doubt", "They lie", None),
]

SPLITS = {"101": "train", "102": "dev", "103": "test"}


def byte_span(raw, start_text, end_text):
    b = raw.encode("utf-8")
    begin = b.find(start_text.encode("utf-8"))
    assert begin >= 0, start_text
    stop_text = end_text or start_text
    stop = b.find(stop_text.encode("utf-8"), begin)
    assert stop >= 0, stop_text
    return begin, stop + len(stop_text.encode("utf-8"))


def sentence_ranges(raw, sentences):
    b = raw.encode("utf-8")
    out, pos = [], 0
    for s in sentences:
        i = b.find(s.encode("utf-8"), pos)
        assert i >= 0, s
        out.append((i, i + len(s.encode("utf-8"))))
        pos = out[-1][1]
    return out


def main():
    art_dir = os.path.join(HERE, "corpus", "articles")
    os.makedirs(art_dir, exist_ok=True)
    spans = []
    for aid, technique, start, end in SPANS:
        begin, stop = byte_span(ARTICLES[aid][0], start, end)
        spans.append((aid, technique, begin, stop))
    with open(os.path.join(HERE, "corpus", "spans.tsv"), "w") as f:
        for s in spans:
            f.write("%s\t%s\t%d\t%d\n" % s)
    with open(os.path.join(HERE, "corpus", "splits.tsv"), "w") as f:
        for aid, split in SPLITS.items():
            f.write("%s\t%s\n" % (aid, split))

    records = []
    for aid, (raw, sentences) in ARTICLES.items():
        with open(os.path.join(art_dir, "article%s.txt" % aid), "w", encoding="utf-8") as f:
            f.write(raw)
        ranges = sentence_ranges(raw, sentences)
        for idx, ((lo, hi), text) in enumerate(zip(ranges, sentences), start=1):
            over = [s for s in spans if s[0] == aid and s[2] < hi and lo < s[3]]
            if not over:
                label = "non-propaganda"
            else:
                first = min(s[2] for s in over)
                tied = sorted({s[1] for s in over if s[2] == first})
                if len(tied) == 1:
                    label = tied[0]
                else:
                    assert TIE_CHOICE in tied, tied
                    label = TIE_CHOICE
            records.append({
                "article_id": aid, "index": idx, "n": len(sentences),
                "text": text, "label": label, "split": SPLITS[aid],
            })
    with open(os.path.join(HERE, "corpus", "expected_records.jsonl"), "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")

    seg_sentences = [
        "Twelve Sentences About Nothing",
        "The first sentence is short.",
        "Is the second one a question?",
        "Yes!",
        "Dr. Brown arrived at 3.45 p.m. on Friday.",
        "She said \"hello there.\"",
        "Then she left (quickly).",
        "Prices rose 2.5% in the U.K. last year.",
        "What happened next?!",
        "Nobody knows.",
        "A line without a final stop",
        "The end.",
    ]
    seg_raw = (
        seg_sentences[0] + "\n"
        + " ".join(seg_sentences[1:4]) + "\n"
        + "  " + " ".join(seg_sentences[4:7]) + "\n\n"
        + " ".join(seg_sentences[7:10]) + "\n"
        + seg_sentences[10] + "\n"
        + seg_sentences[11] + "\n"
    )
    seg_dir = os.path.join(HERE, "segmentation")
    os.makedirs(seg_dir, exist_ok=True)
    with open(os.path.join(seg_dir, "article900.txt"), "w", encoding="utf-8") as f:
        f.write(seg_raw)
    with open(os.path.join(seg_dir, "expected_ranges.tsv"), "w", encoding="utf-8") as f:
        for idx, ((lo, hi), text) in enumerate(zip(sentence_ranges(seg_raw, seg_sentences), seg_sentences), 1):
            f.write("%d\t%d\t%d\t%s\n" % (idx, lo, hi, text))


if __name__ == "__main__":
    main()
