#!/usr/bin/env python3
"""Regenerate crates/core/data/lemmas.tsv.

Source: the lemma and inflection lookup tables shipped in the `lemminflect`
wheel (MIT licensed), which are derived from the AGID morphological word
list. Usage:

    pip download lemminflect --no-deps -d /tmp/lm
    python3 scripts/build_lexicon.py /tmp/lm/lemminflect-*.whl > crates/core/data/lemmas.tsv
"""
import csv
import gzip
import io
import re
import sys
import zipfile

POS = {"noun": "n", "verb": "v", "aux": "v", "adj": "a", "adv": "r"}
PRIORITY = {"n": 0, "v": 1, "a": 2, "r": 3, "x": 4}
WORD = re.compile(r"^[a-z]+(?:'[a-z]+)?$")


def read_table(whl, name):
    raw = whl.read(f"lemminflect/resources/{name}")
    text = gzip.decompress(raw).decode("utf-8")
    return csv.reader(io.StringIO(text))


def main(wheel_path, stopwords_path):
    whl = zipfile.ZipFile(wheel_path)
    rows = {}

    def add(form, lemma, pos):
        if not WORD.match(form) or not WORD.match(lemma):
            return
        rows.setdefault((form, pos), lemma)

    for form, pos, lemmas in read_table(whl, "lemma_lu.csv.gz"):
        if pos in POS:
            add(form, lemmas.split("/")[0], POS[pos])
    for lemma, pos, *_forms in read_table(whl, "infl_lu.csv.gz"):
        if pos in POS:
            add(lemma, lemma, POS[pos])

    forms = {form for form, _ in rows}
    with open(stopwords_path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#") and word not in forms:
                rows[(word, "x")] = word

    out = sys.stdout
    out.write("# form\tlemma\tpos (n=noun v=verb a=adjective r=adverb x=other)\n")
    for (form, pos), lemma in sorted(rows.items(), key=lambda kv: (kv[0][0], PRIORITY[kv[0][1]])):
        out.write(f"{form}\t{lemma}\t{pos}\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else "crates/core/data/stopwords.txt")
