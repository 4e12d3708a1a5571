#!/usr/bin/env python3
"""Regenerates the bundled fixture dumps and embedding file.

Every section body is built so that its cleaned whitespace-token count is
known by construction; markup is only ever inserted in ways that contribute a
fixed number of tokens (links -> 1, templates/refs/comments/tables -> 0).

Outputs (next to this script):
  mini-enwiki.xml       article dump used by the dataset tests
  three-pages.xml       3-page dump (article, redirect, talk page)
  siteinfo-only.xml     header with no pages
  embeddings.jsonl      identity embeddings for every record of mini-enwiki
  expected.json         which articles/sections qualify, computed here
"""
import hashlib
import json
import math
import os
import random
import re
import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape

HERE = os.path.dirname(os.path.abspath(__file__))
STOPLIST = {"references", "external links", "see also", "notes", "further reading",
            "bibliography", "sources", "footnotes", "citations", "gallery"}

WORDS = """river stone light water field market ancient modern early later city
village mountain northern southern local national record season player team
match court net point serve rally score season league club member founded
built church tower wall garden harvest grain flower leaf branch root soil
weather winter summer autumn spring storm wind cloud coast island harbour
ship sail trade route merchant silver copper iron bronze timber craft
workshop school student teacher lesson method practice style form pattern
colour sound rhythm melody voice song dance stage theatre audience festival
king queen court council law rule order charter treaty border region county
valley lake forest meadow bird insect hive honey nectar queen worker drone
planet ring moon orbit surface storm layer core pressure heat cold ice
glacier valley flow melt snow peak ridge slope reef coral fish shell tide
current wave depth shallow deep island lagoon lamp lens beacon keeper signal
tea leaf brew cup pot estate picker olive press oil jar cellar vine press
paper ink type letter page book print copy edition falcon hawk glove hood
lure flight prey hunter game board piece move opening rank file check
""".split()

HEADINGS = """History Rules Equipment Organization Techniques Variants Culture
Geography Climate Ecology Economy Production Design Construction Legacy
Reception Etymology Anatomy Behaviour Distribution Composition Origins
Players Tournaments Preparation Training Structure Uses Architecture Symbolism
""".split()


def plain_tokens(rng, n):
    return [rng.choice(WORDS) for _ in range(n)]


def decorate(rng, tokens, heavy=False):
    """Turn a token list into wikitext whose cleaned form is those tokens."""
    out = []
    for i, tok in enumerate(tokens):
        r = rng.random()
        if r < 0.06:
            out.append(f"[[{tok.capitalize()} (topic)|{tok}]]")
        elif r < 0.10:
            out.append(f"[[{tok}]]")
        elif r < 0.13:
            out.append(f"'''{tok}'''")
        elif r < 0.16:
            out.append(f"''{tok}''")
        elif r < 0.18:
            out.append(f"{tok}<ref>{rng.choice(WORDS)} {rng.choice(WORDS)} 2004</ref>")
        else:
            out.append(tok)
        if rng.random() < (0.25 if heavy else 0.03):
            out.append("{{cite web |url=http://example.org/" + tok +
                       " |title=" + " ".join(plain_tokens(rng, 6)) + " |date=2011}}")
        if rng.random() < 0.02:
            out.append("<!-- " + " ".join(plain_tokens(rng, 4)) + " -->")
        if i and i % 60 == 0:
            out.append("\n\n")
    return " ".join(out).replace(" \n\n ", "\n\n")


def section(rng, heading, n, heavy=False, subsections=0):
    """Return (wikitext, cleaned token count)."""
    if subsections:
        sizes = [n // (subsections + 1)] * subsections
        sizes.append(n - sum(sizes))
        parts = [decorate(rng, plain_tokens(rng, sizes[0]), heavy)]
        for k, size in enumerate(sizes[1:]):
            parts.append(f"=== {heading} part {k + 1} ===")
            parts.append(decorate(rng, plain_tokens(rng, size), heavy))
        body = "\n".join(parts)
    else:
        body = decorate(rng, plain_tokens(rng, n), heavy)
    if rng.random() < 0.3:
        body += "\n{| class=\"wikitable\"\n|-\n! " + rng.choice(WORDS) + "\n|-\n| 12 || 14\n|}"
    return f"== {heading} ==\n{body}\n", n


def article(rng, title, sections, lead=40):
    text = "{{Short description|" + title + "}}\n'''" + title + "''' " + \
        decorate(rng, plain_tokens(rng, lead)) + "\n"
    meta = []
    for spec in sections:
        heading, n = spec[0], spec[1]
        opts = spec[2] if len(spec) > 2 else {}
        wt, count = section(rng, heading, n, **opts)
        text += wt
        meta.append((heading, count))
    text += "[[Category:" + title + "]]\n"
    return text, meta


def page_xml(page_id, title, ns, text, redirect=None):
    red = f'    <redirect title="{escape(redirect)}" />\n' if redirect else ""
    return (f"  <page>\n    <title>{escape(title)}</title>\n    <ns>{ns}</ns>\n"
            f"    <id>{page_id}</id>\n{red}    <revision>\n      <id>{page_id * 10}</id>\n"
            f"      <model>wikitext</model>\n      <format>text/x-wiki</format>\n"
            f"      <text bytes=\"{len(text.encode())}\" xml:space=\"preserve\">{escape(text)}</text>\n"
            f"    </revision>\n  </page>\n")


HEADER = """<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10" xml:lang="en">
  <siteinfo>
    <sitename>Wikipedia</sitename>
    <dbname>enwiki</dbname>
    <base>https://en.wikipedia.org/wiki/Main_Page</base>
    <generator>MediaWiki 1.42.0-wmf.20</generator>
    <case>first-letter</case>
  </siteinfo>
"""
FOOTER = "</mediawiki>\n"


def qualifies(heading, n):
    return heading.lower() not in STOPLIST and 128 <= n <= 512


def tokenize(text):
    out = []
    for word in text.lower().split():
        cur = ""
        for ch in word:
            if ch.isalnum():
                cur += ch
            else:
                if cur:
                    out.append(cur)
                    cur = ""
                out.append(ch)
        if cur:
            out.append(cur)
    return out


def unit_vector(token, dim=8):
    digest = hashlib.sha256(token.encode()).digest()
    v = [(b - 127.5) / 127.5 for b in digest[:dim]]
    norm = math.sqrt(sum(x * x for x in v))
    return [round(x / norm, 12) for x in v]


def main():
    rng = random.Random(2024)
    pages = []  # (id, title, ns, text, redirect, meta)
    pid = 100

    def add(title, sections, ns=0, lead=40):
        nonlocal pid
        pid += 1
        text, meta = article(rng, title, sections, lead)
        pages.append((pid, title, ns, text, None, meta))

    add("Badminton", [("History", 90), ("Rules", 200), ("Equipment", 250),
                      ("Organization", 180), ("References", 300), ("External links", 20)])
    generic = ["Cricket", "Volcano", "Jazz", "Chess", "Honey bee", "Saturn",
               "Baroque music", "Printing press", "Coral reef", "Glacier",
               "Olive oil", "Lighthouse", "Tea", "Falconry"]
    for title in generic:
        heads = rng.sample(HEADINGS, 5)
        secs = []
        n_good = rng.choice([3, 3, 4, 5])
        for k, h in enumerate(heads):
            if k < n_good:
                secs.append((h, rng.randint(140, 480)))
            else:
                secs.append((h, rng.randint(20, 100)))
        secs.append(("See also", 12))
        add(title, secs)
    add("Tide", [("Physics", 128), ("Prediction", 512), ("Tidal power", 300)])
    add("Comet", [("Nucleus", 127), ("Coma", 128), ("Tail", 512), ("Orbit", 513)])
    add("Kite", [("Design", 210), ("Flying", 260), ("Safety", 50)])
    add("Harbor", [("Layout", 220), ("Trade", 240), ("References", 300), ("See also", 200)])
    add("Cathedral", [("Architecture", 400, {"heavy": True}), ("Liturgy", 150),
                      ("Music", 330, {"heavy": True})])
    add("River", [("Hydrology", 450, {"subsections": 2}), ("Ecology", 300, {"subsections": 1}),
                  ("Navigation", 200)])
    # excluded pages that would otherwise qualify
    pid += 1
    pages.append((pid, "Shuttlecock game", 0, "#REDIRECT [[Badminton]]\n", "Badminton", []))
    pid += 1
    text, _ = article(rng, "Mercury (disambiguation)", [("Planet", 200), ("Element", 200), ("Deity", 200)])
    pages.append((pid, "Mercury (disambiguation)", 0, text, None, []))
    pid += 1
    text, _ = article(rng, "Wikipedia:About", [("Purpose", 200), ("Policies", 200), ("Editors", 200)])
    pages.append((pid, "Wikipedia:About", 4, text, None, []))
    pid += 1
    pages.append((pid, "Template:Sport", 10, "{{navbox|name=Sport}}\n", None, []))

    xml = HEADER + "".join(page_xml(p[0], p[1], p[2], p[3], p[4]) for p in pages) + FOOTER
    with open(os.path.join(HERE, "mini-enwiki.xml"), "w") as f:
        f.write(xml)

    accepted = []
    embeddings = []
    record_id = 0
    for page_id, title, ns, _, redirect, meta in pages:
        if ns != 0 or redirect or title.endswith("(disambiguation)"):
            continue
        good = [(idx, h, n) for idx, (h, n) in enumerate(meta) if qualifies(h, n)]
        if len(good) < 3:
            continue
        accepted.append({"title": title, "page_id": page_id,
                         "sections": [{"heading": h, "index": idx, "tokens": n} for idx, h, n in good]})
        for _, h, _ in good:
            toks = tokenize(h)
            vecs = [unit_vector(t) for t in toks]
            for side in ("candidate", "reference"):
                embeddings.append({"record_id": record_id, "side": side, "tokens": toks, "vectors": vecs})
            record_id += 1
    with open(os.path.join(HERE, "embeddings.jsonl"), "w") as f:
        for e in embeddings:
            f.write(json.dumps(e) + "\n")
    with open(os.path.join(HERE, "expected.json"), "w") as f:
        json.dump({"accepted": accepted, "record_count": record_id}, f, indent=2)
        f.write("\n")

    three = HEADER + page_xml(1, "Alpha", 0, "== A ==\nbody text\n") + \
        page_xml(2, "Alpha redirect", 0, "#REDIRECT [[Alpha]]", "Alpha") + \
        page_xml(3, "Talk:Alpha", 1, "discussion") + FOOTER
    with open(os.path.join(HERE, "three-pages.xml"), "w") as f:
        f.write(three)
    with open(os.path.join(HERE, "siteinfo-only.xml"), "w") as f:
        f.write(HEADER + FOOTER)

    # independent page counts
    ns = {"mw": "http://www.mediawiki.org/xml/export-0.10/"}
    for name in ("mini-enwiki.xml", "three-pages.xml", "siteinfo-only.xml"):
        root = ET.parse(os.path.join(HERE, name)).getroot()
        print(name, len(root.findall("mw:page", ns)), "pages")
    print("accepted", [a["title"] for a in accepted], "records", record_id)


if __name__ == "__main__":
    main()
