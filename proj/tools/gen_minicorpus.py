#!/usr/bin/env python3
"""Generate the bundled four-topic mini corpus and its word-vector file.

Output (under data/minicorpus by default):
  docs/<topic>/<topic>_NN.txt  short synthetic documents
  vectors.txt                  "<vocab> <dim>" header then one word vector per line
  topics.tsv                   word -> topic ("generic" for shared filler)
  queries.tsv, qrels.tsv       scripted queries and binary relevance
  shift.plan                   batch-update plan whose batch drifts to new topics

Everything is derived from a fixed seed, so re-running reproduces the files.
"""

import argparse
import itertools
import pathlib

import numpy as np

TOPICS = {
    "network": """router packet latency bandwidth protocol switch firewall ethernet
        gateway subnet routing throughput topology congestion datagram socket
        wireless backbone fiber handshake multicast broadcast ping traceroute
        dns tcp udp vlan modem jitter""",
    "finance": """stock bond equity dividend portfolio investor broker hedge
        futures option inflation interest mortgage credit loan banking
        treasury yield liquidity asset bullish bearish ledger audit revenue
        profit capital valuation merger currency""",
    "medicine": """patient doctor clinic surgery vaccine diagnosis therapy
        symptom fever infection antibiotic nurse hospital prescription dosage
        tumor cardiology insulin diabetes allergy virus immune pathology
        biopsy anesthesia pharmacy syndrome chronic ward vitamin""",
    "sports": """football soccer tennis goal referee stadium tournament league
        coach athlete sprint marathon trophy penalty striker goalkeeper
        championship playoff inning pitcher batting wicket racket dribble
        tackle medal olympic jersey season halftime""",
}

# Filler shared by every topic. Each document draws only a couple, so no
# filler word reaches the document counts of the main topic words.
GENERIC = """report today people year week city group official local number
    plan new recent public meeting result change place part statement
    morning evening monday friday summer winter north south east west
    family friend house street office letter story picture window garden""".split()

STOP_FILLER = "the of and to in is for on with as by at from".split()

SYLLABLES = ["ka", "lo", "mi", "ren", "tu", "vor", "sel", "dan", "pi", "qua",
             "zel", "bo", "nix", "tar", "ul", "fen", "gri", "hov", "jes", "wy"]


def words(text):
    return text.split()


def distractors(count, taken):
    out = []
    for a, b, c in itertools.product(SYLLABLES, repeat=3):
        w = a + b + c
        if w not in taken:
            out.append(w)
        if len(out) == count:
            break
    return out


def unit(v):
    return v / np.linalg.norm(v)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path,
                    default=pathlib.Path(__file__).resolve().parent.parent / "data" / "minicorpus")
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--docs-per-topic", type=int, default=25)
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--vocab", type=int, default=500)
    ap.add_argument("--noise", type=float, default=0.115)
    ap.add_argument("--topic-overlap", type=float, default=0.0,
                    help="weight of a direction shared by all topic centroids")
    ap.add_argument("--generic-affinity", type=float, default=0.0,
                    help="weight of the shared direction in filler vectors")
    ap.add_argument("--batch", type=int, default=6)
    ap.add_argument("--base", default="network")
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    topic_words = {t: words(v) for t, v in TOPICS.items()}
    corpus_words = [w for ws in topic_words.values() for w in ws] + GENERIC
    assert len(set(corpus_words)) == len(corpus_words), "duplicate vocabulary"

    # Vectors: topic words scatter around their topic centroid; filler is isotropic.
    vectors = {}
    shared = unit(rng.standard_normal(args.dim))
    for t, ws in topic_words.items():
        centroid = unit(args.topic_overlap * shared + (1 - args.topic_overlap) * unit(rng.standard_normal(args.dim)))
        for w in ws:
            vectors[w] = unit(centroid + args.noise * rng.standard_normal(args.dim))
    for w in GENERIC:
        vectors[w] = unit(args.generic_affinity * shared + (1 - args.generic_affinity) * unit(rng.standard_normal(args.dim)))
    for w in distractors(args.vocab - len(vectors), set(vectors)):
        vectors[w] = unit(rng.standard_normal(args.dim))

    out = args.out
    docs_dir = out / "docs"
    for t, ws in topic_words.items():
        (docs_dir / t).mkdir(parents=True, exist_ok=True)
        # Zipf-like preference inside a topic so some words dominate.
        weights = 1.0 / np.arange(1, len(ws) + 1) ** 0.6
        weights /= weights.sum()
        for i in range(args.docs_per_topic):
            body = list(rng.choice(ws, size=24, p=weights))
            body += list(rng.choice(GENERIC, size=2, replace=False))
            body += list(rng.choice(STOP_FILLER, size=8))
            rng.shuffle(body)
            lines = [" ".join(body[j:j + 10]) for j in range(0, len(body), 10)]
            (docs_dir / t / f"{t}_{i + 1:02d}.txt").write_text(".\n".join(lines) + ".\n")

    with open(out / "vectors.txt", "w") as f:
        f.write(f"{len(vectors)} {args.dim}\n")
        for w, v in vectors.items():
            f.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")

    with open(out / "topics.tsv", "w") as f:
        for t, ws in topic_words.items():
            for w in ws:
                f.write(f"{w}\t{t}\n")
        for w in GENERIC:
            f.write(f"{w}\tgeneric\n")

    # Five queries per topic, two or three topic words each. A document is
    # relevant when it belongs to the topic and mentions a query word.
    with open(out / "queries.tsv", "w") as fq, open(out / "qrels.tsv", "w") as fr:
        qid = 0
        for t, ws in topic_words.items():
            for _ in range(5):
                qid += 1
                terms = list(rng.choice(ws[:15], size=int(rng.integers(2, 4)), replace=False))
                fq.write(f"q{qid:02d}\t{' '.join(terms)}\n")
                for path in sorted((docs_dir / t).iterdir()):
                    text = path.read_text().replace(".", " ").split()
                    rel = int(any(term in text for term in terms))
                    fr.write(f"q{qid:02d}\t{t}/{path.name}\t{rel}\n")

    base = args.base.split(",")
    plan = ["# The batch draws only from topics absent from the starting corpus."]
    plan += [f"base=docs/{t}" for t in base]
    plan += [f"pool=docs/{t}" for t in TOPICS if t not in base]
    plan += [f"batch=shift {args.batch}", "repetitions=10", "seed=7", "trim=none"]
    (out / "shift.plan").write_text("\n".join(plan) + "\n")


if __name__ == "__main__":
    main()
