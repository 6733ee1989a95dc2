#!/usr/bin/env python3
"""Run the whole pipeline offline at desk scale with the mock provider.

Ingests a small claim set, generates the balanced synthetic training data,
runs the fine-tune pipeline to completion, pairs posts against claims,
classifies, aggregates a vote fixture, and renders the evaluation tables.
Everything lands under --out-dir; rerunning with the same directory resumes
finished stages.
"""

import argparse
import json
import sys
from pathlib import Path

from factgpt import cli
from factgpt.records import EntailmentLabel, PairCandidate, Post, Vote, VoteSet, read_jsonl, write_jsonl

CLAIMS = [
    "Vaccininated people emit Bluetooth signals.",
    "Drinking hot water cures the virus.",
    "5G towers spread the infection at night.",
    "The vaccine rewrites your DNA permanently.",
    "Garlic necklaces block airborne transmission.",
]

POSTS = [
    "got my shot and now my phone pairs with me, wild times",
    "aunt says hot water flushed the virus right out of her",
    "they turned the 5g towers up again last night, no coincidence",
    "my cousin swears his DNA test changed after the jab",
    "wearing garlic to the office, typhoid mary can't touch me",
    "lovely weather for a walk today, no conspiracies here",
    "bluetooth vaccine chips? my dad believes it now",
    "boiling water twice a day keeps the doctor away they claim",
    "5g installs near schools should worry every parent apparently",
    "garlic sales are through the roof in my town",
]

VOTE_PATTERNS = [
    ["ENTAILMENT", "ENTAILMENT", "NEUTRAL"],
    ["NEUTRAL", "NEUTRAL"],
    ["CONTRADICTION", "CONTRADICTION", "ENTAILMENT"],
    ["ENTAILMENT", "NEUTRAL"],
    ["NEUTRAL"],
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="mock_run", help="artifact directory")
    args = parser.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    raw_claims = out / "raw_claims.jsonl"
    raw_claims.write_text("".join(json.dumps({"text": t}) + "\n" for t in CLAIMS), encoding="utf-8")
    write_jsonl(out / "posts.jsonl", [Post(id=f"p{i:02d}", text=t) for i, t in enumerate(POSTS)])

    store = out / "store"
    steps = [
        ["ingest-claims", "--claims", raw_claims, "--store", store],
        ["generate", "--claims", store / "claims.jsonl", "--model", "mock-generator",
         "--out", out / "synthetic.jsonl"],
        ["finetune", "--claims", store / "claims.jsonl", "--generator-model", "mock-generator",
         "--base-model", "mock-base", "--out-dir", out / "finetune", "--poll-interval", "0.05"],
        ["pair", "--posts", out / "posts.jsonl", "--claims", store / "claims.jsonl",
         "--top-k", "1", "--out", out / "pairs.jsonl"],
    ]
    for step in steps:
        code = cli.main([str(s) for s in step])
        if code != 0:
            return code

    job = json.loads((out / "finetune" / "job.json").read_text())
    print(f"fine-tuned model: {job['fine_tuned_model_id']}")

    pairs, _ = read_jsonl(out / "pairs.jsonl", PairCandidate)
    votes = [
        VoteSet(
            pair_id=pair.pair_id,
            votes=[
                Vote(annotator_id=f"a{j}", label=EntailmentLabel(tok))
                for j, tok in enumerate(VOTE_PATTERNS[i % len(VOTE_PATTERNS)])
            ],
        )
        for i, pair in enumerate(pairs)
    ]
    write_jsonl(out / "votes.jsonl", votes)

    steps = [
        ["classify", "--pairs", out / "pairs.jsonl", "--posts", out / "posts.jsonl",
         "--claims", store / "claims.jsonl", "--model", job["fine_tuned_model_id"],
         "--out", out / "predictions.jsonl"],
        ["aggregate", "--votes", out / "votes.jsonl", "--out", out / "gold.jsonl",
         "--distribution", out / "distribution.md"],
        ["evaluate", "--gold", out / "gold.jsonl", "--pred", out / "predictions.jsonl",
         "--out", out / "report.md", "--json-out", out / "report.json",
         "--model", job["fine_tuned_model_id"], "--train-set", "mock-generator",
         "--store", store],
        ["report", "--reports", out / "report.json", "--out", out / "tables.md"],
    ]
    for step in steps:
        code = cli.main([str(s) for s in step])
        if code != 0:
            return code

    print(f"\nartifacts under {out}/ -- report:\n")
    print((out / "report.md").read_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
