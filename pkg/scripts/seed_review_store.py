#!/usr/bin/env python3
"""Seed a service store with pending review-queue pairs for the triage UI.

Creates claims, posts, scored pairs, and mock predictions so that
`factgpt serve --store <dir>` immediately shows a populated pending queue.
"""

import argparse
import sys

from factgpt.classify import ClassifyConfig, classify_pair
from factgpt.gateway import MockProvider
from factgpt.matcher import MatcherConfig, pair_candidates
from factgpt.records import Claim, Post, content_id
from factgpt.store import Store

CLAIM_TEXTS = [
    "Vaccininated people emit Bluetooth signals.",
    "Drinking hot water cures the virus.",
    "5G towers spread the infection at night.",
    "Garlic necklaces block airborne transmission.",
]

POST_TEMPLATES = [
    "my dad got the shot and now he pairs with bluetooth speakers, number {i}",
    "hot water cured my whole family, post {i}",
    "saw them installing 5g at midnight again, report {i}",
    "garlic necklace club member {i} checking in, zero sickness",
    "vaccines and bluetooth, what a mix, thread {i}",
    "boiled water is all you need folks, tip {i}",
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--store", default="store", help="store directory to seed")
    parser.add_argument("--pairs", type=int, default=12, help="pending pairs to create")
    args = parser.parse_args()

    store = Store(args.store)
    provider = MockProvider()
    claims = [Claim(id=content_id("c", t), text=t, source="seed.example") for t in CLAIM_TEXTS]
    store.upsert_claims(claims)

    posts = []
    for i in range(args.pairs):
        text = POST_TEMPLATES[i % len(POST_TEMPLATES)].format(i=i)
        post = Post(id=content_id("p", text), text=text)
        posts.append(post)
        store.add_post(post)

    pairs = pair_candidates(posts, claims, MatcherConfig(top_k=1))
    config = ClassifyConfig(model_id="mock-classifier")
    for pair in pairs:
        post = next(p for p in posts if p.id == pair.post_id)
        claim = next(c for c in claims if c.id == pair.claim_id)
        prediction = classify_pair(pair.pair_id, post.text, claim.text, config, provider)
        store.add_pair(pair, prediction)

    pending = [p for p in store.pairs if store.status_of(p) == "pending"]
    print(f"seeded {len(pending)} pending pairs into {store.root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
