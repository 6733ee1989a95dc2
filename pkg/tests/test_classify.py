import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from factgpt.classify import (
    ClassifyConfig,
    ResolvedPair,
    UnparseableResponse,
    UnresolvedPair,
    classify_batch,
    classify_pair,
    parse_label,
    resolve_pairs,
)
from factgpt.gateway import MockProvider, ProviderError
from factgpt.records import EntailmentLabel, PairCandidate

FIXTURES = Path(__file__).parent / "fixtures"


def load_parser_cases():
    return json.loads((FIXTURES / "parser_cases.json").read_text())


def test_parser_fixture_corpus_has_30_cases():
    assert len(load_parser_cases()) == 30


@pytest.mark.parametrize("case", load_parser_cases(), ids=lambda c: repr(c["raw"])[:40])
def test_parse_label_fixture_corpus(case):
    if case["label"] is None:
        with pytest.raises(UnparseableResponse):
            parse_label(case["raw"])
    else:
        label, ambiguous = parse_label(case["raw"])
        assert label.value == case["label"]
        assert ambiguous == case["ambiguous"]


def test_parse_label_spec_examples():
    assert parse_label("ENTAILMENT") == (EntailmentLabel.ENTAILMENT, False)
    assert parse_label("contradiction. It is not neutral.") == (EntailmentLabel.CONTRADICTION, True)
    with pytest.raises(UnparseableResponse):
        parse_label("The tweet supports the claim.")


@given(st.text(max_size=80))
def test_parse_label_total_over_strings(raw):
    lowered = raw.lower()
    try:
        label, _ = parse_label(raw)
    except UnparseableResponse:
        pass
    else:
        assert label.value.lower() in lowered


def test_classify_pair_with_sentinel(mock_provider):
    prediction = classify_pair(
        "pair-1", "tweet [[ENTAILMENT]]", "claim text", ClassifyConfig(model_id="mock-cls"), mock_provider
    )
    assert prediction.label is EntailmentLabel.ENTAILMENT
    assert prediction.raw_response == "ENTAILMENT"
    assert prediction.ambiguous is False
    assert prediction.model_id == "mock-cls"
    assert prediction.pair_id == "pair-1"


def test_classify_pair_deterministic(mock_provider):
    config = ClassifyConfig(model_id="mock-cls")
    a = classify_pair("pair-1", "some tweet", "some claim", config, mock_provider)
    b = classify_pair("pair-1", "some tweet", "some claim", config, mock_provider)
    assert a == b


class UnparseableProvider:
    def chat(self, messages, config):
        return "I cannot decide."


def test_unparseable_response_recorded_not_raised():
    prediction = classify_pair(
        "pair-1", "tweet", "claim", ClassifyConfig(model_id="m"), UnparseableProvider()
    )
    assert prediction.label is None
    assert prediction.raw_response == "I cannot decide."


def test_resolve_pairs(sample_posts, sample_claims):
    pair = PairCandidate("pr1", "p1", "c1", 0.5, 0.5, 0.5)
    resolved = resolve_pairs([pair], sample_posts, sample_claims)
    assert resolved[0].tweet_text == sample_posts[0].text
    assert resolved[0].claim_text == sample_claims[0].text
    with pytest.raises(UnresolvedPair):
        resolve_pairs([PairCandidate("pr2", "missing", "c1", 0, 0, 0)], sample_posts, sample_claims)


def _resolved(n):
    return [ResolvedPair(pair_id=f"pr{i}", tweet_text=f"tweet {i}", claim_text="claim") for i in range(n)]


def test_classify_batch_empty(mock_provider):
    predictions, failures = classify_batch([], ClassifyConfig(model_id="m"), mock_provider)
    assert predictions == [] and failures == []


def test_classify_batch_order_preserving(mock_provider):
    pairs = _resolved(10)
    predictions, failures = classify_batch(pairs, ClassifyConfig(model_id="m"), mock_provider)
    assert failures == []
    assert [p.pair_id for p in predictions] == [rp.pair_id for rp in pairs]


def test_classify_batch_rejects_duplicate_pair_ids(mock_provider):
    pairs = _resolved(2)
    pairs[1].pair_id = pairs[0].pair_id
    with pytest.raises(ValueError):
        classify_batch(pairs, ClassifyConfig(model_id="m"), mock_provider)


class CountingProvider:
    """Delegates to the mock but fails every request after the first `allow`."""

    def __init__(self, allow=None):
        self.calls = 0
        self.allow = allow
        self._inner = MockProvider()

    def chat(self, messages, config):
        self.calls += 1
        if self.allow is not None and self.calls > self.allow:
            raise ProviderError(503, "scripted failure")
        return self._inner.chat(messages, config)


def test_classify_batch_checkpoint_resume(tmp_path):
    checkpoint = tmp_path / "checkpoint.jsonl"
    pairs = _resolved(10)
    config = ClassifyConfig(model_id="m", parallelism=1)

    interrupted = CountingProvider(allow=5)
    predictions, failures = classify_batch(
        pairs, config, interrupted, checkpoint_path=str(checkpoint), checkpoint_every=1
    )
    assert len(predictions) == 5
    assert len(failures) == 5
    assert checkpoint.exists()

    resumed = CountingProvider()
    predictions, failures = classify_batch(
        pairs, config, resumed, checkpoint_path=str(checkpoint), checkpoint_every=1
    )
    assert failures == []
    assert [p.pair_id for p in predictions] == [rp.pair_id for rp in pairs]
    assert resumed.calls == 5  # only the unfinished pairs were re-queried


def test_classify_batch_best_effort_collects_failures():
    pairs = _resolved(4)
    provider = CountingProvider(allow=2)
    predictions, failures = classify_batch(pairs, ClassifyConfig(model_id="m", parallelism=1), provider)
    assert len(predictions) == 2
    assert {f.pair_id for f in failures} == {"pr2", "pr3"}


def test_classify_config_validation():
    with pytest.raises(ValueError):
        ClassifyConfig(model_id="m", temperature=-1)
    with pytest.raises(ValueError):
        ClassifyConfig(model_id="m", parallelism=0)


def test_classification_uses_temperature_zero_by_default(mock_provider):
    seen = {}

    class SpyProvider:
        def chat(self, messages, config):
            seen["temperature"] = config.temperature
            return "NEUTRAL"

    classify_pair("pr1", "tweet", "claim", ClassifyConfig(model_id="m"), SpyProvider())
    assert seen["temperature"] == 0.0
