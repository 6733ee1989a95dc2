import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factgpt.gateway import GatewayError, MockProvider, validate_finetune_jsonl
from factgpt.prompts import build_entailment_prompt
from factgpt.records import (
    LABEL_ORDER,
    Claim,
    EntailmentLabel,
    SyntheticExample,
    decode_records,
    encode_records,
)
from factgpt.synth import (
    GenerationFailed,
    SplitConfig,
    TooFewExamples,
    UnresolvedClaim,
    build_finetune_records,
    export_finetune_jsonl,
    generate_balanced_set,
    run_finetune_pipeline,
    split_sizes,
    split_train_validation,
)


def make_claims(n):
    return [Claim(id=f"c{i:03d}", text=f"False claim number {i} about health.") for i in range(n)]


def make_examples(counts, seed_text="tweet"):
    out = []
    i = 0
    for label, n in counts.items():
        for _ in range(n):
            out.append(SyntheticExample(f"c{i:04d}", label, f"{seed_text} {i}", "gen-model"))
            i += 1
    return out


# -- generation ---------------------------------------------------------------


def test_three_examples_per_claim(mock_provider):
    claims = make_claims(2)
    examples = generate_balanced_set(claims, mock_provider, "gen-model")
    assert len(examples) == 6
    per_label = Counter(e.target_label for e in examples)
    assert all(per_label[label] == 2 for label in LABEL_ORDER)
    assert all(e.generator_model == "gen-model" for e in examples)
    assert all(e.tweet_text for e in examples)


def test_generation_is_deterministic(mock_provider):
    claims = make_claims(3)
    a = generate_balanced_set(claims, mock_provider, "gen-model")
    b = generate_balanced_set(claims, MockProvider(), "gen-model")
    assert a == b


def test_generation_requires_claims(mock_provider):
    with pytest.raises(ValueError):
        generate_balanced_set([], mock_provider, "gen-model")


def test_generation_uses_temperature_one_by_default():
    seen = []

    class SpyProvider:
        def chat(self, messages, config):
            seen.append(config.temperature)
            return "a tweet"

    generate_balanced_set(make_claims(1), SpyProvider(), "gen-model")
    assert seen == [1.0, 1.0, 1.0]


class FlakyProvider:
    """Fails cells for one specific claim, succeeds otherwise."""

    def __init__(self, bad_user_text):
        self.bad = bad_user_text
        self._inner = MockProvider()

    def chat(self, messages, config):
        if messages.user == self.bad:
            raise GatewayError("scripted failure")
        return self._inner.chat(messages, config)


def test_failing_cells_omitted_with_warning(caplog):
    claims = make_claims(3)
    provider = FlakyProvider(claims[1].text)
    failures = []
    with caplog.at_level("WARNING"):
        examples = generate_balanced_set(claims, provider, "gen-model", failures=failures)
    assert len(examples) == 6  # 3 claims x 3 labels - 3 failed cells
    assert len(failures) == 3
    assert all(f.claim_id == claims[1].id for f in failures)
    assert any("balance" in record.message for record in caplog.records)


def test_all_cells_failing_raises():
    class DeadProvider:
        def chat(self, messages, config):
            raise GatewayError("down")

    with pytest.raises(GenerationFailed):
        generate_balanced_set(make_claims(1), DeadProvider(), "gen-model")


# -- splitting ----------------------------------------------------------------


def test_split_sizes_balanced_full_scale():
    counts = {label: 1225 for label in LABEL_ORDER}
    quotas = split_sizes(counts, 0.8)
    assert all(q == 980 for q in quotas.values())
    assert sum(quotas.values()) == 2940
    assert sum(counts.values()) - sum(quotas.values()) == 735
    assert sum(counts.values()) == 3675


def test_split_sizes_total_is_floor_of_fraction():
    counts = {
        EntailmentLabel.ENTAILMENT: 4,
        EntailmentLabel.NEUTRAL: 3,
        EntailmentLabel.CONTRADICTION: 3,
    }
    quotas = split_sizes(counts, 0.8)
    assert sum(quotas.values()) == 8  # floor(10 * 0.8), not sum of per-label floors (7)


def test_split_ten_examples_gives_eight_two():
    examples = make_examples(
        {EntailmentLabel.ENTAILMENT: 4, EntailmentLabel.NEUTRAL: 3, EntailmentLabel.CONTRADICTION: 3}
    )
    train, validation = split_train_validation(examples, SplitConfig(seed=1))
    assert len(train) == 8
    assert len(validation) == 2


def test_split_balanced_input_stays_balanced():
    examples = make_examples({label: 25 for label in LABEL_ORDER})
    train, validation = split_train_validation(examples, SplitConfig(seed=9))
    assert len(train) == 60 and len(validation) == 15
    assert all(Counter(e.target_label for e in train)[label] == 20 for label in LABEL_ORDER)
    assert all(Counter(e.target_label for e in validation)[label] == 5 for label in LABEL_ORDER)


def test_split_same_seed_identical_different_seed_same_sizes():
    examples = make_examples({label: 10 for label in LABEL_ORDER})
    first = split_train_validation(examples, SplitConfig(seed=42))
    second = split_train_validation(examples, SplitConfig(seed=42))
    assert first == second
    other = split_train_validation(examples, SplitConfig(seed=43))
    assert len(other[0]) == len(first[0]) and len(other[1]) == len(first[1])
    assert other != first  # astronomically unlikely to coincide


@settings(max_examples=40)
@given(
    st.lists(st.sampled_from(LABEL_ORDER), min_size=2, max_size=60),
    st.integers(0, 2**32),
    st.floats(0.1, 0.9),
)
def test_split_is_exact_partition(labels, seed, fraction):
    examples = [
        SyntheticExample(f"c{i}", label, f"t{i}", "m") for i, label in enumerate(labels)
    ]
    train, validation = split_train_validation(
        examples, SplitConfig(train_fraction=fraction, seed=seed)
    )
    assert len(train) == math.floor(len(examples) * fraction)
    assert len(train) + len(validation) == len(examples)
    key = lambda e: e.claim_id
    assert sorted(train + validation, key=key) == sorted(examples, key=key)
    assert not {e.claim_id for e in train} & {e.claim_id for e in validation}


def test_split_too_few_examples():
    with pytest.raises(TooFewExamples):
        split_train_validation(make_examples({EntailmentLabel.NEUTRAL: 1}), SplitConfig())


def test_split_config_validation():
    with pytest.raises(ValueError):
        SplitConfig(train_fraction=0.0)
    with pytest.raises(ValueError):
        SplitConfig(train_fraction=1.0)


# -- export ---------------------------------------------------------------


def test_export_builds_inference_time_prompt():
    claims = make_claims(1)
    example = SyntheticExample(claims[0].id, EntailmentLabel.ENTAILMENT, "a tweet", "gen")
    records = build_finetune_records([example], claims)
    prompt = build_entailment_prompt("a tweet", claims[0].text)
    assert records[0].system == prompt.system
    assert records[0].user == prompt.user
    assert records[0].assistant == "ENTAILMENT"


def test_export_record_count_and_order():
    claims = make_claims(4)
    examples = [
        SyntheticExample(c.id, label, f"tweet {c.id} {label.value}", "gen")
        for c in claims
        for label in LABEL_ORDER
    ]
    text = export_finetune_jsonl(examples, claims)
    lines = [line for line in text.split("\n") if line]
    assert len(lines) == len(examples)
    assert '"role": "assistant", "content": "ENTAILMENT"' in lines[0]


def test_export_passes_gateway_validation():
    claims = make_claims(2)
    examples = [
        SyntheticExample(c.id, label, f"tweet {c.id} {label.value}", "gen")
        for c in claims
        for label in LABEL_ORDER
    ]
    assert validate_finetune_jsonl(export_finetune_jsonl(examples, claims)) == []


def test_export_unresolved_claim():
    example = SyntheticExample("ghost", EntailmentLabel.NEUTRAL, "tweet", "gen")
    with pytest.raises(UnresolvedClaim):
        export_finetune_jsonl([example], make_claims(1))


# -- pipeline -------------------------------------------------------------


def test_pipeline_end_to_end_mock(tmp_path, mock_provider):
    claims = make_claims(5)
    job = run_finetune_pipeline(
        claims, mock_provider, "gen-model", "base-model", tmp_path / "run",
        split=SplitConfig(seed=11),
    )
    assert job.status == "queued"
    out = tmp_path / "run"
    synthetic, _ = decode_records((out / "synthetic.jsonl").read_text(), SyntheticExample)
    train, _ = decode_records((out / "train.jsonl").read_text(), SyntheticExample)
    validation, _ = decode_records((out / "validation.jsonl").read_text(), SyntheticExample)
    assert len(synthetic) == 15
    assert len(train) == 12
    assert len(validation) == 3
    assert (out / "finetune_validation.jsonl").exists()  # written, never submitted
    import json

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["counts"] == {
        "total": 15,
        "per_label": {"ENTAILMENT": 5, "NEUTRAL": 5, "CONTRADICTION": 5},
        "train": 12,
        "validation": 3,
    }
    assert manifest["seed"] == 11

    polled = mock_provider.poll_finetune(job.job_id)
    assert polled.status in ("queued", "running", "succeeded")


def test_pipeline_resumes_from_existing_artifacts(tmp_path):
    claims = make_claims(3)

    class CountingMock(MockProvider):
        def __init__(self):
            super().__init__()
            self.chat_calls = 0
            self.submissions = 0

        def chat(self, messages, config):
            self.chat_calls += 1
            return super().chat(messages, config)

        def submit_finetune(self, *args, **kwargs):
            self.submissions += 1
            return super().submit_finetune(*args, **kwargs)

    provider = CountingMock()
    run_finetune_pipeline(claims, provider, "gen", "base", tmp_path / "run")
    first_calls = provider.chat_calls
    assert first_calls == 9
    assert provider.submissions == 1

    run_finetune_pipeline(claims, provider, "gen", "base", tmp_path / "run")
    assert provider.chat_calls == first_calls  # generation skipped
    assert provider.submissions == 1  # submission skipped
