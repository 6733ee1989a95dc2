import pytest

from factgpt.gateway import MockProvider
from factgpt.records import Claim, EntailmentLabel, Post, Vote, VoteSet

E = EntailmentLabel.ENTAILMENT
N = EntailmentLabel.NEUTRAL
C = EntailmentLabel.CONTRADICTION


@pytest.fixture
def mock_provider():
    return MockProvider()


@pytest.fixture
def sample_claims():
    return [
        Claim(id="c1", text="Vaccininated people emit Bluetooth signals.", source="factcheck.example"),
        Claim(id="c2", text="Drinking hot water cures the virus.", debunked_on="2020-04-01"),
        Claim(id="c3", text="5G towers spread the infection at night."),
    ]


@pytest.fixture
def sample_posts():
    return [
        Post(id="p1", text="omg my dad got vaccinated yesterday and I just connected him to bluetooth"),
        Post(id="p2", text="my aunt swears hot water stopped her infection, stay safe"),
        Post(id="p3", text="lovely weather for a walk today"),
    ]


def make_votes(pair_id, labels):
    return VoteSet(
        pair_id=pair_id,
        votes=[Vote(annotator_id=f"a{i}", label=label) for i, label in enumerate(labels)],
    )
