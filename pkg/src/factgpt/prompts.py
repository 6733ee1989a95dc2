"""Prompt construction for tweet generation and entailment classification.

Both templates are pinned byte-for-byte by golden files under tests/golden;
any edit here must update those fixtures deliberately.
"""

from dataclasses import dataclass

from .records import EntailmentLabel


class EmptyPromptInput(ValueError):
    """A prompt builder was given empty/whitespace-only text."""


@dataclass(frozen=True)
class PromptMessages:
    """A system + user message pair, sent to providers unmodified."""

    system: str
    user: str


# Per-label consequence clauses. The same wording appears in the generation
# system prompt and in the classification label definitions, keeping
# generation and classification semantics aligned.
LABEL_FRAMES = {
    EntailmentLabel.ENTAILMENT: "then CLAIM is also true.",
    EntailmentLabel.NEUTRAL: "CLAIM cannot be said to be true or false.",
    EntailmentLabel.CONTRADICTION: "then CLAIM is false.",
}

GENERATION_SYSTEM_TEMPLATE = (
    "Generate TWEET so that if TWEET is true, {frame}"
    " Be brief. Do not start a sentence with 'Just'."
)

ENTAILMENT_SYSTEM = (
    "Which of the following best describes the relationship between TWEET and CLAIM?\n"
    "You must choose from ENTAILMENT, NEUTRAL, or CONTRADICTION.\n"
    "\n"
    "If TWEET is true:\n"
    "(ENTAILMENT) then CLAIM is also true.\n"
    "(NEUTRAL) CLAIM cannot be said to be true or false.\n"
    "(CONTRADICTION) then CLAIM is false."
)


def generation_system_text(target_label):
    return GENERATION_SYSTEM_TEMPLATE.format(frame=LABEL_FRAMES[target_label])


def build_generation_prompt(claim_text, target_label):
    """Prompt asking for a tweet that stands in target_label relation to the claim.

    The user message is the claim text verbatim.
    """
    if not claim_text or not claim_text.strip():
        raise EmptyPromptInput("claim text must be non-empty")
    return PromptMessages(system=generation_system_text(target_label), user=claim_text)


def build_entailment_prompt(tweet_text, claim_text):
    """Classification prompt over a (tweet, claim) pair.

    Plain-text templating: the texts are inserted verbatim, no escaping.
    """
    if not tweet_text or not tweet_text.strip():
        raise EmptyPromptInput("tweet text must be non-empty")
    if not claim_text or not claim_text.strip():
        raise EmptyPromptInput("claim text must be non-empty")
    return PromptMessages(
        system=ENTAILMENT_SYSTEM,
        user=f"TWEET: {tweet_text}\nCLAIM: {claim_text}",
    )
