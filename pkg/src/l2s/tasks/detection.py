"""Sequential detection: does a sequence contain a rare high-valued element?

Labels are positive integers 1..k; action ``a`` stands for label ``a + 1``.
"""

from __future__ import annotations

from ..dataio import DEFAULT_BITS, Sentence, TemplateSpec, sentence_features
from ..errors import ConfigurationError


def run_detection(session, examples: Sentence, false_negative_loss: float, templates=None,
                  bits: int = DEFAULT_BITS, output: list | None = None) -> int:
    """Predict every element and keep the running maximum.

    Missing the true maximum costs ``false_negative_loss``; overshooting
    costs 1. When ``output`` is given the maximum prediction is appended.
    """
    if templates is None:
        templates = TemplateSpec()
    feats = sentence_features(examples, templates, bits)
    max_label = 1
    for lab in examples.gold_labels:
        max_label = max(max_label, lab + 1)
    max_prediction = 1
    for i, fv in enumerate(feats):
        a = session.predict(fv, examples.gold_labels[i], tag=i + 1)
        max_prediction = max(max_prediction, a + 1)
    if max_label > max_prediction:
        session.declare_loss(false_negative_loss)
    elif max_label < max_prediction:
        session.declare_loss(1.0)
    else:
        session.declare_loss(0.0)
    if output is not None:
        output.append(max_prediction)
    return max_prediction


class DetectionTask:
    # loss is only known once the whole sequence is seen
    history_independent = False

    def __init__(self, num_actions: int, false_negative_loss: float = 10.0,
                 templates: TemplateSpec | None = None, bits: int = DEFAULT_BITS):
        if false_negative_loss <= 0:
            raise ConfigurationError("false_negative_loss must be positive")
        self.num_actions = num_actions
        self.false_negative_loss = false_negative_loss
        self.templates = templates or TemplateSpec()
        self.bits = bits

    def run(self, session, sent: Sentence) -> int:
        return run_detection(session, sent, self.false_negative_loss, self.templates, self.bits)
