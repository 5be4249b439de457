"""Multimodal (text + image) fake news detection for Malayalam.

Pipeline pieces: corpus ingestion, text cleaning + word embeddings,
VGG-16 image features, a dual-branch fusion classifier, training,
evaluation, an HTTP inference service, and a CLI tying them together.
"""

__version__ = "0.1.0"

FAKE = 0
NOT_FAKE = 1

LABEL_NAMES = {FAKE: "fake", NOT_FAKE: "not_fake"}
