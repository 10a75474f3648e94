"""Bridge from pretrained neural VAD / speaker-embedding models to the msvad
wire formats (msvad-probs, msvad-embs)."""

__version__ = "0.1.0"

from .jobs import AdapterJob, run_embedding_job, run_vad_job  # noqa: F401
