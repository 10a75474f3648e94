"""Speaker-count diarization for home-monitoring audio.

Pipeline: decode WAV -> per-frame VAD probability streams -> normalized-entropy
fusion per 250 ms window -> subsegment embeddings -> AHC-initialized
Bayesian-HMM resegmentation -> short-speaker pruning -> count metrics.
"""

__version__ = "0.1.0"

from .audio_io import (  # noqa: F401
    AudioClip,
    FeatureKind,
    FeatureMatrix,
    FrameGrid,
    compute_features,
    decode_wav,
    frame_signal,
)
from .clustering import (  # noqa: F401
    AhcConfig,
    DiarizationResult,
    VbHmmConfig,
    ahc_init,
    diarize_segments,
    prune_short_speakers,
    vb_hmm_reseg,
)
from .config import PipelineConfig, load_config, save_config  # noqa: F401
from .corpus import CorpusManifest, SynthSpec, synth_corpus, validate_corpus  # noqa: F401
from .embeddings import (  # noqa: F401
    SegmentEmbedding,
    embed_builtin,
    load_embeddings,
    subsegment,
)
from .fusion import (  # noqa: F401
    EntropyProfile,
    SmoothingConfig,
    WindowDecision,
    binary_entropy,
    fuse,
    normalize_profiles,
    window_entropies,
)
from .metrics import (  # noqa: F401
    CountReport,
    breakdown_by_true_count,
    correct_count_rate,
    diarization_fairness_rate,
    evaluate,
    mean_abs_count_error,
)
from .pipeline import analyze_clip, analyze_file, stream_clip  # noqa: F401
from .segments import LabeledSegmentation, Segment, from_rttm, to_rttm, write_rttm  # noqa: F401
from .stream import DecisionEvent, SpeechBuffer, TriggerSignal, replay  # noqa: F401
from .vad_bank import (  # noqa: F401
    FrameProbStream,
    VadBank,
    load_prob_stream,
    vad_energy,
    vad_periodicity,
    vad_spectral,
    write_prob_stream,
)
