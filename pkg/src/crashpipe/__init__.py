"""Zero-shot traffic-accident analysis over grayscale frame sequences.

The pipeline predicts, per clip: the collision time (z-score peak
detection on frame differences), the impact point (weighted centroid of
accumulated dense optical flow), and the collision class (similarity
against prompt-ensemble embeddings), and ships the matching evaluation
metric and a deterministic synthetic clip generator.
"""

from .classify import (
    ClassCentroids,
    ClassificationResult,
    ClassPromptSet,
    EmbeddingBank,
    aggregate_image_embedding,
    build_class_centroids,
    classify,
    read_bank,
    select_peak_frames,
    write_bank,
)
from .flow import FlowField, FlowParams, estimate_flow, flow_magnitude
from .frames import Clip, ClipManifest, GrayFrame, load_clip, load_manifest, load_pgm
from .scoring import (
    Prediction,
    ScoreConfig,
    ScoreReport,
    evaluate,
    harmonic,
    spatial_score,
    temporal_score,
)
from .spatial import ImpactPoint, MagnitudeMap, SpatialConfig, localize_impact
from .synth import GroundTruth, SceneSpec, generate_clip, generate_suite, suite_specs
from .taxonomy import CLASS_ORDER
from .temporal import DetectorConfig, TemporalResult, locate_accident

__version__ = "0.1.0"
