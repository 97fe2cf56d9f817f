from .base import (
    BackendError,
    BackendRequest,
    BackendResponse,
    BackendSuite,
    MediaPayload,
    UnmatchedRequestError,
    embed_texts,
)
from .fixtures import (
    EchoMaskTracker,
    HashingEmbedder,
    Scenario,
    ScenarioDetector,
    ScenarioMaskTracker,
    ScriptedTextBackend,
    fixture_embedder,
    fixture_llm,
    fixture_vlm,
    load_scenario,
)
from .remote import EndpointConfig, RemoteBackend, TransportError, remote_backend
from .replay import RecordingBackend, ReplayBackend, TranscriptStore
from .suite import BackendConfigError, build_suite, load_suite_file, parse_backend_spec

__all__ = [
    "BackendConfigError", "BackendError", "BackendRequest", "BackendResponse", "BackendSuite",
    "EchoMaskTracker", "EndpointConfig", "HashingEmbedder", "MediaPayload", "RecordingBackend",
    "RemoteBackend", "ReplayBackend", "Scenario", "ScenarioDetector", "ScenarioMaskTracker",
    "ScriptedTextBackend", "TranscriptStore", "TransportError", "UnmatchedRequestError",
    "build_suite", "embed_texts", "fixture_embedder", "fixture_llm", "fixture_vlm",
    "load_scenario", "load_suite_file", "parse_backend_spec", "remote_backend",
]
