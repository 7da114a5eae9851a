from retain.ingest.jsonl import load_events_jsonl, write_events_jsonl
from retain.ingest.inference import (
    DEFAULT_PUBLIC_DOMAINS,
    InferenceResult,
    TableInferencePlugin,
    infer_affiliation,
    infer_demographics,
)
from retain.ingest.synthetic import SyntheticSpec, GroundTruth, generate_synthetic_community
from retain.ingest.remote import IngestSource, RemoteClient, fetch_remote_events

__all__ = [
    "load_events_jsonl",
    "write_events_jsonl",
    "DEFAULT_PUBLIC_DOMAINS",
    "InferenceResult",
    "TableInferencePlugin",
    "infer_affiliation",
    "infer_demographics",
    "SyntheticSpec",
    "GroundTruth",
    "generate_synthetic_community",
    "IngestSource",
    "RemoteClient",
    "fetch_remote_events",
]
