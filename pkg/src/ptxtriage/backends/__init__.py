"""Model-inference boundary: protocol, deterministic local backends, HTTP client."""

from .protocol import (
    ENCODING,
    MAP_MODELS,
    MODEL_IDS,
    SCALAR_MODELS,
    Backend,
    BackendUnavailable,
    MissingOracle,
    ModelUnknown,
    ProtocolError,
    decode_f32,
    encode_f32,
    infer_map,
    infer_scalar,
)
from .local import OracleBackend, OracleRecord, RecordingBackend, StubBackend, stub_lung_map
from .remote import RemoteBackend, serve_inference

__all__ = [
    "ENCODING",
    "MAP_MODELS",
    "MODEL_IDS",
    "SCALAR_MODELS",
    "Backend",
    "BackendUnavailable",
    "MissingOracle",
    "ModelUnknown",
    "OracleBackend",
    "OracleRecord",
    "ProtocolError",
    "RecordingBackend",
    "RemoteBackend",
    "StubBackend",
    "decode_f32",
    "encode_f32",
    "infer_map",
    "infer_scalar",
    "serve_inference",
    "stub_lung_map",
]
