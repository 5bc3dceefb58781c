"""Storage module - artifact codecs and the run directory"""
from app.storage.artifact_store import ArtifactStore, decode_field, encode_field, field_from_csv, field_to_csv

__all__ = ["ArtifactStore", "decode_field", "encode_field", "field_from_csv", "field_to_csv"]
