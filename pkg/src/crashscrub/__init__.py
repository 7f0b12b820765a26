"""crashscrub: client-side sanitization and auditing of browser crash reports.

Masks keyword-anchored sensitive values out of crash-report URLs and user
descriptions before they leave the client, and audits report corpora for
leaked secrets and URL-borne attack payloads with a three-tier severity
taxonomy.
"""

from .audit import CorpusReader, CorpusStats, aggregate, emit_report, ingest, merge
from .detect import DEFAULT_DETECTORS, DetectorSet, classify_ip_field, run_all
from .gencorpus import CorpusSpec, GroundTruth, TruthLabel, generate, iter_generate
from .model import (
    CrashReport,
    FieldState,
    Finding,
    FindingCategory,
    RiskSeverity,
    SourceField,
    classify_severity,
)
from .sanitize import (
    MaskEvent,
    SanitizedReport,
    SanitizerConfig,
    mask_text,
    readability_check,
    sanitize_report,
    sanitize_url,
)
from .urltools import ParsedUrl, QueryPair, parse_url, percent_decode

__version__ = "0.1.0"

__all__ = [
    "CorpusReader",
    "CorpusSpec",
    "CorpusStats",
    "CrashReport",
    "DEFAULT_DETECTORS",
    "DetectorSet",
    "FieldState",
    "Finding",
    "FindingCategory",
    "GroundTruth",
    "MaskEvent",
    "ParsedUrl",
    "QueryPair",
    "RiskSeverity",
    "SanitizedReport",
    "SanitizerConfig",
    "SourceField",
    "TruthLabel",
    "aggregate",
    "classify_ip_field",
    "classify_severity",
    "emit_report",
    "generate",
    "ingest",
    "iter_generate",
    "mask_text",
    "merge",
    "parse_url",
    "percent_decode",
    "readability_check",
    "run_all",
    "sanitize_report",
    "sanitize_url",
]
