"""Shared data model: crash records, finding categories, and risk severity.

Everything here is an immutable value object; the rest of the package
passes these around freely, including across worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum


class FieldState(str, Enum):
    """De-identification state of a single stored field value."""

    DELETED = "deleted"
    FULLY_MASKED = "fully_masked"
    PARTIALLY_ANONYMIZED = "partially_anonymized"
    UNTOUCHED = "untouched"


class RiskSeverity(IntEnum):
    """Risk level of a finding; numeric values give the LOW < MEDIUM < HIGH order."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "RiskSeverity":
        try:
            return cls[label.upper()]
        except KeyError:
            raise ValueError(f"unknown severity: {label!r}") from None


class FindingCategory(str, Enum):
    """Closed set of things the detectors can report."""

    SQL_INJECTION = "sql_injection"
    DIRECTORY_TRAVERSAL = "directory_traversal"
    LOCAL_FILE_INCLUSION = "local_file_inclusion"
    CROSS_SITE_SCRIPTING = "cross_site_scripting"
    PHISHING = "phishing"
    PLATFORM_STAT = "platform_stat"
    PROTOCOL_STAT = "protocol_stat"
    IP_ADDRESS = "ip_address"
    EMAIL_ADDRESS = "email_address"
    LOCATION = "location"
    CREDENTIAL = "credential"
    SESSION_ID = "session_id"
    TOKEN_ID = "token_id"
    PHONE_NUMBER = "phone_number"
    CONTACT_REQUEST = "contact_request"

    @classmethod
    def parse(cls, value: str) -> "FindingCategory":
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown finding category: {value!r}") from None


class SourceField(str, Enum):
    """Which crash-report field a finding or mask event came from."""

    URL = "url"
    DESCRIPTION = "description"
    IP = "ip"
    PLATFORM = "platform"


# Population-statistics and attack categories endanger third parties or only
# describe the user pool; categories that identify or authenticate the
# reporting user rank higher.
_SEVERITY_MAP = {
    FindingCategory.SQL_INJECTION: RiskSeverity.LOW,
    FindingCategory.DIRECTORY_TRAVERSAL: RiskSeverity.LOW,
    FindingCategory.LOCAL_FILE_INCLUSION: RiskSeverity.LOW,
    FindingCategory.CROSS_SITE_SCRIPTING: RiskSeverity.LOW,
    FindingCategory.PHISHING: RiskSeverity.LOW,
    FindingCategory.PLATFORM_STAT: RiskSeverity.LOW,
    FindingCategory.PROTOCOL_STAT: RiskSeverity.LOW,
    FindingCategory.IP_ADDRESS: RiskSeverity.MEDIUM,
    FindingCategory.EMAIL_ADDRESS: RiskSeverity.MEDIUM,
    FindingCategory.LOCATION: RiskSeverity.MEDIUM,
    FindingCategory.CREDENTIAL: RiskSeverity.HIGH,
    FindingCategory.SESSION_ID: RiskSeverity.HIGH,
    FindingCategory.TOKEN_ID: RiskSeverity.HIGH,
    FindingCategory.PHONE_NUMBER: RiskSeverity.HIGH,
    FindingCategory.CONTACT_REQUEST: RiskSeverity.HIGH,
}


def classify_severity(category: FindingCategory) -> RiskSeverity:
    """Map a finding category to its fixed risk severity. Total and deterministic."""
    return _SEVERITY_MAP[category]


@dataclass(frozen=True)
class CrashReport:
    """One crash record.

    Absent values are empty strings (or 0 for the timestamp), never None;
    the upstream store deletes field content but keeps the column.
    """

    id: str
    url: str = ""
    description: str = ""
    platform: str = ""
    ip: str = ""
    timestamp: int = 0  # epoch seconds, 0 when unknown


@dataclass(frozen=True)
class Finding:
    """One detected sensitive item or attack pattern.

    `start`/`end` are character offsets into the source field's raw text
    (half-open), and `excerpt` is exactly that slice.
    """

    report_id: str
    category: FindingCategory
    severity: RiskSeverity
    field: SourceField
    start: int
    end: int
    excerpt: str

    @classmethod
    def at(
        cls,
        report_id: str,
        category: FindingCategory,
        field: SourceField,
        text: str,
        start: int,
        end: int,
    ) -> "Finding":
        """Build a finding over text[start:end]; severity follows the category."""
        if not (0 <= start < end <= len(text)):
            raise ValueError(f"span [{start}, {end}) out of range for field of length {len(text)}")
        return cls(
            report_id=report_id,
            category=category,
            severity=classify_severity(category),
            field=field,
            start=start,
            end=end,
            excerpt=text[start:end],
        )

    def sort_key(self) -> tuple:
        return (_FIELD_ORDER[self.field], self.start, _CATEGORY_ORDER[self.category], self.end)


_FIELD_ORDER = {field: i for i, field in enumerate(SourceField)}
_CATEGORY_ORDER = {category: i for i, category in enumerate(FindingCategory)}
