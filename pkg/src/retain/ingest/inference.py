"""Affiliation and demographic inference.

Affiliation comes from the email's registrable domain; free-mail domains map
to "unknown". Demographic inference goes through a plugin interface so the
test suite never touches a third-party API: the built-in plugin is a
deterministic lookup table, and a remote plugin is an operator opt-in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

# Free-mail providers whose domains say nothing about affiliation.
# Operator-extensible via config; this is only the starter set.
DEFAULT_PUBLIC_DOMAINS = frozenset(
    {
        "gmail.com",
        "googlemail.com",
        "outlook.com",
        "hotmail.com",
        "yahoo.com",
        "qq.com",
        "proton.me",
        "protonmail.com",
    }
)

# Snapshot of multi-label public suffixes we are likely to meet in OSS
# email domains. The registrable domain is one label left of the longest
# matching suffix. Not the full PSL; single-label TLDs need no entry.
_MULTI_SUFFIXES = {
    "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk", "net.uk",
    "com.au", "net.au", "org.au", "edu.au", "gov.au",
    "co.jp", "ne.jp", "or.jp", "ac.jp", "go.jp",
    "com.br", "net.br", "org.br", "gov.br",
    "co.in", "net.in", "org.in", "gen.in", "ac.in",
    "com.cn", "net.cn", "org.cn", "gov.cn", "edu.cn",
    "co.kr", "or.kr", "ac.kr", "go.kr",
    "co.nz", "net.nz", "org.nz", "ac.nz",
    "co.za", "org.za", "ac.za",
    "com.mx", "org.mx",
    "com.tw", "org.tw", "edu.tw",
    "com.sg", "edu.sg",
    "co.il", "org.il", "ac.il",
}


@dataclass
class WarningRecord:
    """Non-fatal ingestion problem; ingestion never halts on one bad field."""

    code: str
    detail: str
    retryable: bool = False


def registrable_domain(domain: str) -> str:
    """Collapse a host to its registrable part: a.b.corp.co.uk -> corp.co.uk."""
    labels = domain.lower().strip(".").split(".")
    if len(labels) <= 2:
        return ".".join(labels)
    for take in (3, 2):  # longest suffix match first
        if len(labels) > take and ".".join(labels[-take:]) in _MULTI_SUFFIXES:
            return ".".join(labels[-(take + 1):])
    return ".".join(labels[-2:])


def infer_affiliation(
    email: str,
    public_domains: frozenset[str] | set[str] = DEFAULT_PUBLIC_DOMAINS,
    warnings: list[WarningRecord] | None = None,
) -> str:
    """Email domain -> affiliation; free-mail and malformed input -> "unknown"."""
    parts = email.split("@")
    if len(parts) != 2 or not parts[0] or not parts[1]:
        if warnings is not None:
            warnings.append(WarningRecord("malformed_email", f"cannot parse {email!r}"))
        return "unknown"
    domain = registrable_domain(parts[1])
    if not domain or domain in {d.lower() for d in public_domains}:
        return "unknown"
    return domain


@dataclass(frozen=True)
class InferenceResult:
    gender: str
    region: str
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0,1]")


class InferencePlugin(Protocol):
    """Two-step name inference: region first, then gender given region.

    A step returns (value, confidence), or None when it has no prediction
    at all. Implementations must be safe to call from multiple workers and
    raise PluginTransportError on network-class failures.
    """

    def infer_region(
        self, full_name: str, location_hint: str | None
    ) -> tuple[str, float] | None:
        ...

    def infer_gender(self, full_name: str, region: str) -> tuple[str, float] | None:
        ...


class PluginTransportError(RuntimeError):
    """Transient plugin failure; the caller records it and moves on."""


@dataclass
class TableInferencePlugin:
    """Deterministic lookup-table plugin, the default for tests and demos.

    table maps lowercased full name -> (region, region_conf, gender, gender_conf).
    """

    table: dict[str, tuple[str, float, str, float]] = field(default_factory=dict)

    def infer_region(
        self, full_name: str, location_hint: str | None
    ) -> tuple[str, float] | None:
        row = self.table.get(full_name.lower())
        if row is None:
            return None
        region, region_conf, _, _ = row
        if location_hint and location_hint.lower() == region.lower():
            region_conf = min(1.0, region_conf + 0.02)
        return (region, region_conf)

    def infer_gender(self, full_name: str, region: str) -> tuple[str, float] | None:
        row = self.table.get(full_name.lower())
        if row is None:
            return None
        _, _, gender, gender_conf = row
        return (gender, gender_conf)


# Small built-in demo table; real deployments supply their own plugin.
BUILTIN_NAME_TABLE = {
    "ada lovelace": ("europe", 0.97, "female", 0.96),
    "grace hopper": ("north_america", 0.95, "female", 0.97),
    "linus torvalds": ("europe", 0.96, "male", 0.98),
    "margaret hamilton": ("north_america", 0.93, "female", 0.95),
    "dennis ritchie": ("north_america", 0.94, "male", 0.96),
}


def infer_demographics(
    full_name: str,
    location_hint: str | None,
    plugin: InferencePlugin,
    threshold: float,
    warnings: list[WarningRecord] | None = None,
) -> InferenceResult | None:
    """Run the two-step pipeline; keep the result only if every step clears
    ``threshold`` (predictions below it are discarded, >= passes)."""
    try:
        region_step = plugin.infer_region(full_name, location_hint)
        if region_step is None:
            return None
        region, region_conf = region_step
        gender_step = plugin.infer_gender(full_name, region)
        if gender_step is None:
            return None
        gender, gender_conf = gender_step
    except PluginTransportError as exc:
        if warnings is not None:
            warnings.append(
                WarningRecord("inference_transport", str(exc), retryable=True)
            )
        return None
    confidence = min(region_conf, gender_conf)
    if confidence < threshold:
        return None
    return InferenceResult(gender=gender, region=region, confidence=confidence)
