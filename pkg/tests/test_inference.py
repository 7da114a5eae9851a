from __future__ import annotations

import pytest

from retain.ingest.inference import (
    BUILTIN_NAME_TABLE,
    DEFAULT_PUBLIC_DOMAINS,
    PluginTransportError,
    TableInferencePlugin,
    WarningRecord,
    infer_affiliation,
    infer_demographics,
    registrable_domain,
)

# (domain, registrable) pairs checked against the public-suffix list rules
PUBLIC_SUFFIX_REFERENCE = [
    ("google.com", "google.com"),
    ("mail.google.com", "google.com"),
    ("sub.corp.co.uk", "corp.co.uk"),
    ("a.b.corp.co.uk", "corp.co.uk"),
    ("example.com.au", "example.com.au"),
    ("deep.example.com.au", "example.com.au"),
    ("foo.ac.jp", "foo.ac.jp"),
    ("bar.foo.ac.jp", "foo.ac.jp"),
    ("plain.org", "plain.org"),
]


def test_corporate_domain_is_affiliation():
    assert infer_affiliation("a@google.com") == "google.com"


def test_freemail_is_unknown():
    assert infer_affiliation("a@gmail.com") == "unknown"


@pytest.mark.parametrize("domain,expected", PUBLIC_SUFFIX_REFERENCE)
def test_registrable_domain_against_reference(domain, expected):
    assert registrable_domain(domain) == expected


def test_multi_label_suffix_email():
    assert infer_affiliation("a@sub.corp.co.uk") == "corp.co.uk"


def test_case_insensitive_and_pure():
    assert infer_affiliation("A@GOOGLE.COM") == "google.com"
    assert infer_affiliation("a@GMail.com") == "unknown"
    assert infer_affiliation("a@google.com") == infer_affiliation("a@google.com")


def test_malformed_email_warns_and_continues():
    warnings: list[WarningRecord] = []
    assert infer_affiliation("not-an-email", DEFAULT_PUBLIC_DOMAINS, warnings) == "unknown"
    assert infer_affiliation("two@@ats.com", DEFAULT_PUBLIC_DOMAINS, warnings) == "unknown"
    assert len(warnings) == 2
    assert all(w.code == "malformed_email" for w in warnings)


# ---- demographics ----


def plugin_with(confidence: float) -> TableInferencePlugin:
    return TableInferencePlugin(
        table={"ada lovelace": ("europe", confidence, "female", confidence)}
    )


def test_table_hit_above_threshold_returned():
    result = infer_demographics("Ada Lovelace", None, plugin_with(0.95), threshold=0.9)
    assert result is not None
    assert result.region == "europe"
    assert result.gender == "female"
    assert result.confidence == 0.95


def test_confidence_below_threshold_absent():
    assert infer_demographics("Ada Lovelace", None, plugin_with(0.85), threshold=0.9) is None


def test_threshold_boundary_is_inclusive():
    # "below 90%" is filtered: 0.89 absent, exactly 0.90 kept
    assert infer_demographics("Ada Lovelace", None, plugin_with(0.89), threshold=0.9) is None
    assert infer_demographics("Ada Lovelace", None, plugin_with(0.90), threshold=0.9) is not None


def test_threshold_zero_returns_exactly_table_hits():
    plugin = TableInferencePlugin(table=dict(BUILTIN_NAME_TABLE))
    names = list(BUILTIN_NAME_TABLE) + ["nobody special", "someone else"]
    results = [infer_demographics(n, None, plugin, threshold=0.0) for n in names]
    hits = sum(1 for r in results if r is not None)
    expected = sum(1 for n in names if n.lower() in plugin.table)
    assert hits == expected == len(BUILTIN_NAME_TABLE)


def test_min_of_step_confidences_gates():
    plugin = TableInferencePlugin(
        table={"ada lovelace": ("europe", 0.99, "female", 0.80)}
    )
    assert infer_demographics("Ada Lovelace", None, plugin, threshold=0.9) is None


class FailingPlugin:
    def infer_region(self, full_name, location_hint):
        raise PluginTransportError("connection reset")

    def infer_gender(self, full_name, region):
        raise PluginTransportError("connection reset")


def test_transport_failure_recorded_not_raised():
    warnings: list[WarningRecord] = []
    result = infer_demographics("Ada Lovelace", None, FailingPlugin(), 0.9, warnings)
    assert result is None
    assert len(warnings) == 1
    assert warnings[0].retryable
