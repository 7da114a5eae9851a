from __future__ import annotations

import pytest

from retain.store import ProjectStore, StoreError, UnknownProjectError
from retain.survival.models import fit_model, model_to_dict
from retain.survival.records import SurvivalRecord

from conftest import DAY, T0, make_event


def seeded_store(tmp_path, events=None):
    store = ProjectStore(tmp_path / "data")
    if events is None:
        events = [
            make_event("e1", "alice", T0, email="alice@corp.com"),
            make_event("e2", "bob", T0 + DAY, email="bob@gmail.com"),
        ]
    store.append_events("widgets", events)
    return store


def test_append_events_deduplicates(tmp_path):
    store = seeded_store(tmp_path)
    added = store.append_events(
        "widgets",
        [
            make_event("e1", "alice", T0, email="alice@corp.com"),  # dup
            make_event("e3", "carol", T0 + 2 * DAY),
        ],
    )
    assert added == 1
    assert [e.event_id for e in store.load_events("widgets")] == ["e1", "e2", "e3"]


def test_unknown_project_raises(tmp_path):
    store = ProjectStore(tmp_path / "data")
    with pytest.raises(UnknownProjectError):
        store.load_events("nope")


def test_contributors_carry_inferred_affiliation(tmp_path):
    store = seeded_store(tmp_path)
    contributors = {c.contributor_id: c for c in store.load_contributors("widgets")}
    assert contributors["alice"].affiliation == "corp.com"
    assert contributors["bob"].affiliation == "unknown"  # freemail


def test_demographic_overrides_survive_reload(tmp_path):
    store = seeded_store(tmp_path)
    store.set_demographic(
        "widgets", "alice",
        {"gender": "female", "region": "europe", "confidence": 1.0, "source": "self_reported"},
    )
    fresh = ProjectStore(store.data_dir)
    alice = next(
        c for c in fresh.load_contributors("widgets") if c.contributor_id == "alice"
    )
    assert alice.demographics.gender == "female"
    assert alice.demographics.source == "self_reported"


def test_bots_excluded_by_default_configurable(tmp_path):
    events = [
        make_event("e1", "alice", T0),
        make_event("e2", "dependabot[bot]", T0 + 1),
    ]
    store = seeded_store(tmp_path, events)
    assert [e.contributor_key for e in store.load_events("widgets")] == ["alice"]

    inclusive = ProjectStore(store.data_dir, exclude_bots=False)
    assert len(inclusive.load_events("widgets")) == 2


def test_model_round_trip(tmp_path):
    store = seeded_store(tmp_path)
    records = [
        SurvivalRecord(f"c{i}", 5 + i, i % 2, (float(i), float(i % 3))) for i in range(14)
    ]
    model = fit_model(records, "cox", split_seed=3)
    store.save_model("widgets", model)
    assert store.list_models("widgets") == [model.model_id]
    loaded = store.load_model("widgets", model.model_id)
    assert model_to_dict(loaded) == model_to_dict(model)
    assert store.find_model(model.model_id) is not None
    with pytest.raises(StoreError):
        store.load_model("widgets", "missing")


def test_merge_hints_apply(tmp_path):
    events = [
        make_event("e1", "ada", T0),
        make_event("e2", "ada-laptop", T0 + DAY),
    ]
    store = seeded_store(tmp_path, events)
    assert len(store.load_contributors("widgets")) == 2
    store.set_merge_hints("widgets", [("ada-laptop", "ada")])
    assert len(store.load_contributors("widgets")) == 1


def test_invalid_project_name_rejected(tmp_path):
    store = ProjectStore(tmp_path / "data")
    with pytest.raises(StoreError):
        store.append_events("../escape", [])
