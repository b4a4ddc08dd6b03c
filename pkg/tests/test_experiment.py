"""Experiment pipeline plumbing (full-scale runs live in the acceptance suite)."""

import pytest

from aeye.errors import ConfigError
from aeye.experiment import (
    EnrichmentConfig,
    FrequencyConfig,
    build_comparison_datasets,
    collect_corner_cases,
    corner_case_campaign_config,
    run_frequency_experiment,
)


def test_campaign_config_is_valid_and_headless():
    cfg = corner_case_campaign_config(seed=1, quality=0.4)
    cfg.validate()
    assert cfg.mode == "headless"
    assert cfg.degradation.quality == 0.4
    assert cfg.degradation.distance_noise_base == 0.0


def test_enrichment_config_validation():
    with pytest.raises(ConfigError):
        EnrichmentConfig(n_seeds=0).validate()
    with pytest.raises(ConfigError):
        EnrichmentConfig(n_cc_test=0).validate()
    with pytest.raises(ConfigError):
        EnrichmentConfig(holdout_fraction=1.5).validate()


def test_frequency_config_validation():
    with pytest.raises(ConfigError):
        FrequencyConfig(qualities=(0.5,)).validate()
    with pytest.raises(ConfigError):
        FrequencyConfig(qualities=(0.9, 0.3)).validate()
    with pytest.raises(ConfigError):
        FrequencyConfig(qualities=(0.1, 1.2)).validate()


def test_collect_corner_cases_returns_exactly_n():
    records = collect_corner_cases(seed=400, n_cc=2)
    assert len(records) == 2
    assert all(len(r.frames) == 30 for r in records)


def test_comparison_datasets_shapes_and_size_conservation():
    cfg = EnrichmentConfig(n_seeds=1, n_scenes=8, frames_per_scene=15,
                           n_cc_train=2, n_cc_test=1, epochs=1)
    train_sets, test_sets = build_comparison_datasets(cfg, seed_offset=0)
    base = train_sets["natural"]
    assert train_sets["cc_enriched"].n_frames == base.n_frames
    assert train_sets["pedestrian_enriched"].n_frames == base.n_frames
    assert test_sets["safety_critical"].n_frames == 30
    assert test_sets["natural"].n_frames > 0
    # corner-case scenes present by provenance
    cc_scene_ids = {s.scene_id for s in train_sets["cc_enriched"].scenes}
    assert len(cc_scene_ids - {s.scene_id for s in base.scenes}) == 2


def test_frequency_smoke_report_structure():
    rep = run_frequency_experiment(
        FrequencyConfig(qualities=(0.0, 1.0), n_seeds=1, max_km=0.5, base_seed=7))
    assert rep["experiment"] == "frequency"
    assert len(rep["rows"]) == 2
    assert len(rep["per_seed_increasing"]) == 1
    q0 = next(r for r in rep["rows"] if r["quality"] == 0.0)
    q1 = next(r for r in rep["rows"] if r["quality"] == 1.0)
    assert q0["n_cc"] > 0
    assert q1["n_cc"] == 0 and q1["mean_d_cc"] is None
