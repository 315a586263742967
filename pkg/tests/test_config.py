import datetime as dt
from pathlib import Path

import pytest

from earlysignal.config import ConfigError, config_from_dict, default_config_text, load_config


def test_defaults_load():
    cfg = load_config()
    assert cfg.methods == ("ks", "ad") and cfg.alphas == (0.05, 0.10)
    assert (cfg.scan.w_min, cfg.scan.w_max) == (50, 70)
    assert cfg.filter_policy.follower_cap == 2000
    assert cfg.cutoff == dt.date(2020, 1, 21)
    assert [k.name for k in cfg.keyword_sets] == ["coronavirus", "dry_cough", "pneumonia"]
    assert "[detect]" in default_config_text()


def test_relative_paths_follow_the_config_file(tmp_path):
    (tmp_path / "a.jsonl").write_text("", encoding="utf-8")
    cfg_file = tmp_path / "sub" / "c.toml"
    cfg_file.parent.mkdir()
    cfg_file.write_text('[inputs]\narchives = ["../a.jsonl"]\n[output]\ndir = "out"\n', encoding="utf-8")
    cfg = load_config(cfg_file)
    assert cfg.archives[0].resolve() == (tmp_path / "a.jsonl").resolve()
    assert cfg.out_dir == tmp_path / "sub" / "out"


def test_single_method_string_accepted():
    cfg = config_from_dict({"detect": {"methods": "ad"}})
    assert cfg.methods == ("ad",) and cfg.scan.method == "ad"


def test_own_keyword_sets_replace_defaults(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text('[keywords.fever]\nen = ["fever"]\nit = "febbre"\n', encoding="utf-8")
    cfg = load_config(f)
    assert [k.name for k in cfg.keyword_sets] == ["fever"]
    assert cfg.keyword_sets[0].words["it"] == ("febbre",)


@pytest.mark.parametrize("data", [
    {"detect": {"alphas": [0.0]}},
    {"detect": {"alphas": []}},
    {"detect": {"methods": []}},
    {"detect": {"w_min": 80, "w_max": 70}},
    {"detect": {"scan_by": "planet"}},
    {"season": {"anchor_start": "13-01"}},
    {"study": {"languages": ["pt"]}},
    {"filters": {"follower_cap": -1}},
    {"keywords": {"x": {"region_window": "weekly", "en": ["x"]}}},
    {"inputs": {"archives": ["/nonexistent/archive.jsonl"]}},
])
def test_invalid_settings(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_digest_ignores_output_location():
    a = config_from_dict({"output": {"dir": "x"}})
    b = config_from_dict({"output": {"dir": "y"}})
    c = config_from_dict({"detect": {"alphas": [0.01]}})
    assert a.digest() == b.digest() != c.digest()


def test_overrides_layer_on_top(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text("[detect]\nalphas = [0.2]\n", encoding="utf-8")
    assert load_config(f).alphas == (0.2,)
    assert load_config(f, {"detect": {"alphas": [0.01]}}).alphas == (0.01,)
    assert load_config(Path(f)).min_users == 10
