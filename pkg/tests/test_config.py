import json
import threading

import pytest

from ontoqe.cache import JsonDiskCache, sha256_key
from ontoqe.config import DEFAULTS, Settings, read_config_file
from ontoqe.errors import ConfigError


def test_defaults(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    s = Settings(env={})
    assert (s["bm25.k1"], s["bm25.b"], s["pipeline.depth"]) == (0.9, 0.4, 1000)
    assert s.source("bm25.k1") == "default"


def test_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"llm": {"model": "file-model", "api_base": "http://file"}, "jobs": 2}))
    s = Settings(cfg, env={"LLM_MODEL": "env-model"}, overrides={"llm.model": "flag-model", "jobs": None})
    assert s["llm.model"] == "flag-model" and s.source("llm.model") == "flag"
    assert s["llm.api_base"] == "http://file" and s.source("llm.api_base").startswith("file:")
    assert s["jobs"] == 2
    s = Settings(cfg, env={"LLM_MODEL": "env-model"})
    assert s["llm.model"] == "env-model" and s.source("llm.model") == "env:LLM_MODEL"


def test_toml_file(tmp_path):
    cfg = tmp_path / "bmq.toml"
    cfg.write_text("[pipeline]\nmode = \"no_llm\"\nalpha = 40\n")
    assert read_config_file(cfg) == {"pipeline.mode": "no_llm", "pipeline.alpha": 40}


@pytest.mark.parametrize("content, suffix", [("[bm25\n", ".toml"), ("{", ".json"), ('{"nope": 1}', ".json")])
def test_bad_config(tmp_path, content, suffix):
    cfg = tmp_path / f"c{suffix}"
    cfg.write_text(content)
    with pytest.raises(ConfigError):
        Settings(cfg, env={})


def test_unknown_override():
    with pytest.raises(ConfigError):
        Settings(env={}, overrides={"bm25.k9": 1})


def test_show_lists_every_key_and_masks_secrets(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    text = Settings(env={"LLM_API_KEY": "sk-live"}).show()
    assert len(text.splitlines()) == len(DEFAULTS)
    assert "sk-live" not in text


def test_cache_round_trip(tmp_path):
    cache = JsonDiskCache(tmp_path)
    key = sha256_key("a", 1)
    assert cache.get(key) is None and key not in cache
    cache.put(key, {"x": "β"})
    assert cache.get(key) == {"x": "β"} and key in cache
    assert cache.path_for(key).parent.name == key[:2]
    assert list(cache.keys()) == [key]


def test_cache_concurrent_writers(tmp_path):
    cache = JsonDiskCache(tmp_path)
    keys = [sha256_key(i) for i in range(40)]

    def write(offset):
        for k in keys:
            cache.put(k, {"writer": offset, "pad": "x" * 2000})

    threads = [threading.Thread(target=write, args=(i,)) for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for k in keys:
        assert cache.get(k)["pad"] == "x" * 2000
    assert not [p for p in tmp_path.rglob("*") if p.is_file() and not p.name.endswith(".json")]


def test_key_is_order_sensitive_for_parts():
    assert sha256_key("a", "b") != sha256_key("b", "a")
    assert sha256_key({"x": 1, "y": 2}) == sha256_key({"y": 2, "x": 1})
