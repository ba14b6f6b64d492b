import os

import pytest

from app.core import store


def test_json_round_trip(tmp_path):
    path = tmp_path / "nested" / "out.json"
    store.write_json(path, {"b": 1, "a": [1.5, None]})
    assert store.read_json(path) == {"a": [1.5, None], "b": 1}


def test_jsonl_round_trip(tmp_path):
    records = [{"epoch": 0, "loss": 1.0}, {"epoch": 1, "loss": 0.5}]
    store.write_jsonl(tmp_path / "log.jsonl", records)
    assert store.read_jsonl(tmp_path / "log.jsonl") == records


def test_failed_write_leaves_nothing_behind(tmp_path):
    target = tmp_path / "result.json"
    with pytest.raises(RuntimeError):
        with store.atomic_writer(target) as f:
            f.write("partial")
            raise RuntimeError("boom")
    assert not target.exists()
    assert os.listdir(tmp_path) == []


def test_failed_write_keeps_previous_version(tmp_path):
    target = tmp_path / "result.json"
    store.write_text(target, "old\n")
    with pytest.raises(RuntimeError):
        with store.atomic_writer(target) as f:
            f.write("new")
            raise RuntimeError("boom")
    assert target.read_text() == "old\n"


def test_binary_write(tmp_path):
    store.write_bytes(tmp_path / "blob.bin", b"\x00\x01\xff")
    assert (tmp_path / "blob.bin").read_bytes() == b"\x00\x01\xff"
