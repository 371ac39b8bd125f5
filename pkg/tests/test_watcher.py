"""Litmus watcher: event filtering, change detection and rate limiting."""

import argparse
from pathlib import Path
from types import SimpleNamespace

import pytest

from persist_check import cli, watcher
from persist_check.errors import LitmusParseError
from persist_check.watcher import LitmusHandler


@pytest.fixture
def calls(monkeypatch):
    seen = []

    def fake_check(path, args=None):
        seen.append((Path(path), args))
        return cli.EXIT_PASS

    monkeypatch.setattr(cli, "check_file", fake_check)
    return seen


@pytest.fixture
def litmus(tmp_path):
    path = tmp_path / "t.lit"
    path.write_text("locations x\nthread 1:\n  init: skip ; goto fin\n")
    return path


def test_checks_new_file(calls, litmus):
    handler = LitmusHandler(min_interval=0)
    assert handler.process(litmus) == cli.EXIT_PASS
    assert calls[0][0] == litmus
    assert handler.results[str(litmus)] == cli.EXIT_PASS


def test_unchanged_file_is_skipped(calls, litmus):
    handler = LitmusHandler(min_interval=0)
    handler.process(litmus)
    assert handler.process(litmus) is None
    assert len(calls) == 1


def test_edited_file_is_rechecked(calls, litmus):
    handler = LitmusHandler(min_interval=0)
    handler.process(litmus)
    litmus.write_text(litmus.read_text() + "# edited\n")
    assert handler.process(litmus) == cli.EXIT_PASS
    assert len(calls) == 2


def test_rapid_edits_are_rate_limited(calls, litmus):
    handler = LitmusHandler(min_interval=3600)
    handler.process(litmus)
    litmus.write_text(litmus.read_text() + "# edited\n")
    assert handler.process(litmus) is None
    assert len(calls) == 1


def test_vanished_file(calls, tmp_path):
    assert LitmusHandler().process(tmp_path / "gone.lit") is None
    assert calls == []


def test_check_errors_are_contained(monkeypatch, litmus):
    def broken(path, args=None):
        raise LitmusParseError("bad", 1)

    monkeypatch.setattr(cli, "check_file", broken)
    assert LitmusHandler(min_interval=0).process(litmus) is None


def test_forwards_exploration_options(calls, litmus):
    args = argparse.Namespace(max_steps=7, strict_cas_read=True, format="json", verbose=True)
    LitmusHandler(args=args, min_interval=0).process(litmus)
    forwarded = calls[0][1]
    assert forwarded.max_steps == 7
    assert forwarded.strict_cas_read is True
    assert forwarded.format == "json"
    assert not hasattr(forwarded, "verbose")


def test_only_litmus_files_are_scheduled(monkeypatch, tmp_path):
    scheduled = []
    handler = LitmusHandler()
    monkeypatch.setattr(handler, "schedule", scheduled.append)

    handler.on_created(SimpleNamespace(is_directory=False, src_path=str(tmp_path / "a.lit")))
    handler.on_modified(SimpleNamespace(is_directory=False, src_path=str(tmp_path / "notes.txt")))
    handler.on_modified(SimpleNamespace(is_directory=True, src_path=str(tmp_path / "dir.lit")))
    handler.on_moved(
        SimpleNamespace(
            is_directory=False,
            src_path=str(tmp_path / ".a.lit.swp"),
            dest_path=str(tmp_path / "b.lit"),
        )
    )
    assert [p.name for p in scheduled] == ["a.lit", "b.lit"]


def test_schedule_coalesces_events(monkeypatch, litmus):
    handler = LitmusHandler(debounce=3600)
    started = []
    monkeypatch.setattr(
        "persist_check.watcher.threading.Thread",
        lambda target, daemon: SimpleNamespace(start=lambda: started.append(target)),
    )
    handler.schedule(litmus)
    handler.schedule(litmus)
    assert len(started) == 1
    assert handler.pending == {str(litmus)}


def test_watch_command_forwards_verbosity(monkeypatch, tmp_path):
    seen = {}

    def fake_run(path, recursive=False, args=None, verbose=False):
        seen.update(path=path, recursive=recursive, verbose=verbose)

    monkeypatch.setattr(watcher, "run", fake_run)
    with pytest.raises(SystemExit) as info:
        cli.main(["watch", str(tmp_path), "--recursive", "--verbose"])
    assert info.value.code == cli.EXIT_PASS
    assert seen == {"path": tmp_path, "recursive": True, "verbose": True}
