"""File helpers and JSON conversion."""

import json
import logging

from persist_check import config, utils
from persist_check.semantics import Lit, Store, step_thread


def test_checksum_tracks_content(tmp_path):
    path = tmp_path / "a.lit"
    path.write_text("locations x\n")
    first = utils.get_file_checksum(path)
    assert first == utils.get_file_checksum(path)
    path.write_text("locations y\n")
    assert utils.get_file_checksum(path) != first


def test_litmus_file_detection(tmp_path):
    assert utils.is_litmus_file(tmp_path / "mp.lit")
    assert utils.is_litmus_file(tmp_path / "MP.LIT")
    assert not utils.is_litmus_file(tmp_path / ".mp.lit")
    assert not utils.is_litmus_file(tmp_path / "mp.txt")


def test_find_litmus_files(tmp_path):
    (tmp_path / "b.lit").write_text("")
    (tmp_path / "a.lit").write_text("")
    (tmp_path / "notes.md").write_text("")
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "c.lit").write_text("")
    assert [p.name for p in utils.find_litmus_files(tmp_path)] == ["a.lit", "b.lit"]
    assert len(utils.find_litmus_files(tmp_path, recursive=True)) == 3


def test_corpus_path():
    assert utils.corpus_path("sb") == config.CORPUS_DIR / "sb.lit"
    assert utils.corpus_path("sb.lit") == utils.corpus_path("sb")
    assert utils.corpus_path("sb") in utils.corpus_files()


def test_state_to_dict_is_json_ready(init_xy):
    [state] = step_thread(init_xy, 1, Store("x", Lit(1)))
    data = utils.state_to_dict(state)
    json.dumps(data)
    assert data["memory"][-1] == {"loc": "x", "val": 1}
    assert data["threads"]["1"]["coh"] == {"x": 2, "y": 1}
    assert data["threads"]["2"]["registers"] == {"b": 0}


def test_format_state(init_xy):
    [state] = step_thread(init_xy, 1, Store("x", Lit(1)))
    assert utils.format_state(state) == "M=[x:=0 y:=0 x:=1] T1@init[a=0] T2@init[b=0]"


def test_trace_to_list(init_xy):
    trace = utils.trace_to_list([(None, init_xy)])
    assert trace[0]["thread"] is None
    assert utils.nvm_to_dict((("x", 1), ("y", 0))) == {"x": 1, "y": 0}


def test_setup_logging_adds_handlers_once(tmp_path):
    name = "persist_check.test_logging"
    log_file = tmp_path / "run.log"
    logger = utils.setup_logging(name, verbose=True, log_file=log_file)
    again = utils.setup_logging(name)
    assert logger is again
    assert len(logger.handlers) == 2
    assert logger.level == logging.INFO
    logger.info("hello")
    for handler in logger.handlers:
        handler.flush()
    assert "hello" in log_file.read_text()
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)
