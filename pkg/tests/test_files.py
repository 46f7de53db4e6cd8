import json

import pytest

from checkgen import parse_template
from checkgen.files import (
    FormatError,
    checklist_from_dict,
    checklist_to_dict,
    load_checklist,
    read_jsonl,
    read_sentences,
    save_checklist,
    write_atomic,
)
from checkgen.fixtures import DATA_FILES, data_path, load_json, sa_checklist


class TestChecklistJson:
    def test_round_trip(self, tmp_path):
        cl = sa_checklist()
        path = tmp_path / "cl.json"
        save_checklist(cl, path)
        assert load_checklist(path) == cl
        assert json.loads(path.read_text(encoding="utf-8")) == checklist_to_dict(cl)

    def test_keys_exactly_as_documented(self):
        doc = checklist_to_dict(sa_checklist())
        assert set(doc) == {"language", "capabilities"}
        assert set(doc["capabilities"][0]) == {"name", "templates", "lexicon"}

    def test_error_names_offending_template(self):
        doc = {"language": "en", "capabilities": [{"name": "c", "templates": ["ok", "{BAD"], "lexicon": {}}]}
        with pytest.raises(FormatError, match=r"template #1 '\{BAD'"):
            checklist_from_dict(doc)

    def test_missing_lexicon_entry(self):
        doc = {"language": "en", "capabilities": [{"name": "c", "templates": ["{X}"], "lexicon": {}}]}
        with pytest.raises(FormatError, match="X"):
            checklist_from_dict(doc)
        assert checklist_from_dict(doc, validate=False).capabilities[0].templates == (parse_template("{X}"),)

    def test_not_an_object(self):
        with pytest.raises(FormatError):
            checklist_from_dict([])

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{", encoding="utf-8")
        with pytest.raises(FormatError):
            load_checklist(p)

    def test_unicode_kept_verbatim(self, tmp_path):
        doc = {"language": "hi", "capabilities": [{"name": "c", "templates": ["यह {K} है"], "lexicon": {"K": ["अच्छा"]}}]}
        path = tmp_path / "hi.json"
        save_checklist(checklist_from_dict(doc), path)
        assert "अच्छा" in path.read_text(encoding="utf-8")


class TestPlainFiles:
    def test_sentences_skip_blank_lines(self, tmp_path):
        p = tmp_path / "s.txt"
        p.write_text("a b\n\n  \nc\n", encoding="utf-8")
        assert read_sentences(p) == ["a b", "c"]

    def test_jsonl(self, tmp_path):
        p = tmp_path / "r.jsonl"
        p.write_text('{"a": 1}\n\n{"a": 2}\n', encoding="utf-8")
        assert read_jsonl(p) == [{"a": 1}, {"a": 2}]
        p.write_text('{"a": 1}\nnope\n', encoding="utf-8")
        with pytest.raises(FormatError, match=":2:"):
            read_jsonl(p)


class TestAtomicWrite:
    def test_creates_parents(self, tmp_path):
        target = tmp_path / "x" / "y" / "out.txt"
        write_atomic(target, "hi\n")
        assert target.read_text(encoding="utf-8") == "hi\n"

    def test_failure_leaves_old_file_and_no_temp(self, tmp_path, monkeypatch):
        target = tmp_path / "out.txt"
        write_atomic(target, "old\n")

        def boom(*args, **kwargs):
            raise OSError("disk full")

        monkeypatch.setattr("checkgen.files.os.replace", boom)
        with pytest.raises(OSError):
            write_atomic(target, "new\n")
        assert target.read_text(encoding="utf-8") == "old\n"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


class TestPackagedData:
    @pytest.mark.parametrize("name", DATA_FILES)
    def test_data_files_parse(self, name):
        assert data_path(name).is_file()
        assert load_json(name)

    def test_checklists_validate(self):
        for name in DATA_FILES:
            if name.endswith("_checklist.json"):
                checklist_from_dict(load_json(name))
