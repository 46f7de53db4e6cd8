"""Reading and writing the on-disk formats."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Union

from .errors import CheckgenError
from .template import Capability, CheckList, Lexicon, parse_template, render_template

PathLike = Union[str, os.PathLike]


class FormatError(CheckgenError, ValueError):
    """A file does not follow the documented format."""


def checklist_to_dict(cl: CheckList) -> dict:
    return {
        "language": cl.language,
        "capabilities": [
            {
                "name": cap.name,
                "templates": [render_template(t) for t in cap.templates],
                "lexicon": cap.lexicon.to_dict(),
            }
            for cap in cl.capabilities
        ],
    }


def checklist_from_dict(doc: dict, *, validate: bool = True, strict: bool = True) -> CheckList:
    if not isinstance(doc, dict) or not isinstance(doc.get("capabilities"), list):
        raise FormatError("checklist must be an object with a 'capabilities' list")
    caps = []
    for ci, raw in enumerate(doc["capabilities"]):
        name = raw.get("name", f"capability_{ci}")
        templates = []
        for ti, text in enumerate(raw.get("templates", [])):
            try:
                templates.append(parse_template(text, strict=strict))
            except CheckgenError as exc:
                raise FormatError(
                    f"capability {name!r}, template #{ti} {text!r}: {exc}"
                ) from exc
        try:
            lexicon = Lexicon(raw.get("lexicon", {}))
        except CheckgenError as exc:
            raise FormatError(f"capability {name!r}: {exc}") from exc
        caps.append(Capability(name, tuple(templates), lexicon))
    cl = CheckList(str(doc.get("language", "und")), tuple(caps))
    if validate:
        try:
            cl.validate()
        except CheckgenError as exc:
            raise FormatError(str(exc)) from exc
    return cl


def dumps_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=False) + "\n"


def load_checklist(path: PathLike, *, validate: bool = True, strict: bool = True) -> CheckList:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    return checklist_from_dict(doc, validate=validate, strict=strict)


def save_checklist(cl: CheckList, path: PathLike) -> None:
    write_atomic(path, dumps_json(checklist_to_dict(cl)))


def read_sentences(path: PathLike) -> list:
    """One sentence per line; blank lines are skipped."""
    text = Path(path).read_text(encoding="utf-8")
    return [line for line in text.splitlines() if line.strip()]


def format_lines(lines) -> str:
    return "".join(f"{line}\n" for line in lines)


def write_atomic(path: PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_jsonl(path: PathLike) -> list:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON line") from exc
    return rows
