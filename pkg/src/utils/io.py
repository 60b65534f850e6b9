# src/utils/io.py
import json
import os
import pathlib
import tempfile
from typing import Any, Union

PathLike = Union[str, os.PathLike]


def atomic_write_text(path: PathLike, text: str) -> pathlib.Path:
    """
    Write text to path through a temp file in the same directory + rename,
    so readers never observe a half-written file.
    """
    target = pathlib.Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target


def dump_json(data: Any) -> str:
    """Deterministic JSON text: sorted keys, fixed indent, trailing newline."""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_json(path: PathLike, data: Any) -> pathlib.Path:
    return atomic_write_text(path, dump_json(data))


def load_json(path: PathLike) -> Any:
    with pathlib.Path(path).open("r", encoding="utf-8") as f:
        return json.load(f)
