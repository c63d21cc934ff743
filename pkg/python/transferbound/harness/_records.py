"""
Writers of the campaign artifacts.

Every writer produces the same bytes for the same input: rows keep their given
order, floats are written with their shortest round-trip representation and
line endings are always ``\\n``.
"""
import csv
import json
import logging
import math
from pathlib import Path
from typing import Any
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence

import numpy as np

LOGGER = logging.getLogger(__name__)


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_to_builtin(item) for item in value.tolist()]
    if isinstance(value, dict):
        return {str(key): _to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def _format_cell(value: Any) -> str:
    value = _to_builtin(value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_csv(
    rows: Sequence[dict],
    path: Path,
    columns: Optional[List[str]] = None,
):
    """
    Write rows of dict as a CSV table.

    Args:
        rows: the table rows, missing cells are left empty
        path: file to write, its parent directories are created
        columns: header of the table; default to the keys of every row in first-seen order
    """
    if columns is None:
        columns = []
        for row in rows:
            columns.extend(key for key in row if key not in columns)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(column)) for column in columns])
    LOGGER.debug(f"wrote {len(rows)} rows to {path}")


def read_csv(path: Path) -> List[dict]:
    with Path(path).open("r", encoding="utf-8", newline="") as file:
        return list(csv.DictReader(file))


def write_json(content: Any, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_to_builtin(content), indent=2) + "\n", encoding="utf-8")
    LOGGER.debug(f"wrote {path}")


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_jsonl(records: Iterable[dict], path: Path):
    """
    Write one compact JSON object per line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(_to_builtin(record), separators=(",", ":")) for record in records]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    LOGGER.debug(f"wrote {len(lines)} records to {path}")
