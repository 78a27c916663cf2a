"""
Artifact I/O - atomic text/JSON/CSV writes and JSON-lines logs.

Writers go through a .tmp sibling and rename it into place, so a reader
never sees a half-written file.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_text(path: PathLike, text: str) -> Path:
    """Write text atomically, creating parent directories"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_file = path.with_suffix(path.suffix + '.tmp')
    with open(temp_file, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    temp_file.replace(path)
    logger.debug(f"Wrote {path} ({len(text)} chars)")
    return path


def write_json(path: PathLike, data: Any) -> Path:
    return write_text(path, json.dumps(data, indent=2, sort_keys=True) + '\n')


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(header), lineterminator='\n')
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, '') for k in header})
    return write_text(path, buffer.getvalue())


def append_jsonl(path: PathLike, record: Dict[str, Any]):
    """Append one JSON record as a line"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'a', encoding='utf-8') as f:
        f.write(json.dumps(record, sort_keys=True) + '\n')


def read_jsonl(path: PathLike) -> List[Dict[str, Any]]:
    """
    Read a JSON-lines file, skipping blank and malformed lines.

    Returns:
        records in file order ([] when the file does not exist)
    """
    path = Path(path)
    if not path.exists():
        logger.warning(f"Log file not found: {path}")
        return []

    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_num, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                logger.warning(f"Invalid JSON at {path}:{line_num}: {e}")
                continue
    logger.debug(f"Loaded {len(records)} records from {path}")
    return records
