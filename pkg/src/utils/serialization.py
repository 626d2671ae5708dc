import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

logger = logging.getLogger(__name__)


def to_json_text(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False)


def write_json(data: Any, path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
    logger.info(f"wrote {target}")
    return target


def emit_json(data: Any, output: Optional[str] = None) -> None:
    if output is None:
        print(to_json_text(data))
        return
    write_json(data, output)


def read_json(path: str) -> Any:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([str(v) for v in row])
    return buffer.getvalue()


def orbit_csv(orbit: Sequence[Sequence[Any]], labels: Sequence[str], start: int = 0) -> str:
    """One line per step: n, then one exact column per coordinate."""
    return rows_to_csv(['n'] + list(labels), ([start + n] + list(point) for n, point in enumerate(orbit)))


def hit_mask_csv(hits: Iterable[int], length: int, start: int = 0) -> str:
    hit_set = set(hits)
    return rows_to_csv(['n', 'hit'], ([n, int(n in hit_set)] for n in range(start, start + length)))


def read_csv(path: str) -> Dict[str, list]:
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        columns: Dict[str, list] = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for name, value in row.items():
                columns[name].append(value)
    return columns


def emit(text: str, output: Optional[str] = None) -> None:
    """Print to stdout, or write to `output` when given."""
    if output is None:
        print(text)
        return
    target = Path(output)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text + ('' if text.endswith('\n') else '\n'), encoding='utf-8')
    logger.info(f"wrote {target}")
