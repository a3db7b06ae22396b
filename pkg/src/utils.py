import os
from pathlib import Path
from typing import Any, Callable, List, Optional
from datetime import datetime, timezone
import json
import click
import logging
import pandas as pd
from pydantic import ValidationError

import config


def parse_utc_hour(value: Optional[str]) -> Optional[datetime]:
    """Parse 'YYYY-MM-DDTHH' or 'YYYY-MM-DDTHH:00[:00][Z]' (UTC). Returns tz-aware UTC datetime."""
    if value is None:
        return None

    s = value.strip()
    # allow space separator
    s = s.replace(" ", "T")
    # allow trailing Z (we always treat as UTC anyway)
    if s.endswith("Z"):
        s = s[:-1]

    for fmt in ("%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%dT%H"):
        try:
            dt = datetime.strptime(s, fmt)
            break
        except ValueError:
            continue
    else:
        raise click.BadParameter(
            "Invalid datetime. Use UTC format: YYYY-MM-DDTHH:00:00Z, e.g. 2020-03-14T23:00:00Z"
        )

    if dt.minute or dt.second:
        raise click.BadParameter("Timestamp must be truncated to the hour")
    return dt.replace(tzinfo=timezone.utc)


def number_list(cast: Callable[[str], Any]) -> Callable:
    """Build a click callback turning '0,0.5,1' into a list of `cast` values."""

    def _callback(ctx, param, value: Optional[str]) -> Optional[List[Any]]:
        if value is None:
            return None
        items = [part.strip() for part in value.split(",") if part.strip()]
        try:
            return [cast(item) for item in items]
        except ValueError as e:
            raise click.BadParameter(f"expected a comma-separated list of numbers, got {value!r}") from e

    return _callback


def load_json_config(path: Optional[Path]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise click.BadParameter(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise click.BadParameter(f"{path} must contain a JSON object")
    return data


def format_validation_error(exc: ValidationError) -> str:
    """One 'dotted.field: message' line per pydantic error."""
    lines = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "config"
        lines.append(f"{loc}: {err['msg']}")
    return "\n".join(lines)


def check_outputs(filenames: List[str], overwrite: bool) -> None:
    """Refuse to clobber existing outputs in config.OUTPUT_DIR_PATH unless overwrite is set."""
    output_dir = Path(config.OUTPUT_DIR_PATH)
    if output_dir.exists() and not output_dir.is_dir():
        raise NotADirectoryError(f"Output path {output_dir} exists and is not a directory")
    existing = [name for name in filenames if (output_dir / name).exists()]
    if existing and not overwrite:
        raise FileExistsError(
            f"Output file(s) already exist in {output_dir}: {', '.join(existing)} (use --overwrite)"
        )
    output_dir.mkdir(parents=True, exist_ok=True)


def _atomic_write(filename: str, write: Callable[[Path], None]) -> Path:
    file_path = Path(config.OUTPUT_DIR_PATH) / filename
    tmp_path = file_path.with_name(file_path.name + ".tmp")
    try:
        write(tmp_path)
        os.replace(tmp_path, file_path)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()
    logging.info("Wrote %s", file_path)
    return file_path


def write_frame_csv(frame: pd.DataFrame, filename: str) -> Path:
    return _atomic_write(
        filename,
        lambda p: frame.to_csv(p, index=False, float_format=config.FLOAT_FORMAT,
                               lineterminator="\n", encoding="utf-8"),
    )


def write_json(obj: Any, filename: str) -> Path:
    def _write(p: Path) -> None:
        with open(p, "w", encoding="utf-8") as f:
            json.dump(obj, f, indent=2, sort_keys=True, allow_nan=False)
            f.write("\n")

    return _atomic_write(filename, _write)
