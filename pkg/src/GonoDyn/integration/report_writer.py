import sys
from pathlib import Path
from typing import Dict, Iterable, TextIO

import pandas as pd


def format_stanza(record: Dict[str, str]) -> str:
    return "".join(f"{key}={value}\n" for key, value in record.items())


def format_stanzas(records: Iterable[Dict[str, str]]) -> str:
    return "\n".join(format_stanza(r) for r in records)


class ReportWriter:
    """Writes key=value report stanzas and CSV tables to a file or to stdout."""

    def __init__(self, out: Path | None = None) -> None:
        self.out = out

    def _target(self, suffix: str | None = None) -> Path | None:
        if self.out is None:
            return None
        if suffix is None:
            return self.out
        return self.out.with_name(f"{self.out.stem}_{suffix}.csv")

    def _emit(self, text: str, target: Path | None) -> None:
        if target is None:
            stream: TextIO = sys.stdout
            stream.write(text)
            stream.flush()
        else:
            target.write_text(text)

    def write_reports(self, records: Iterable[Dict[str, str]]) -> None:
        self._emit(format_stanzas(records), self._target())

    def write_table(self, df: pd.DataFrame, suffix: str | None = None, trailer: Dict[str, str] | None = None) -> Path | None:
        text = df.to_csv(index=False, float_format=None, lineterminator="\n")
        if trailer:
            text += "# " + ",".join(f"{k}={v}" for k, v in trailer.items()) + "\n"
        target = self._target(suffix)
        self._emit(text, target)
        return target
