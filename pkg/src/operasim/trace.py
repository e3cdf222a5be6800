"""
trace.py
----------------
Simulation traces: header/snapshot/terminal records, JSONL and text writers, JSONL reader
Copyright (C) 2026 operasim contributors

Licensed under the GNU GENERAL PUBLIC LICENSE, Version 3 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.gnu.org/licenses/gpl-3.0.html

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

import hashlib
import json
from typing import Any, Callable, Iterable, TextIO

from .seeded_rng import SeededRng

SCHEMA_VERSION = 1

RECORD_HEADER = "header"
RECORD_SNAPSHOT = "snapshot"
RECORD_TERMINAL = "terminal"

EDGE_GLYPH = "—"


def package_version() -> str:
    try:
        from ._operasim_version import version

        return version
    except ImportError:
        return "0.0.0"


def model_digest(body: Any) -> str:
    """
    SHA-256 of the canonical printed form of a model.
    """
    from .dsl_printer import print_body

    return hashlib.sha256(print_body(body).encode("utf-8")).hexdigest()


def make_header(kind: str, model_digest: str, seed: int, steps: int, **params) -> dict:
    header = {
        "v": SCHEMA_VERSION,
        "record": RECORD_HEADER,
        "kind": kind,
        "model_digest": model_digest,
        "seed": seed,
        "steps": steps,
        "rng": SeededRng.ALGORITHM,
        "version": package_version(),
    }
    header.update(params)
    return header


def to_json_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class TraceFormatError(ValueError):
    pass


class Trace:
    """
    Header, one snapshot per completed step (plus the initial one) and a terminal record.

    An optional listener receives every record as soon as it is produced, which lets
    the CLI stream long runs to disk.
    """

    def __init__(self, header: dict, listener: Callable[[dict], None] | None = None):
        self.header = header
        self.snapshots: list[dict] = []
        self.terminal: dict | None = None
        self._listener = listener
        self._emit(header)

    def _emit(self, record: dict):
        if self._listener is not None:
            self._listener(record)

    @property
    def kind(self) -> str:
        return self.header["kind"]

    def add_snapshot(self, payload: dict):
        record = {"v": SCHEMA_VERSION, "record": RECORD_SNAPSHOT, **payload}
        self.snapshots.append(record)
        self._emit(record)

    def complete(self, steps: int):
        self.terminal = {"v": SCHEMA_VERSION, "record": RECORD_TERMINAL, "status": "completed", "steps": steps}
        self._emit(self.terminal)

    def halt(self, step: int):
        self.terminal = {"v": SCHEMA_VERSION, "record": RECORD_TERMINAL, "status": "halted", "step": step}
        self._emit(self.terminal)

    def records(self) -> list[dict]:
        out = [self.header, *self.snapshots]
        if self.terminal is not None:
            out.append(self.terminal)
        return out

    def steps_completed(self) -> int:
        return len(self.snapshots) - 1

    def to_jsonl(self) -> str:
        return "".join(to_json_line(r) + "\n" for r in self.records())

    def to_text(self) -> str:
        return "".join(render_text(r) for r in self.records())

    @staticmethod
    def from_records(records: Iterable[dict]) -> "Trace":
        it = iter(records)
        try:
            header = next(it)
        except StopIteration:
            raise TraceFormatError("Empty trace")
        if header.get("record") != RECORD_HEADER:
            raise TraceFormatError("Trace does not start with a header record")
        trace = Trace(header)
        for rec in it:
            if rec.get("v") != SCHEMA_VERSION:
                raise TraceFormatError(f"Unsupported trace schema version {rec.get('v')!r}")
            kind = rec.get("record")
            if trace.terminal is not None:
                raise TraceFormatError("Record found after the terminal record")
            if kind == RECORD_SNAPSHOT:
                trace.snapshots.append(rec)
            elif kind == RECORD_TERMINAL:
                trace.terminal = rec
            else:
                raise TraceFormatError(f"Unknown record type {kind!r}")
        if not trace.snapshots:
            raise TraceFormatError("Trace has no snapshot")
        return trace


def read_jsonl(stream: TextIO) -> Trace:
    """
    Parses a JSONL trace. Raises TraceFormatError on malformed content.
    """
    records = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise TraceFormatError(f"line {lineno}: invalid JSON: {e}")
        if not isinstance(rec, dict):
            raise TraceFormatError(f"line {lineno}: record is not an object")
        records.append(rec)
    return Trace.from_records(records)


#
# text animation
#


def _ms(counts: dict) -> str:
    return "{" + ", ".join(f"{k}:{v}" for k, v in sorted(counts.items())) + "}"


def _memory(memory: dict) -> str:
    return "{" + ", ".join(f"{k}={json.dumps(v)}" for k, v in sorted(memory.items())) + "}"


def _activity(entry: dict) -> str:
    if entry.get("fired"):
        return f" fired {entry['fired']}"
    if entry.get("idle"):
        return f" idle ({entry['idle']})"
    return ""


def _edges(edges: list) -> str:
    return " ".join(f"{i}{EDGE_GLYPH}{j}" for i, j in edges) or "-"


def render_text(record: dict) -> str:
    """
    Renders one trace record as a human-readable block.
    """
    kind = record.get("record")
    if kind == RECORD_HEADER:
        params = " ".join(
            f"{k}={record[k]}" for k in sorted(record) if k not in ("v", "record", "version", "model_digest")
        )
        return f"# operasim trace {params} model={record.get('model_digest', '')[:12]}\n"
    if kind == RECORD_TERMINAL:
        if record.get("status") == "halted":
            return f"# halted at step {record.get('step')}\n"
        return f"# completed after {record.get('steps')} steps\n"

    lines = [f"== step {record.get('step')} =="]
    if "cells" in record:
        cells = " ".join(f"{c['id']}:{c['type']}{_ms(c['contents'])}" for c in record["cells"])
        lines.append(f"cells: {cells or '-'}")
        lines.append(f"bonds: {_edges(record.get('bonds', []))}")
        lines.append(f"environment: {_ms(record.get('environment', {}))}")
        fired = record.get("fired", [])
        if fired:
            lines.append(f"fired: {len(fired)} rule instance(s)")
    elif "machines" in record:
        for m in record["machines"]:
            activity = _activity(m)
            lines.append(f"machine {m['id']}: [{m['state']}] {_memory(m['memory'])}{activity}")
        for ch in record.get("channels", []):
            buf = "empty" if ch.get("buffer") is None else json.dumps(ch["buffer"])
            lines.append(f"channel {ch['name']}: {ch['from']}{EDGE_GLYPH}{ch['to']} [{buf}]")
    elif "agents" in record:
        for a in record["agents"]:
            activity = _activity(a)
            lines.append(f"agent {a['id']}:{a['type']}[{a['state']}] {_memory(a['memory'])}{activity}")
        lines.append(f"channels: {_edges(record.get('channels', []))}")
        for cell in record.get("grid", []):
            lines.append(f"grid ({cell['x']},{cell['y']}): {_ms(cell['contents'])}")
        lines.append(f"globals: {_ms(record.get('globals', {}))}")
        for w in record.get("warnings", []):
            lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"
