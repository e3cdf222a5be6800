"""
operasim_app.py
----------------
Operasim main application class
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

import argparse
import logging
import os
import sys
from contextlib import nullcontext
from enum import IntEnum
from typing import Callable, TextIO

from . import cxm_system, operas, xm_engine
from .config import Config, ConfigError
from .dsl_parser import ModelDocument, parse_file
from .dsl_validator import Diagnostic
from .errors import EngineError, ModelError, OperasimError
from .pps_engine import PpsEngine
from .pps_model import BondMode, StepMode
from .trace import Trace, TraceFormatError, model_digest, package_version, read_jsonl, render_text, to_json_line
from .trace_stats import stats


class ExitCode(IntEnum):
    OK = 0
    MODEL_ERROR = 1
    RUNTIME_ERROR = 2


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    """
    Reports usage errors as exceptions so that they map to exit code 1.
    """

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _non_negative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer '{text}'")
    if value < 0:
        raise argparse.ArgumentTypeError(f"'{text}' must not be negative")
    return value


def run_document(
    doc: ModelDocument,
    steps: int,
    seed: int,
    mode: str = "max",
    bonds: str = "auto",
    death_releases_objects: bool = False,
    listener: Callable[[dict], None] | None = None,
) -> Trace:
    """
    Runs a parsed model with the engine of its kind.
    """
    if doc.kind == "pps":
        engine = PpsEngine(doc.body, StepMode(mode), BondMode(bonds), death_releases_objects)
        return engine.run(steps, seed, listener)
    if doc.kind == "xm":
        return xm_engine.run_model(doc.body, steps, seed, listener)
    if doc.kind == "cxm":
        return cxm_system.run(doc.body, steps, seed, listener)
    if doc.kind == "operas":
        return operas.run(doc.body, steps, seed, listener)
    raise ValueError(f"Unknown model kind '{doc.kind}'")


class OperasimApp:
    """
    Command-line front end: run, stats, check and replay.
    """

    def __init__(self, stdout: TextIO | None = None, stderr: TextIO | None = None) -> None:
        self.config = None  # instance of Config
        self.args = None
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr

    @staticmethod
    def get_embedded_version() -> str:
        """
        Returns the embedded version of operasim, forged at build time by the "hatch-vcs" plugin.
        """
        return package_version()

    def _report(self, diagnostics: list[Diagnostic], filename: str):
        for d in diagnostics:
            print(d.format(filename), file=self.stderr)

    def _fail(self, filename: str, e: Exception, code: ExitCode) -> int:
        print(f"{filename}: error {type(e).__name__}: {e}", file=self.stderr)
        logging.debug("Details of the failure", exc_info=True)
        return code

    def _build_parser(self) -> argparse.ArgumentParser:
        parser = _ArgumentParser(
            prog="operasim",
            description="Runs Population P System, Communicating X-Machine and OPERAS_XC models written in the .opml language",
            epilog="The optional configuration file is searched in the following locations (in order):\n  * "
            + "\n  * ".join(Config.get_default_config_file_name())
            + "\nCommand-line options override the configuration file.\n",
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        parser.add_argument("-V", "--version", help="Print version and exit", action="store_true", default=False)
        parser.add_argument("-v", "--verbose", help="Enable DEBUG logging", action="store_true", default=False)
        parser.add_argument("--config", help="Path of the YAML configuration file", default=None)

        sub = parser.add_subparsers(dest="command")

        p = sub.add_parser("run", help="Run a model and write its trace")
        p.add_argument("file", help="Model file (.opml)")
        p.add_argument("--steps", type=_non_negative, default=None)
        p.add_argument("--seed", type=_non_negative, default=None)
        p.add_argument("--mode", choices=["max", "arb"], default=None)
        p.add_argument("--bonds", choices=["dynamic", "static", "auto"], default=None)
        p.add_argument("--format", choices=["text", "jsonl"], default=None)
        p.add_argument("--out", help="Write the trace to this file instead of standard output", default=None)
        p.add_argument("--death-releases-objects", action="store_true", default=None)

        p = sub.add_parser("stats", help="Summarise a JSONL trace")
        p.add_argument("trace", help="Trace file (.jsonl)")
        p.add_argument("--csv", action="store_true", default=False)

        p = sub.add_parser("check", help="Parse and validate a model")
        p.add_argument("file", help="Model file (.opml)")

        p = sub.add_parser("replay", help="Re-run a model with the parameters of a trace and compare")
        p.add_argument("trace", help="Trace file (.jsonl)")
        p.add_argument("file", help="Model file (.opml)")
        return parser

    def setup(self, argv: list[str] | None = None) -> int:
        """
        Parses the command line and loads the configuration.
        Returns 0 on success, -1 when the version was printed, an exit code otherwise.
        """
        if "COLUMNS" not in os.environ:
            os.environ["COLUMNS"] = "120"  # avoid too many line wraps
        parser = self._build_parser()
        try:
            self.args = parser.parse_args(argv)
        except UsageError as e:
            print(str(e), file=self.stderr)
            return ExitCode.MODEL_ERROR
        if self.args.version:
            print(f"Version: {OperasimApp.get_embedded_version()}", file=self.stdout)
            return -1
        if self.args.command is None:
            parser.print_usage(self.stderr)
            return ExitCode.MODEL_ERROR

        # start with WARNING logging level till we load the config file:
        logging.basicConfig(level=logging.DEBUG if self.args.verbose else logging.WARNING, force=True)

        self.config = Config()
        try:
            self.config.load(self.args.config)
        except ConfigError as e:
            print(f"Cannot load configuration: {e}", file=self.stderr)
            return ExitCode.MODEL_ERROR
        self.config.apply_logging_config(self.args.verbose)
        logging.info("operasim version %s starting", OperasimApp.get_embedded_version())
        return ExitCode.OK

    def run(self) -> int:
        """
        Executes the selected command and returns the exit code.
        """
        command = {
            "run": self.cmd_run,
            "stats": self.cmd_stats,
            "check": self.cmd_check,
            "replay": self.cmd_replay,
        }[self.args.command]
        try:
            return command()
        except KeyboardInterrupt:
            return ExitCode.RUNTIME_ERROR

    def _load(self, filename: str) -> ModelDocument | None:
        result = parse_file(filename)
        if isinstance(result, list):
            self._report(result, filename)
            return None
        self._report(list(result.warnings), filename)
        return result

    def _option(self, name: str):
        value = getattr(self.args, name)
        return self.config.config["run"][name] if value is None else value

    def cmd_check(self) -> int:
        doc = self._load(self.args.file)
        if doc is None:
            return ExitCode.MODEL_ERROR
        print(f"{self.args.file}: ok ({doc.kind} model)", file=self.stdout)
        return ExitCode.OK

    def cmd_run(self) -> int:
        steps = self._option("steps")
        max_steps = self.config.config["limits"]["max_steps"]
        if steps > max_steps:
            print(f"operasim run: --steps {steps} exceeds the limit of {max_steps}", file=self.stderr)
            return ExitCode.MODEL_ERROR

        doc = self._load(self.args.file)
        if doc is None:
            return ExitCode.MODEL_ERROR

        fmt = self._option("format")
        render = render_text if fmt == "text" else (lambda r: to_json_line(r) + "\n")
        try:
            out = open(self.args.out, "w", encoding="utf-8", newline="\n") if self.args.out else nullcontext(self.stdout)
        except OSError as e:
            return self._fail(self.args.out, e, ExitCode.RUNTIME_ERROR)

        with out as stream:
            try:
                trace = run_document(
                    doc,
                    steps,
                    self._option("seed"),
                    self._option("mode"),
                    self._option("bonds"),
                    self._option("death_releases_objects"),
                    listener=lambda record: stream.write(render(record)),
                )
            except ModelError as e:
                return self._fail(self.args.file, e, ExitCode.MODEL_ERROR)
            except (EngineError, OperasimError) as e:
                return self._fail(self.args.file, e, ExitCode.RUNTIME_ERROR)
            except OSError as e:
                return self._fail(self.args.out or "<stdout>", e, ExitCode.RUNTIME_ERROR)
        logging.info("Wrote %d snapshot(s)", len(trace.snapshots))
        return ExitCode.OK

    def _read_trace(self, filename: str) -> Trace:
        with open(filename, "r", encoding="utf-8") as f:
            return read_jsonl(f)

    def cmd_stats(self) -> int:
        try:
            trace = self._read_trace(self.args.trace)
        except (OSError, UnicodeDecodeError, TraceFormatError) as e:
            return self._fail(self.args.trace, e, ExitCode.MODEL_ERROR)
        self.stdout.write(stats(trace, csv=self.args.csv))
        return ExitCode.OK

    def cmd_replay(self) -> int:
        try:
            recorded = self._read_trace(self.args.trace)
        except (OSError, UnicodeDecodeError, TraceFormatError) as e:
            return self._fail(self.args.trace, e, ExitCode.MODEL_ERROR)
        doc = self._load(self.args.file)
        if doc is None:
            return ExitCode.MODEL_ERROR

        header = recorded.header
        if header.get("kind") != doc.kind or header.get("model_digest") != model_digest(doc.body):
            print(f"{self.args.file}: error E-DIGEST: model does not match the one recorded in '{self.args.trace}'", file=self.stderr)
            return ExitCode.MODEL_ERROR

        try:
            replayed = run_document(
                doc,
                header["steps"],
                header["seed"],
                header.get("mode", "max"),
                header.get("bonds", "auto"),
                header.get("death_releases_objects", False),
            )
        except OperasimError as e:
            return self._fail(self.args.file, e, ExitCode.RUNTIME_ERROR)

        old = [to_json_line(_without_version(r)) for r in recorded.records()]
        new = [to_json_line(_without_version(r)) for r in replayed.records()]
        for n, (a, b) in enumerate(zip(old, new), start=1):
            if a != b:
                print(f"{self.args.trace}:{n}: error E-DIVERGED: replay differs from the recorded trace", file=self.stderr)
                return ExitCode.RUNTIME_ERROR
        if len(old) != len(new):
            print(f"{self.args.trace}: error E-DIVERGED: replay has {len(new)} records, trace has {len(old)}", file=self.stderr)
            return ExitCode.RUNTIME_ERROR
        print(f"{self.args.trace}: replay identical ({len(recorded.snapshots)} snapshots)", file=self.stdout)
        return ExitCode.OK


def _without_version(record: dict) -> dict:
    return {k: v for k, v in record.items() if k != "version"}
