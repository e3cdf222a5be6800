"""
dsl_validator.py
----------------
Diagnostics for model documents
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

from dataclasses import dataclass
from typing import Any, Mapping

from .cxm_system import CxmModel
from .operas import OperasModel
from .pps_model import ModelProblem, PpsModel
from .xm_engine import XmModel

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    line: int = 1
    column: int = 1

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def format(self, filename: str | None = None) -> str:
        where = f"{self.line}:{self.column}"
        if filename:
            where = f"{filename}:{where}"
        return f"{where}: {self.severity} {self.code}: {self.message}"

    def __str__(self) -> str:
        return self.format()


def severity_of(code: str) -> str:
    return WARNING if code.startswith("W-") else ERROR


def body_problems(body: Any) -> list[ModelProblem]:
    problems = list(body.problems())
    if isinstance(body, PpsModel) and not body.rules:
        problems.append(ModelProblem("W-NO-RULES", "PPS model declares no evolution rules"))
    if isinstance(body, OperasModel) and not body.agents:
        problems.append(ModelProblem("W-NO-RULES", "OPERAS model declares no agents"))
    return problems


def validate(body: PpsModel | XmModel | CxmModel | OperasModel, source_map: Mapping[str, tuple[int, int]] | None = None) -> list[Diagnostic]:
    """
    Turns the static problems of a model into located diagnostics, errors first.
    A problem naming a token is located at the token's first occurrence.
    """
    source_map = source_map or {}
    out = []
    seen = set()
    for p in body_problems(body):
        line, column = source_map.get(p.token, (1, 1)) if p.token is not None else (1, 1)
        d = Diagnostic(severity_of(p.code), p.code, p.message, line, column)
        if d not in seen:
            seen.add(d)
            out.append(d)
    out.sort(key=lambda d: (d.severity != ERROR, d.line, d.column))
    return out


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)
