"""
errors.py
----------------
Exception hierarchy shared by all operasim engines
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

from typing import Any, Sequence


class OperasimError(Exception):
    """
    Root of every error raised by operasim.
    """


#
# static model errors (the model is wrong before anything runs)
#


class ModelError(OperasimError):
    pass


class ValidationError(ModelError):
    """
    A model violates one of its static invariants.
    The list of problems is kept so that callers can report all of them at once.
    """

    def __init__(self, message: str, problems: Sequence[Any] = ()):
        super().__init__(message)
        self.problems = list(problems)


class ParameterError(ModelError):
    """
    A model builder received parameters violating one of its constraints.
    """


#
# multiset arithmetic
#


class UnderflowError(OperasimError, ArithmeticError):
    pass


class CountOverflowError(OperasimError, OverflowError):
    pass


#
# runtime errors (the model is fine but its execution failed)
#


class EngineError(OperasimError):
    pass


class UnknownCellError(EngineError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class InternalError(EngineError):
    pass


class EvaluationError(EngineError):
    pass


class MemoryTypeError(EngineError):
    pass


class OutOfBounds(EngineError):
    pass


class SelectorAmbiguous(EngineError):
    pass


class XMachineError(EngineError):
    """
    Base class for errors raised while stepping an X-machine.
    run_stream() decorates these with the offending input index and
    with the outputs produced before the failure.
    """

    def __init__(self, message: str, state: str | None = None, input_value: Any = None):
        super().__init__(message)
        self.state = state
        self.input_value = input_value
        self.input_index: int | None = None
        self.partial_outputs: list[Any] = []
        self.machine: str | None = None


class NoApplicableFunction(XMachineError):
    pass


class NondeterminismError(XMachineError):
    def __init__(
        self,
        message: str,
        state: str | None = None,
        input_value: Any = None,
        functions: Sequence[str] = (),
    ):
        super().__init__(message, state, input_value)
        self.functions = list(functions)


class AgentBehaviourError(EngineError):
    """
    Wraps an error raised by the behaviour of an OPERAS agent, tagging it with the agent id.
    """

    def __init__(self, agent_id: int, cause: Exception):
        super().__init__(f"agent {agent_id}: {cause}")
        self.agent_id = agent_id
        self.cause = cause
