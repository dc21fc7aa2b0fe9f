"""
Exception hierarchy with module-qualified codes and CLI exit codes
"""

from typing import Optional


class SlitforgeError(Exception):
    """Base error; `code` is '<module>.<reason>'"""

    exit_code = 2

    def __init__(self, message: str, code: str = "slitforge.error"):
        super().__init__(message)
        self.code = code

    def __str__(self) -> str:
        return f"[{self.code}] {super().__str__()}"


class SpecParseError(SlitforgeError):
    """λ-spec text does not follow the grammar"""


class DomainError(SlitforgeError):
    """Operation precondition violated"""


class InconsistencyError(SlitforgeError):
    """Internal relation failed where it must hold (signals a caller bug)"""


class BudgetExceededError(SlitforgeError):
    """Integer growth exceeded the configured digit budget"""


class TruncationError(SlitforgeError):
    """Quotient stream exhausted before the requested index"""

    def __init__(self, message: str, code: str = "cf_core.truncated", max_index: Optional[int] = None):
        super().__init__(message, code)
        self.max_index = max_index


class PrecisionExhaustedError(SlitforgeError):
    """Certified comparison still undecided at maximum precision or depth"""

    exit_code = 4


class GuaranteeFailure(SlitforgeError):
    """A lemma-level guarantee failed during a strict build"""

    exit_code = 3

    def __init__(self, message: str, code: str = "tree_builder.guarantee", lemma: str = ""):
        super().__init__(message, code)
        self.lemma = lemma


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(exc, SlitforgeError):
        return exc.exit_code
    return 1
