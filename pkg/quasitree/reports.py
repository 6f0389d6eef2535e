"""Report entries shared by every verification suite."""

from quasitree._compat import StrEnum
from typing_extensions import TypedDict

MAX_EXAMPLES = 5


class CheckStatus(StrEnum):
    """
    Outcome of a single check.

    PASS: The property held everywhere it was checked
    FAIL: A hard inequality was violated
    FLAG: A measured slack exceeded its reporting threshold; never fails a run
    INFO: Informational measurement with no expected value
    """

    PASS = "pass"
    FAIL = "fail"
    FLAG = "flag"
    INFO = "info"


class CheckEntry(TypedDict):
    tag: str
    status: str
    checked: int
    violations: int
    measured: float | None
    detail: str
    examples: list[list[str]]


def make_entry(
    tag: str,
    *,
    checked: int,
    violations: int = 0,
    measured: float | None = None,
    flagged: bool = False,
    informational: bool = False,
    detail: str = "",
    examples: list[list[str]] | None = None,
) -> CheckEntry:
    """
    Build a report entry, deriving its status from the counts.

    :param tag: Name of the statement the entry verifies
    :param checked: Number of configurations examined
    :param violations: Number of configurations breaking a hard inequality
    :param measured: Measured slack or value, if any
    :param flagged: Whether the measurement exceeded its reporting threshold
    :param informational: Report only; the entry can never fail
    :param detail: Free-form explanation
    :param examples: Offending configurations, truncated to a few entries
    :return: The report entry
    """
    if informational:
        status = CheckStatus.INFO
    elif violations:
        status = CheckStatus.FAIL
    elif flagged:
        status = CheckStatus.FLAG
    else:
        status = CheckStatus.PASS

    return CheckEntry(
        tag=tag,
        status=str(status),
        checked=int(checked),
        violations=int(violations),
        measured=None if measured is None else float(measured),
        detail=detail,
        examples=[[str(item) for item in example] for example in (examples or [])[:MAX_EXAMPLES]],
    )
