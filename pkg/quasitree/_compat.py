"""Import shims for standard-library names added after Python 3.10."""

import sys

if sys.version_info >= (3, 11):
    import tomllib
    from enum import StrEnum
    from typing import Self
else:
    from enum import Enum

    import tomli as tomllib
    from typing_extensions import Self

    class StrEnum(str, Enum):
        """Backport of :class:`enum.StrEnum`: members are strings and print as their value."""

        __str__ = str.__str__
        __format__ = str.__format__

__all__ = ["Self", "StrEnum", "tomllib"]
