"""Exception hierarchy shared by every stage of the pipeline.

Each error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses without inspecting messages.
"""

from __future__ import annotations


class DerivataError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 1
    module = "derivata"

    def __str__(self) -> str:
        return f"{self.module}: {super().__str__()}"


class ConfigError(DerivataError):
    exit_code = 2
    module = "cli"


class IngestError(DerivataError):
    """A manifest entry could not be loaded."""

    exit_code = 3
    module = "corpus"


class DuplicateId(IngestError):
    pass


class DanglingReference(IngestError):
    pass


class FixtureIntegrityError(DerivataError):
    exit_code = 5
    module = "corpus"


class SegmentationError(DerivataError):
    exit_code = 3
    module = "segmenter"


class IndexTooShortError(DerivataError):
    exit_code = 3
    module = "similarity"


class DegenerateInput(DerivataError):
    exit_code = 4
    module = "stats"


class PositionError(DerivataError, ValueError):
    exit_code = 4
    module = "analysis"


class EmptyGroup(DegenerateInput):
    module = "analysis"


class UnknownGoldId(DerivataError):
    exit_code = 4
    module = "analysis"


class Unclassifiable(DerivataError):
    """The record has no Discussion section to apply the cut-off to."""

    exit_code = 4
    module = "analysis"
