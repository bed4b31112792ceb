"""Exception types shared across the toolkit.

Every error carries a stable ``code`` string (the class name without the
``Error`` suffix) so the HTTP layer and the CLI can report machine-readable
diagnostics without string-matching messages.
"""


class ToolkitError(Exception):
    """Base class for all docdialog errors."""

    @property
    def code(self) -> str:
        name = type(self).__name__
        return name[:-5] if name.endswith("Error") else name


# --- document graph ---------------------------------------------------------

class DuplicateNodeIdError(ToolkitError):
    pass


class OrphanNodeError(ToolkitError):
    pass


class ShapeViolationError(ToolkitError):
    def __init__(self, ref, rule: str, detail: str = ""):
        super().__init__(f"{rule} at {ref}: {detail}" if detail else f"{rule} at {ref}")
        self.ref = ref
        self.rule = rule


class UnknownDomainError(ToolkitError):
    pass


class NotDescendantError(ToolkitError):
    pass


class UnknownRefError(ToolkitError):
    pass


class UnknownDocError(ToolkitError):
    pass


class UnknownOverrideRefError(ToolkitError):
    pass


# --- ingest ------------------------------------------------------------------

class MarkupSyntaxError(ToolkitError):
    def __init__(self, message: str, line: int, col: int = 0):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class UnknownTypeLabelError(ToolkitError):
    pass


class DuplicateIdError(ToolkitError):
    pass


# --- flow generation ---------------------------------------------------------

class InvalidRatesError(ToolkitError):
    pass


class NoSuperLeavesError(ToolkitError):
    pass


# --- prompt generation ---------------------------------------------------------

class UnsupportedFamilyError(ToolkitError):
    pass


class EmptySubtreeError(ToolkitError):
    pass


class MissingSlotError(ToolkitError):
    pass


class UnknownLocaleError(ToolkitError):
    pass


class MissingTemplateError(ToolkitError):
    pass


# --- dialog store --------------------------------------------------------------

class UnknownFlowError(ToolkitError):
    pass


class FlowAlreadyClaimedError(ToolkitError):
    pass


class UnknownDialogError(ToolkitError):
    pass


class RoleOrderViolationError(ToolkitError):
    pass


class UnknownActError(ToolkitError):
    pass


class DanglingGroundingError(ToolkitError):
    pass


class WrongGoalError(ToolkitError):
    pass


class DialogClosedError(ToolkitError):
    pass


class NotActiveError(ToolkitError):
    pass


class AlreadyClosedError(ToolkitError):
    pass


class BadRatiosError(ToolkitError):
    pass


class OpenDialogPresentError(ToolkitError):
    pass
