"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """A configuration file could not be parsed or failed validation.

    ``context`` holds the file/line/field location when known.
    """

    def __init__(self, message, context=None):
        self.context = context
        if context:
            message = f"{context}: {message}"
        super().__init__(message)


class SchemaError(ValueError):
    """A data file row does not follow its documented schema."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class IncompleteDiaryError(SchemaError):
    """A diary day does not carry all of its 144 episodes."""

    def __init__(self, respondent_id, day_type, missing):
        self.respondent_id = respondent_id
        self.missing = sorted(missing)
        shown = ", ".join(str(i) for i in self.missing[:20])
        if len(self.missing) > 20:
            shown += ", ..."
        super().__init__(
            f"diary {respondent_id!r} ({day_type}) is missing episode indices [{shown}]"
        )


class InsufficientDataError(ValueError):
    """Not a single matching episode is available to derive a quantity."""


class EmptyCatalogError(LookupError):
    """No task specification covers the requested type of individual / day."""


class MisalignedCurvesError(ValueError):
    """Load curves do not share start, timestep and length."""


class InsufficientDataWarning(UserWarning):
    """Derived value relies on a fallback because data were sparse."""
