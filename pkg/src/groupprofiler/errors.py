"""Exception hierarchy shared across the package."""


class ProfilerError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInputError(ProfilerError):
    """Raised when an ingest stream contains no records."""


class ParseError(ProfilerError):
    """Raised for malformed input lines or records."""


class ValidationError(ProfilerError):
    """Raised when a query, config, or distribution fails validation."""


class UnknownFacetError(ValidationError):
    def __init__(self, facet, known_facets):
        self.facet = facet
        self.known_facets = list(known_facets)
        super().__init__(
            f"unknown facet {facet!r}; valid facets: {', '.join(self.known_facets)}"
        )


class UnknownValueError(ValidationError):
    def __init__(self, facet, value, close_matches):
        self.facet = facet
        self.value = value
        self.close_matches = list(close_matches)
        hint = f" (did you mean: {', '.join(self.close_matches)}?)" if close_matches else ""
        super().__init__(f"unknown value {value!r} for facet {facet!r}{hint}")


class ShapeMismatchError(ProfilerError):
    def __init__(self, expected, actual, context=""):
        self.expected = expected
        self.actual = actual
        where = f" in {context}" if context else ""
        super().__init__(f"shape mismatch{where}: expected {expected}, got {actual}")


class CheckpointError(ProfilerError):
    """Base class for checkpoint load/save failures."""


class CheckpointFormatError(CheckpointError):
    """Bad magic bytes or otherwise unparseable checkpoint."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format version not supported by this build."""


class CheckpointTruncatedError(CheckpointError):
    """Checkpoint file ends before the declared payload does."""


class SchemaMismatchError(CheckpointError):
    """Checkpoint schema fingerprint does not match the expected schema."""
