"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError (and
builtin LookupError / OSError) -> 2, NumericalError -> 3.
"""


class OntorecError(Exception):
    pass


class ConfigError(OntorecError):
    """Bad configuration or usage: invalid flag values, missing settings."""


class DataError(OntorecError):
    """Problem with input data or data files."""


class IngestError(DataError):
    """Malformed line in a delimited input stream."""


class ValidationError(DataError):
    """Structurally parseable input that violates a domain invariant."""


class OntologyError(DataError):
    """Structural problem in an ontology: cycles, unknown is_a targets, empty file."""


class MappingError(DataError):
    """Item accessions that do not resolve to ontology terms."""


class ProvenanceError(DataError):
    """A persisted artifact was built under a different configuration."""


class ContractViolation(DataError):
    """Caller broke an API precondition (e.g. scoring a candidate already in the profile)."""


class NumericalError(OntorecError):
    """Non-finite values produced during training or scoring."""
