class BaseError(Exception):
    """Custom exception for base errors."""

    def __init__(self, subject: str, object: str, message: str) -> None:
        error_message = f"{subject} | {object} | {message}"
        super().__init__(error_message)
        self.subject = subject
        self.object = object
        self.message = message


class NumericsError(BaseError):
    """Custom exception for layer / optimizer / gradient errors."""


class GraphError(BaseError):
    """Custom exception for relation graph errors."""


class LanguageError(BaseError):
    """Custom exception for vocabulary and sentence encoder errors."""


class ProposalError(BaseError):
    """Custom exception for candidate generation errors."""


class CorpusError(BaseError):
    """Custom exception for synthetic corpus errors."""


class TrackerError(BaseError):
    """Custom exception for online tracking errors."""


class ConfigError(BaseError):
    """Custom exception for run configuration errors."""


class EvaluationError(BaseError):
    """Custom exception for metric and report errors."""
