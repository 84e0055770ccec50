"""
Error hierarchy shared by the library and the command line.

Every class carries the process exit code the CLI uses when the error
escapes a subcommand.
"""


class InquireError(Exception):
    exit_code = 1


class ConfigError(InquireError, ValueError):
    exit_code = 2


class DataError(InquireError, ValueError):
    exit_code = 3


class CorpusParseError(DataError):
    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super(CorpusParseError, self).__init__(
            "{}:{}: {}".format(path, line_no, message))


class SchemaError(DataError):
    pass


class TaxonomyError(DataError, KeyError):
    def __str__(self):
        # KeyError would otherwise repr() the message
        return str(self.args[0]) if self.args else ""


class DependencyError(InquireError):
    exit_code = 4


class CheckpointMismatchError(DependencyError):
    pass


class ProviderError(InquireError, RuntimeError):
    exit_code = 5

    def __init__(self, message, retriable=True):
        self.retriable = retriable
        super(ProviderError, self).__init__(message)


class NetworkStateError(InquireError, RuntimeError):
    pass
