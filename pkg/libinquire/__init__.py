__version__ = "0.1.0"

from .config import RunConfig
from .exceptions import InquireError, ConfigError, DataError, DependencyError, ProviderError
