"""Exception hierarchy; the CLI maps each family to an exit code."""


class MagcnnError(Exception):
    pass


class ArgumentError(MagcnnError, ValueError):
    """Invalid argument such as an out-of-range node id or class index."""


class ConfigurationError(MagcnnError, ValueError):
    pass


class ShapeError(MagcnnError, ValueError):
    pass


class DataError(MagcnnError):
    """Problems reading dataset, cache or checkpoint files."""


class LoadError(DataError, FileNotFoundError):
    pass


class FormatError(DataError, ValueError):
    pass


class NumericError(MagcnnError, ArithmeticError):
    pass
