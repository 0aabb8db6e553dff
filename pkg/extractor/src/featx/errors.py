class BridgeError(Exception):
    """Base for everything this package raises on purpose."""


class InputError(BridgeError):
    """Bad invocation or unusable input files."""


class TapPointError(BridgeError):
    """The selected layer produced the wrong feature width."""
