import sys


class WzValidationError(Exception):
    def __init__(self, message) -> None:
        super().__init__("validation error: %s" % message)


class WzGuardError(Exception):
    def __init__(self, what: str, count: int, limit: int) -> None:
        self.count = count
        self.limit = limit
        super().__init__("guard exceeded: %s (%d > %d)" % (what, count, limit))


class WzRuntimeError(Exception):
    def __init__(self, message) -> None:
        super().__init__("runtime error: %s" % message)


class Debuggable:
    """Mixin for the `debug` flag and `_debug` printing used across wzexp."""

    name = "wzexp"

    def __init__(self, debug: bool = False) -> None:
        self.debug = debug

    def _debug(self, msg: str) -> None:
        if not self.debug:
            return
        print("%s: %s" % (self.name, msg), file=sys.stderr)
