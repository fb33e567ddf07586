from ..core import SpatialPError


class DslError(SpatialPError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        loc = f"{line}:{col}: " if line else ""
        super().__init__(f"{loc}{message}")


class DslSyntaxError(DslError):
    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        self.expected = expected
        self.found = found
        msg = f"expected {expected}" + (f", found {found!r}" if found else "")
        super().__init__(msg, line, col)


class UndeclaredSymbol(DslError):
    pass


class DuplicateDeclaration(DslError):
    pass


class UnboundParameter(DslError):
    pass


class EmptyRange(DslError):
    pass
