"""Exception hierarchy. Every error raised by octok derives from OctokError."""


class OctokError(Exception):
    pass


class InvalidInput(OctokError, ValueError):
    pass


class TooLarge(OctokError, ValueError):
    pass


class OutOfBounds(OctokError, ValueError):
    pass


class InvalidCode(OctokError, ValueError):
    pass


class AlreadyExpanded(OctokError, ValueError):
    pass


class LeafCollision(OctokError, ValueError):
    def __init__(self, first: int, second: int, leaf):
        self.pair = (first, second)
        self.leaf = tuple(leaf)
        super().__init__(f"sites {first} and {second} share leaf cell {self.leaf}")


class MalformedSequence(OctokError, ValueError):
    def __init__(self, message: str, index: int | None = None):
        self.index = index
        if index is not None:
            message = f"token {index}: {message}"
        super().__init__(message)


class ParseError(OctokError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
