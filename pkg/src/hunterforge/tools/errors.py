class HunterForgeError(ValueError):
    """Base error of the package.

    :param message: human readable description
    :type message: str

    Every subclass carries a stable ``code`` string which the command line
    tools report and which tests may match on.
    """

    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class EmptyInstanceError(HunterForgeError):
    code = "empty-instance"


class SpecMismatchError(HunterForgeError):
    code = "spec-mismatch"


class NoGroundError(HunterForgeError):
    code = "no-ground"


class EmptyBatchError(HunterForgeError):
    code = "empty-batch"


class ShapeMismatchError(HunterForgeError):
    code = "shape-mismatch"


class GridMismatchError(HunterForgeError):
    code = "grid-mismatch"


class FrameMismatchError(HunterForgeError):
    code = "frame-mismatch"


class ManifestError(HunterForgeError):
    code = "manifest"
