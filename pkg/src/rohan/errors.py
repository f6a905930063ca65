"""Exception types. Each carries the CLI category it maps to."""


class RohanError(Exception):
    category = "internal"


class UsageError(RohanError):
    category = "usage"


class ConfigError(UsageError):
    pass


class DataError(RohanError):
    """Missing or inconsistent files on disk."""

    category = "io"


class LabelFormatError(RohanError):
    category = "format"

    def __init__(self, path, line_no, reason):
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{self.path}:{line_no}: {reason}")


class ExternalCommandError(RohanError):
    category = "external-command"

    def __init__(self, cmd, returncode, stderr=""):
        self.cmd = cmd
        self.returncode = returncode
        self.stderr = stderr
        msg = f"command exited with status {returncode}: {cmd}"
        if stderr:
            msg += "\n" + stderr.rstrip()
        super().__init__(msg)


EXIT_CODES = {
    "usage": 2,
    "io": 3,
    "format": 4,
    "external-command": 5,
    "internal": 10,
}
