"""Client-side errors, including those decoded from server ERROR replies."""

from __future__ import annotations


class ClientError(Exception):
    pass


class ConnectionFailed(ClientError):
    pass


class ProtocolError(ClientError):
    pass


class ServerError(ClientError):
    """An ERROR reply; carries the server's stable numeric code."""

    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(f"server error {code}: {message}")


class UseAfterClose(ClientError):
    pass


class TrajectoryFormatError(ClientError):
    pass


class IncompatibleRecordings(ClientError):
    pass


class BadShard(ClientError):
    pass


class ExhaustedTrajectories(ClientError):
    pass


class NotReset(ClientError):
    pass


# server error codes worth special-casing client-side
CODE_VERSION_MISMATCH = 1
CODE_PROTOCOL_STATE = 2
CODE_INVALID_SETTINGS = 5
CODE_USE_AFTER_CLOSE = 8
