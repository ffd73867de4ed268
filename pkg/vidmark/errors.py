"""
errors.py
This file contains the exception hierarchy shared by every vidmark module.
"""
from typing import Optional


class VidmarkError(Exception):
    def __init__(self, message: str, name: Optional[str] = None):
        self.name = name or self.__class__.__name__
        self.message = message
        super().__init__(self.message)


# bitstream
class TruncatedHeader(VidmarkError):
    pass


class InvalidCodingType(VidmarkError):
    pass


# container
class InvariantViolation(VidmarkError):
    pass


class BadMagic(VidmarkError):
    pass


class TruncatedFile(VidmarkError):
    pass


class BadStartCode(VidmarkError):
    pass


class SizeMismatch(VidmarkError):
    pass


class GopMustStartWithI(VidmarkError):
    pass


# base64codec
class InvalidBase64(VidmarkError):
    pass


# watermark
class CapacityError(VidmarkError):
    pass


class BadVersion(VidmarkError):
    pass


class InvalidKey(VidmarkError):
    pass


class KeyFrameCountMismatch(VidmarkError):
    pass


# netproto
class UnknownType(VidmarkError):
    pass


class OversizedPayload(VidmarkError):
    pass


class Truncated(VidmarkError):
    pass


class ConnectionFailed(VidmarkError):
    pass


class ProtocolViolation(VidmarkError):
    pass


class RemoteError(VidmarkError):
    """The server answered with an ERROR message."""


class BadKeyMagic(VidmarkError):
    pass


class CrcFieldMismatch(VidmarkError):
    pass
