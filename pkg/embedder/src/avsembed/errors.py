class EmbedderError(Exception):
    """Base class for embedding pipeline failures."""


class ModelError(EmbedderError):
    """The requested embedding model could not be loaded."""


class DecodeError(EmbedderError):
    """A video or image could not be decoded."""
