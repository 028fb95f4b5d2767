"""Error type for the conversion pipeline."""


class ConversionError(Exception):
    """A subject archive cannot be converted (missing file, channel, or malformed content)."""
