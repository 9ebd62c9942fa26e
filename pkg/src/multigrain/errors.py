class DataError(ValueError):
    """Input data or an artifact file is unusable."""
