from importlib import metadata

try:
    __version__ = metadata.version("chbesov")
except metadata.PackageNotFoundError:
    # Running from a checkout, package metadata is not available.
    __version__ = "0.1.0"
