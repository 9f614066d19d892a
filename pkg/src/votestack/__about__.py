"""Single source for the distribution name and version."""

TOOL_NAME = "votestack"
__version__ = "0.1.0"
