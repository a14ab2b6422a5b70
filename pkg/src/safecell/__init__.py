"""safecell: deterministic simulation and control for safe human-robot shared workspaces."""

__version__ = "0.1.0"
