"""Mobile molecular sensor networks: channel, link detection and decision fusion."""

__version__ = "0.1.0"
