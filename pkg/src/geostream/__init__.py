"""Cleaning and bias analysis for geotagged tweets collected with a bounding-box stream filter."""

__version__ = "0.1.0"
