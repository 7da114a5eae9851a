"""Contributor retention analytics for OSS communities.

Core pieces: event ingestion, identity resolution, lifecycle
classification, retention metrics, survival modeling (Kaplan-Meier,
Cox PH, random survival forest, neural Cox), contribution impact
scoring, engagement automation, and an HTTP service tying it together.
"""

__version__ = "0.1.0"
