"""Hardening phishing detectors with random operation-chain feature maps.

Subpackages: ``dataset`` (schemas, CSV I/O, splits), ``featextract`` (URL/HTML/
reputation extractors), ``opchain`` (chains and feature maps), ``classifiers``,
``attacks`` (gray-box evasion), ``evaluation`` (metrics, Impact, Wilcoxon) and
``harness`` (experiment pipeline and CLI).
"""

__version__ = "0.1.0"
