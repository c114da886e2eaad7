"""Synthetic data, splitting, preprocessing and file codecs."""
