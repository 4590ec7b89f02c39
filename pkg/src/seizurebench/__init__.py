"""From-scratch classifiers and a reproducible benchmark pipeline for
binary epileptic-seizure recognition on single-channel EEG windows."""

__version__ = "0.1.0"
