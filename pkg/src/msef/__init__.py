"""Streetscape evaluation toolkit: autodiff core, adapted vision-language model,
corpus curation, audit statistics, synthetic scenes and a batch CLI."""

__version__ = "0.1.0"
