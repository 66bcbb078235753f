"""Estimating transversality and subtransversality constants of set pairs."""
