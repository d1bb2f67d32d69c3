"""Group-sparse image restoration."""
