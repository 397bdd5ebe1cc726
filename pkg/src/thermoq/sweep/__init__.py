"""Config-driven sweeps, validation suites and deterministic output."""
