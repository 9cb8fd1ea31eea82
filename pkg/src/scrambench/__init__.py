"""Privacy-preserving cyber-defense benchmarking and risk forecasting.

Municipal questionnaire responses are secret-shared across independent
aggregation servers, combined into per-cohort benchmarks, and turned into a
loss-weighted defense gap model that forecasts annual cyber risk.  See the
README for the pipeline walkthrough and the CLI reference.
"""

__version__ = "0.1.0"
