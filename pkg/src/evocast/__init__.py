"""evocast: multi-objective evolutionary search for compact hourly weather forecasters.

Pipeline stages: ingest (Open-Meteo archive / synthetic data), dataset
preparation (per-city min-max scaling, 24-hour sliding windows, chronological
splits), a small numpy neural-network engine with analytic gradients,
NSGA-II architecture search, transfer-learning experiments, conformal
prediction intervals, permutation importance, and deployment benchmarks.
"""

__version__ = "0.1.0"
