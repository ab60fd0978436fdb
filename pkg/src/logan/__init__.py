"""logan: CPU-only log analytics.

Multi-file ingest, template clustering, label broadcasting, diagnosis
reports, causal graphs, and an analysis job service.
"""

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "config",
    "ingest",
    "templatizer",
    "labeler",
    "broadcast",
    "causal",
    "reports",
    "pipeline",
    "bench",
    "jobsvc",
]


def __getattr__(name):
    # Lazy submodule import keeps `import logan` cheap for CLI startup.
    if name in __all__:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
