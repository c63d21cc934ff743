# XXX: keep in sync with root project files
__version__ = "0.1.0"
