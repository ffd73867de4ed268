"""vidmark - invisible LSB video watermarking over a client-server framework."""

__version__ = "0.1.0"
