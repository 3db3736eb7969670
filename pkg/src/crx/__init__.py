"""Aspect weaving over MinJ: a compositor, pointcut-and-advice and open classes."""

__version__ = "0.1.0"
