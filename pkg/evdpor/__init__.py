"""
evdpor
Stateless model checker for event-driven programs (Event-DPOR)
"""

__version__ = "1.0"
