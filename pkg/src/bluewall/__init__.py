"""bluewall: cloud-network attack/defense simulation and layered defense stack."""

__version__ = "0.1.0"
