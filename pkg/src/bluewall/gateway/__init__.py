"""Operator-facing surface: the command line and the HTTP control service."""

from .service import GatewayConfig, TOKEN_ENV, create_app

__all__ = ["GatewayConfig", "TOKEN_ENV", "create_app"]
