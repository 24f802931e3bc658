"""Entry point: python main.py <command> [options]."""

from src.presentation.cli import cli

if __name__ == "__main__":
    cli()
