"""Main entry point for chlattice."""

import sys

from .cli import app
from .log import err_console


def main() -> None:
    """Main entry point for the CLI."""
    try:
        app()
    except KeyboardInterrupt:
        err_console.print("\n👋 Cancelled by user")
        sys.exit(130)
    except Exception as e:
        err_console.print(f"[red]❌ Unexpected error: {e}[/red]")
        sys.exit(1)


if __name__ == "__main__":
    main()
