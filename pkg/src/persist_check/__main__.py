"""Main entry point for python -m persist_check."""

from .cli import main

if __name__ == "__main__":
    main()
