"""Module entry point: python -m otseg <command> ..."""
from .cli import main

if __name__ == "__main__":
    main()
