import sys

if __name__ == "__main__":
    from src.cli.app import main

    sys.exit(main())
