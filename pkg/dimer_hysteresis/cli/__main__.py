"""Main entry point for dimer-hysteresis"""

from .runner import main

if __name__ == "__main__":
    main()
