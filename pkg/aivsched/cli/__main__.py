"""
aivsched CLI Entry Point
"""
from aivsched.cli.main import main

if __name__ == "__main__":
    main()
