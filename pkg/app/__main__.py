"""
Run the command-line interface: ``python -m app <subcommand>``.
"""
from app.cli import main

raise SystemExit(main())
