# CLI subcommand handlers
