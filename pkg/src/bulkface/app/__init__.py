"""Configuration, CSV output and the command line front end."""
from .config import ConfigError, RunConfig, load_config, parse_config, parse_expression
