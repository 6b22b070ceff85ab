"""Python access to the dec_lab pipelines."""

import json

from ._declab import (
    REPORT_SCHEMA,
    ConfigError,
    DeclabError,
    PPWave,
    __version__,
    command_keys,
    command_names,
    parse_config,
    run_json,
)


def run(command, values=None, out_dir="out", report_format=""):
    """Run a command and return its report as a dict.

    Values are converted to strings, so numbers and lists of numbers are accepted.
    """
    config = {}
    for key, value in (values or {}).items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, (list, tuple)):
            value = ", ".join(repr(float(v)) for v in value)
        config[key] = str(value)
    return json.loads(run_json(command, config, str(out_dir), report_format))


def passed(report):
    """True when every check in a report passed and no error was recorded."""
    return not report.get("error") and all(c["status"] == "pass" for c in report["checks"])


__all__ = [
    "REPORT_SCHEMA",
    "ConfigError",
    "DeclabError",
    "PPWave",
    "__version__",
    "command_keys",
    "command_names",
    "parse_config",
    "passed",
    "run",
    "run_json",
]
