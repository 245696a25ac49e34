"""
Text rendering: the effective-configuration banner and the markdown bench report.
"""

import os
from typing import Any, Dict, List, Mapping, Optional, Tuple

from jinja2 import Template

TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "templates")


def load_template(name: str) -> Template:
    """Load ``templates/<name>.j2``.

    Raises:
        FileNotFoundError: If the template does not exist.
    """
    template_path = os.path.join(TEMPLATE_DIR, f"{name}.j2")
    if not os.path.exists(template_path):
        raise FileNotFoundError(f"Template '{name}' not found at {template_path}")
    with open(template_path, "r", encoding="utf-8") as f:
        return Template(f.read(), keep_trailing_newline=True)


def flatten_config(config: Mapping[str, Any], prefix: str = "") -> List[Tuple[str, Any]]:
    """Nested dictionaries become dotted keys, in insertion order."""
    items: List[Tuple[str, Any]] = []
    for key, value in config.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            items.extend(flatten_config(value, f"{name}."))
        else:
            items.append((name, value))
    return items


def render_banner(command: str, config: Mapping[str, Any]) -> str:
    return load_template("banner.txt").render(command=command, settings=flatten_config(config))


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def render_bench_report(tables: Dict[str, Any], comparison: Optional[Any], config: Mapping[str, Any],
                        reference: str = "MADQN") -> str:
    """Markdown report: configuration, one table per metric and the paired comparison.

    Args:
        tables: Title -> DataFrame with a ``Jobs`` column and one column per policy.
        comparison: DataFrame from ``compare_paired`` or None.
        config: Effective configuration.
    """
    rendered = []
    job_counts: List[Any] = []
    n_policies = 0
    for title, frame in tables.items():
        rendered.append((title, {
            "header": list(frame.columns),
            "rows": [[_format_cell(v) for v in row] for row in frame.itertuples(index=False)],
        }))
        job_counts = [int(v) for v in frame["Jobs"]]
        n_policies = len(frame.columns) - 1
    rows = [] if comparison is None else comparison.to_dict("records")
    return load_template("bench_report.md").render(
        tables=rendered,
        comparison=rows,
        reference=reference,
        settings=flatten_config(config),
        job_counts=job_counts,
        n_policies=n_policies,
    )
