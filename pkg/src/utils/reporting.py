from typing import Any, Dict, List

from jinja2 import Template

EXPERIMENT_TEMPLATE = Template("""# Multiplier experiment

- k: {{ params.k }}
- index set: {{ params.D.order | join(', ') }}
- alpha: {% for leaf, value in params.alpha.items() %}{{ leaf }} = {{ value }}{% if not loop.last %}, {% endif %}{% endfor %}
- zero set: `{{ params.zero_set }}`
- multipliers up to {{ params.m_max }}, exponents {{ params.n_window[0] }}..{{ params.n_window[1] }}

## Premise

{% if premise_check.holds %}Holds on the whole window.{% else %}Fails at n = {{ premise_check.failures | join(', ') }}{% if premise_check.skipped %} (check skipped){% endif %}.{% endif %}

## Multipliers ({{ multipliers | length }})

| m | witnesses n |
|---|-------------|
{% for entry in multipliers[:limit] %}| {{ entry.m }} | {{ entry.witnesses | join(', ') }} |
{% endfor %}{% if multipliers | length > limit %}
... {{ multipliers | length - limit }} more
{% endif %}
## Structure

- finite-sums probe: r = {{ fs_probe.r }}{% if fs_probe.generators %}, generators {{ fs_probe.generators | join(', ') }}{% endif %}
- density: final {{ density.final }}, upper {{ density.upper }}, lower {{ density.lower }}, Banach window estimate {{ density.banach_upper }}
- T_k iteration agrees with direct evaluation: {{ 'yes' if path_independent else 'NO' }}
- precision cap: {{ precision.max_bits }} bits{% if precision.indeterminate %}, undecided multipliers {{ precision.indeterminate | join(', ') }}{% endif %}
""")

SUITE_TEMPLATE = Template("""# Identity suite {{ suite_id }}

| check | status | cases | seconds | note |
|-------|--------|-------|---------|------|
{% for row in rows %}| {{ row.stage }} | {{ row.status }} | {{ row.cases }} | {{ '%.2f' | format(row.duration) }} | {{ row.note }} |
{% endfor %}
Overall: {{ 'PASS' if passed else 'FAIL' }}
""")


def experiment_markdown(report: Dict[str, Any], limit: int = 50) -> str:
    return EXPERIMENT_TEMPLATE.render(limit=limit, **report)


def suite_markdown(suite_id: str, rows: List[Dict[str, Any]], passed: bool) -> str:
    return SUITE_TEMPLATE.render(suite_id=suite_id, rows=rows, passed=passed)
