"""Starter experiment configs written by ``pemid init``."""

from typing import Dict

_TRAINING = """training:
  seeds: [0]
  multistart: {multistart}
  bootstrap: {bootstrap}
  adam:
    iters: {adam_iters}
  qn:
    max_iters: 10000
"""

_COMMON = """name: {name}
description: "{description}"

benchmark:
  kind: {benchmark}
  n_samples: 2000
  seed: ${{PEMID_SEED:0}}
"""

_MODELS = {
    "lti": """model:
  family: lti
  nx: 2
  nz: 1
  noise: lti
""",
    "lpv-external": """model:
  family: lpv_external
  nx: 2
  nz: 1
  n_p: 1
  noise: lpv
  lpv_param: affine
""",
    "lpv-self": """model:
  family: lpv_self
  nx: 2
  nz: 1
  n_p: 1
  noise: lti
  lpv_param: affine
  psi:
    hidden: [6, 6]
    activations: [sigmoid, swish]
""",
    "nl": """model:
  family: nl
  nx: 2
  nz: 1
  noise: nl
  fx:
    hidden: [15, 10]
    activations: [swish, swish]
""",
}

_SETTINGS = {
    "lti": ("lti_disk", "Linearized unbalanced disk, combined LTI model", 10, "false", 1000),
    "lpv-external": (
        "lpv_disk_external",
        "Externally scheduled LPV disk with LPV noise",
        10,
        "true",
        1000,
    ),
    "lpv-self": ("lpv_disk_self", "Self-scheduled LPV disk", 10, "true", 2000),
    "nl": ("nl_disk", "Nonlinear disk with a neural state-space model", 5, "true", 2000),
}

TEMPLATES = tuple(_MODELS)


def render_template(template: str, name: str) -> str:
    """YAML text of a starter config; raises ``KeyError`` for unknown templates."""
    benchmark, description, multistart, bootstrap, adam_iters = _SETTINGS[template]
    fields: Dict[str, object] = {
        "name": name,
        "description": description,
        "benchmark": benchmark,
        "multistart": multistart,
        "bootstrap": bootstrap,
        "adam_iters": adam_iters,
    }
    return "\n".join(
        [
            _COMMON.format(**fields),
            _MODELS[template],
            _TRAINING.format(**fields),
        ]
    )
