# Copyright 2026 The kdbias Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the kdbias pipeline and audit primitives."""

import json
import pathlib

from kdbias._core import (
    MissingArtifactError,
    SchemaError,
    TrainingError,
    ValidationError,
    audit,
    canonical_manifest,
    class_accuracies,
    fairness,
    generate,
    manifest_hash,
    report,
    run,
    softmax_t,
    spearman,
    student_t_cdf,
    validate_report,
    welch_t_test,
)

__all__ = [
    "MissingArtifactError",
    "SchemaError",
    "TrainingError",
    "ValidationError",
    "audit",
    "canonical_manifest",
    "class_accuracies",
    "fairness",
    "generate",
    "load_report",
    "manifest_hash",
    "pipeline",
    "report",
    "run",
    "softmax_t",
    "spearman",
    "student_t_cdf",
    "validate_report",
    "welch_t_test",
]


def load_report(out):
    """Master audit report of an output directory, schema-checked."""
    text = (pathlib.Path(out) / "audit" / "report.json").read_text()
    validate_report(text)
    return json.loads(text)


def pipeline(config, out, jobs=1):
    """generate, run, audit and report in one call; returns the master report."""
    config, out = str(config), str(out)
    generate(config, out)
    run(config, out, jobs)
    audit(out)
    report(out)
    return load_report(out)
