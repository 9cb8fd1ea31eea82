import warnings

import pytest

from scrambench.benchmark import benchmark_to_dict
from scrambench.fixtures import build_reference_cohort
from scrambench.gap_model import model_params_to_dict
from scrambench.pipeline import ComputationConfig, run_pipeline
from scrambench.secure_agg import SmallCohortWarning, write_json


@pytest.fixture(scope="session")
def reference_responses():
    return build_reference_cohort(42)


@pytest.fixture(scope="session")
def reference_result(reference_responses):
    # Two of the population bands sit below 10 members; that warning is the
    # expected behaviour, not noise worth failing the suite over.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SmallCohortWarning)
        return run_pipeline(reference_responses, ComputationConfig(seed=42), secure=True)


@pytest.fixture(scope="session")
def reference_params(reference_result):
    return reference_result.params


@pytest.fixture(scope="session")
def all_benchmark(reference_result):
    return reference_result.benchmarks["all"]


@pytest.fixture(scope="session")
def reference_params_file(reference_params, tmp_path_factory):
    path = tmp_path_factory.mktemp("artifacts") / "model_params.json"
    write_json(path, model_params_to_dict(reference_params))
    return path


@pytest.fixture(scope="session")
def reference_benchmark_file(all_benchmark, tmp_path_factory):
    path = tmp_path_factory.mktemp("artifacts") / "benchmark_all.json"
    write_json(path, benchmark_to_dict(all_benchmark))
    return path
