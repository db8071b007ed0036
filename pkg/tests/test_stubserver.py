"""Wire-protocol integration against the bundled rule-oracle stub."""

import numpy as np
import pytest

from trustpath import (
    Device,
    DeviceKind,
    EvaluatorEndpoint,
    ResourceProfile,
    Task,
    build_prompt,
    evaluate_ec,
    evaluate_terminal,
    external_evaluate,
)
from trustpath.resources import REASON_EXTERNAL, REASON_UNAVAILABLE
from trustpath.stubserver import answer_prompt, running_stub


def random_case(rng):
    """A random (profile, task, device) triple, terminal or EC."""
    is_ec = rng.random() < 0.5
    task = Task(
        owner="o",
        density=float(rng.uniform(100, 40000)),
        size_bits=float(rng.uniform(1e8, 4e9)),
        c_tf=0.2,
        c_ec=0.2,
        s_tf_soft=1.0,
        s_tf_hard=2.0,
        s_ec_soft=2.0,
        s_ec_hard=5.0,
    )
    if is_ec:
        device = Device("e", DeviceKind.EDGE_COMPUTE, (0, 0), 0.1, 0.002,
                        cpu_hz=float(rng.uniform(1e9, 8e9)))
        profile = ResourceProfile(
            device="e",
            available_storage_bits=float(rng.uniform(0, 8e9)),
            available_compute_seconds=float(rng.uniform(0, 20000)),
            willing=bool(rng.random() < 0.8),
            healthy=bool(rng.random() < 0.8),
        )
    else:
        device = Device("t", DeviceKind.TERMINAL, (0, 0), 0.1, 0.02)
        profile = ResourceProfile(
            device="t",
            available_storage_bits=float(rng.uniform(0, 8e9)),
            willing=bool(rng.random() < 0.8),
            healthy=bool(rng.random() < 0.8),
        )
    return profile, task, device


def local_verdict(profile, task, device):
    if device.is_ec:
        return evaluate_ec(profile, task, device)
    return evaluate_terminal(profile, task)


class TestAnswerPrompt:
    def test_parses_own_prompts(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            profile, task, device = random_case(rng)
            prompt = build_prompt(profile, task, device)
            assert answer_prompt(prompt) == local_verdict(profile, task, device).t_res

    def test_rejects_promptless_text(self):
        with pytest.raises(ValueError):
            answer_prompt("no tags here")


class TestWireProtocol:
    def test_stub_agrees_with_local_rules_on_100_profiles(self):
        rng = np.random.default_rng(42)
        with running_stub() as url:
            endpoint = EvaluatorEndpoint(url=url, timeout_s=10.0)
            for _ in range(100):
                profile, task, device = random_case(rng)
                prompt = build_prompt(profile, task, device)
                remote = external_evaluate(endpoint, prompt)
                assert remote.reason == REASON_EXTERNAL
                assert remote.t_res == local_verdict(profile, task, device).t_res

    def test_server_down_fails_closed(self):
        with running_stub() as url:
            pass  # stub has shut down; the port is now dead
        endpoint = EvaluatorEndpoint(url=url, timeout_s=0.5, retries=1)
        rng = np.random.default_rng(1)
        for _ in range(5):
            profile, task, device = random_case(rng)
            verdict = external_evaluate(endpoint, build_prompt(profile, task, device))
            assert verdict.t_res == 0
            assert verdict.reason == REASON_UNAVAILABLE

    def test_malformed_endpoint_fails_closed(self):
        endpoint = EvaluatorEndpoint(url="http://127.0.0.1:1/evaluate", timeout_s=0.2)
        verdict = external_evaluate(endpoint, "whatever")
        assert (verdict.t_res, verdict.reason) == (0, REASON_UNAVAILABLE)
