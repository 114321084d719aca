import json
import threading
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from tests.conftest import smooth_image
from wrinkle_attack.fitness import ProbVector
from wrinkle_attack.image_io import Image
from wrinkle_attack.oracle import (BudgetExhausted, LinearSoftmaxOracle, Oracle,
                                   OracleError, QueryLedger, RemoteOracle,
                                   build_toy_oracle, pooled_features, predict)

FEATS = 64


class _EchoHandler(BaseHTTPRequestHandler):
    """Fixture oracle server returning canned probabilities."""

    response: dict = {"probs": [0.2, 0.8], "model_id": "echo-fixture"}
    status = 200

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        assert "image_png_b64" in body
        payload = json.dumps(type(self).response).encode()
        self.send_response(type(self).status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def echo_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _EchoHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    _EchoHandler.response = {"probs": [0.2, 0.8], "model_id": "echo-fixture"}
    _EchoHandler.status = 200


def brightness_weights(margin=0.2):
    """Rows: 'bright' = +margin everywhere, 'dark' = -margin everywhere."""
    w = np.zeros((2, FEATS))
    w[0, :] = margin
    w[1, :] = -margin
    return w


def test_bright_image_provable_margin():
    # Oracle construction: logit gap on an all-white image is 2*margin*64,
    # so the softmax probability is analytically > 0.99.
    oracle = LinearSoftmaxOracle(weights=brightness_weights(), labels=["bright", "dark"])
    white = Image(np.ones((16, 16, 3)))
    probs = predict(oracle, white)
    assert probs.prob_of(0) > 0.99


def test_uniform_gray_zero_sum_rows():
    oracle = build_toy_oracle(seed=3, num_classes=4)
    assert np.allclose(oracle.weights.sum(axis=1), 0.0, atol=1e-12)
    gray = Image(np.full((16, 16, 3), 0.5))
    probs = predict(oracle, gray)
    assert probs.values == pytest.approx([0.25] * 4, abs=1e-12)


def test_swapping_opposed_cells_flips_argmax():
    # Weights oppose pooled cells 0 and 1; swapping the corresponding image
    # blocks must flip the prediction.
    w = np.zeros((2, FEATS))
    w[0, 0], w[0, 1] = 1.0, -1.0
    w[1, 0], w[1, 1] = -1.0, 1.0
    oracle = LinearSoftmaxOracle(weights=w)
    data = np.full((16, 16, 1), 0.5)
    data[0:2, 0:2] = 0.9   # pooled cell 0
    data[0:2, 2:4] = 0.1   # pooled cell 1
    img = Image(data)
    swapped_data = data.copy()
    swapped_data[0:2, 0:2], swapped_data[0:2, 2:4] = data[0:2, 2:4], data[0:2, 0:2].copy()
    swapped = Image(swapped_data)
    assert predict(oracle, img).top_class() == 0
    assert predict(oracle, swapped).top_class() == 1


def test_toy_oracle_deterministic():
    a = build_toy_oracle(seed=11, num_classes=3)
    b = build_toy_oracle(seed=11, num_classes=3)
    img = smooth_image(5)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(predict(a, img).values, predict(b, img).values)
    c = build_toy_oracle(seed=12, num_classes=3)
    assert not np.array_equal(a.weights, c.weights)


def test_pooled_features_shape_and_range():
    feats = pooled_features(smooth_image(9, 20, 28))
    assert feats.shape == (64,)
    assert feats.min() >= 0.0 and feats.max() <= 1.0


def test_ledger_counts_every_predict():
    oracle = build_toy_oracle(seed=1)
    ledger = QueryLedger()
    img = smooth_image(2)
    for _ in range(5):
        predict(oracle, img, ledger)
    assert ledger.count == 5
    assert len(ledger.latencies) == 5


def test_ledger_budget_enforced():
    oracle = build_toy_oracle(seed=1)
    ledger = QueryLedger(budget=3)
    img = smooth_image(2)
    for _ in range(3):
        predict(oracle, img, ledger)
    with pytest.raises(BudgetExhausted):
        predict(oracle, img, ledger)
    assert ledger.count == 3


def test_ledger_atomic_under_threads():
    oracle = build_toy_oracle(seed=1)
    ledger = QueryLedger(budget=50)
    img = smooth_image(2)

    def worker(_):
        hits = 0
        for _ in range(10):
            try:
                predict(oracle, img, ledger)
                hits += 1
            except BudgetExhausted:
                pass
        return hits

    with ThreadPoolExecutor(max_workers=8) as pool:
        done = sum(pool.map(worker, range(8)))
    assert done == 50
    assert ledger.count == 50


def test_invalid_probs_surface_as_error():
    class Broken(Oracle):
        def predict_probs(self, img):
            return ProbVector(np.array([0.7, 0.7]))

    with pytest.raises(OracleError):
        predict(Broken(), smooth_image(1))


def test_input_size_triggers_resize():
    seen = []

    class Recorder(Oracle):
        input_size = (24, 40)

        def predict_probs(self, img):
            seen.append((img.height, img.width))
            return ProbVector(np.array([0.5, 0.5]))

    predict(Recorder(), smooth_image(1, 32, 32))
    assert seen == [(24, 40)]


def test_remote_echo_pass_through(echo_server):
    oracle = RemoteOracle(endpoint=echo_server, labels=["cat", "dog"])
    probs = predict(oracle, smooth_image(1))
    assert probs.values == pytest.approx([0.2, 0.8], abs=0)
    assert oracle.model_id == "echo-fixture"


def test_remote_invalid_probs(echo_server):
    _EchoHandler.response = {"probs": [0.9, 0.9], "model_id": "echo"}
    oracle = RemoteOracle(endpoint=echo_server)
    with pytest.raises(OracleError):
        predict(oracle, smooth_image(1))


def test_remote_malformed_response(echo_server):
    _EchoHandler.response = {"nope": True}
    oracle = RemoteOracle(endpoint=echo_server)
    with pytest.raises(OracleError):
        predict(oracle, smooth_image(1))


def test_remote_unreachable_after_retries():
    oracle = RemoteOracle(endpoint="http://127.0.0.1:1", timeout=0.2, retries=1)
    with pytest.raises(OracleError):
        predict(oracle, smooth_image(1))


def test_remote_rejects_bad_endpoint():
    with pytest.raises(OracleError):
        RemoteOracle(endpoint="ftp://bad")


def test_weight_fixture_loading(tmp_path):
    from wrinkle_attack.oracle import load_weight_oracle

    w = brightness_weights().tolist()
    bare = tmp_path / "bare.json"
    bare.write_text(json.dumps(w))
    oracle = load_weight_oracle(bare)
    assert oracle.num_classes == 2
    rich = tmp_path / "rich.json"
    rich.write_text(json.dumps({"weights": w, "labels": ["bright", "dark"],
                                "scale": 2.0}))
    oracle = load_weight_oracle(rich)
    assert oracle.labels == ["bright", "dark"]
    assert oracle.scale == 2.0
    white = Image(np.ones((16, 16, 3)))
    assert predict(oracle, white).prob_of(0) > 0.99
    with pytest.raises(OracleError):
        load_weight_oracle(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"labels": ["x"]}))
    with pytest.raises(OracleError):
        load_weight_oracle(bad)


def test_descriptor_round_trip():
    oracle = build_toy_oracle(seed=21, num_classes=3, scale=1.5)
    desc = oracle.describe()
    assert desc["seed"] == 21 and desc["num_classes"] == 3
    from wrinkle_attack.harness import oracle_from_descriptor

    again = oracle_from_descriptor(desc)
    assert np.array_equal(again.weights, oracle.weights)
    assert again.scale == oracle.scale
