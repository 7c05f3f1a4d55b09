import json
import urllib.error
import urllib.request

import numpy as np
import pytest

from gflowlab import checkpoint as ckpt
from gflowlab import config as config_mod
from gflowlab import service
from gflowlab.experiment import train_one_seed
from gflowlab.service import ApiError, ServiceState, handle_landscape, handle_model_info, handle_sample


@pytest.fixture(scope="module")
def state(tmp_path_factory):
    pairs = {
        "grid.objectives": "2", "grid.side": "8", "grid.dimensions": "2",
        "landscape.preset": "concave", "mode": "goal",
        "net.hidden_sizes": "16", "train.n_steps": "60", "train.batch_size": "8",
        "train.buffer_capacity": "64", "train.warmup_trajectories": "8",
        "train.log_every": "10", "train.beta": "4", "seeds": "0",
    }
    run = config_mod.from_pairs(pairs)
    trainer = train_one_seed(run, 0)
    trainer.run()
    path = tmp_path_factory.mktemp("svc") / "ck.gfl"
    ckpt.save(path, trainer, run)
    return ServiceState.from_checkpoint(path)


class TestHandlers:
    def test_model_info(self, state):
        info = handle_model_info(state)
        assert info == {"K": 2, "D": 2, "H": 8, "mode": "goal",
                        "landscape": "concave", "c_g": 0.98, "m_g": 0.2,
                        "training_steps": 60}
        assert handle_model_info(state) == info

    def test_sample_deterministic(self, state):
        body = {"mode": "goal", "d_g": [0.6, 0.8], "n": 20, "seed": 5}
        a = handle_sample(state, dict(body))
        b = handle_sample(state, dict(body))
        assert a == b
        assert len(a["samples"]) == 20
        assert "goal_accuracy" in a
        for s in a["samples"]:
            assert all(0 <= c < 8 for c in s["coords"])
            assert isinstance(s["in_focus"], bool)

    def test_unnormalized_direction_normalized_server_side(self, state):
        a = handle_sample(state, {"mode": "goal", "d_g": [0.6, 0.8], "n": 5, "seed": 1})
        b = handle_sample(state, {"mode": "goal", "d_g": [6.0, 8.0], "n": 5, "seed": 1})
        assert a == b

    def test_zero_direction_422(self, state):
        with pytest.raises(ApiError) as err:
            handle_sample(state, {"mode": "goal", "d_g": [0.0, 0.0], "n": 1, "seed": 0})
        assert err.value.status == 422

    def test_mode_mismatch_400(self, state):
        with pytest.raises(ApiError) as err:
            handle_sample(state, {"mode": "preference", "w": [0.5, 0.5], "n": 1, "seed": 0})
        assert err.value.status == 400

    def test_bad_dimension_400(self, state):
        with pytest.raises(ApiError) as err:
            handle_sample(state, {"mode": "goal", "d_g": [1.0, 0.0, 0.0], "n": 1, "seed": 0})
        assert err.value.status == 400

    def test_n_zero_empty_and_no_accuracy(self, state):
        out = handle_sample(state, {"mode": "goal", "d_g": [1.0, 0.0], "n": 0, "seed": 0})
        assert out == {"samples": []}

    def test_n_too_large(self, state):
        with pytest.raises(ApiError):
            handle_sample(state, {"mode": "goal", "d_g": [1.0, 0.0],
                                  "n": 10**5 + 1, "seed": 0})

    def test_c_g_override_loosens_focus(self, state):
        tight = handle_sample(state, {"mode": "goal", "d_g": [0.7, 0.7], "n": 200,
                                      "seed": 3})
        loose = handle_sample(state, {"mode": "goal", "d_g": [0.7, 0.7], "n": 200,
                                      "seed": 3, "c_g_override": 0.5})
        assert loose["goal_accuracy"] >= tight["goal_accuracy"]

    def test_landscape(self, state):
        out = handle_landscape(state)
        assert len(out["points"]) == 64
        front = {tuple(p) for p in out["front"]}
        unmasked = {tuple(p["r"]) for p in out["points"] if not p["masked"]}
        assert front <= unmasked
        assert handle_landscape(state) == out


@pytest.fixture(scope="module")
def server(state):
    srv = service.make_server(state, port=0)
    import threading
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}"
    srv.shutdown()


class TestHTTP:

    def get(self, url):
        with urllib.request.urlopen(url) as resp:
            return resp.status, resp.read()

    def post(self, url, payload):
        req = urllib.request.Request(url, data=json.dumps(payload).encode(),
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req) as resp:
                return resp.status, resp.read()
        except urllib.error.HTTPError as err:
            return err.code, err.read()

    def test_info_endpoint(self, server):
        status, body = self.get(server + "/model/info")
        assert status == 200
        assert json.loads(body)["K"] == 2

    def test_sample_endpoint_byte_identical(self, server):
        payload = {"mode": "goal", "d_g": [0.6, 0.8], "n": 10, "seed": 9}
        _, a = self.post(server + "/sample", payload)
        _, b = self.post(server + "/sample", payload)
        assert a == b

    def test_error_statuses(self, server):
        status, _ = self.post(server + "/sample",
                              {"mode": "goal", "d_g": [0, 0], "n": 1, "seed": 0})
        assert status == 422
        status, _ = self.post(server + "/sample",
                              {"mode": "preference", "w": [0.5, 0.5], "n": 1, "seed": 0})
        assert status == 400
        status, _ = self.get(server + "/landscape")
        assert status == 200

    def test_statelessness_under_interleaving(self, server):
        # replaying a request set in two different orders yields identical bodies
        reqs = [
            ("info", None),
            ("sample", {"mode": "goal", "d_g": [1.0, 0.0], "n": 5, "seed": 1}),
            ("sample", {"mode": "goal", "d_g": [0.5, 0.9], "n": 7, "seed": 2}),
            ("landscape", None),
        ]

        def run_order(order):
            out = {}
            for idx in order:
                kind, payload = reqs[idx]
                if kind == "info":
                    out[idx] = self.get(server + "/model/info")[1]
                elif kind == "landscape":
                    out[idx] = self.get(server + "/landscape")[1]
                else:
                    out[idx] = self.post(server + "/sample", payload)[1]
            return out

        a = run_order([0, 1, 2, 3])
        b = run_order([3, 2, 1, 0])
        assert a == b
