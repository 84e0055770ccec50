import pytest
from libinquire.algorithms import AppraisalAgent, DialogueAgent, EmbeddingTable
from libinquire.arena import TemplateRealizer
from libinquire.serving import ServingPolicy, create_app

HISTORY = [{"speaker": "attorney", "text": "The statute plainly covers this conduct."},
           {"speaker": "justice", "text": "What limits does the statute set?"},
           {"speaker": "attorney", "text": "Only the licensing requirement."}]


@pytest.fixture
def client(tree, provider):
    table = EmbeddingTable.random(tree.n_nodes, dim=4, seed=5)
    appraisal = AppraisalAgent(compress_units=(8,), batch_norm=False, seed=0).build_model(
        provider.n_features)
    dialogue = DialogueAgent(tree, table, compress_units=(8,), scorer_units=(8,),
                             batch_norm=False, seed=0).build_model(provider.n_features)
    policy = ServingPolicy(tree, provider, appraisal, dialogue, TemplateRealizer())
    app = create_app(policy=policy)
    app.config["TESTING"] = True
    return app.test_client()


def test_appraisal(client):
    resp = client.post("/appraisal", json={"history": HISTORY})
    assert resp.status_code == 200
    data = resp.get_json()
    assert len(data["q_values"]) == 9
    assert data["index"] == max(range(9), key=lambda i: (data["q_values"][i], -i))
    assert isinstance(data["appraisal"], str)


def test_action_with_given_appraisal(client, tree):
    resp = client.post("/action", json={"history": HISTORY, "appraisal": "Dive deeper"})
    assert resp.status_code == 200
    data = resp.get_json()
    assert data["appraisal"] == "Dive deeper"
    assert tree.is_full(data["action_path"])
    assert data["action_labels"] == tree.path_labels(data["action_path"])


def test_step_realizes_an_utterance(client, fixture_records):
    case = dict(fixture_records[0])
    del case["rounds"]
    resp = client.post("/step", json={"case": case, "round": 1})
    assert resp.status_code == 200
    data = resp.get_json()
    assert data["topic"] == "licensing"
    assert data["utterance"]


def test_step_is_deterministic(client, fixture_records):
    body = {"case": fixture_records[1], "history": HISTORY}
    assert client.post("/step", json=body).get_json() == \
        client.post("/step", json=body).get_json()


@pytest.mark.parametrize("route,body", [
    ("/appraisal", {"history": []}),
    ("/appraisal", {"history": [{"text": "no speaker"}]}),
    ("/action", {"history": HISTORY, "appraisal": "Applaud"}),
    ("/step", {"case": {"case_id": "x"}}),
    ("/step", {"case": "not a case"}),
])
def test_bad_requests(client, route, body):
    resp = client.post(route, json=body)
    assert resp.status_code == 400
    data = resp.get_json()
    assert data["status"] == 400
    assert data["message"].startswith("Bad Request: ")


def test_non_json_body(client):
    resp = client.post("/appraisal", data="plain text", content_type="text/plain")
    assert resp.status_code == 400
