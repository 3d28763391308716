import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from taxonomy_workbench.errors import (
    ExhaustedRetries,
    GatewayError,
    MalformedResponse,
    ParseError,
    ProviderError,
    SchemaError,
    Timeout,
)
from taxonomy_workbench.gateway import (
    ChatMessage,
    ChatRequest,
    FinishReason,
    HttpProvider,
    RetryPolicy,
    Role,
    ScriptedProvider,
    ScriptRule,
    load_script,
    parse_script,
)


def req(tag="step1.intention", content="generate labels", model="test-model"):
    return ChatRequest(model=model, request_tag=tag,
                       messages=(ChatMessage(Role.USER, content),))


# ---------------------------------------------------------------------------
# Scripted provider
# ---------------------------------------------------------------------------

def test_scripted_echo_verbatim():
    canned = "<label> A </label>\n<label> B </label>\n<end>"
    provider = ScriptedProvider([ScriptRule("step1.intentions", canned)])
    out = provider.complete(req(tag="step1.intentions"))
    assert out.content == canned
    assert out.finish_reason is FinishReason.STOP


def test_scripted_miss_raises():
    provider = ScriptedProvider([ScriptRule("step1.intention", "x")])
    with pytest.raises(ProviderError) as exc:
        provider.complete(req(tag="step2.creator"))
    assert "no script rule" in str(exc.value)
    assert not exc.value.retryable


def test_empty_script_always_errors():
    provider = ScriptedProvider([])
    with pytest.raises(ProviderError):
        provider.complete(req())


def test_first_match_wins_until_exhausted():
    provider = ScriptedProvider([
        ScriptRule("t", "first", remaining_uses=2),
        ScriptRule("t", "second"),
    ])
    got = [provider.complete(req(tag="t")).content for _ in range(4)]
    assert got == ["first", "first", "second", "second"]


def test_exhausted_single_rule_then_miss():
    provider = ScriptedProvider([ScriptRule("t", "only", remaining_uses=1)])
    assert provider.complete(req(tag="t")).content == "only"
    with pytest.raises(ProviderError):
        provider.complete(req(tag="t"))


def test_substring_match_selects_rule():
    provider = ScriptedProvider([
        ScriptRule("t", "for A", match_substring="topic A"),
        ScriptRule("t", "fallback"),
    ])
    assert provider.complete(req(tag="t", content="about topic A")).content == "for A"
    assert provider.complete(req(tag="t", content="about topic B")).content == "fallback"


def test_script_replay_is_deterministic(tmp_path):
    rules = [
        {"match_tag": "t", "match_substring": None, "response": "one", "remaining_uses": 1},
        {"match_tag": "t", "match_substring": None, "response": "two", "remaining_uses": None},
    ]
    path = tmp_path / "script.json"
    path.write_text(json.dumps(rules))
    sequence = [req(tag="t"), req(tag="t"), req(tag="t")]

    def run():
        provider = load_script(str(path))
        return [provider.complete(r).content for r in sequence]

    assert run() == run() == ["one", "two", "two"]


def test_load_script_bad_json(tmp_path):
    path = tmp_path / "script.json"
    path.write_text('[{"match_tag": "t",}]')
    with pytest.raises(ParseError) as exc:
        load_script(str(path))
    assert exc.value.line is not None


@pytest.mark.parametrize("bad", [
    '{"match_tag": "t"}',
    '[{"match_tag": "t"}]',
    '[{"match_tag": 3, "response": "x"}]',
    '[{"match_tag": "t", "response": "x", "remaining_uses": 0}]',
    '[{"match_tag": "t", "response": "x", "remaining_uses": true}]',
    '[{"match_tag": "t", "response": "x", "match_substring": 5}]',
])
def test_parse_script_rejects_bad_shapes(bad):
    with pytest.raises(SchemaError):
        parse_script(bad)


def test_remaining_uses_exact_under_concurrency():
    provider = ScriptedProvider([ScriptRule("t", "hit", remaining_uses=50)])
    hits, misses = [], []

    def worker():
        for _ in range(10):
            try:
                provider.complete(req(tag="t"))
                hits.append(1)
            except ProviderError:
                misses.append(1)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(hits) == 50
    assert len(misses) == 30


def test_request_invariants_enforced():
    with pytest.raises(GatewayError):
        ChatRequest(model="m", messages=()).validate()
    with pytest.raises(GatewayError):
        ChatRequest(model="m", messages=(ChatMessage(Role.ASSISTANT, "hi"),)).validate()
    with pytest.raises(GatewayError):
        ChatRequest(model="m", messages=(ChatMessage(Role.USER, ""),)).validate()
    with pytest.raises(GatewayError):
        ChatRequest(model="m", messages=(ChatMessage(Role.USER, "x"),),
                    temperature=3.0).validate()


# ---------------------------------------------------------------------------
# Live provider against a local stub
# ---------------------------------------------------------------------------


class _StubHandler(BaseHTTPRequestHandler):
    # class-level script: list of ("status", body) or ("sleep", seconds)
    script = []
    requests_seen = 0
    lock = threading.Lock()

    def do_POST(self):
        cls = type(self)
        with cls.lock:
            cls.requests_seen += 1
            step = cls.script.pop(0) if cls.script else ("status", 200, _ok_body())
        if step[0] == "sleep":
            time.sleep(step[1])
            step = ("status", 200, _ok_body())
        _, status, body = step
        payload = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


def _ok_body(content="stub says hi"):
    return json.dumps({"choices": [{"message": {"content": content},
                                    "finish_reason": "stop"}],
                       "model": "stub", "usage": {"total_tokens": 7}})


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    _StubHandler.script = []
    _StubHandler.requests_seen = 0
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", _StubHandler
    server.shutdown()
    server.server_close()


def fast_policy(**kw):
    defaults = dict(max_attempts=3, base_delay=0.01, max_delay=0.05, deadline=5.0)
    defaults.update(kw)
    return RetryPolicy(**defaults)


def test_retry_recovers_after_two_429s(stub_server):
    base, handler = stub_server
    handler.script = [("status", 429, "{}"), ("status", 429, "{}"),
                      ("status", 200, _ok_body("third time lucky"))]
    provider = HttpProvider(base, policy=fast_policy())
    out = provider.complete(req())
    assert out.content == "third time lucky"
    assert handler.requests_seen == 3


def test_non_retryable_4xx_is_immediate(stub_server):
    base, handler = stub_server
    handler.script = [("status", 400, '{"error": "bad request"}')]
    provider = HttpProvider(base, policy=fast_policy())
    with pytest.raises(ProviderError) as exc:
        provider.complete(req())
    assert exc.value.status == 400
    assert handler.requests_seen == 1


def test_persistent_500s_exhaust_retries(stub_server):
    base, handler = stub_server
    handler.script = [("status", 500, "{}")] * 10
    provider = HttpProvider(base, policy=fast_policy())
    with pytest.raises(ExhaustedRetries):
        provider.complete(req())
    assert handler.requests_seen == 3


def test_deadline_bounds_wall_time(stub_server):
    base, handler = stub_server
    handler.script = [("sleep", 3)] * 5
    provider = HttpProvider(base, policy=fast_policy(deadline=0.5, max_attempts=10))
    start = time.monotonic()
    with pytest.raises(Timeout):
        provider.complete(req())
    assert time.monotonic() - start < 1.5


def test_malformed_payload(stub_server):
    base, handler = stub_server
    handler.script = [("status", 200, "this is not json")]
    provider = HttpProvider(base, policy=fast_policy())
    with pytest.raises(MalformedResponse):
        provider.complete(req())


def test_missing_choices_is_malformed(stub_server):
    base, handler = stub_server
    handler.script = [("status", 200, '{"choices": []}')]
    provider = HttpProvider(base, policy=fast_policy())
    with pytest.raises(MalformedResponse):
        provider.complete(req())


def test_backoff_grows_exponentially():
    delays = []
    attempts = []

    class FailingClient:
        def post(self, *a, **kw):
            attempts.append(1)
            import httpx
            raise httpx.ConnectError("refused")

    provider = HttpProvider("http://example.invalid",
                            policy=RetryPolicy(max_attempts=4, base_delay=0.1,
                                               max_delay=10.0, deadline=100.0),
                            client=FailingClient(), sleep=delays.append,
                            clock=lambda: 0.0)
    with pytest.raises(ExhaustedRetries):
        provider.complete(req())
    assert len(attempts) == 4
    assert delays == [0.1, 0.2, 0.4]
