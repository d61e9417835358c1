#!/usr/bin/env python3
"""Record real server exchanges for the frontend contract tests.

Drives every session endpoint through the in-process test client and
writes request/response pairs to frontend/tests/fixtures/recorded.json.
Rerun whenever the API changes shape.
"""

import json
import time
from pathlib import Path

from fastapi.testclient import TestClient

from trajteach.service import create_app

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


def main():
    exchanges = []

    def record(name, method, path, body, resp):
        exchanges.append(
            {
                "name": name,
                "request": {"method": method, "path": path, "body": body},
                "response": {
                    "status": resp.status_code,
                    "body": resp.json() if resp.text else None,
                },
            }
        )
        return resp

    app = create_app(data_dir=None)
    with TestClient(app) as client:
        create_body = {
            "env": "table2d",
            "H": 8,
            "seed": 42,
            "net_width": 8,
            "ensemble_size": 2,
            "pool_size": 12,
            "epochs": 12,
        }
        resp = record(
            "create_session", "POST", "/sessions", create_body,
            client.post("/sessions", json=create_body),
        )
        sid = resp.json()["id"]

        record(
            "get_environment", "GET", "/environments/table2d", None,
            client.get("/environments/table2d"),
        )
        record(
            "session_snapshot", "GET", f"/sessions/{sid}", None,
            client.get(f"/sessions/{sid}"),
        )
        record(
            "unknown_session", "GET", "/sessions/doesnotexist", None,
            client.get("/sessions/doesnotexist"),
        )

        snap = client.get(f"/sessions/{sid}").json()
        states = snap["trajectory"]["states"]
        demo_body = {"trajectory": {"horizon": 8, "states": states}}
        record(
            "post_demonstration", "POST", f"/sessions/{sid}/demonstration",
            demo_body, client.post(f"/sessions/{sid}/demonstration", json=demo_body),
        )
        bad_demo = {"trajectory": {"horizon": 8, "states": [[0.1, 0.2, 0.3]] * 9}}
        record(
            "post_demonstration_wrong_dim", "POST",
            f"/sessions/{sid}/demonstration", bad_demo,
            client.post(f"/sessions/{sid}/demonstration", json=bad_demo),
        )

        snippet_states = [list(s) for s in states[2:7]]
        snippet_states[2][1] = min(1.0, snippet_states[2][1] + 0.05)
        corr_body = {"window": [2, 6], "snippet": {"horizon": 4, "states": snippet_states}}
        record(
            "post_correction", "POST", f"/sessions/{sid}/correction", corr_body,
            client.post(f"/sessions/{sid}/correction", json=corr_body),
        )

        q1 = client.get(f"/sessions/{sid}/query", params={"mode": "active"})
        record("get_query", "GET", f"/sessions/{sid}/query?mode=active", None, q1)
        q2 = client.get(f"/sessions/{sid}/query", params={"mode": "active"})
        record("get_query_repeat", "GET", f"/sessions/{sid}/query?mode=active", None, q2)

        stale_body = {"winner": "a", "query_token": "stale-token"}
        record(
            "post_preference_stale", "POST", f"/sessions/{sid}/preference",
            stale_body, client.post(f"/sessions/{sid}/preference", json=stale_body),
        )
        pref_body = {"winner": "a", "query_token": q1.json()["token"]}
        record(
            "post_preference", "POST", f"/sessions/{sid}/preference", pref_body,
            client.post(f"/sessions/{sid}/preference", json=pref_body),
        )

        late_demo = {"trajectory": {"horizon": 8, "states": states}}
        record(
            "post_demonstration_after_preference", "POST",
            f"/sessions/{sid}/demonstration", late_demo,
            client.post(f"/sessions/{sid}/demonstration", json=late_demo),
        )

        record(
            "post_retrain", "POST", f"/sessions/{sid}/retrain", None,
            client.post(f"/sessions/{sid}/retrain"),
        )
        for _ in range(200):
            status = client.get(f"/sessions/{sid}/status")
            if status.json()["status"] != "running":
                break
            time.sleep(0.05)
        record("get_status", "GET", f"/sessions/{sid}/status", None, status)
        record(
            "get_trajectory", "GET", f"/sessions/{sid}/trajectory", None,
            client.get(f"/sessions/{sid}/trajectory"),
        )
        record(
            "get_reward_field", "GET", f"/sessions/{sid}/reward-field?grid=8", None,
            client.get(f"/sessions/{sid}/reward-field", params={"grid": 8}),
        )

    OUT.mkdir(parents=True, exist_ok=True)
    target = OUT / "recorded.json"
    target.write_text(json.dumps({"exchanges": exchanges}, indent=1))
    print(f"recorded {len(exchanges)} exchanges to {target}")


if __name__ == "__main__":
    main()
