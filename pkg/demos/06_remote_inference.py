"""The inference wire protocol: serve a model over HTTP and call it back.

Any backend can sit behind POST /v1/infer; payloads are base64-encoded
little-endian float32 tensors. Here the stub backend is served locally and
queried through the RemoteBackend client, printing the actual request and
response JSON so the contract is visible.

Run:  python3 demos/06_remote_inference.py
"""

import json

import numpy as np
import requests

from ptxtriage import ImageGray
from ptxtriage.backends import RemoteBackend, StubBackend, infer_map, infer_scalar, serve_inference
from ptxtriage.backends.protocol import make_request

server = serve_inference(StubBackend())
host, port = server.server_address
url = f"http://{host}:{port}"
print(f"stub model server listening on {url}/v1/infer")

film = ImageGray.from_array(np.random.default_rng(8).uniform(0, 1, (16, 16)))

body = make_request("ptx_full", film)
print("\nrequest body (data truncated):")
print(json.dumps({**body, "data": body["data"][:48] + "..."}, indent=2))

raw = requests.post(f"{url}/v1/infer", json=body, timeout=10).json()
print("\nresponse body:")
print(json.dumps(raw, indent=2))

remote = RemoteBackend(url)
print(f"\nptx_full over the wire : {infer_scalar(remote, 'ptx_full', film):.6f}")
print(f"tube pair over the wire: {infer_scalar(remote, 'tube', film)}")
lung = infer_map(remote, "lung_seg", film)
print(f"lung_seg map           : {lung.width}x{lung.height}, {int(lung.values.sum())} foreground px")

server.shutdown()
print("\nserver stopped")
