#!/usr/bin/env python3
# Copyright 2026 The domainrag Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the golden wire-protocol cases.

Requests and backend-independent expectations are written unconditionally.
With --server-bin (a fake_model_server binary) the exact replies of the fake
backend are recorded as "fake_digest" fields.

  make_golden.py --out tests/conformance/golden --server-bin build/fake_model_server
"""

import argparse
import base64
import hashlib
import json
import pathlib
import socket
import struct
import subprocess
import time
import urllib.error
import urllib.request
import zlib

EMBEDDING_DIM = 64
PROMPT_DIM = 64
FEATURE_CHANNELS = 64
GENERATED_SIZE = 1024


def png(width, height, rows, color_type):
    def chunk(tag, data):
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)

    raw = b"".join(b"\x00" + bytes(row) for row in rows)
    header = struct.pack(">IIBBBBB", width, height, 8, color_type, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header) + chunk(b"IDAT", zlib.compress(raw, 9)) +
            chunk(b"IEND", b""))


def rgb_png(width, height, salt):
    rows = []
    for y in range(height):
        row = []
        for x in range(width):
            row += [(x * 7 + y * 3 + salt) % 256, (x * x + y + salt * 5) % 256, ((x ^ y) * 5 + salt) % 256]
        rows.append(row)
    return b64(png(width, height, rows, 2))


def mask_png(width, height, box):
    x0, y0, x1, y1 = box
    rows = [[255 if x0 <= x < x1 and y0 <= y < y1 else 0 for x in range(width)] for y in range(height)]
    return b64(png(width, height, rows, 0))


def b64(data):
    return base64.b64encode(data).decode("ascii")


def prompt(dim, salt):
    return [round(((i * 37 + salt) % 101) / 50.0 - 1.0, 6) for i in range(dim)]


def params(seed, guidance=2.5, steps=50, noise=1.0):
    return {"guidance_scale": guidance, "num_steps": steps, "noise_strength": noise, "seed": seed}


def ok(name, route, request, **expect):
    return {"name": name, "path": "/v1/" + route, "request": request, "expect": dict(status=200, **expect)}


def fail(name, route, status, code, request=None, raw_body=None):
    case = {"name": name, "path": "/v1/" + route, "expect": {"status": status, "error_code": code}}
    if raw_body is not None:
        case["raw_body"] = raw_body
    else:
        case["request"] = request
    return case


def cases():
    img = rgb_png(24, 16, 1)
    fill_img = rgb_png(48, 32, 3)
    return [
        ok("encode_ok", "encode", {"image": img}, embedding_dim=EMBEDDING_DIM),
        ok("feature_map_ok", "feature_map", {"image": rgb_png(40, 24, 2)}, feature_channels=FEATURE_CHANNELS),
        ok("inpaint_ok", "inpaint", {"image": rgb_png(32, 32, 4), "mask": mask_png(32, 32, (8, 6, 20, 18))},
           image={"width": 32, "height": 32}),
        ok("prompt_encode_ok", "prompt_encode", {"image": img}, embedding_dim=PROMPT_DIM),
        ok("generate_ok", "generate", {"prompt": prompt(PROMPT_DIM, 5), "params": params(17)},
           image={"width": GENERATED_SIZE, "height": GENERATED_SIZE}),
        ok("fill_ok", "fill",
           {"image": fill_img, "mask": mask_png(48, 32, (4, 4, 40, 28)), "prompt": prompt(PROMPT_DIM, 9),
            "params": params(23, guidance=3.0, steps=30, noise=0.8)},
           image={"width": 48, "height": 32}),
        fail("encode_missing_image", "encode", 400, "missing_field", request={}),
        fail("encode_invalid_json", "encode", 400, "invalid_json", raw_body="{\"image\": "),
        fail("encode_bad_base64", "encode", 400, "invalid_image", request={"image": "!!not base64!!"}),
        fail("encode_not_png", "encode", 400, "invalid_image", request={"image": b64(b"not a png file")}),
        fail("feature_map_body_not_object", "feature_map", 400, "invalid_json", raw_body="[1, 2, 3]"),
        fail("feature_map_image_not_string", "feature_map", 400, "invalid_field", request={"image": 5}),
        fail("inpaint_missing_mask", "inpaint", 400, "missing_field", request={"image": img}),
        fail("inpaint_mask_dimension_mismatch", "inpaint", 422, "dimension_mismatch",
             request={"image": img, "mask": mask_png(16, 16, (2, 2, 8, 8))}),
        fail("prompt_encode_bad_base64", "prompt_encode", 400, "invalid_image", request={"image": "%%%"}),
        fail("generate_prompt_dimension_mismatch", "generate", 422, "dimension_mismatch",
             request={"prompt": prompt(PROMPT_DIM - 1, 5), "params": params(1)}),
        fail("generate_missing_params", "generate", 400, "missing_field", request={"prompt": prompt(PROMPT_DIM, 5)}),
        fail("generate_nonpositive_guidance", "generate", 422, "invalid_params",
             request={"prompt": prompt(PROMPT_DIM, 5), "params": params(1, guidance=-1.0)}),
        fail("generate_negative_seed", "generate", 400, "invalid_params",
             request={"prompt": prompt(PROMPT_DIM, 5), "params": params(-3)}),
        fail("fill_missing_prompt", "fill", 400, "missing_field",
             request={"image": fill_img, "mask": mask_png(48, 32, (4, 4, 40, 28)), "params": params(2)}),
        fail("fill_prompt_dimension_mismatch", "fill", 422, "dimension_mismatch",
             request={"image": fill_img, "mask": mask_png(48, 32, (4, 4, 40, 28)),
                      "prompt": prompt(PROMPT_DIM + 3, 9), "params": params(2)}),
    ]


def reply_digest(body):
    h = hashlib.blake2b(digest_size=32)
    if "image" in body:
        h.update(decode_png_rgb(base64.b64decode(body["image"])))
    else:
        if "shape" in body:
            h.update(struct.pack("<3Q", *body["shape"]))
        h.update(struct.pack("<%dd" % len(body["embedding"]), *body["embedding"]))
    return h.hexdigest()


def decode_png_rgb(data):
    pos, idat, width, height = 8, b"", 0, 0
    while pos < len(data):
        (length,) = struct.unpack(">I", data[pos:pos + 4])
        tag, payload = data[pos + 4:pos + 8], data[pos + 8:pos + 8 + length]
        if tag == b"IHDR":
            width, height, depth, color, _, _, interlace = struct.unpack(">IIBBBBB", payload)
            if depth != 8 or color != 2 or interlace != 0:
                raise ValueError("expected 8-bit RGB non-interlaced PNG")
        elif tag == b"IDAT":
            idat += payload
        pos += 12 + length
    raw, stride, out, prev = zlib.decompress(idat), width * 3, bytearray(), bytearray(width * 3)
    for y in range(height):
        ftype, line = raw[y * (stride + 1)], bytearray(raw[y * (stride + 1) + 1:(y + 1) * (stride + 1)])
        for i in range(stride):
            a = line[i - 3] if i >= 3 else 0
            b = prev[i]
            c = prev[i - 3] if i >= 3 else 0
            if ftype == 1:
                line[i] = (line[i] + a) & 0xFF
            elif ftype == 2:
                line[i] = (line[i] + b) & 0xFF
            elif ftype == 3:
                line[i] = (line[i] + (a + b) // 2) & 0xFF
            elif ftype == 4:
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                line[i] = (line[i] + (a if pa <= pb and pa <= pc else b if pb <= pc else c)) & 0xFF
        out += line
        prev = line
    return bytes(out)


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def post(url, case):
    data = case["raw_body"].encode() if "raw_body" in case else json.dumps(case["request"]).encode()
    req = urllib.request.Request(url + case["path"], data=data, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=120) as res:
            return res.status, json.loads(res.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", required=True, type=pathlib.Path)
    parser.add_argument("--server-bin", type=pathlib.Path)
    args = parser.parse_args()

    server, url = None, None
    if args.server_bin:
        port = free_port()
        server = subprocess.Popen([str(args.server_bin), "--port", str(port)], stderr=subprocess.DEVNULL)
        url = "http://127.0.0.1:%d" % port
        for _ in range(100):
            try:
                urllib.request.urlopen(url + "/v1/health", timeout=1)
                break
            except (urllib.error.URLError, ConnectionError):
                time.sleep(0.05)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        for case in cases():
            if url:
                status, body = post(url, case)
                if status != case["expect"]["status"]:
                    raise SystemExit("%s: fake server answered %d: %s" % (case["name"], status, body))
                if status == 200:
                    case["fake_digest"] = reply_digest(body)
            (args.out / (case["name"] + ".json")).write_text(json.dumps(case, indent=1, sort_keys=True) + "\n")
    finally:
        if server:
            server.terminate()
            server.wait()


if __name__ == "__main__":
    main()
