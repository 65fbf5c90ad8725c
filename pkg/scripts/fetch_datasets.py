"""Download the three edge-list datasets used by the integration tests.

Files land in the target directory under the names the tests expect:

    wiki-Talk.txt
    rec-epinions-user-ratings.edges
    dbpedia_country/edges.csv

No checksums are pinned here. After the first download the script prints
the SHA-256 of every file; record those and pass them back with ``--verify``
(a JSON object mapping file name to digest) to check later downloads.

Run ``TAYLORLAW_DATA_DIR=<dir> pytest -m integration`` afterwards.
"""

import argparse
import gzip
import hashlib
import io
import json
import os
import shutil
import sys
import urllib.request
import zipfile

SOURCES = {
    "wiki-Talk.txt": ("https://snap.stanford.edu/data/wiki-Talk.txt.gz", "gzip", None),
    "rec-epinions-user-ratings.edges": (
        "https://nrvis.com/download/data/rec/rec-epinions-user-ratings.zip", "zip", ".edges"),
    os.path.join("dbpedia_country", "edges.csv"): (
        "https://networks.skewed.de/net/dbpedia_country/files/dbpedia_country.csv.zip", "zip", "edges.csv"),
}


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def fetch(url):
    req = urllib.request.Request(url, headers={"User-Agent": "taylorlaw-fetch"})
    with urllib.request.urlopen(req, timeout=120) as resp:
        return resp.read()


def unpack(payload, kind, member, dest):
    os.makedirs(os.path.dirname(dest) or ".", exist_ok=True)
    tmp = dest + ".part"
    if kind == "gzip":
        with gzip.open(io.BytesIO(payload)) as src, open(tmp, "wb") as out:
            shutil.copyfileobj(src, out)
    else:
        with zipfile.ZipFile(io.BytesIO(payload)) as zf:
            names = [n for n in zf.namelist() if n.endswith(member)]
            if not names:
                raise RuntimeError(f"no member ending in {member!r}; archive holds {zf.namelist()}")
            with zf.open(names[0]) as src, open(tmp, "wb") as out:
                shutil.copyfileobj(src, out)
    os.replace(tmp, dest)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("target", help="directory to hold the datasets")
    ap.add_argument("--verify", help="JSON file mapping file name to expected SHA-256")
    ap.add_argument("--force", action="store_true", help="download even if the file exists")
    args = ap.parse_args(argv)

    expected = {}
    if args.verify:
        with open(args.verify) as fh:
            expected = json.load(fh)

    digests = {}
    bad = False
    for name, (url, kind, member) in SOURCES.items():
        dest = os.path.join(args.target, name)
        if args.force or not os.path.exists(dest):
            print(f"fetching {url}", file=sys.stderr)
            unpack(fetch(url), kind, member, dest)
        digests[name] = sha256(dest)
        want = expected.get(name)
        if want and want != digests[name]:
            print(f"checksum mismatch for {name}: {digests[name]} != {want}", file=sys.stderr)
            bad = True
    print(json.dumps(digests, indent=2, sort_keys=True))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
