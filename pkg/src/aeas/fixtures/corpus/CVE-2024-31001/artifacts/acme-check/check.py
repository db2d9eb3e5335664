import argparse
import requests

parser = argparse.ArgumentParser()
parser.add_argument("target")
args = parser.parse_args()

r = requests.get(args.target + "/api/version", timeout=5)
version = r.json().get("version", "0")
if tuple(int(x) for x in version.split(".")[:2]) <= (4, 2):
    print("[+] Target is vulnerable")
else:
    print("[-] Target is patched")
