import requests
print(requests.get('http://target/').status_code)
