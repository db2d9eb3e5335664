import sys
for line in open(sys.argv[1]):
    print("would scan", line.strip())
